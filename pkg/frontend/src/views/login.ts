import * as api from "../api.js";
import { h } from "../dom.js";
import { beginSession } from "../session.js";
import { navigate } from "../router.js";

export function loginView(): HTMLElement {
  const error = h("p", { class: "error" });

  const loginForm = h(
    "form",
    {
      class: "stack",
      onsubmit: (event: Event) => {
        event.preventDefault();
        void doLogin();
      },
    },
    h("h2", {}, "Sign in"),
    h("input", { name: "username", placeholder: "username", required: true }),
    h("input", {
      name: "password",
      type: "password",
      placeholder: "password",
      required: true,
    }),
    h("button", { class: "primary", type: "submit" }, "Sign in"),
  );

  const registerForm = h(
    "form",
    {
      class: "stack",
      onsubmit: (event: Event) => {
        event.preventDefault();
        void doRegister();
      },
    },
    h("h2", {}, "Create an account"),
    h("input", { name: "username", placeholder: "username (a-z, 0-9, _ -)", required: true }),
    h("input", { name: "email", placeholder: "email", required: true }),
    h("input", { name: "display_name", placeholder: "display name (optional)" }),
    h("input", {
      name: "password",
      type: "password",
      placeholder: "password (10+ characters)",
      required: true,
    }),
    h("button", { class: "primary", type: "submit" }, "Register"),
  );

  async function doLogin(): Promise<void> {
    const data = new FormData(loginForm);
    try {
      const result = await api.login(
        String(data.get("username")),
        String(data.get("password")),
      );
      beginSession(result.token, result.user);
      navigate("/browse");
    } catch (err) {
      error.textContent = err instanceof api.ApiError ? err.message : String(err);
    }
  }

  async function doRegister(): Promise<void> {
    const data = new FormData(registerForm);
    try {
      await api.registerAccount({
        username: String(data.get("username")),
        email: String(data.get("email")),
        password: String(data.get("password")),
        display_name: String(data.get("display_name") ?? ""),
      });
      const result = await api.login(
        String(data.get("username")),
        String(data.get("password")),
      );
      beginSession(result.token, result.user);
      navigate("/browse");
    } catch (err) {
      error.textContent = err instanceof api.ApiError ? err.message : String(err);
    }
  }

  return h(
    "div",
    {},
    h("div", { class: "card" }, loginForm),
    h("div", { class: "card" }, registerForm),
    error,
  );
}
