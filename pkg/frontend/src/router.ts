/** Hash-based routing: #/browse, #/datasets/<id>, ... Views are functions
 * from route params to an element; in-flight work of the previous view is
 * cancelled via its AbortSignal on navigation. */

export interface RouteContext {
  params: Record<string, string>;
  /** aborted when the user navigates away; views hang polling off this */
  signal: AbortSignal;
}

export type View = (ctx: RouteContext) => HTMLElement | Promise<HTMLElement>;

interface RouteEntry {
  pattern: RegExp;
  names: string[];
  view: View;
}

const routes: RouteEntry[] = [];
let notFoundView: View = () => {
  const el = document.createElement("div");
  el.textContent = "Page not found.";
  return el;
};
let outlet: HTMLElement | null = null;
let activeAbort: AbortController | null = null;

export function route(pattern: string, view: View): void {
  const names: string[] = [];
  const regex = pattern.replace(/:([a-z_]+)/g, (_, name: string) => {
    names.push(name);
    return "([^/]+)";
  });
  routes.push({ pattern: new RegExp(`^${regex}$`), names, view });
}

export function setNotFound(view: View): void {
  notFoundView = view;
}

export function navigate(path: string): void {
  if (location.hash === `#${path}`) {
    void render();
  } else {
    location.hash = `#${path}`;
  }
}

export function currentPath(): string {
  return location.hash.startsWith("#") ? location.hash.slice(1) : "/";
}

async function render(): Promise<void> {
  if (!outlet) return;
  activeAbort?.abort();
  activeAbort = new AbortController();
  const path = currentPath() || "/";
  let match: { entry: RouteEntry; values: string[] } | null = null;
  for (const entry of routes) {
    const result = entry.pattern.exec(path);
    if (result) {
      match = { entry, values: result.slice(1).map(decodeURIComponent) };
      break;
    }
  }
  const ctx: RouteContext = {
    params: {},
    signal: activeAbort.signal,
  };
  let view = notFoundView;
  if (match) {
    match.entry.names.forEach((name, i) => (ctx.params[name] = match.values[i]!));
    view = match.entry.view;
  }
  const el = await view(ctx);
  if (ctx.signal.aborted) return; // navigated away while loading
  outlet.replaceChildren(el);
}

export function startRouter(target: HTMLElement): void {
  outlet = target;
  window.addEventListener("hashchange", () => void render());
  void render();
}

export function refresh(): void {
  void render();
}
