/** Small DOM builder; enough structure for this app without a framework. */

type Child = Node | string | null | undefined;

export function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | boolean | EventListener> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      el.addEventListener(key.replace(/^on/, "").toLowerCase(), value);
    } else if (typeof value === "boolean") {
      if (value) el.setAttribute(key, "");
      (el as unknown as Record<string, unknown>)[key] = value;
    } else if (key === "class") {
      el.className = value;
    } else {
      el.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    el.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return el;
}

export function clear(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

export function stars(rating: number | null): HTMLElement {
  if (rating === null) {
    return h("span", { class: "muted" }, "no ratings yet");
  }
  const full = Math.round(rating);
  return h(
    "span",
    { class: "stars", title: `${rating.toFixed(1)} / 5` },
    "★".repeat(full) + "☆".repeat(5 - full) + ` ${rating.toFixed(1)}`,
  );
}

export function formatBytes(n: number): string {
  if (n < 1024) return `${n} B`;
  const units = ["KiB", "MiB", "GiB"];
  let value = n;
  let unit = "B";
  for (const next of units) {
    if (value < 1024) break;
    value /= 1024;
    unit = next;
  }
  return `${value.toFixed(1)} ${unit}`;
}

export function formatTime(iso: string): string {
  return new Date(iso).toLocaleString();
}
