/** API base URL resolution: same-origin by default, overridable at runtime
 * (window.DATADOCK_API_BASE) or programmatically (tests, embedding). */

let apiBase: string | null = null;

export function getApiBase(): string {
  if (apiBase !== null) return apiBase;
  const fromGlobal = (globalThis as Record<string, unknown>)["DATADOCK_API_BASE"];
  return typeof fromGlobal === "string" ? fromGlobal : "";
}

export function setApiBase(base: string): void {
  apiBase = base.replace(/\/+$/, "");
}
