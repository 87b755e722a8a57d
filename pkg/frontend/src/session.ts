/** Single session store: the bearer token (memory + browser localStorage),
 * the current user profile, and the unread notification count. Every API
 * call reads the token from here; logout clears everything. */

export interface UserProfile {
  id: string;
  username: string;
  email: string;
  display_name: string;
  is_admin: boolean;
  created_at: string;
}

interface SessionState {
  token: string | null;
  user: UserProfile | null;
  unreadCount: number;
}

const STORAGE_KEY = "datadock.session";

type Listener = (state: SessionState) => void;

const listeners = new Set<Listener>();

function storage(): Storage | null {
  try {
    return typeof localStorage !== "undefined" ? localStorage : null;
  } catch {
    return null;
  }
}

function load(): SessionState {
  const raw = storage()?.getItem(STORAGE_KEY);
  if (raw) {
    try {
      const parsed = JSON.parse(raw) as Partial<SessionState>;
      return {
        token: parsed.token ?? null,
        user: parsed.user ?? null,
        unreadCount: 0,
      };
    } catch {
      /* corrupted entry: start logged out */
    }
  }
  return { token: null, user: null, unreadCount: 0 };
}

let state: SessionState = load();

function persist(): void {
  const store = storage();
  if (!store) return;
  if (state.token) {
    store.setItem(
      STORAGE_KEY,
      JSON.stringify({ token: state.token, user: state.user }),
    );
  } else {
    store.removeItem(STORAGE_KEY);
  }
}

function emit(): void {
  for (const listener of listeners) listener(state);
}

export function getToken(): string | null {
  return state.token;
}

export function getUser(): UserProfile | null {
  return state.user;
}

export function getUnreadCount(): number {
  return state.unreadCount;
}

export function isLoggedIn(): boolean {
  return state.token !== null;
}

export function beginSession(token: string, user: UserProfile): void {
  state = { token, user, unreadCount: 0 };
  persist();
  emit();
}

export function updateUser(user: UserProfile): void {
  state = { ...state, user };
  persist();
  emit();
}

export function setUnreadCount(count: number): void {
  if (state.unreadCount === count) return;
  state = { ...state, unreadCount: count };
  emit();
}

export function endSession(): void {
  state = { token: null, user: null, unreadCount: 0 };
  persist();
  emit();
}

export function onSessionChange(listener: Listener): () => void {
  listeners.add(listener);
  return () => listeners.delete(listener);
}
