/** Typed client for the server's REST API. Every network call the UI makes
 * goes through request() here, and every path it can hit is listed in
 * ROUTE_TABLE, so tests can intercept traffic and check conformance. */

import { getApiBase } from "./config.js";
import { getToken, endSession, UserProfile } from "./session.js";

export const ROUTE_TABLE: ReadonlyArray<readonly [string, string]> = [
  ["POST", "/api/auth/register"],
  ["POST", "/api/auth/login"],
  ["POST", "/api/auth/logout"],
  ["GET", "/api/users/me"],
  ["PATCH", "/api/users/me"],
  ["DELETE", "/api/users/me"],
  ["POST", "/api/datasets"],
  ["GET", "/api/datasets"],
  ["GET", "/api/datasets/{id}"],
  ["PATCH", "/api/datasets/{id}"],
  ["DELETE", "/api/datasets/{id}"],
  ["GET", "/api/datasets/{id}/archive"],
  ["GET", "/api/datasets/{id}/files/{path}"],
  ["POST", "/api/datasets/{id}/reviews"],
  ["GET", "/api/datasets/{id}/reviews"],
  ["PATCH", "/api/reviews/{id}"],
  ["DELETE", "/api/reviews/{id}"],
  ["POST", "/api/orgs"],
  ["GET", "/api/orgs"],
  ["POST", "/api/orgs/{id}/join"],
  ["POST", "/api/orgs/{id}/leave"],
  ["GET", "/api/orgs/{id}/members"],
  ["GET", "/api/orgs/{id}/datasets"],
  ["POST", "/api/conversations"],
  ["GET", "/api/conversations"],
  ["GET", "/api/conversations/{id}/messages"],
  ["POST", "/api/conversations/{id}/messages"],
  ["GET", "/api/notifications"],
  ["POST", "/api/notifications/mark-read"],
  ["GET", "/api/health"],
];

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: Record<string, string> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface Page<T> {
  items: T[];
  page: number;
  page_size: number;
  total: number;
}

export interface RatingSummary {
  average: number | null;
  count: number;
}

export interface FileEntry {
  path: string;
  blob_digest: string;
  size_bytes: number;
  content_type: string;
}

export interface DatasetSummary {
  id: string;
  name: string;
  owner_username: string;
  tags: string[];
  visibility: "public" | "org" | "private";
  file_count: number;
  total_size_bytes: number;
  average_rating: number | null;
  review_count: number;
  created_at: string;
}

export interface DatasetDetail {
  id: string;
  name: string;
  description: string;
  visibility: "public" | "org" | "private";
  org_ids: string[];
  tags: string[];
  owner: { id: string | null; username: string; display_name: string };
  created_at: string;
  updated_at: string;
  entries: FileEntry[];
  rating: RatingSummary;
}

export interface Review {
  id: string;
  dataset_id: string;
  author_username: string;
  rating: number;
  comment: string;
  created_at: string;
  updated_at: string;
}

export interface Org {
  id: string;
  name: string;
  description: string;
  creator_id: string;
  created_at: string;
  member_count?: number;
}

export interface OrgMember {
  username: string;
  role: "owner" | "member";
  joined_at: string;
}

export interface Message {
  id: string;
  conversation_id: string;
  sender_id: string;
  body: string;
  sent_at: string;
  sender?: { id: string | null; username: string; display_name: string };
}

export interface Conversation {
  id: string;
  participants: string[];
  counterpart: { id: string | null; username: string; display_name: string };
  created_at: string;
  last_message: Message | null;
  unread_count: number;
}

export interface Notification {
  id: string;
  kind: "dataset_in_org" | "review_received" | "message_received";
  subject_ids: Record<string, string>;
  is_read: boolean;
  created_at: string;
}

export interface SearchFilters {
  name?: string;
  file_type?: string;
  tags?: string[];
  author?: string;
  page?: number;
  page_size?: number;
}

type RequestHook = (method: string, path: string) => void;

let onRequest: RequestHook | null = null;
let onUnauthorized: (() => void) | null = () => endSession();

/** Test/instrumentation hook: observe every (method, path) issued. */
export function setRequestHook(hook: RequestHook | null): void {
  onRequest = hook;
}

/** Replace the default 401 reaction (session teardown). */
export function setUnauthorizedHandler(handler: (() => void) | null): void {
  onUnauthorized = handler;
}

async function request<T>(
  method: string,
  path: string,
  options: { json?: unknown; form?: FormData; raw?: boolean } = {},
): Promise<T> {
  onRequest?.(method, path.split("?")[0]!);
  const headers: Record<string, string> = {};
  const token = getToken();
  if (token) headers["Authorization"] = `Token ${token}`;
  let body: BodyInit | undefined;
  if (options.form !== undefined) {
    body = options.form;
  } else if (options.json !== undefined) {
    headers["Content-Type"] = "application/json";
    body = JSON.stringify(options.json);
  }
  const response = await fetch(getApiBase() + path, { method, headers, body });
  if (!response.ok) {
    let code = "internal";
    let message = response.statusText;
    let details: Record<string, string> = {};
    try {
      const parsed = (await response.json()) as {
        code?: string;
        message?: string;
        details?: Record<string, string>;
      };
      code = parsed.code ?? code;
      message = parsed.message ?? message;
      details = parsed.details ?? {};
    } catch {
      /* non-JSON error body */
    }
    if (response.status === 401) onUnauthorized?.();
    throw new ApiError(response.status, code, message, details);
  }
  if (response.status === 204) return undefined as T;
  if (options.raw) return (await response.blob()) as T;
  return (await response.json()) as T;
}

function query(params: Record<string, string | number | string[] | undefined>): string {
  const search = new URLSearchParams();
  for (const [key, value] of Object.entries(params)) {
    if (value === undefined || value === "") continue;
    if (Array.isArray(value)) {
      for (const item of value) search.append(key, item);
    } else {
      search.set(key, String(value));
    }
  }
  const encoded = search.toString();
  return encoded ? `?${encoded}` : "";
}

// -- auth ---------------------------------------------------------------------

export function registerAccount(body: {
  username: string;
  email: string;
  password: string;
  display_name?: string;
}): Promise<UserProfile> {
  return request("POST", "/api/auth/register", { json: body });
}

export function login(
  username: string,
  password: string,
): Promise<{ token: string; expires_at: string; user: UserProfile }> {
  return request("POST", "/api/auth/login", { json: { username, password } });
}

export function logout(): Promise<void> {
  return request("POST", "/api/auth/logout");
}

export function me(): Promise<UserProfile> {
  return request("GET", "/api/users/me");
}

export function updateProfile(body: {
  display_name?: string;
  email?: string;
  password?: string;
}): Promise<UserProfile> {
  return request("PATCH", "/api/users/me", { json: body });
}

export function deleteAccount(): Promise<void> {
  return request("DELETE", "/api/users/me");
}

// -- datasets ------------------------------------------------------------------

export interface UploadFileSpec {
  /** Relative path inside the dataset (folder structure preserved). */
  path: string;
  blob: Blob;
}

export function buildUploadForm(
  meta: {
    name: string;
    description?: string;
    visibility: "public" | "org" | "private";
    org_ids?: string[];
    tags?: string[];
  },
  files: UploadFileSpec[],
): FormData {
  const form = new FormData();
  form.append("meta", JSON.stringify(meta));
  for (const file of files) {
    form.append("file", file.blob, file.path);
  }
  return form;
}

export function uploadDataset(form: FormData): Promise<DatasetDetail> {
  return request("POST", "/api/datasets", { form });
}

export function searchDatasets(filters: SearchFilters): Promise<Page<DatasetSummary>> {
  return request(
    "GET",
    "/api/datasets" +
      query({
        name: filters.name,
        file_type: filters.file_type,
        tag: filters.tags,
        author: filters.author,
        page: filters.page,
        page_size: filters.page_size,
      }),
  );
}

export function getDataset(id: string): Promise<DatasetDetail> {
  return request("GET", `/api/datasets/${id}`);
}

export function updateDataset(
  id: string,
  patch: {
    name?: string;
    description?: string;
    tags?: string[];
    visibility?: string;
    org_ids?: string[];
  },
): Promise<DatasetDetail> {
  return request("PATCH", `/api/datasets/${id}`, { json: patch });
}

export function deleteDataset(id: string): Promise<void> {
  return request("DELETE", `/api/datasets/${id}`);
}

export function archiveUrl(id: string): string {
  return `${getApiBase()}/api/datasets/${id}/archive`;
}

export function fileUrl(id: string, path: string): string {
  return `${getApiBase()}/api/datasets/${id}/files/${path}`;
}

export function downloadArchive(id: string): Promise<Blob> {
  return request("GET", `/api/datasets/${id}/archive`, { raw: true });
}

export function downloadFile(id: string, path: string): Promise<Blob> {
  return request("GET", `/api/datasets/${id}/files/${path}`, { raw: true });
}

// -- reviews --------------------------------------------------------------------

export function submitReview(
  datasetId: string,
  rating: number,
  comment: string,
): Promise<Review> {
  return request("POST", `/api/datasets/${datasetId}/reviews`, {
    json: { rating, comment },
  });
}

export function listReviews(
  datasetId: string,
  page = 1,
  pageSize = 50,
): Promise<Page<Review>> {
  return request(
    "GET",
    `/api/datasets/${datasetId}/reviews` + query({ page, page_size: pageSize }),
  );
}

export function updateReview(
  reviewId: string,
  patch: { rating?: number; comment?: string },
): Promise<Review> {
  return request("PATCH", `/api/reviews/${reviewId}`, { json: patch });
}

export function deleteReview(reviewId: string): Promise<void> {
  return request("DELETE", `/api/reviews/${reviewId}`);
}

// -- organizations ----------------------------------------------------------------

export function createOrg(name: string, description: string): Promise<Org> {
  return request("POST", "/api/orgs", { json: { name, description } });
}

export function listOrgs(page = 1, pageSize = 100): Promise<Page<Org>> {
  return request("GET", "/api/orgs" + query({ page, page_size: pageSize }));
}

export function joinOrg(orgId: string): Promise<OrgMember & { org_id: string }> {
  return request("POST", `/api/orgs/${orgId}/join`);
}

export function leaveOrg(orgId: string): Promise<void> {
  return request("POST", `/api/orgs/${orgId}/leave`);
}

export function listOrgMembers(
  orgId: string,
  page = 1,
  pageSize = 100,
): Promise<Page<OrgMember>> {
  return request(
    "GET",
    `/api/orgs/${orgId}/members` + query({ page, page_size: pageSize }),
  );
}

export function listOrgDatasets(
  orgId: string,
  page = 1,
  pageSize = 20,
): Promise<Page<DatasetSummary>> {
  return request(
    "GET",
    `/api/orgs/${orgId}/datasets` + query({ page, page_size: pageSize }),
  );
}

// -- messaging ---------------------------------------------------------------------

export function startConversation(userId: string): Promise<Conversation> {
  return request("POST", "/api/conversations", { json: { user_id: userId } });
}

export function listConversations(page = 1, pageSize = 50): Promise<Page<Conversation>> {
  return request("GET", "/api/conversations" + query({ page, page_size: pageSize }));
}

export function listMessages(
  conversationId: string,
  page = 1,
  pageSize = 100,
): Promise<Page<Message>> {
  return request(
    "GET",
    `/api/conversations/${conversationId}/messages` +
      query({ page, page_size: pageSize }),
  );
}

export function sendMessage(conversationId: string, body: string): Promise<Message> {
  return request("POST", `/api/conversations/${conversationId}/messages`, {
    json: { body },
  });
}

// -- notifications -------------------------------------------------------------------

export function listNotifications(
  unreadOnly: boolean,
  page = 1,
  pageSize = 50,
): Promise<Page<Notification>> {
  return request(
    "GET",
    "/api/notifications" +
      query({ unread: String(unreadOnly), page, page_size: pageSize }),
  );
}

export function markNotificationsRead(ids: string[]): Promise<{ updated: number }> {
  return request("POST", "/api/notifications/mark-read", {
    json: { notification_ids: ids },
  });
}

// -- misc ------------------------------------------------------------------------------

export function health(): Promise<{ status: string }> {
  return request("GET", "/api/health");
}
