/**
 * client.ts — thin fetch wrapper over the six session endpoints.
 * Rejections surface as ServiceError with the server's detail string.
 */

import {
  SessionDoc,
  SubmitResponse,
  TaskPayload,
} from "./protocol.js";

export class ServiceError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(detail);
  }
}

async function request<T>(
  parse: (doc: unknown) => T,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const resp = await fetch(path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail =
      typeof body?.detail === "string" ? body.detail : `HTTP ${resp.status}`;
    throw new ServiceError(resp.status, detail);
  }
  return parse(body);
}

export const api = {
  createSession: (participantId: string) =>
    request((d) => SessionDoc.parse(d), "/api/sessions", {
      method: "POST",
      body: JSON.stringify({ participant_id: participantId }),
    }),

  currentTask: (sessionId: string) =>
    request((d) => TaskPayload.parse(d), `/api/sessions/${sessionId}/task`),

  assign: (sessionId: string, patient: number, slot: number) =>
    request(
      (d) => TaskPayload.parse(d),
      `/api/sessions/${sessionId}/assignments`,
      { method: "POST", body: JSON.stringify({ patient, slot }) },
    ),

  unassign: (sessionId: string, patient: number) =>
    request(
      (d) => TaskPayload.parse(d),
      `/api/sessions/${sessionId}/assignments/${patient}`,
      { method: "DELETE" },
    ),

  submit: (sessionId: string) =>
    request(
      (d) => SubmitResponse.parse(d),
      `/api/sessions/${sessionId}/submit`,
      { method: "POST" },
    ),
};
