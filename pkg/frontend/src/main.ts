/**
 * main.ts — session flow: join, solve each task on the grid, submit.
 *
 * Interaction gesture: click a patient row to select it, then click a slot
 * cell in that row to assign; clicking an assigned cell unassigns. Changes
 * apply optimistically and every click still round-trips to the server,
 * whose response (payload or rejection) is final.
 */

import { api, ServiceError } from "./client.js";
import { Countdown } from "./countdown.js";
import { byId, paintGrid, paintPanels, paintTimer, toast } from "./dom.js";
import { buildGridViewModel } from "./model.js";
import { checkTaskConsistency, TaskPayload } from "./protocol.js";
import { TaskStore } from "./store.js";

let sessionId = "";
let store: TaskStore | null = null;
let countdown: Countdown | null = null;
let selectedPatient: number | null = null;
let busy = false; // one in-flight mutation at a time
let expiredNotified = false;

function inputsEnabled(): boolean {
  return !busy && countdown !== null && !countdown.expired();
}

function repaint(): void {
  if (!store) return;
  const task = store.active;
  const gridRoot = byId("grid-root");
  if (!task) {
    const done = store.state.status === "complete" ? store.state.completed_tasks : 0;
    gridRoot.replaceChildren();
    byId("complete-note").textContent =
      `Session complete: ${done} tasks recorded. Thank you!`;
    byId("task-screen").classList.add("finished");
    paintTimer("0:00", false);
    return;
  }
  const problem = checkTaskConsistency(task);
  if (problem) {
    toast(`bad payload from server: ${problem}`);
    return;
  }
  const vm = buildGridViewModel(task, selectedPatient, inputsEnabled());
  paintGrid(gridRoot, vm, { onRowClick: selectRow, onCellClick: cellClicked });
  paintPanels(vm);
}

function installTask(payload: TaskPayload): void {
  store = new TaskStore(payload);
  selectedPatient = null;
  expiredNotified = false;
  countdown =
    payload.status === "active" ? new Countdown(payload.time_left) : null;
  repaint();
}

function selectRow(patient: number): void {
  if (!inputsEnabled()) return;
  selectedPatient = selectedPatient === patient ? null : patient;
  repaint();
}

function cellClicked(patient: number, slot: number, assigned: boolean): void {
  if (!store || !inputsEnabled()) return;
  if (assigned) {
    void mutate(() => api.unassign(sessionId, patient), () =>
      store!.optimisticUnassign(patient),
    );
    return;
  }
  if (selectedPatient === null) {
    // first click selects the row the cell belongs to
    selectRow(patient);
    return;
  }
  if (selectedPatient !== patient) {
    selectRow(patient);
    return;
  }
  selectedPatient = null;
  void mutate(() => api.assign(sessionId, patient, slot), () =>
    store!.optimisticAssign(patient, slot),
  );
}

async function mutate(
  send: () => Promise<TaskPayload>,
  applyLocal: () => boolean,
): Promise<void> {
  if (!store) return;
  busy = true;
  applyLocal();
  repaint();
  try {
    store.reconcile(await send());
  } catch (err) {
    store.rollback();
    toast(err instanceof ServiceError ? err.detail : String(err));
    if (err instanceof ServiceError && err.detail === "deadline-passed") {
      await refreshAfterExpiry();
    }
  } finally {
    busy = false;
    repaint();
  }
}

async function submitTask(): Promise<void> {
  if (!store || !inputsEnabled()) return;
  busy = true;
  try {
    const next = await api.submit(sessionId);
    toast(`task recorded: ${next.record.assignments.length} assignments`, "info");
    installTask(next);
  } catch (err) {
    toast(err instanceof ServiceError ? err.detail : String(err));
  } finally {
    busy = false;
    repaint();
  }
}

/** Deadline hit: the server auto-submits on its next sync; pick that up. */
async function refreshAfterExpiry(): Promise<void> {
  if (expiredNotified) return;
  expiredNotified = true;
  toast("time is up, the task was submitted automatically", "info");
  try {
    installTask(await api.currentTask(sessionId));
  } catch (err) {
    toast(String(err));
  }
}

function tick(): void {
  if (!countdown || !store?.active) return;
  paintTimer(countdown.display(), countdown.remainingMs() < 15_000);
  if (countdown.expired()) {
    repaint(); // disables all inputs
    void refreshAfterExpiry();
  }
}

async function join(): Promise<void> {
  const field = byId<HTMLInputElement>("participant");
  const pid = field.value.trim();
  if (!pid) {
    toast("enter a participant id first");
    return;
  }
  try {
    const doc = await api.createSession(pid);
    sessionId = doc.session_id;
    byId("join-screen").classList.add("hidden");
    byId("task-screen").classList.remove("hidden");
    byId("who").textContent = `${doc.participant_id} (${doc.parity} parity)`;
    installTask(doc.task);
  } catch (err) {
    toast(err instanceof ServiceError ? err.detail : String(err));
  }
}

window.addEventListener("DOMContentLoaded", () => {
  byId("join").addEventListener("click", () => void join());
  byId<HTMLInputElement>("participant").addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") void join();
  });
  byId("submit").addEventListener("click", () => void submitTask());
  window.setInterval(tick, 250);
});
