/**
 * store.ts — client-side task state with optimistic mutations.
 *
 * Every interaction still round-trips to the server; the optimistic layer
 * only hides latency. apply* pre-checks feasibility with the same rules the
 * server enforces: a click that would obviously be rejected leaves the grid
 * untouched (the request is still sent and the server's verdict wins).
 * reconcile() replaces local state with the authoritative payload, so after
 * any interaction sequence the UI equals the server.
 */

import { ActiveTask, TaskPayload } from "./protocol.js";

export function assignedSlotOf(task: ActiveTask, patient: number): number | null {
  const hit = task.assignments.find((a) => a.patient === patient);
  return hit ? hit.slot : null;
}

export function canAssign(task: ActiveTask, patient: number, slot: number): boolean {
  return (
    patient >= 0 &&
    patient < task.b &&
    slot >= 0 &&
    slot < task.slots &&
    assignedSlotOf(task, patient) === null &&
    task.availabilities[slot] > 0
  );
}

function withAssignment(task: ActiveTask, patient: number, slot: number): ActiveTask {
  const availabilities = [...task.availabilities];
  availabilities[slot] -= 1;
  const assignments = [...task.assignments, { patient, slot }];
  return {
    ...task,
    availabilities,
    assignments,
    pending: task.b - assignments.length,
    score: task.score + task.scores[patient][slot],
  };
}

function withoutAssignment(task: ActiveTask, patient: number): ActiveTask {
  const slot = assignedSlotOf(task, patient);
  if (slot === null) return task;
  const availabilities = [...task.availabilities];
  availabilities[slot] += 1;
  const assignments = task.assignments.filter((a) => a.patient !== patient);
  return {
    ...task,
    availabilities,
    assignments,
    pending: task.b - assignments.length,
    score: task.score - task.scores[patient][slot],
  };
}

export class TaskStore {
  private snapshot: TaskPayload | null = null;

  constructor(public state: TaskPayload) {}

  get active(): ActiveTask | null {
    return this.state.status === "active" ? this.state : null;
  }

  /** Returns true when the optimistic change was applied locally. */
  optimisticAssign(patient: number, slot: number): boolean {
    const task = this.active;
    if (!task || !canAssign(task, patient, slot)) return false;
    this.snapshot = this.state;
    this.state = withAssignment(task, patient, slot);
    return true;
  }

  optimisticUnassign(patient: number): boolean {
    const task = this.active;
    if (!task || assignedSlotOf(task, patient) === null) return false;
    this.snapshot = this.state;
    this.state = withoutAssignment(task, patient);
    return true;
  }

  /** Server responded: its payload replaces whatever we guessed. */
  reconcile(server: TaskPayload): void {
    this.state = server;
    this.snapshot = null;
  }

  /** Server rejected: restore the pre-mutation state. */
  rollback(): void {
    if (this.snapshot !== null) {
      this.state = this.snapshot;
      this.snapshot = null;
    }
  }
}
