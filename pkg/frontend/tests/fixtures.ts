import { ActiveTask } from "../src/protocol.js";

/** A small consistent task payload; override what a test cares about. */
export function makeTask(overrides: Partial<ActiveTask> = {}): ActiveTask {
  const base: ActiveTask = {
    session_id: "s-1",
    status: "active",
    task_index: 0,
    task_count: 8,
    task_id: "t000",
    b: 3,
    slots: 2,
    scores: [
      [0.1, 0.9],
      [0.5, 0.4],
      [0.8, 0.2],
    ],
    availabilities: [1, 2],
    assignments: [],
    pending: 3,
    score: 0.0,
    time_left: 120.0,
    task_seconds: 120.0,
  };
  return { ...base, ...overrides };
}
