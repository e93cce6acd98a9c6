/**
 * protocol.ts — zod schemas for the session service JSON protocol.
 *
 * The server is the source of truth; everything here only validates shape
 * so a malformed payload fails loudly at the boundary instead of as a
 * blank grid. Scores arrive residual-only: b rows, one per deferred
 * patient, already relabeled to display indices 0..b-1.
 */

import { z } from "zod";

export const ActiveTask = z.object({
  session_id: z.string(),
  status: z.literal("active"),
  task_index: z.number().int().nonnegative(),
  task_count: z.number().int().positive(),
  task_id: z.string(),
  b: z.number().int().nonnegative(),
  slots: z.number().int().positive(),
  scores: z.array(z.array(z.number().min(0).max(1))),
  availabilities: z.array(z.number().int().nonnegative()),
  assignments: z.array(
    z.object({ patient: z.number().int(), slot: z.number().int() }),
  ),
  pending: z.number().int().nonnegative(),
  score: z.number(),
  time_left: z.number().nonnegative(),
  task_seconds: z.number().positive(),
});

export const CompleteTask = z.object({
  session_id: z.string(),
  status: z.literal("complete"),
  completed_tasks: z.number().int(),
});

export const TaskPayload = z.discriminatedUnion("status", [
  ActiveTask,
  CompleteTask,
]);

export const SessionDoc = z.object({
  session_id: z.string(),
  participant_id: z.string(),
  parity: z.string(),
  b_values: z.array(z.number().int()),
  task: TaskPayload,
});

export const DecisionRecord = z.object({
  participant_id: z.string(),
  task_id: z.string(),
  b: z.number().int(),
  assignments: z.array(z.tuple([z.number().int(), z.number().int()])),
  timestamps: z.array(z.number()),
  completed: z.boolean(),
});

// submit returns the next task payload with the finalized record merged in
export const SubmitResponse = z.intersection(
  TaskPayload,
  z.object({ record: DecisionRecord }),
);

export type ActiveTask = z.infer<typeof ActiveTask>;
export type CompleteTask = z.infer<typeof CompleteTask>;
export type TaskPayload = z.infer<typeof TaskPayload>;
export type SessionDoc = z.infer<typeof SessionDoc>;
export type DecisionRecord = z.infer<typeof DecisionRecord>;

/** Cross-field checks zod cannot express per-field. */
export function checkTaskConsistency(task: ActiveTask): string | null {
  if (task.scores.length !== task.b) {
    return `expected ${task.b} score rows, got ${task.scores.length}`;
  }
  if (task.scores.some((row) => row.length !== task.slots)) {
    return "score row width disagrees with slot count";
  }
  if (task.availabilities.length !== task.slots) {
    return "availability row width disagrees with slot count";
  }
  if (task.pending !== task.b - task.assignments.length) {
    return "pending count disagrees with assignment list";
  }
  return null;
}
