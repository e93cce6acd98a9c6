/**
 * model.ts — turn a task payload into a flat view model for the painter.
 * All display logic lives here so it can be tested without a DOM.
 */

import { colorForScore, slotLabels, textColorFor } from "./heatmap.js";
import { ActiveTask } from "./protocol.js";
import { assignedSlotOf } from "./store.js";

export interface GridCell {
  patient: number;
  slot: number;
  p: number;
  label: string; // score formatted for the cell
  color: string;
  textColor: string;
  assigned: boolean; // this exact cell holds an assignment
  clickable: boolean;
}

export interface GridRow {
  patient: number;
  name: string;
  assigned: boolean;
  selected: boolean;
  cells: GridCell[];
}

export interface GridViewModel {
  rows: GridRow[];
  columnLabels: string[];
  availabilities: number[];
  pending: number;
  score: string;
  submitEnabled: boolean;
  taskLabel: string; // "Task 3 of 8"
}

export function formatScore(p: number): string {
  return p.toFixed(2);
}

export function buildGridViewModel(
  task: ActiveTask,
  selectedPatient: number | null,
  inputsEnabled: boolean,
): GridViewModel {
  const rows: GridRow[] = [];
  for (let i = 0; i < task.b; i++) {
    const rowSlot = assignedSlotOf(task, i);
    const cells: GridCell[] = task.scores[i].map((p, j) => ({
      patient: i,
      slot: j,
      p,
      label: formatScore(p),
      color: colorForScore(p),
      textColor: textColorFor(p),
      assigned: rowSlot === j,
      // assigned cells stay clickable (click = unassign); otherwise the
      // gesture is select-row-then-cell, and the server vets feasibility
      clickable: inputsEnabled && (rowSlot === j || rowSlot === null),
    }));
    rows.push({
      patient: i,
      name: `Patient ${i + 1}`,
      assigned: rowSlot !== null,
      selected: selectedPatient === i,
      cells,
    });
  }
  return {
    rows,
    columnLabels: slotLabels(task.slots),
    availabilities: [...task.availabilities],
    pending: task.pending,
    score: task.score.toFixed(3),
    submitEnabled: inputsEnabled && task.pending === 0,
    taskLabel: `Task ${task.task_index + 1} of ${task.task_count}`,
  };
}
