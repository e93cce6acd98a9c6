/**
 * dom.ts — paint a GridViewModel into the page. No state lives here;
 * main.ts rebuilds the model and repaints after every change.
 */

import { GridViewModel } from "./model.js";

export interface GridHandlers {
  onCellClick: (patient: number, slot: number, assigned: boolean) => void;
  onRowClick: (patient: number) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function paintGrid(
  root: HTMLElement,
  vm: GridViewModel,
  handlers: GridHandlers,
): void {
  root.replaceChildren();

  const table = el("table", "grid");
  const head = el("tr");
  head.appendChild(el("th", "corner", vm.taskLabel));
  for (const label of vm.columnLabels) head.appendChild(el("th", "slot-label", label));
  table.appendChild(head);

  const avail = el("tr", "availability");
  avail.appendChild(el("th", "row-label", "open slots"));
  for (const n of vm.availabilities) {
    avail.appendChild(el("td", n === 0 ? "avail full" : "avail", String(n)));
  }
  table.appendChild(avail);

  for (const row of vm.rows) {
    const tr = el("tr", row.selected ? "patient selected" : "patient");
    const name = el("th", row.assigned ? "row-label assigned" : "row-label", row.name);
    name.addEventListener("click", () => handlers.onRowClick(row.patient));
    tr.appendChild(name);
    for (const cell of row.cells) {
      const td = el("td", "cell", cell.assigned ? "" : cell.label);
      td.style.backgroundColor = cell.color;
      td.style.color = cell.textColor;
      if (cell.assigned) {
        td.classList.add("assigned");
        td.textContent = `☺ ${cell.label}`; // occupied marker
      }
      if (cell.clickable) {
        td.classList.add("clickable");
        td.addEventListener("click", () =>
          handlers.onCellClick(cell.patient, cell.slot, cell.assigned),
        );
      }
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  root.appendChild(table);
}

export function paintPanels(vm: GridViewModel): void {
  byId("pending").textContent = String(vm.pending);
  byId("score").textContent = vm.score;
  const submit = byId<HTMLButtonElement>("submit");
  submit.disabled = !vm.submitEnabled;
}

export function paintTimer(text: string, urgent: boolean): void {
  const timer = byId("timer");
  timer.textContent = text;
  timer.classList.toggle("urgent", urgent);
}

let toastTimer: number | undefined;
export function toast(message: string, kind: "error" | "info" = "error"): void {
  const node = byId("toast");
  node.textContent = message;
  node.className = `toast show ${kind}`;
  window.clearTimeout(toastTimer);
  toastTimer = window.setTimeout(() => node.classList.remove("show"), 3500);
}

export function byId<T extends HTMLElement = HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}
