import { describe, expect, it } from "vitest";

import { canAssign, TaskStore } from "../src/store.js";
import { makeTask } from "./fixtures.js";

describe("optimistic assignment", () => {
  it("updates availability, pending and score locally", () => {
    const store = new TaskStore(makeTask());
    expect(store.optimisticAssign(0, 1)).toBe(true);
    const t = store.active!;
    expect(t.availabilities).toEqual([1, 1]);
    expect(t.assignments).toEqual([{ patient: 0, slot: 1 }]);
    expect(t.pending).toBe(2);
    expect(t.score).toBeCloseTo(0.9, 12);
  });

  it("refuses locally-infeasible clicks without touching state", () => {
    const store = new TaskStore(makeTask({ availabilities: [0, 2] }));
    const before = store.state;
    expect(store.optimisticAssign(0, 0)).toBe(false); // full slot
    expect(store.optimisticAssign(99, 1)).toBe(false); // unknown patient
    expect(store.state).toBe(before);
  });

  it("treats an already-assigned patient as infeasible", () => {
    const store = new TaskStore(makeTask());
    store.optimisticAssign(1, 0);
    expect(canAssign(store.active!, 1, 1)).toBe(false);
    expect(store.optimisticAssign(1, 1)).toBe(false);
  });
});

describe("rollback and reconcile", () => {
  it("rollback restores the exact pre-mutation state", () => {
    const initial = makeTask();
    const store = new TaskStore(initial);
    store.optimisticAssign(2, 0);
    store.rollback();
    expect(store.state).toEqual(initial);
  });

  it("assign then unassign returns to the initial grid", () => {
    const initial = makeTask();
    const store = new TaskStore(initial);
    store.optimisticAssign(1, 1);
    store.optimisticUnassign(1);
    expect(store.state).toEqual(initial);
  });

  it("reconcile adopts the server payload and forgets the snapshot", () => {
    const store = new TaskStore(makeTask());
    store.optimisticAssign(0, 0);
    const server = makeTask({
      availabilities: [0, 2],
      assignments: [{ patient: 0, slot: 0 }],
      pending: 2,
      score: 0.1,
    });
    store.reconcile(server);
    store.rollback(); // must be a no-op now
    expect(store.state).toEqual(server);
  });

  it("unassign of an unassigned patient is rejected locally", () => {
    const store = new TaskStore(makeTask());
    expect(store.optimisticUnassign(0)).toBe(false);
  });
});
