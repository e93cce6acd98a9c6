"""Human decision policies on residual instances.

The algorithmic side leaves b patients and the unused slot capacities to a
human. This module supplies the policy families used in simulation (greedy on
the accurate success scores, noisy greedy, budget-truncated), replay of
recorded decisions, completion strategies for partial matchings, and the
40/20/40 participant tier split.

Policies work in decision order: each returns the ordered list of
(patient, slot) choices it made, which is what truncation and the session
record schema preserve. The Matching wrappers discard the order.
"""

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .matching import Matching, matching_utility


class RecordValidationError(ValueError):
    """A dataset line failed schema validation."""


class NoRecordError(LookupError):
    """No recorded human decision exists for the requested task and b."""


@dataclass(frozen=True)
class HumanDecisionRecord:
    """One participant-task outcome in the released-dataset schema."""

    participant_id: str
    task_id: str
    b: int
    assignments: tuple  # ordered ((patient, slot), ...) in decision order
    timestamps: tuple  # seconds from task start, one per assignment
    completed: bool

    def __post_init__(self):
        object.__setattr__(
            self,
            "assignments",
            tuple((int(i), int(r)) for i, r in self.assignments),
        )
        object.__setattr__(
            self, "timestamps", tuple(float(t) for t in self.timestamps)
        )
        if len(self.assignments) > self.b:
            raise RecordValidationError("more assignments than deferred patients")
        if len(self.timestamps) != len(self.assignments):
            raise RecordValidationError("one timestamp per assignment required")
        patients = [i for i, _ in self.assignments]
        if len(set(patients)) != len(patients):
            raise RecordValidationError("patient assigned more than once")

    @property
    def unassigned_count(self):
        return self.b - len(self.assignments)

    def to_json(self):
        return {
            "participant_id": self.participant_id,
            "task_id": self.task_id,
            "b": self.b,
            "assignments": [list(p) for p in self.assignments],
            "timestamps": list(self.timestamps),
            "completed": self.completed,
        }

    @classmethod
    def from_json(cls, doc):
        try:
            return cls(
                participant_id=str(doc["participant_id"]),
                task_id=str(doc["task_id"]),
                b=int(doc["b"]),
                assignments=tuple(tuple(p) for p in doc["assignments"]),
                timestamps=tuple(doc["timestamps"]),
                completed=bool(doc["completed"]),
            )
        except (KeyError, TypeError) as exc:
            raise RecordValidationError(f"malformed record: {exc}") from exc


def save_records(records, path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def append_record(record, path):
    with open(path, "a") as fh:
        fh.write(json.dumps(record.to_json()) + "\n")


def load_records(path):
    """Load a JSON-lines dataset; validation errors carry the line number."""
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordValidationError(f"line {lineno}: invalid JSON: {exc}")
            try:
                records.append(HumanDecisionRecord.from_json(doc))
            except RecordValidationError as exc:
                raise RecordValidationError(f"line {lineno}: {exc}")
    return records


class CompletionStrategy(Enum):
    """What happens to patients a partial human matching left unassigned.

    The single-remaining-patient rule (exactly one unassigned patient and
    exactly one open slot left: assign it) is always in force under both
    strategies, mirroring how such tasks were repaired in the source study.
    """

    LEAVE_UNASSIGNED = "leave-unassigned"
    RANDOM_FILL = "random-fill"


def _open_slots(residual, used):
    return [
        r
        for r, c in enumerate(residual.remaining_capacities)
        if c - used[r] > 0
    ]


def greedy_decisions(residual, success_prob, limit=None):
    """Ordered greedy choices: repeatedly take the feasible (patient, slot)
    pair with the largest success probability, ties to the smallest indices."""
    p = np.asarray(success_prob, dtype=np.float64)
    remaining = list(residual.remaining_capacities)
    todo = list(residual.unmatched)
    decisions = []
    limit = len(todo) if limit is None else min(limit, len(todo))
    while len(decisions) < limit and todo and sum(remaining) > 0:
        best = None
        for i in todo:
            for r in range(len(remaining)):
                if remaining[r] > 0 and (best is None or p[i, r] > p[best[0], best[1]]):
                    best = (i, r)
        if best is None:
            break
        i, r = best
        decisions.append((i, r))
        todo.remove(i)
        remaining[r] -= 1
    return decisions


def noisy_greedy_decisions(residual, success_prob, sigma, rng, limit=None):
    """Greedy on success probabilities perturbed once per cell by N(0, sigma)."""
    if sigma < 0:
        raise ValueError("noise scale sigma must be nonnegative")
    p = np.asarray(success_prob, dtype=np.float64)
    noise = sigma * rng.standard_normal(p.shape)
    return greedy_decisions(residual, p + noise, limit=limit)


def greedy_human(residual, success_prob, rng=None):
    """Idealized human: exact greedy on the accurate success scores."""
    decisions = greedy_decisions(residual, success_prob)
    return Matching.from_pairs(decisions, np.asarray(success_prob, dtype=np.float64))


def noisy_greedy_human(residual, success_prob, sigma, rng):
    """Greedy on noise-perturbed scores; sigma=0 is exactly greedy_human."""
    decisions = noisy_greedy_decisions(residual, success_prob, sigma, rng)
    return Matching.from_pairs(decisions, np.asarray(success_prob, dtype=np.float64))


def truncated_human(base_policy, m, residual, success_prob, rng=None):
    """Run a base policy but keep only its first m decisions.

    base_policy(residual, success_prob, rng, limit) must return ordered
    decisions; greedy_decisions and noisy_greedy_decisions (partially
    applied) fit. Models a participant running out of time after m choices.
    """
    if m < 0:
        raise ValueError("decision budget must be nonnegative")
    decisions = base_policy(residual, success_prob, rng, m)
    return Matching.from_pairs(
        decisions[:m], np.asarray(success_prob, dtype=np.float64)
    )


def complete_matching(partial, residual, success_prob, strategy, rng=None):
    """Resolve unassigned patients of a partial human matching.

    LEAVE_UNASSIGNED returns the input (scored over assigned pairs only);
    RANDOM_FILL assigns every remaining patient uniformly over slots with
    spare capacity. Under either strategy, exactly one unassigned patient
    facing exactly one open slot is assigned deterministically.
    """
    p = np.asarray(success_prob, dtype=np.float64)
    used = [0] * len(residual.remaining_capacities)
    for _, r in partial.pairs:
        used[r] += 1
    todo = sorted(set(residual.unmatched) - partial.individuals())
    open_units = sum(residual.remaining_capacities) - sum(used)
    if not todo:
        return partial
    if len(todo) == 1 and open_units == 1:
        slot = _open_slots(residual, used)[0]
        return Matching.from_pairs(set(partial.pairs) | {(todo[0], slot)}, p)
    if strategy is CompletionStrategy.LEAVE_UNASSIGNED:
        return partial
    if strategy is not CompletionStrategy.RANDOM_FILL:
        raise ValueError(f"unknown completion strategy {strategy!r}")
    if open_units < len(todo):
        raise ValueError("remaining capacity cannot absorb all unassigned patients")
    if rng is None:
        raise ValueError("random-fill requires an rng")
    pairs = set(partial.pairs)
    for i in todo:
        slots = _open_slots(residual, used)
        r = slots[int(rng.integers(len(slots)))]
        pairs.add((i, r))
        used[r] += 1
    return Matching.from_pairs(pairs, p)


def replay_human(records, task_id, b, rng, success_prob=None):
    """Replay one recorded human solution for (task, b), chosen uniformly.

    With success_prob given, the returned Matching carries the recomputed
    objective; otherwise pairs only (objective 0) for schema round-trips.
    """
    candidates = [r for r in records if r.task_id == task_id and r.b == b]
    if not candidates:
        raise NoRecordError(f"no record for task {task_id!r} with b={b}")
    rec = candidates[int(rng.integers(len(candidates)))]
    if success_prob is None:
        return Matching(frozenset(rec.assignments), 0.0)
    return Matching.from_pairs(rec.assignments, np.asarray(success_prob, dtype=np.float64))


def stratify_participants(mean_utilities):
    """40/20/40 split by mean achieved utility.

    mean_utilities maps participant id -> mean expected utility. Sorting is
    by (utility, participant id) ascending, so exact ties resolve by id.
    Returns {participant_id: "bottom" | "mid" | "top"}.
    """
    if not mean_utilities:
        raise ValueError("no participants to stratify")
    ordered = sorted(mean_utilities, key=lambda pid: (mean_utilities[pid], pid))
    count = len(ordered)
    edge = count * 2 // 5
    tiers = {}
    for rank, pid in enumerate(ordered):
        if rank < edge:
            tiers[pid] = "bottom"
        elif rank >= count - edge:
            tiers[pid] = "top"
        else:
            tiers[pid] = "mid"
    return tiers


@dataclass(frozen=True)
class SimulatedHuman:
    """A configured simulated policy: kind "greedy" | "noisy-greedy" |
    "truncated" (noisy greedy stopped after decision_budget choices)."""

    kind: str = "greedy"
    sigma: float = 0.0
    decision_budget: int = None

    def __post_init__(self):
        if self.kind not in ("greedy", "noisy-greedy", "truncated"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.kind == "truncated" and (
            self.decision_budget is None or self.decision_budget < 0
        ):
            raise ValueError("truncated policy needs a nonnegative decision budget")

    def act(self, residual, success_prob, rng):
        if self.kind == "greedy":
            return greedy_human(residual, success_prob, rng)
        if self.kind == "noisy-greedy":
            return noisy_greedy_human(residual, success_prob, self.sigma, rng)
        return truncated_human(
            lambda res, p, r, m: noisy_greedy_decisions(res, p, self.sigma, r, limit=m),
            self.decision_budget,
            residual,
            success_prob,
            rng,
        )
