"""Replay a recorded-decision dataset and read off the deferral curve.

Synthesizes a study-scale dataset (800 participants x 8 tasks), saves it to
disk in the JSONL + instance-JSON interchange format, loads it back, and
reproduces the offline analysis: utility vs b, the incompleteness filter
sweep, and the skill tiers.

Run: python3 demos/replay_study.py
"""

import pathlib

import numpy as np

from defermatch.experiment import (
    filter_by_incompleteness,
    load_instances,
    participant_mean_utilities,
    replay_arm_curve,
    save_instances,
    synthesize_study_records,
)
from defermatch.humans import (
    CompletionStrategy,
    load_records,
    save_records,
    stratify_participants,
)

out = pathlib.Path(__file__).parent / "out" / "study"
out.mkdir(parents=True, exist_ok=True)

records, instances = synthesize_study_records(seed=5)
save_records(records, out / "records.jsonl")
save_instances(instances, out / "instances.json")
print(f"wrote {len(records)} records over {len(instances)} tasks to {out}")

# round-trip through disk, as the analyze CLI would
records = load_records(out / "records.jsonl")
instances = load_instances(out / "instances.json")

rng = np.random.default_rng(0)
curve = replay_arm_curve(records, instances, CompletionStrategy.RANDOM_FILL, rng)
print("\nmean expected matches by deferral count:")
for b, u in curve.items():
    bar = "#" * int(round((u - min(curve.values())) * 200))
    print(f"  b={b:>2}  {u:.4f}  {bar}")
best = max(curve, key=curve.get)
print(f"best deferral count on this dataset: b={best}")

print("\nincompleteness filter (drop anyone with >1 unassigned in >=u tasks):")
for u in (0, 1, 2, 4):
    kept = filter_by_incompleteness(records, u)
    pids = {r.participant_id for r in kept}
    print(f"  u={u}: {len(kept):>4} records, {len(pids):>3} participants kept")

per_participant = participant_mean_utilities(
    records, instances, CompletionStrategy.RANDOM_FILL, rng
)
tiers = stratify_participants(per_participant)
counts = {t: sum(1 for v in tiers.values() if v == t) for t in ("bottom", "mid", "top")}
print(f"\nskill tiers (40/20/40 split): {counts}")
for tier in ("bottom", "top"):
    vals = [per_participant[p] for p, t in tiers.items() if t == tier]
    print(f"  {tier}: mean utility {float(np.mean(vals)):.4f}")
