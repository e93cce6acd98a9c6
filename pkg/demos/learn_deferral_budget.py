"""Let the bandit learn how many decisions to hand a simulated human.

A moderately noisy human completes what the solver defers; UCB1 explores
deferral budgets 5..20 and settles where the mix works best. Writes
arms.csv / baselines.csv / manifest.json next to this script.

Run: python3 demos/learn_deferral_budget.py   (about a minute)
"""

import pathlib

from defermatch.experiment import ExperimentConfig, emit_results, run_experiment
from defermatch.humans import SimulatedHuman

out = pathlib.Path(__file__).parent / "out" / "bandit"
config = ExperimentConfig(
    human=SimulatedHuman("noisy-greedy", sigma=0.3),
    T=300,
    realizations=8,
    master_seed=17,
    output_dir=str(out),
)
result = run_experiment(config)
emit_results(result, config)

s = result.summary
print(f"{'arm':>4} {'mean':>8} {'95% ci':>17} {'pulls':>6}")
for arm, mean, lo, hi, pulls in zip(s.arms, s.means, s.ci_low, s.ci_high, s.pulls):
    print(f"{arm:>4} {mean:8.4f} [{lo:7.4f},{hi:7.4f}] {pulls:>6}")
print(f"\nall-algorithm baseline (b=0):  {s.baseline_b0[0]:.4f}")
print(f"all-human baseline (b=n):      {s.baseline_bn[0]:.4f}")
print(f"learned budget: b={s.best_arm()}  (outputs in {out})")
