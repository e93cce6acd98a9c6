"""Walk through one matching instance: full automation, full deferral, and
the residual handed to a human in between.

Run: python3 demos/solve_and_defer.py
"""

import numpy as np

from defermatch import GeneratorConfig, residual, sample_instance, solve_imperfect_matching
from defermatch.humans import greedy_decisions
from defermatch.matching import Matching, matching_utility

rng = np.random.default_rng(11)
config = GeneratorConfig()
instance, patients = sample_instance(config, rng)
print(f"pool: {instance.n} patients, {instance.k} units, "
      f"capacity {instance.resource_set.total_capacity}")

# b = 0: the solver places everyone using its confidence scores
full = solve_imperfect_matching(instance, "confidence", b=0)
print(f"\nb=0  solver confidence objective {full.objective:.4f}, "
      f"true expected utility {matching_utility(full, instance.success_prob):.4f}")

# b = 11: the solver keeps 9 placements, 11 patients go to the human
alg = solve_imperfect_matching(instance, "confidence", b=11)
res = residual(instance, alg)
print(f"\nb=11 solver placed {len(alg.pairs)} patients; "
      f"deferred {len(res.unmatched)}, units left {res.total_remaining}")
print("     deferred patients:", list(res.unmatched))
print("     remaining capacity:", list(res.remaining_capacities))

# a careful human fills the residual greedily on the accurate probabilities
human_pairs = greedy_decisions(res, instance.success_prob)
combined = Matching.from_pairs(list(alg.pairs) + human_pairs, instance.success_prob)
print(f"     human adds {len(human_pairs)} pairs -> "
      f"expected utility {combined.objective:.4f}")

# b = n: the human does everything
everyone = residual(instance, solve_imperfect_matching(instance, "confidence", b=instance.n))
solo = Matching.from_pairs(greedy_decisions(everyone, instance.success_prob),
                           instance.success_prob)
print(f"\nb={instance.n} human-only expected utility {solo.objective:.4f}")
print("\nmixing beats both extremes on this draw:",
      combined.objective > max(matching_utility(full, instance.success_prob),
                               solo.objective))
