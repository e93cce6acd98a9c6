"""UCB1 over the deferral count b.

Arms are candidate values of b. Each round the environment is asked to play
one arm (sample a pool, pre-match n-b patients algorithmically, let the
human policy finish, score the union) and the index rule picks the next arm.

The printed form of the algorithm divides by zero pull counts at the start
and is read with the standard convention: one initialization pull per arm,
then argmax of mean plus exploration bonus. Rewards here live on the raw
utility scale [0, n] rather than [0, 1]; the bonus therefore takes a
configurable scale factor, with sqrt(2 log T / count) at scale 1.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ArmState:
    """Cumulative reward and pull count per arm, plus the horizon."""

    arms: tuple
    T: int
    bonus_scale: float = 1.0
    counts: np.ndarray = None
    rewards: np.ndarray = None

    def __post_init__(self):
        self.arms = tuple(int(b) for b in self.arms)
        if len(self.arms) == 0:
            raise ValueError("arm set must be nonempty")
        if len(set(self.arms)) != len(self.arms):
            raise ValueError("arm values must be distinct")
        if self.T < 1:
            raise ValueError("horizon T must be positive")
        if self.counts is None:
            self.counts = np.zeros(len(self.arms), dtype=np.int64)
        if self.rewards is None:
            self.rewards = np.zeros(len(self.arms), dtype=np.float64)

    def index_of(self, arm):
        try:
            return self.arms.index(arm)
        except ValueError:
            raise ValueError(f"unknown arm {arm}")

    def mean(self, arm):
        j = self.index_of(arm)
        if self.counts[j] == 0:
            raise ValueError(f"arm {arm} has no pulls yet")
        return float(self.rewards[j] / self.counts[j])

    def bonus(self, arm):
        j = self.index_of(arm)
        if self.counts[j] == 0:
            raise ValueError(f"arm {arm} has no pulls yet")
        return self.bonus_scale * math.sqrt(2.0 * math.log(self.T) / self.counts[j])

    def update(self, arm, reward):
        j = self.index_of(arm)
        self.counts[j] += 1
        self.rewards[j] += float(reward)

    @property
    def rounds_played(self):
        return int(self.counts.sum())


def select_arm(state):
    """Next arm: the lowest-index unplayed arm during initialization, then
    argmax of mean + bonus with ties to the smaller arm value. Deterministic
    given the state."""
    for j, c in enumerate(state.counts):
        if c == 0:
            return state.arms[j]
    best = None
    best_val = -math.inf
    for j, arm in enumerate(state.arms):
        val = state.rewards[j] / state.counts[j] + state.bonus_scale * math.sqrt(
            2.0 * math.log(state.T) / state.counts[j]
        )
        if val > best_val or (val == best_val and arm < best):
            best = arm
            best_val = val
    return best


def reward(alg_matching, human_matching, mode, success_prob=None, outcomes=None, normalizer=None):
    """Round reward for the union of the algorithmic and human matchings.

    mode="expected" sums success probabilities; mode="sampled" sums realized
    0/1 outcomes (outcomes: n x k array of Bernoulli draws). normalizer, when
    given, divides the reward (e.g. by n for a [0,1]-bounded analysis).
    """
    overlap = alg_matching.individuals() & human_matching.individuals()
    if overlap:
        raise ValueError(f"matchings overlap on individuals {sorted(overlap)}")
    pairs = list(alg_matching.pairs) + list(human_matching.pairs)
    if mode == "expected":
        if success_prob is None:
            raise ValueError("expected mode requires success probabilities")
        score = np.asarray(success_prob, dtype=np.float64)
    elif mode == "sampled":
        if outcomes is None:
            raise ValueError("sampled mode requires realized outcomes")
        score = np.asarray(outcomes, dtype=np.float64)
    else:
        raise ValueError(f"unknown reward mode {mode!r}")
    total = math.fsum(score[i, r] for i, r in pairs)
    if normalizer:
        total /= float(normalizer)
    return total


@dataclass(frozen=True)
class RoundLog:
    """One bandit round: arm played, reward, and the matchings behind it."""

    t: int
    arm: int
    reward: float
    alg_pairs: tuple = ()
    human_pairs: tuple = ()
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "t": self.t,
            "arm": self.arm,
            "reward": self.reward,
            "alg_pairs": [list(p) for p in self.alg_pairs],
            "human_pairs": [list(p) for p in self.human_pairs],
            **({"detail": self.detail} if self.detail else {}),
        }


def save_round_logs(logs, path):
    with open(path, "w") as fh:
        for log in logs:
            fh.write(json.dumps(log.to_json()) + "\n")


def run_ucb1(environment, arms, T, rng, bonus_scale=1.0):
    """Play T rounds of UCB1.

    environment(arm, rng) -> (reward, detail) where detail is a dict that may
    carry "alg_pairs" / "human_pairs" plus any extra per-round values the
    caller wants logged. Returns (final ArmState, list of RoundLog).
    """
    arms = tuple(arms)
    if T < len(arms):
        raise ValueError("horizon must cover one initialization pull per arm")
    state = ArmState(arms=arms, T=T, bonus_scale=bonus_scale)
    logs = []
    for t in range(T):
        arm = select_arm(state)
        r, detail = environment(arm, rng)
        state.update(arm, r)
        logs.append(
            RoundLog(
                t=t,
                arm=arm,
                reward=float(r),
                alg_pairs=tuple(detail.get("alg_pairs", ())),
                human_pairs=tuple(detail.get("human_pairs", ())),
                detail={
                    k: v
                    for k, v in detail.items()
                    if k not in ("alg_pairs", "human_pairs")
                },
            )
        )
    return state, logs


def empirical_regret(logs, true_means):
    """Cumulative regret trace against the best fixed arm.

    true_means maps arm -> its true (or estimated) mean reward. Entry t is
    (t+1) * max_mean - sum of the played arms' means up to round t.
    """
    for log in logs:
        if log.arm not in true_means:
            raise ValueError(f"round {log.t} played unknown arm {log.arm}")
    best = max(true_means.values())
    played = np.array([true_means[log.arm] for log in logs], dtype=np.float64)
    steps = np.arange(1, len(played) + 1, dtype=np.float64)
    return steps * best - np.cumsum(played)
