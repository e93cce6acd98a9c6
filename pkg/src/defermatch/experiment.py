"""Experiment harness: bandit runs over generated or replayed pools.

A run executes R independent UCB1 realizations (isolated RNG streams spawned
from one master seed), aggregates per-arm means with normal-approximation
95% confidence intervals across realizations, and tracks two baselines on
the same instance stream: b=0 (fully algorithmic) and b=n (fully human).
Outputs are a per-arm CSV, a baselines CSV, and a run manifest; identical
config and master seed reproduce the CSVs byte for byte.
"""

import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bandit import reward, run_ucb1, save_round_logs
from .generation import GeneratorConfig, sample_instance
from .humans import (
    CompletionStrategy,
    HumanDecisionRecord,
    SimulatedHuman,
    complete_matching,
    load_records,
    noisy_greedy_decisions,
    stratify_participants,
)
from .matching import (
    MatchInstance,
    Matching,
    matching_utility,
    residual,
    solve_imperfect_matching,
)

DEFAULT_ARMS = tuple(range(5, 21))


@dataclass(frozen=True)
class ReplaySpec:
    """Human decisions come from a recorded dataset instead of simulation."""

    records_path: str
    instances_path: str
    tier: str = None  # optional "bottom" | "mid" | "top" restriction

    def __post_init__(self):
        if self.tier not in (None, "bottom", "mid", "top"):
            raise ValueError(f"unknown tier {self.tier!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig = None
    arms: tuple = DEFAULT_ARMS
    T: int = 2000
    realizations: int = 100
    human: object = None  # SimulatedHuman or ReplaySpec
    completion: CompletionStrategy = CompletionStrategy.RANDOM_FILL
    filter_u: int = None
    reward_mode: str = "expected"
    normalize_reward: bool = False
    bonus_scale: float = 1.0
    output_dir: str = None
    master_seed: int = 0
    workers: int = 0
    keep_logs: bool = False

    def __post_init__(self):
        if self.generator is None:
            object.__setattr__(self, "generator", GeneratorConfig())
        if self.human is None:
            object.__setattr__(self, "human", SimulatedHuman(kind="greedy"))
        object.__setattr__(self, "arms", tuple(int(b) for b in self.arms))
        if len(self.arms) == 0:
            raise ValueError("arm set must be nonempty")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.T < len(self.arms):
            raise ValueError("horizon must cover the initialization sweep")
        if self.reward_mode not in ("expected", "sampled"):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")
        if self.filter_u is not None and not 0 <= self.filter_u <= 8:
            raise ValueError("filter threshold u must lie in {0,...,8}")
        if any(b < 0 for b in self.arms):
            raise ValueError("arms are deferral counts, must be nonnegative")

    def to_json(self):
        if isinstance(self.human, SimulatedHuman):
            human = {
                "kind": self.human.kind,
                "sigma": self.human.sigma,
                "decision_budget": self.human.decision_budget,
            }
        else:
            human = {
                "replay": self.human.records_path,
                "instances": self.human.instances_path,
                "tier": self.human.tier,
            }
        return {
            "generator": self.generator.to_json(),
            "arms": list(self.arms),
            "T": self.T,
            "realizations": self.realizations,
            "human": human,
            "completion": self.completion.value,
            "filter_u": self.filter_u,
            "reward_mode": self.reward_mode,
            "normalize_reward": self.normalize_reward,
            "bonus_scale": self.bonus_scale,
            "master_seed": self.master_seed,
            "workers": self.workers,
        }

    @classmethod
    def from_json(cls, doc):
        human_doc = doc.get("human", {"kind": "greedy"})
        if "replay" in human_doc:
            human = ReplaySpec(
                records_path=human_doc["replay"],
                instances_path=human_doc["instances"],
                tier=human_doc.get("tier"),
            )
        else:
            human = SimulatedHuman(
                kind=human_doc.get("kind", "greedy"),
                sigma=float(human_doc.get("sigma", 0.0)),
                decision_budget=human_doc.get("decision_budget"),
            )
        return cls(
            generator=GeneratorConfig.from_json(doc["generator"])
            if doc.get("generator")
            else None,
            arms=tuple(doc.get("arms", DEFAULT_ARMS)),
            T=int(doc.get("T", 2000)),
            realizations=int(doc.get("realizations", 100)),
            human=human,
            completion=CompletionStrategy(doc.get("completion", "random-fill")),
            filter_u=doc.get("filter_u"),
            reward_mode=doc.get("reward_mode", "expected"),
            normalize_reward=bool(doc.get("normalize_reward", False)),
            bonus_scale=float(doc.get("bonus_scale", 1.0)),
            output_dir=doc.get("output_dir"),
            master_seed=int(doc.get("master_seed", 0)),
            workers=int(doc.get("workers", 0)),
            keep_logs=bool(doc.get("keep_logs", False)),
        )

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def config_hash(self):
        canonical = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


class GeneratedEnvironment:
    """Per round: sample a pool, pre-match n-b algorithmically on confidence,
    let the simulated human finish on the accurate scores, score the union.
    Also evaluates the b=0 and b=n baselines on the same instance."""

    def __init__(self, generator, human, completion, reward_mode, normalize):
        self.generator = generator
        self.human = human
        self.completion = completion
        self.reward_mode = reward_mode
        self.normalizer = generator.n if normalize else None

    def _outcomes(self, instance, rng):
        if self.reward_mode != "sampled":
            return None
        return (rng.random(instance.success_prob.shape) < instance.success_prob).astype(
            np.float64
        )

    def _human_matching(self, instance, resid, rng):
        partial = self.human.act(resid, instance.success_prob, rng)
        return complete_matching(
            partial, resid, instance.success_prob, self.completion, rng
        )

    def __call__(self, arm, rng):
        instance, _ = sample_instance(self.generator, rng)
        outcomes = self._outcomes(instance, rng)
        empty = Matching.empty()

        alg = solve_imperfect_matching(instance, "confidence", b=arm)
        human = self._human_matching(instance, residual(instance, alg), rng)
        r = reward(alg, human, self.reward_mode, instance.success_prob, outcomes, self.normalizer)

        alg_full = solve_imperfect_matching(instance, "confidence", b=0)
        b0 = reward(alg_full, empty, self.reward_mode, instance.success_prob, outcomes, self.normalizer)
        human_full = self._human_matching(instance, residual(instance, empty), rng)
        bn = reward(empty, human_full, self.reward_mode, instance.success_prob, outcomes, self.normalizer)

        detail = {
            "alg_pairs": alg.sorted_pairs(),
            "human_pairs": human.sorted_pairs(),
            "baseline_b0": b0,
            "baseline_bn": bn,
        }
        return r, detail


class ReplayEnvironment:
    """Per round: draw a recorded human solution for the chosen arm, rebuild
    its task, and score algorithmic pre-matching plus the recorded human
    decisions. The b=n baseline replays a full-deferral record for the same
    task when one exists (NaN otherwise)."""

    def __init__(self, records, instances, completion, reward_mode, normalize):
        self.records = records
        self.instances = instances
        self.completion = completion
        self.reward_mode = reward_mode
        self.normalize = normalize
        self.by_b = {}
        for rec in records:
            self.by_b.setdefault(rec.b, []).append(rec)
        self.full_b = max((rec.b for rec in records), default=None)

    def _task_reward(self, rec, rng, outcomes):
        instance = self.instances[rec.task_id]
        normalizer = instance.n if self.normalize else None
        alg = solve_imperfect_matching(instance, "confidence", b=rec.b)
        resid = residual(instance, alg)
        partial = Matching.from_pairs(rec.assignments, instance.success_prob)
        human = complete_matching(
            partial, resid, instance.success_prob, self.completion, rng
        )
        return (
            reward(alg, human, self.reward_mode, instance.success_prob, outcomes, normalizer),
            instance,
            alg,
            human,
        )

    def __call__(self, arm, rng):
        pool = self.by_b.get(arm)
        if not pool:
            raise ValueError(f"dataset holds no records for arm b={arm}")
        rec = pool[int(rng.integers(len(pool)))]
        instance = self.instances[rec.task_id]
        outcomes = None
        if self.reward_mode == "sampled":
            outcomes = (
                rng.random(instance.success_prob.shape) < instance.success_prob
            ).astype(np.float64)
        r, instance, alg, human = self._task_reward(rec, rng, outcomes)

        alg_full = solve_imperfect_matching(instance, "confidence", b=0)
        b0 = reward(
            alg_full,
            Matching.empty(),
            self.reward_mode,
            instance.success_prob,
            outcomes,
            instance.n if self.normalize else None,
        )
        bn = math.nan
        full_pool = [
            r2
            for r2 in self.by_b.get(self.full_b, [])
            if r2.task_id == rec.task_id
        ]
        if full_pool and self.full_b == instance.n:
            rec_full = full_pool[int(rng.integers(len(full_pool)))]
            bn, _, _, _ = self._task_reward(rec_full, rng, outcomes)

        detail = {
            "alg_pairs": alg.sorted_pairs(),
            "human_pairs": human.sorted_pairs(),
            "baseline_b0": b0,
            "baseline_bn": bn,
            "participant_id": rec.participant_id,
            "task_id": rec.task_id,
        }
        return r, detail


def build_environment(config):
    if isinstance(config.human, ReplaySpec):
        records = load_records(config.human.records_path)
        instances = load_instances(config.human.instances_path)
        if config.filter_u is not None:
            records = filter_by_incompleteness(records, config.filter_u)
        if config.human.tier is not None:
            means = participant_mean_utilities(
                records, instances, config.completion, np.random.default_rng(0)
            )
            tiers = stratify_participants(means)
            records = [r for r in records if tiers.get(r.participant_id) == config.human.tier]
        if not records:
            raise ValueError("no records left after filtering")
        return ReplayEnvironment(
            records, instances, config.completion, config.reward_mode, config.normalize_reward
        )
    return GeneratedEnvironment(
        config.generator,
        config.human,
        config.completion,
        config.reward_mode,
        config.normalize_reward,
    )


@dataclass(frozen=True)
class ArmSummary:
    """Across-realization per-arm statistics plus the two baselines."""

    arms: tuple
    means: tuple
    ci_low: tuple
    ci_high: tuple
    pulls: tuple
    baseline_b0: tuple  # (mean, ci_low, ci_high)
    baseline_bn: tuple

    def best_arm(self):
        return self.arms[int(np.argmax(self.means))]


@dataclass(frozen=True)
class ExperimentResult:
    summary: ArmSummary
    arm_means: np.ndarray  # realizations x arms matrix of per-run means
    pull_counts: np.ndarray
    b0_means: np.ndarray  # per-realization baseline means
    bn_means: np.ndarray
    logs: tuple  # per-realization RoundLog lists when keep_logs


def _finite_mean(values):
    finite = [v for v in values if not math.isnan(v)]
    return float(np.mean(finite)) if finite else math.nan


def _run_realization(config, idx):
    seed_seq = np.random.SeedSequence(config.master_seed).spawn(config.realizations)[idx]
    rng = np.random.default_rng(seed_seq)
    env = build_environment(config)
    state, logs = run_ucb1(env, config.arms, config.T, rng, bonus_scale=config.bonus_scale)
    arm_means = state.rewards / np.maximum(state.counts, 1)
    b0 = _finite_mean([log.detail["baseline_b0"] for log in logs])
    bn = _finite_mean([log.detail["baseline_bn"] for log in logs])
    return idx, arm_means, state.counts.copy(), b0, bn, (logs if config.keep_logs else [])


def _ci_bounds(samples):
    """Normal-approximation 95% interval for the mean of each column."""
    samples = np.asarray(samples, dtype=np.float64)
    mean = samples.mean(axis=0)
    if samples.shape[0] < 2:
        half = np.zeros_like(mean)
    else:
        half = 1.96 * samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])
    return mean, mean - half, mean + half


def run_experiment(config):
    """Execute all realizations and aggregate; deterministic in config+seed."""
    results = [None] * config.realizations
    if config.workers and config.workers > 1 and config.realizations > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for out in pool.map(_run_realization, [config] * config.realizations, range(config.realizations)):
                results[out[0]] = out
    else:
        for idx in range(config.realizations):
            results[idx] = _run_realization(config, idx)

    arm_means = np.vstack([r[1] for r in results])
    pulls = np.vstack([r[2] for r in results])
    b0s = np.array([r[3] for r in results])
    bns = np.array([r[4] for r in results])
    logs = tuple(r[5] for r in results)

    means, lo, hi = _ci_bounds(arm_means)
    b0_mean, b0_lo, b0_hi = _ci_bounds(b0s[:, None])
    bn_mean, bn_lo, bn_hi = _ci_bounds(bns[:, None])
    summary = ArmSummary(
        arms=config.arms,
        means=tuple(float(v) for v in means),
        ci_low=tuple(float(v) for v in lo),
        ci_high=tuple(float(v) for v in hi),
        pulls=tuple(int(v) for v in pulls.sum(axis=0)),
        baseline_b0=(float(b0_mean[0]), float(b0_lo[0]), float(b0_hi[0])),
        baseline_bn=(float(bn_mean[0]), float(bn_lo[0]), float(bn_hi[0])),
    )
    return ExperimentResult(summary, arm_means, pulls, b0s, bns, logs)


def emit_results(result, config, out_dir=None):
    """Write arms.csv, baselines.csv, manifest.json (and optional round logs).

    Floats are serialized with repr for byte-stable, round-trippable output.
    """
    summary = result.summary if isinstance(result, ExperimentResult) else result
    if len(summary.arms) == 0:
        raise ValueError("refusing to emit an empty arm summary")
    out_dir = out_dir or config.output_dir
    if not out_dir:
        raise ValueError("no output directory configured")
    os.makedirs(out_dir, exist_ok=True)

    arms_path = os.path.join(out_dir, "arms.csv")
    with open(arms_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arm", "mean", "ci_low", "ci_high", "pulls"])
        for j, arm in enumerate(summary.arms):
            writer.writerow(
                [
                    arm,
                    repr(summary.means[j]),
                    repr(summary.ci_low[j]),
                    repr(summary.ci_high[j]),
                    summary.pulls[j],
                ]
            )

    base_path = os.path.join(out_dir, "baselines.csv")
    with open(base_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "mean", "ci_low", "ci_high"])
        for label, stats in (("b0", summary.baseline_b0), ("bn", summary.baseline_bn)):
            writer.writerow([label, repr(stats[0]), repr(stats[1]), repr(stats[2])])

    manifest = {
        "config_hash": config.config_hash(),
        "master_seed": config.master_seed,
        "arms": list(config.arms),
        "T": config.T,
        "realizations": config.realizations,
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "created": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)

    if isinstance(result, ExperimentResult) and config.keep_logs:
        for idx, logs in enumerate(result.logs):
            if logs:
                save_round_logs(logs, os.path.join(out_dir, f"rounds_{idx:03d}.jsonl"))
    return arms_path


def parse_arm_summary(arms_path, baselines_path=None):
    """Inverse of emit_results for the CSV pair."""
    arms, means, lo, hi, pulls = [], [], [], [], []
    with open(arms_path, newline="") as fh:
        for row in csv.DictReader(fh):
            arms.append(int(row["arm"]))
            means.append(float(row["mean"]))
            lo.append(float(row["ci_low"]))
            hi.append(float(row["ci_high"]))
            pulls.append(int(row["pulls"]))
    b0 = bn = (math.nan, math.nan, math.nan)
    if baselines_path:
        with open(baselines_path, newline="") as fh:
            for row in csv.DictReader(fh):
                stats = (float(row["mean"]), float(row["ci_low"]), float(row["ci_high"]))
                if row["label"] == "b0":
                    b0 = stats
                else:
                    bn = stats
    return ArmSummary(
        arms=tuple(arms),
        means=tuple(means),
        ci_low=tuple(lo),
        ci_high=tuple(hi),
        pulls=tuple(pulls),
        baseline_b0=b0,
        baseline_bn=bn,
    )


def filter_by_incompleteness(records, u):
    """Drop participants who left >1 patient unassigned in at least u tasks.

    u=0 is read as "only participants who always completed", i.e. the same
    exclusion set as u=1; the strict reading of "at least 0" would exclude
    everyone, which the threshold sweep plainly does not intend.
    """
    if u < 0:
        raise ValueError("threshold u must be nonnegative")
    incomplete_counts = {}
    for rec in records:
        if rec.unassigned_count > 1:
            incomplete_counts[rec.participant_id] = (
                incomplete_counts.get(rec.participant_id, 0) + 1
            )
    threshold = max(u, 1)
    excluded = {pid for pid, c in incomplete_counts.items() if c >= threshold}
    return [rec for rec in records if rec.participant_id not in excluded]


def save_instances(instances, path):
    """instances: dict task_id -> MatchInstance, stored as one JSON object."""
    doc = {tid: inst.to_json() for tid, inst in instances.items()}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_instances(path):
    with open(path) as fh:
        doc = json.load(fh)
    return {tid: MatchInstance.from_json(body) for tid, body in doc.items()}


def task_expected_utility(record, instance, completion, rng):
    """Full-task expected utility for one record: algorithmic pre-matching
    plus the recorded human decisions, with the completion strategy applied."""
    alg = solve_imperfect_matching(instance, "confidence", b=record.b)
    resid = residual(instance, alg)
    partial = Matching.from_pairs(record.assignments, instance.success_prob)
    human = complete_matching(partial, resid, instance.success_prob, completion, rng)
    return matching_utility(alg, instance.success_prob) + matching_utility(
        human, instance.success_prob
    )


def participant_mean_utilities(records, instances, completion, rng):
    sums = {}
    counts = {}
    for rec in records:
        u = task_expected_utility(rec, instances[rec.task_id], completion, rng)
        sums[rec.participant_id] = sums.get(rec.participant_id, 0.0) + u
        counts[rec.participant_id] = counts.get(rec.participant_id, 0) + 1
    return {pid: sums[pid] / counts[pid] for pid in sums}


def replay_arm_curve(records, instances, completion, rng):
    """Mean full-task expected utility per deferral count b over a dataset."""
    sums = {}
    counts = {}
    for rec in records:
        u = task_expected_utility(rec, instances[rec.task_id], completion, rng)
        sums[rec.b] = sums.get(rec.b, 0.0) + u
        counts[rec.b] = counts.get(rec.b, 0) + 1
    return {b: sums[b] / counts[b] for b in sorted(sums)}


def synthesize_study_records(
    seed=0,
    participants=800,
    task_count=40,
    tasks_per_participant=8,
    generator=None,
):
    """Build a synthetic stand-in for the human study dataset.

    participants split into even/odd deferral parity classes and each solve
    tasks_per_participant tasks, one per b value of their class (shuffled).
    Skill is a persistent per-participant noise scale (a 60/25/15 mixture of
    near-greedy, moderately noisy, and heavily noisy deciders); a slow
    minority additionally runs out of time, producing partial assignments.
    Returns (records, instances dict keyed by task id).
    """
    generator = generator or GeneratorConfig()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    instances = {}
    for j in range(task_count):
        inst, _ = sample_instance(generator, rng)
        instances[f"t{j:03d}"] = inst

    even_bs = [b for b in range(5, 21) if b % 2 == 0]
    odd_bs = [b for b in range(5, 21) if b % 2 == 1]
    records = []
    for p in range(participants):
        pid = f"p{p:04d}"
        bs = list(even_bs if p % 2 == 0 else odd_bs)
        rng.shuffle(bs)
        task_ids = rng.choice(task_count, size=tasks_per_participant, replace=False)
        skill_draw = rng.random()
        if skill_draw < 0.60:
            sigma = rng.uniform(0.0, 0.1)
        elif skill_draw < 0.85:
            sigma = rng.uniform(0.1, 0.5)
        else:
            sigma = rng.uniform(0.5, 1.5)
        slow = rng.random() < 0.12
        for b, tj in zip(bs, task_ids):
            tid = f"t{int(tj):03d}"
            inst = instances[tid]
            alg = solve_imperfect_matching(inst, "confidence", b=b)
            resid = residual(inst, alg)
            budget = b
            if slow and rng.random() < 0.5:
                budget = max(0, b - int(rng.integers(2, 5)))
            decisions = noisy_greedy_decisions(
                resid, inst.success_prob, sigma, rng, limit=budget
            )
            times = np.cumsum(rng.uniform(2.0, 10.0, size=len(decisions)))
            records.append(
                HumanDecisionRecord(
                    participant_id=pid,
                    task_id=tid,
                    b=b,
                    assignments=tuple(decisions),
                    timestamps=tuple(float(t) for t in times),
                    completed=len(decisions) == b,
                )
            )
    return records, instances
