"""Command-line driver.

Subcommands: generate (emit instances), solve (one matching), simulate
(policy rollouts), bandit (full experiment), analyze (dataset filtering,
tiers, per-arm curve), serve (session service). Exit codes: 0 success,
1 validation error, 2 runtime error.
"""

import argparse
import dataclasses
import json
import sys

import numpy as np

from .experiment import (
    ExperimentConfig,
    ReplaySpec,
    emit_results,
    filter_by_incompleteness,
    load_instances,
    participant_mean_utilities,
    replay_arm_curve,
    run_experiment,
)
from .generation import GeneratorConfig, sample_instance
from .humans import (
    CompletionStrategy,
    SimulatedHuman,
    complete_matching,
    load_records,
    stratify_participants,
)
from .matching import MatchInstance, matching_utility, residual, solve_imperfect_matching


def _add_generator_args(parser):
    parser.add_argument("--generator-config", help="JSON file with pool distribution")
    parser.add_argument("--seed", type=int, default=0)


def _generator_from_args(args):
    if getattr(args, "generator_config", None):
        return GeneratorConfig.from_file(args.generator_config)
    return GeneratorConfig()


def cmd_generate(args):
    config = _generator_from_args(args)
    rng = np.random.default_rng(args.seed)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w")
    try:
        for _ in range(args.count):
            instance, infos = sample_instance(config, rng)
            doc = instance.to_json()
            doc["patients"] = [{"x": info.x, "d": info.d} for info in infos]
            out.write(json.dumps(doc) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_solve(args):
    instance = MatchInstance.load(args.instance)
    matching = solve_imperfect_matching(instance, args.weights, b=args.b)
    doc = {
        "b": args.b,
        "pairs": matching.sorted_pairs(),
        "objective": matching.objective,
    }
    if instance.success_prob is not None:
        doc["expected_utility"] = matching_utility(matching, instance.success_prob)
    print(json.dumps(doc))
    return 0


def cmd_simulate(args):
    config = _generator_from_args(args)
    rng = np.random.default_rng(args.seed)
    human = SimulatedHuman(
        kind=args.policy, sigma=args.sigma, decision_budget=args.budget
    )
    completion = CompletionStrategy(args.completion)
    utilities = []
    for _ in range(args.rollouts):
        instance, _ = sample_instance(config, rng)
        alg = solve_imperfect_matching(instance, "confidence", b=args.b)
        resid = residual(instance, alg)
        partial = human.act(resid, instance.success_prob, rng)
        completed = complete_matching(
            partial, resid, instance.success_prob, completion, rng
        )
        utilities.append(
            matching_utility(alg, instance.success_prob)
            + matching_utility(completed, instance.success_prob)
        )
    print(
        json.dumps(
            {
                "b": args.b,
                "rollouts": args.rollouts,
                "mean_utility": float(np.mean(utilities)),
                "std_utility": float(np.std(utilities)),
            }
        )
    )
    return 0


def cmd_bandit(args):
    if args.config:
        config = ExperimentConfig.from_file(args.config)
        if args.out:
            config = dataclasses.replace(config, output_dir=args.out)
    else:
        arms = tuple(int(b) for b in args.arms.split(","))
        human = (
            ReplaySpec(records_path=args.records, instances_path=args.instances)
            if args.records
            else SimulatedHuman(kind=args.policy, sigma=args.sigma)
        )
        config = ExperimentConfig(
            generator=_generator_from_args(args),
            arms=arms,
            T=args.T,
            realizations=args.realizations,
            human=human,
            master_seed=args.seed,
            output_dir=args.out,
            workers=args.workers,
        )
    result = run_experiment(config)
    if config.output_dir:
        emit_results(result, config)
        print(f"wrote {config.output_dir}/arms.csv")
    summary = result.summary
    print(
        json.dumps(
            {
                "best_arm": summary.best_arm(),
                "baseline_b0": summary.baseline_b0[0],
                "baseline_bn": summary.baseline_bn[0],
            }
        )
    )
    return 0


def cmd_analyze(args):
    records = load_records(args.records)
    instances = load_instances(args.instances)
    completion = CompletionStrategy(args.completion)
    if args.filter_u is not None:
        before = len({r.participant_id for r in records})
        records = filter_by_incompleteness(records, args.filter_u)
        after = len({r.participant_id for r in records})
        print(f"filtering u={args.filter_u}: {before} -> {after} participants")
    rng = np.random.default_rng(args.seed)
    out = {}
    if args.arm_curve:
        out["arm_curve"] = replay_arm_curve(records, instances, completion, rng)
    if args.stratify:
        means = participant_mean_utilities(records, instances, completion, rng)
        tiers = stratify_participants(means)
        sizes = {}
        for tier in tiers.values():
            sizes[tier] = sizes.get(tier, 0) + 1
        out["tier_sizes"] = sizes
        if args.tiers_out:
            with open(args.tiers_out, "w") as fh:
                json.dump(tiers, fh, indent=1, sort_keys=True)
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(
        generator=_generator_from_args(args),
        plan_seed=args.seed,
        dataset_path=args.dataset,
        monitor=True,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="defermatch",
        description="Capacity-constrained matching with learned deferral to humans",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit sampled instances as JSON lines")
    _add_generator_args(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", help="output path, - for stdout")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--weights", default="confidence", choices=["confidence", "success_prob"])
    p.add_argument("--b", type=int, default=0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="roll out a simulated human policy")
    _add_generator_args(p)
    p.add_argument("--b", type=int, default=11)
    p.add_argument("--policy", default="greedy", choices=["greedy", "noisy-greedy", "truncated"])
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--completion", default="random-fill", choices=[s.value for s in CompletionStrategy])
    p.add_argument("--rollouts", type=int, default=100)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bandit", help="run the full experiment harness")
    _add_generator_args(p)
    p.add_argument("--config", help="ExperimentConfig JSON file (overrides flags)")
    p.add_argument("--arms", default="5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20")
    p.add_argument("--T", type=int, default=500)
    p.add_argument("--realizations", type=int, default=20)
    p.add_argument("--policy", default="greedy", choices=["greedy", "noisy-greedy"])
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--records", help="replay dataset instead of simulation")
    p.add_argument("--instances", help="instance store for replay")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--out", help="output directory for CSVs")
    p.set_defaults(func=cmd_bandit)

    p = sub.add_parser("analyze", help="dataset filtering, tiers, per-arm curve")
    p.add_argument("--records", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--filter-u", type=int, default=None)
    p.add_argument("--arm-curve", action="store_true")
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--tiers-out")
    p.add_argument("--completion", default="random-fill", choices=[s.value for s in CompletionStrategy])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="start the live session service")
    _add_generator_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--dataset", help="JSONL file to append session records to")
    p.add_argument("--static", help="directory with the built web UI")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
