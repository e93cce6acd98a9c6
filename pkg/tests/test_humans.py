"""Simulated, replayed, and completion human policies."""

import numpy as np
import pytest

from defermatch.humans import (
    CompletionStrategy,
    HumanDecisionRecord,
    NoRecordError,
    RecordValidationError,
    SimulatedHuman,
    complete_matching,
    greedy_decisions,
    greedy_human,
    load_records,
    noisy_greedy_human,
    replay_human,
    save_records,
    stratify_participants,
    truncated_human,
)
from defermatch.matching import (
    MatchInstance,
    Matching,
    ResidualInstance,
    ResourceSet,
    brute_force_matching,
    matching_utility,
    residual,
    solve_imperfect_matching,
)


def _mean_utility(policy, p, runs, seed=999):
    rng = np.random.default_rng(seed)
    return float(np.mean([matching_utility(policy(rng), p) for _ in range(runs)]))


def test_greedy_single_pair():
    resid = ResidualInstance((1,), (0, 1))
    p = np.array([[0.2, 0.3], [0.4, 0.9]])
    m = greedy_human(resid, p)
    assert m.sorted_pairs() == [(1, 1)]


def test_greedy_worked_example():
    resid = ResidualInstance((0, 1), (1, 1))
    p = np.array([[0.9, 0.2], [0.8, 0.7]])
    m = greedy_human(resid, p)
    assert m.sorted_pairs() == [(0, 0), (1, 1)]
    assert matching_utility(m, p) == pytest.approx(1.6)


def test_greedy_tie_break_lexicographic():
    resid = ResidualInstance((0, 1), (1, 1))
    p = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert greedy_decisions(resid, p) == [(0, 0), (1, 1)]


def test_greedy_never_beats_oracle():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, 4))
        caps = tuple(int(c) for c in rng.integers(1, 3, k))
        p = rng.uniform(0, 1, (n, k))
        inst = MatchInstance(n, ResourceSet(tuple(range(k)), caps), p, p)
        resid = residual(inst, Matching.empty())
        m = greedy_human(resid, p)
        cardinality = len(m.pairs)
        best = brute_force_matching(inst, "success_prob", b=n - cardinality)
        assert matching_utility(m, p) <= best.objective + 1e-12


def test_noisy_zero_sigma_is_exactly_greedy():
    rng = np.random.default_rng(4)
    p = rng.uniform(0, 1, (6, 3))
    resid = ResidualInstance(tuple(range(6)), (2, 2, 2))
    a = noisy_greedy_human(resid, p, 0.0, np.random.default_rng(0))
    b = greedy_human(resid, p)
    assert a.pairs == b.pairs
    assert a.objective == b.objective


def test_noisy_expected_utility_non_increasing_in_sigma():
    p = np.random.default_rng(5).uniform(0, 1, (6, 3))
    resid = ResidualInstance(tuple(range(6)), (2, 2, 2))
    runs = 3000
    means = [
        _mean_utility(lambda r, s=s: noisy_greedy_human(resid, p, s, r), p, runs)
        for s in (0.0, 0.1, 1.0)
    ]
    # Monte Carlo with generous slack: ordering must hold beyond noise level
    assert means[0] >= means[1] - 0.03
    assert means[1] >= means[2] - 0.03
    assert means[0] > means[2] + 0.1


def test_noisy_infinite_sigma_matches_random_fill_mean():
    p = np.random.default_rng(123).uniform(0, 1, (4, 2))
    resid = ResidualInstance((0, 1, 2, 3), (2, 2))
    u_noise = _mean_utility(lambda r: noisy_greedy_human(resid, p, 1e6, r), p, 10**4)
    u_rand = _mean_utility(
        lambda r: complete_matching(
            Matching.empty(), resid, p, CompletionStrategy.RANDOM_FILL, r
        ),
        p,
        10**4,
    )
    assert u_noise == pytest.approx(u_rand, abs=0.02)


def test_negative_sigma_rejected():
    resid = ResidualInstance((0,), (1,))
    with pytest.raises(ValueError):
        noisy_greedy_human(resid, np.array([[0.5]]), -1.0, np.random.default_rng(0))


def test_truncated_budgets():
    p = np.random.default_rng(6).uniform(0, 1, (5, 3))
    resid = ResidualInstance(tuple(range(5)), (2, 2, 1))
    base = lambda res, prob, rng, limit: greedy_decisions(res, prob, limit=limit)
    full = truncated_human(base, 5, resid, p)
    assert full.pairs == greedy_human(resid, p).pairs
    assert truncated_human(base, 99, resid, p).pairs == full.pairs
    assert truncated_human(base, 0, resid, p).pairs == frozenset()
    two = truncated_human(base, 2, resid, p)
    assert len(two.pairs) == 2
    assert set(two.pairs) <= set(full.pairs)
    with pytest.raises(ValueError):
        truncated_human(base, -1, resid, p)


def test_complete_matching_no_op_when_complete():
    p = np.array([[0.9, 0.2], [0.8, 0.7]])
    resid = ResidualInstance((0, 1), (1, 1))
    m = greedy_human(resid, p)
    for strategy in CompletionStrategy:
        assert complete_matching(m, resid, p, strategy, np.random.default_rng(0)) is m


def test_complete_matching_single_remaining_is_deterministic():
    p = np.random.default_rng(7).uniform(0, 1, (3, 2))
    resid = ResidualInstance((0, 1, 2), (2, 1))
    partial = Matching.from_pairs({(0, 0), (1, 0)}, p)  # slot 1 left open, patient 2 left
    for strategy in CompletionStrategy:
        done = complete_matching(partial, resid, p, strategy, rng=None)
        assert (2, 1) in done.pairs
        assert len(done.pairs) == 3


def test_random_fill_never_decreases_utility():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(2, 8))
        k = int(rng.integers(1, 4))
        caps = tuple(int(c) for c in rng.integers(1, 3, k))
        p = rng.uniform(0, 1, (n, k))
        unmatched = tuple(range(min(n, sum(caps))))
        resid = ResidualInstance(unmatched, caps)
        cut = int(rng.integers(0, len(unmatched)))
        partial = Matching.from_pairs(greedy_decisions(resid, p)[:cut], p)
        left = complete_matching(partial, resid, p, CompletionStrategy.LEAVE_UNASSIGNED, rng)
        filled = complete_matching(partial, resid, p, CompletionStrategy.RANDOM_FILL, rng)
        assert matching_utility(filled, p) >= matching_utility(left, p) - 1e-12
        assert partial.pairs <= filled.pairs


def test_random_fill_requires_rng_and_capacity():
    p = np.zeros((2, 1))
    resid = ResidualInstance((0, 1), (2,))
    with pytest.raises(ValueError):
        complete_matching(Matching.empty(), resid, p, CompletionStrategy.RANDOM_FILL, None)
    short = ResidualInstance((0, 1), (1,))
    with pytest.raises(ValueError):
        complete_matching(
            Matching.from_pairs(set(), p), short, np.zeros((3, 1)),
            CompletionStrategy.RANDOM_FILL, np.random.default_rng(0),
        )


def _record(pid, tid, b, assignments, completed=True):
    stamps = tuple(float(i + 1) for i in range(len(assignments)))
    return HumanDecisionRecord(pid, tid, b, tuple(assignments), stamps, completed)


def test_replay_single_and_missing():
    records = [_record("p1", "t1", 2, [(0, 1), (3, 0)])]
    m = replay_human(records, "t1", 2, np.random.default_rng(0))
    assert m.pairs == frozenset({(0, 1), (3, 0)})
    with pytest.raises(NoRecordError):
        replay_human(records, "t1", 3, np.random.default_rng(0))
    with pytest.raises(NoRecordError):
        replay_human(records, "t9", 2, np.random.default_rng(0))


def test_replay_uniform_between_two_records():
    records = [
        _record("p1", "t1", 1, [(0, 0)]),
        _record("p2", "t1", 1, [(1, 0)]),
    ]
    rng = np.random.default_rng(11)
    hits = sum(
        replay_human(records, "t1", 1, rng).pairs == frozenset({(0, 0)})
        for _ in range(10**4)
    )
    assert hits / 10**4 == pytest.approx(0.5, abs=0.02)


def test_replay_never_fabricates():
    records = [_record("p1", "t1", 5, [(2, 3)], completed=False)]
    m = replay_human(records, "t1", 5, np.random.default_rng(0))
    assert m.pairs == frozenset({(2, 3)})


def test_record_schema_round_trip(tmp_path):
    records = [
        _record("p1", "t1", 3, [(0, 1), (2, 0), (1, 1)]),
        _record("p2", "t2", 2, [(4, 0)], completed=False),
    ]
    path = tmp_path / "records.jsonl"
    save_records(records, path)
    assert load_records(path) == records


def test_record_loader_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = '{"participant_id":"p","task_id":"t","b":1,"assignments":[[0,0]],"timestamps":[1.0],"completed":true}'
    path.write_text(good + "\n{broken\n")
    with pytest.raises(RecordValidationError, match="line 2"):
        load_records(path)
    path.write_text(good + "\n" + good.replace('"b":1', '"b":0') + "\n")
    with pytest.raises(RecordValidationError, match="line 2"):
        load_records(path)


def test_record_invariants():
    with pytest.raises(RecordValidationError):
        _record("p", "t", 1, [(0, 0), (1, 0)])  # more assignments than b
    with pytest.raises(RecordValidationError):
        HumanDecisionRecord("p", "t", 2, ((0, 0),), (), True)  # missing stamp
    with pytest.raises(RecordValidationError):
        _record("p", "t", 3, [(0, 0), (0, 1)])  # duplicate patient


def test_stratify_800_participants():
    utilities = {f"p{i:04d}": float(i) for i in range(800)}
    tiers = stratify_participants(utilities)
    counts = {t: sum(1 for v in tiers.values() if v == t) for t in ("bottom", "mid", "top")}
    assert counts == {"bottom": 320, "mid": 160, "top": 320}
    assert tiers["p0000"] == "bottom" and tiers["p0799"] == "top"
    assert tiers["p0400"] == "mid"


def test_stratify_ten_distinct():
    utilities = {f"p{i}": float(i) for i in range(10)}
    tiers = stratify_participants(utilities)
    assert sum(1 for v in tiers.values() if v == "bottom") == 4
    assert sum(1 for v in tiers.values() if v == "mid") == 2
    assert sum(1 for v in tiers.values() if v == "top") == 4


def test_stratify_all_equal_breaks_ties_by_id():
    utilities = {pid: 1.0 for pid in ("a", "b", "c", "d", "e")}
    tiers = stratify_participants(utilities)
    assert tiers == {"a": "bottom", "b": "bottom", "c": "mid", "d": "top", "e": "top"}
    with pytest.raises(ValueError):
        stratify_participants({})


def test_simulated_human_dispatch():
    p = np.random.default_rng(10).uniform(0, 1, (4, 2))
    resid = ResidualInstance((0, 1, 2, 3), (2, 2))
    rng = np.random.default_rng(1)
    assert SimulatedHuman("greedy").act(resid, p, rng).pairs == greedy_human(resid, p).pairs
    trunc = SimulatedHuman("truncated", sigma=0.0, decision_budget=2)
    assert len(trunc.act(resid, p, rng).pairs) == 2
    with pytest.raises(ValueError):
        SimulatedHuman("telepathic")
    with pytest.raises(ValueError):
        SimulatedHuman("truncated")


def test_policies_always_feasible():
    rng = np.random.default_rng(33)
    for _ in range(50):
        n, k = int(rng.integers(2, 8)), int(rng.integers(1, 4))
        caps = tuple(int(c) for c in rng.integers(0, 3, k))
        p = rng.uniform(0, 1, (n, k))
        inst = MatchInstance(n, ResourceSet(tuple(range(k)), caps), p, p)
        b = int(rng.integers(0, n + 1))
        if max(n - b, 0) > sum(caps):
            continue
        resid = residual(inst, solve_imperfect_matching(inst, "confidence", b))
        m = noisy_greedy_human(resid, p, 0.5, rng)
        uses = [0] * k
        for i, r in m.pairs:
            assert i in resid.unmatched
            uses[r] += 1
        assert all(u <= c for u, c in zip(uses, resid.remaining_capacities))
