"""Capacity-constrained maximum-weight bipartite imperfect matching.

An instance pairs n individuals with k resources (capacity c_r each). The
solver returns a matching of exactly max(n - b, 0) pairs maximizing the
summed weight, where b is the number of decisions deferred to a human. The
implementation is successive-shortest-path min-cost flow, so integrality is
structural rather than relying on an LP relaxation being tight.

Ties between optimal matchings are broken toward the lexicographically
smallest sorted pair list. This is done exactly by giving every (i, r) arc a
secondary integer cost 2^N - 2^(N-1-(i*k+r)); minimizing the secondary sum at
fixed cardinality maximizes sum(2^(N-1-idx)), whose unique maximizer among
optimal pair sets is the lexicographic minimum. Dijkstra and the node
potentials run over (float, bigint) cost pairs, which form an ordered group,
so the shortest-path argument is unchanged.
"""

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np


class InfeasibleMatchingError(ValueError):
    """Requested cardinality exceeds total remaining capacity."""


class DimensionMismatchError(ValueError):
    """Weight matrix shape disagrees with the instance dimensions."""


class EnumerationBoundError(ValueError):
    """Instance too large for the brute-force oracle."""


@dataclass(frozen=True)
class ResourceSet:
    """Ordered resources with per-resource integer capacities."""

    resources: tuple
    capacities: tuple

    def __post_init__(self):
        object.__setattr__(self, "resources", tuple(self.resources))
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        if len(self.resources) < 1:
            raise ValueError("need at least one resource")
        if len(self.resources) != len(self.capacities):
            raise ValueError("resources and capacities must have equal length")
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be nonnegative")

    @classmethod
    def uniform(cls, k, capacity):
        return cls(tuple(range(k)), (int(capacity),) * k)

    @property
    def k(self):
        return len(self.resources)

    @property
    def total_capacity(self):
        return sum(self.capacities)


@dataclass(frozen=True)
class MatchInstance:
    """A pool of individuals with dual score matrices over the resources.

    confidence holds the classifier scores the algorithmic policy optimizes;
    success_prob holds the accurate individual success probabilities shown to
    humans, and may be absent when only confidence is known.
    """

    n: int
    resource_set: ResourceSet
    confidence: np.ndarray
    success_prob: np.ndarray = None

    def __post_init__(self):
        conf = np.asarray(self.confidence, dtype=np.float64)
        object.__setattr__(self, "confidence", conf)
        if conf.shape != (self.n, self.resource_set.k):
            raise DimensionMismatchError(
                f"confidence shape {conf.shape} != ({self.n}, {self.resource_set.k})"
            )
        if conf.size and (conf.min() < 0.0 or conf.max() > 1.0):
            raise ValueError("confidence entries must lie in [0, 1]")
        if self.success_prob is not None:
            prob = np.asarray(self.success_prob, dtype=np.float64)
            object.__setattr__(self, "success_prob", prob)
            if prob.shape != conf.shape:
                raise DimensionMismatchError(
                    f"success_prob shape {prob.shape} != {conf.shape}"
                )
            if prob.size and (prob.min() < 0.0 or prob.max() > 1.0):
                raise ValueError("success_prob entries must lie in [0, 1]")

    @property
    def k(self):
        return self.resource_set.k

    def weight_matrix(self, weights):
        """Resolve a weight selector ("confidence", "success_prob", or an
        explicit n x k array) to a matrix."""
        if isinstance(weights, str):
            if weights == "confidence":
                return self.confidence
            if weights == "success_prob":
                if self.success_prob is None:
                    raise ValueError("instance carries no success probabilities")
                return self.success_prob
            raise ValueError(f"unknown weight selector {weights!r}")
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (self.n, self.k):
            raise DimensionMismatchError(
                f"weights shape {w.shape} != ({self.n}, {self.k})"
            )
        return w

    def to_json(self):
        doc = {
            "n": self.n,
            "resources": list(self.resources_as_json()),
            "capacities": list(self.resource_set.capacities),
            "confidence": self.confidence.tolist(),
        }
        if self.success_prob is not None:
            doc["success_prob"] = self.success_prob.tolist()
        return doc

    def resources_as_json(self):
        for r in self.resource_set.resources:
            yield r if isinstance(r, (str, int)) else str(r)

    @classmethod
    def from_json(cls, doc):
        rs = ResourceSet(tuple(doc["resources"]), tuple(doc["capacities"]))
        return cls(
            n=int(doc["n"]),
            resource_set=rs,
            confidence=np.asarray(doc["confidence"], dtype=np.float64),
            success_prob=(
                np.asarray(doc["success_prob"], dtype=np.float64)
                if doc.get("success_prob") is not None
                else None
            ),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class Matching:
    """A feasible pair set with its objective under some weight matrix."""

    pairs: frozenset
    objective: float

    def __post_init__(self):
        object.__setattr__(
            self, "pairs", frozenset((int(i), int(r)) for i, r in self.pairs)
        )

    @classmethod
    def empty(cls):
        return cls(frozenset(), 0.0)

    @classmethod
    def from_pairs(cls, pairs, weight_matrix):
        pairs = frozenset((int(i), int(r)) for i, r in pairs)
        obj = math.fsum(weight_matrix[i, r] for i, r in pairs)
        return cls(pairs, obj)

    def sorted_pairs(self):
        return sorted(self.pairs)

    def individuals(self):
        return {i for i, _ in self.pairs}


@dataclass(frozen=True)
class ResidualInstance:
    """What the human sees: deferred individuals and leftover capacities."""

    unmatched: tuple
    remaining_capacities: tuple

    def __post_init__(self):
        object.__setattr__(self, "unmatched", tuple(int(i) for i in self.unmatched))
        object.__setattr__(
            self,
            "remaining_capacities",
            tuple(int(c) for c in self.remaining_capacities),
        )
        if any(c < 0 for c in self.remaining_capacities):
            raise ValueError("remaining capacities must be nonnegative")
        if len(set(self.unmatched)) != len(self.unmatched):
            raise ValueError("unmatched indices must be distinct")

    @property
    def total_remaining(self):
        return sum(self.remaining_capacities)


def validate_matching(matching, instance):
    """Raise if the matching violates the instance's constraints."""
    seen = set()
    uses = [0] * instance.k
    for i, r in matching.pairs:
        if not (0 <= i < instance.n and 0 <= r < instance.k):
            raise ValueError(f"pair ({i},{r}) outside instance bounds")
        if i in seen:
            raise ValueError(f"individual {i} matched more than once")
        seen.add(i)
        uses[r] += 1
    for r, used in enumerate(uses):
        if used > instance.resource_set.capacities[r]:
            raise ValueError(f"resource {r} over capacity: {used}")


def _feasible_cardinality(n, b, total_capacity):
    if b < 0:
        raise ValueError("deferral count b must be nonnegative")
    m = max(n - b, 0)
    if m > total_capacity:
        raise InfeasibleMatchingError(
            f"need {m} assignments but total capacity is {total_capacity}"
        )
    return m


def solve_imperfect_matching(instance, weights="confidence", b=0):
    """Maximum-weight matching of exactly max(n-b, 0) pairs.

    Successive shortest paths on the flow network
    source -> individuals (cap 1) -> resources (cap 1 per arc, cost
    wmax - w[i,r]) -> sink (cap c_r), augmenting one unit at a time for
    max(n-b, 0) units. Dijkstra with node potentials keeps reduced costs
    nonnegative; each augmentation is integral by construction.
    """
    w = instance.weight_matrix(weights)
    n, k = instance.n, instance.k
    caps = instance.resource_set.capacities
    m = _feasible_cardinality(n, b, instance.resource_set.total_capacity)
    if m == 0:
        return Matching.empty()

    wmax = float(w.max()) if w.size else 0.0
    nbits = n * k
    big = 1 << nbits

    # arc arrays; reverse arc of a is a ^ 1
    to = []
    cap = []
    cf = []  # primary float cost
    cs = []  # secondary bigint cost for exact lexicographic tie-breaking
    adj = [[] for _ in range(n + k + 2)]

    def add(u, v, c, fcost, scost):
        adj[u].append(len(to))
        to.append(v)
        cap.append(c)
        cf.append(fcost)
        cs.append(scost)
        adj[v].append(len(to))
        to.append(u)
        cap.append(0)
        cf.append(-fcost)
        cs.append(-scost)

    src = n + k
    snk = n + k + 1
    for i in range(n):
        add(src, i, 1, 0.0, 0)
    for i in range(n):
        base = i * k
        for r in range(k):
            add(i, n + r, 1, wmax - float(w[i, r]), big - (1 << (nbits - 1 - (base + r))))
    for r in range(k):
        if caps[r] > 0:
            add(n + r, snk, caps[r], 0.0, 0)

    nv = n + k + 2
    pot_f = [0.0] * nv
    pot_s = [0] * nv
    inf = float("inf")

    for _ in range(m):
        dist_f = [inf] * nv
        dist_s = [0] * nv
        parent = [-1] * nv
        done = [False] * nv
        dist_f[src] = 0.0
        heap = [(0.0, 0, src)]
        while heap:
            df, ds, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for a in adj[u]:
                if cap[a] <= 0:
                    continue
                v = to[a]
                if done[v]:
                    continue
                nf = df + cf[a] + pot_f[u] - pot_f[v]
                ns = ds + cs[a] + pot_s[u] - pot_s[v]
                if nf < dist_f[v] or (nf == dist_f[v] and ns < dist_s[v]):
                    dist_f[v] = nf
                    dist_s[v] = ns
                    parent[v] = a
                    heapq.heappush(heap, (nf, ns, v))
        if not done[snk]:
            raise InfeasibleMatchingError("flow network admits no further augmentation")
        dtf, dts = dist_f[snk], dist_s[snk]
        # clamp potentials at the sink distance so unreached nodes stay valid
        for v in range(nv):
            if done[v] and (dist_f[v], dist_s[v]) < (dtf, dts):
                pot_f[v] += dist_f[v]
                pot_s[v] += dist_s[v]
            else:
                pot_f[v] += dtf
                pot_s[v] += dts
        v = snk
        while v != src:
            a = parent[v]
            cap[a] -= 1
            cap[a ^ 1] += 1
            v = to[a ^ 1]

    pairs = []
    for i in range(n):
        for a in adj[i]:
            # forward individual->resource arcs are even-numbered; used iff
            # capacity fully consumed
            if a % 2 == 0 and to[a] != src and cap[a] == 0 and n <= to[a] < n + k:
                pairs.append((i, to[a] - n))
    assert len(pairs) == m, "augmentation count disagrees with extracted pairs"
    return Matching.from_pairs(pairs, w)


def brute_force_matching(instance, weights="confidence", b=0):
    """Exhaustive oracle for small instances (n <= 8, k <= 4).

    Enumerates every feasible pair set of the required cardinality; among
    maximal objectives returns the lexicographically smallest sorted pair
    list, matching the solver's tie-breaking rule.
    """
    n, k = instance.n, instance.k
    if n > 8 or k > 4:
        raise EnumerationBoundError(f"oracle bound exceeded: n={n}, k={k}")
    w = instance.weight_matrix(weights)
    caps = instance.resource_set.capacities
    m = _feasible_cardinality(n, b, instance.resource_set.total_capacity)
    if m == 0:
        return Matching.empty()

    best = None
    for subset in itertools.combinations(range(n), m):

        def extend(pos, remaining, pairs):
            nonlocal best
            if pos == len(subset):
                obj = math.fsum(w[i, r] for i, r in pairs)
                key = (-obj, tuple(sorted(pairs)))
                if best is None or key < best[0]:
                    best = (key, list(pairs))
                return
            i = subset[pos]
            for r in range(k):
                if remaining[r] > 0:
                    remaining[r] -= 1
                    pairs.append((i, r))
                    extend(pos + 1, remaining, pairs)
                    pairs.pop()
                    remaining[r] += 1

        extend(0, list(caps), [])
    if best is None:
        raise InfeasibleMatchingError("no feasible assignment at required cardinality")
    return Matching.from_pairs(best[1], w)


def residual(instance, matching):
    """Deferred individuals and leftover capacities after a matching."""
    validate_matching(matching, instance)
    matched = matching.individuals()
    uses = [0] * instance.k
    for _, r in matching.pairs:
        uses[r] += 1
    remaining = tuple(
        c - u for c, u in zip(instance.resource_set.capacities, uses)
    )
    unmatched = tuple(i for i in range(instance.n) if i not in matched)
    return ResidualInstance(unmatched, remaining)


def matching_utility(matching, success_prob):
    """Expected utility: sum of success probabilities over matched pairs."""
    if success_prob is None:
        raise ValueError("success probabilities are required to score a matching")
    p = np.asarray(success_prob, dtype=np.float64)
    return math.fsum(p[i, r] for i, r in matching.pairs)
