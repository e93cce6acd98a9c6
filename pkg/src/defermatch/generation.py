"""Synthetic patient pool generation.

Each patient carries an observable category x (three values, categorical
prior) and a hidden context d ~ U(0,1). Per (category, slot) cell a Beta
distribution (alpha, beta) drives both score matrices: the classifier
confidence is the Beta mean alpha/(alpha+beta) (a function of x alone, all
the restricted feature view can support), while the individual success
probability is the d-quantile of the same Beta, so it varies patient by
patient. Averaging the success probability over d recovers the confidence,
which is what makes the classifier marginally calibrated.
"""

import json
from dataclasses import dataclass

import numpy as np

from .matching import MatchInstance, ResourceSet
from .special import beta_quantile, beta_quantile_ufunc

DEFAULT_FEATURE_PROBS = (0.20, 0.45, 0.35)

# (alpha, beta) per (category, slot); 3 categories x 10 slots
DEFAULT_BETA_PARAMS = (
    (
        (0.2, 0.3), (20, 20), (0.2, 0.3), (20, 17), (17, 20),
        (20, 20), (0.2, 0.4), (19, 12), (0.2, 0.3), (0.15, 0.2),
    ),
    (
        (20, 20), (0.2, 0.4), (19, 12), (0.2, 0.3), (0.15, 0.2),
        (0.2, 0.3), (20, 20), (0.2, 0.3), (20, 17), (17, 20),
    ),
    (
        (1, 10), (1, 10), (5, 10), (5, 2), (3.1, 4),
        (19, 12), (0.2, 0.3), (0.15, 0.2), (0.2, 0.3), (20, 20),
    ),
)

DEFAULT_CAPACITIES = (2,) * 10


@dataclass(frozen=True)
class PatientInfo:
    """Observable category x plus hidden context d."""

    x: int
    d: float

    def __post_init__(self):
        if self.x < 0:
            raise ValueError("feature category must be a nonnegative index")
        if not 0.0 <= self.d <= 1.0:
            raise ValueError("hidden context d must lie in [0, 1]")


class BetaParamTable:
    """Per (category, slot) Beta shape parameters.

    Stored as two (num_categories x num_slots) arrays so pool sampling can
    evaluate whole score matrices in one vectorized call.
    """

    def __init__(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.ndim != 3 or params.shape[2] != 2:
            raise ValueError("expected shape (categories, slots, 2)")
        if np.any(params <= 0.0):
            raise ValueError("Beta shape parameters must be positive")
        self.alphas = np.ascontiguousarray(params[:, :, 0])
        self.betas = np.ascontiguousarray(params[:, :, 1])

    @classmethod
    def default(cls):
        return cls(DEFAULT_BETA_PARAMS)

    @property
    def num_categories(self):
        return self.alphas.shape[0]

    @property
    def num_slots(self):
        return self.alphas.shape[1]

    def alpha_beta(self, x, r):
        if not (0 <= x < self.num_categories and 0 <= r < self.num_slots):
            raise KeyError(f"no Beta parameters for category {x}, slot {r}")
        return float(self.alphas[x, r]), float(self.betas[x, r])

    def mean_matrix(self):
        return self.alphas / (self.alphas + self.betas)

    def to_rows(self):
        return [
            [[float(a), float(b)] for a, b in zip(arow, brow)]
            for arow, brow in zip(self.alphas, self.betas)
        ]

    def __eq__(self, other):
        return (
            isinstance(other, BetaParamTable)
            and np.array_equal(self.alphas, other.alphas)
            and np.array_equal(self.betas, other.betas)
        )


@dataclass(frozen=True)
class GeneratorConfig:
    """Pool distribution: categorical feature prior, pool size, capacities,
    Beta table, optional seed for standalone use."""

    feature_probs: tuple = DEFAULT_FEATURE_PROBS
    n: int = 20
    capacities: tuple = DEFAULT_CAPACITIES
    table: BetaParamTable = None
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, "feature_probs", tuple(float(p) for p in self.feature_probs))
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        if self.table is None:
            object.__setattr__(self, "table", BetaParamTable.default())
        if abs(sum(self.feature_probs) - 1.0) > 1e-12:
            raise ValueError("feature probabilities must sum to 1")
        if any(p < 0 for p in self.feature_probs):
            raise ValueError("feature probabilities must be nonnegative")
        if self.n < 1:
            raise ValueError("pool size n must be at least 1")
        if len(self.feature_probs) != self.table.num_categories:
            raise ValueError("feature prior size disagrees with Beta table rows")
        if len(self.capacities) != self.table.num_slots:
            raise ValueError("capacity count disagrees with Beta table columns")

    @property
    def k(self):
        return len(self.capacities)

    def resource_set(self):
        return ResourceSet(tuple(range(self.k)), self.capacities)

    def to_json(self):
        return {
            "feature_probs": list(self.feature_probs),
            "n": self.n,
            "capacities": list(self.capacities),
            "beta_params": self.table.to_rows(),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc):
        table = (
            BetaParamTable(doc["beta_params"])
            if doc.get("beta_params") is not None
            else BetaParamTable.default()
        )
        return cls(
            feature_probs=tuple(doc.get("feature_probs", DEFAULT_FEATURE_PROBS)),
            n=int(doc.get("n", 20)),
            capacities=tuple(doc.get("capacities", DEFAULT_CAPACITIES)),
            table=table,
            seed=doc.get("seed"),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def confidence_score(table, x, r):
    """Classifier confidence for category x on slot r: the Beta mean."""
    a, b = table.alpha_beta(x, r)
    return a / (a + b)


def success_probability(table, info, r):
    """Individual success probability: the d-quantile of the cell's Beta."""
    a, b = table.alpha_beta(info.x, r)
    return beta_quantile(a, b, info.d)


def sample_outcome(p, rng):
    """One Bernoulli success draw."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("success probability must lie in [0, 1]")
    return int(rng.random() < p)


def sample_instance(config, rng):
    """Draw a patient pool: (MatchInstance with both matrices, PatientInfo list).

    Draw order is fixed (categories first, then hidden contexts) so a seeded
    generator reproduces the instance exactly.
    """
    x = rng.choice(len(config.feature_probs), size=config.n, p=np.asarray(config.feature_probs))
    d = rng.random(config.n)
    conf = config.table.mean_matrix()[x]
    prob = beta_quantile_ufunc(config.table.alphas[x], config.table.betas[x], d[:, None])
    instance = MatchInstance(
        n=config.n,
        resource_set=config.resource_set(),
        confidence=conf,
        success_prob=prob,
    )
    infos = [PatientInfo(int(xi), float(di)) for xi, di in zip(x, d)]
    return instance, infos
