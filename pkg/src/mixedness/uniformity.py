"""Collision-based L2 uniformity tester.

With N samples from q over [d], the collision count S = #{i < j : x_i = x_j}
has E[S] = C(N, 2) * ||q||_2^2. Uniform q gives ||q||^2 = 1/d; a q at L2
distance eps'/sqrt(d) from uniform gives ||q||^2 = (1 + eps'^2)/d. The tester
thresholds S at the midpoint C(N, 2) * (1 + eps'^2 / 2) / d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C0

UNIFORM = "uniform"
FAR = "far"


def collision_count(samples, d: int | None = None) -> int:
    """sum_j C(c_j, 2) from per-symbol tallies."""
    x = np.asarray(samples, dtype=np.int64)
    if len(x) == 0:
        return 0
    if x.min() < 0 or (d is not None and x.max() >= d):
        raise ValueError("sample outside the alphabet")
    counts = np.bincount(x)
    return int((counts * (counts - 1) // 2).sum())


def required_samples_l2(d: int, eps_prime: float, c0: float = C0) -> int:
    if not 0 < eps_prime <= 1:
        raise ValueError(f"eps_prime must lie in (0, 1], got {eps_prime}")
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.ceil(c0 * math.sqrt(d) / eps_prime**2)


def collision_threshold(n: int, d: int, eps_prime: float) -> float:
    return math.comb(n, 2) * (1 + eps_prime**2 / 2) / d


@dataclass(frozen=True)
class CollisionTestConfig:
    d: int
    eps_l2_param: float
    n: int
    threshold: float

    @classmethod
    def for_samples(cls, d: int, eps_prime: float, n: int) -> "CollisionTestConfig":
        return cls(d, eps_prime, n, collision_threshold(n, d, eps_prime))


@dataclass(frozen=True)
class CollisionResult:
    verdict: str
    statistic: int
    threshold: float
    n: int

    CSV_HEADER = ("d", "eps_prime", "N", "S", "threshold", "verdict", "seed")

    @property
    def uniform(self) -> bool:
        return self.verdict == UNIFORM

    def csv_row(self, d: int, eps_prime: float, seed: int | None) -> dict:
        return {"d": d, "eps_prime": eps_prime, "N": self.n, "S": self.statistic,
                "threshold": self.threshold, "verdict": self.verdict, "seed": seed}


def test_uniformity_l2(samples, d: int, eps_prime: float, enforce_budget: bool = True, c0: float = C0) -> CollisionResult:
    """Accept (uniform) iff S <= C(N, 2) (1 + eps'^2 / 2) / d.

    With `enforce_budget` the call refuses fewer than `required_samples_l2`
    samples. Callers that size N themselves pass False. Fewer than two samples
    carry no collision information and the tester abstains by accepting.
    """
    x = np.asarray(samples, dtype=np.int64)
    n = len(x)
    if enforce_budget and n < required_samples_l2(d, eps_prime, c0):
        raise ValueError(f"{n} samples is below the required {required_samples_l2(d, eps_prime, c0)}")
    if not 0 < eps_prime <= 1:
        raise ValueError(f"eps_prime must lie in (0, 1], got {eps_prime}")
    cfg = CollisionTestConfig.for_samples(d, eps_prime, n)
    if n < 2:
        return CollisionResult(UNIFORM, 0, cfg.threshold, n)
    s = collision_count(x, d)
    return CollisionResult(UNIFORM if s <= cfg.threshold else FAR, s, cfg.threshold, n)


test_uniformity_l2.__test__ = False  # not a pytest test


def l2_far_perturbation(d: int, eps_prime: float) -> np.ndarray:
    """Paired +-eps'/d perturbation of uniform: exactly eps'/sqrt(d) from uniform in L2 (d even)."""
    if d % 2:
        raise ValueError("d must be even")
    if not 0 < eps_prime <= 1:
        raise ValueError("eps_prime must lie in (0, 1]")
    return (1 + eps_prime * np.tile([1.0, -1.0], d // 2)) / d
