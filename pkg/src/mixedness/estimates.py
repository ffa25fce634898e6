"""Monte-Carlo summaries: mean/stderr records, streaming moments, Wilson intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DivergenceEstimate:
    mean: float
    stderr: float
    samples: int
    estimator_name: str
    details: dict | None = None

    CSV_HEADER = ("estimator", "d", "eps", "N", "mean", "stderr", "samples", "seed")

    def csv_row(self, d: int, eps: float, n: int, seed: int) -> dict:
        return {
            "estimator": self.estimator_name,
            "d": d,
            "eps": eps,
            "N": n,
            "mean": self.mean,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": seed,
        }


def estimate(values, name: str, details: dict | None = None) -> DivergenceEstimate:
    """Sample mean with stderr = sample std / sqrt(n)."""
    v = np.asarray(values, dtype=float).ravel()
    if len(v) < 2:
        raise ValueError("need at least two samples")
    return DivergenceEstimate(
        mean=float(v.mean()),
        stderr=float(v.std(ddof=1) / math.sqrt(len(v))),
        samples=len(v),
        estimator_name=name,
        details=details,
    )


def exact(value: float, samples: int, name: str) -> DivergenceEstimate:
    return DivergenceEstimate(float(value), 0.0, max(int(samples), 2), name)


@dataclass
class RunningMoments:
    """Chan et al. pairwise-combinable mean/variance accumulator."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, values) -> "RunningMoments":
        v = np.asarray(values, dtype=float).ravel()
        if len(v):
            other = RunningMoments(len(v), float(v.mean()), float(((v - v.mean()) ** 2).sum()))
            self.merge(other)
        return self

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.n == 0:
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta**2 * self.n * other.n / n
        self.n = n
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 1 else 0.0


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1 + z**2 / trials
    centre = (p + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))
