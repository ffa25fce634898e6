"""Degree-2 Weingarten calculus and Monte-Carlo checks of Haar moment and tail behaviour.

The integral evaluated by :func:`second_moment_trace` is the squared linear
statistic E_U[(Tr(A U^dagger B U))^2]. At A = B = I it equals d^2, which a
quick MC run confirms; the reading E_U[Tr((A U^dagger B U)^2)] would give d.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    C_MOMENT,
    C_PSI_SQ,
    DIAG_TAIL_C,
    K_TAIL_C,
    K_TAIL_C_PRIME,
    PHI_TAIL_C,
)
from .estimates import DivergenceEstimate, estimate, exact
from .likelihood import factor_table, k_batch, phi_batch, prefix_likelihoods
from .linalg import as_matrix, column_deltas, haar_unitaries
from .states import Povm, maximally_mixed, run_schedule, standard_basis_povm

# Haar draws are generated in fixed-size chunks so that memory stays bounded
# and the random stream does not depend on how the work is split.
CHUNK = 512
REGIME_FRACTION = 0.1


class PermS2(enum.Enum):
    E = "e"
    TAU_STAR = "tau_star"

    def __mul__(self, other: "PermS2") -> "PermS2":
        return PermS2.E if self is other else PermS2.TAU_STAR

    def inverse(self) -> "PermS2":
        return self


def wg2(pi: PermS2, d: int) -> float:
    if d < 2:
        raise ValueError("Weingarten function needs d >= 2")
    if pi is PermS2.E:
        return 1.0 / (d * d - 1)
    return -1.0 / (d * (d * d - 1))


def power_trace_product(a, pi: PermS2) -> complex:
    """<A>_e = Tr(A)^2 and <A>_tau* = Tr(A^2)."""
    a = as_matrix(a)
    if pi is PermS2.E:
        return complex(np.trace(a)) ** 2
    return complex(np.trace(a @ a))


def second_moment_trace(a, b, d: int | None = None) -> float:
    """E_U[(Tr(A U^dagger B U))^2] = sum_{sigma,tau} <A>_sigma <B>_tau Wg(sigma tau^-1, d)."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError("A and B must share a dimension")
    d = len(a) if d is None else d
    if d != len(a):
        raise ValueError("d does not match the matrix dimension")
    total = 0.0
    for s in PermS2:
        for t in PermS2:
            total += power_trace_product(a, s) * power_trace_product(b, t) * wg2(s * t.inverse(), d)
    return float(np.real(total))


def second_moment_mc(a, b, num: int, rng: np.random.Generator) -> DivergenceEstimate:
    """Direct MC of E_U[(Tr(A U^dagger B U))^2]."""
    a, b = as_matrix(a), as_matrix(b)
    vals = []
    for n in _chunks(num):
        us = haar_unitaries(n, len(a), rng)
        rot = us.conj().transpose(0, 2, 1) @ b @ us
        vals.append(np.einsum("ij,nji->n", a, rot).real ** 2)
    return estimate(np.concatenate(vals), "second_moment_mc")


def expected_g_squared(mhat, d: int, eps: float) -> float:
    """E_U[g^U(x)^2] = eps^2 d (Tr(M_hat^2) / (d^2 - 1) - 1 / (d (d^2 - 1)))."""
    m = as_matrix(mhat)
    if len(m) != d:
        raise ValueError("dimension mismatch")
    tr = np.trace(m)
    if abs(tr - 1) > 1e-9:
        raise ValueError(f"M_hat must have unit trace, got {tr}")
    purity = float(np.real(np.trace(m @ m)))
    return eps**2 * d * (purity / (d * d - 1) - 1.0 / (d * (d * d - 1)))


def expected_k(povm: Povm, eps: float) -> float:
    """E_{U,U'}[K] = 2 sum_x p_x E_U[g(x)^2]; the cross term has mean zero."""
    return 2.0 * sum(
        w * expected_g_squared(m, povm.d, eps) for w, m in zip(povm.null_weights, povm.normalized)
    )


# ---------------------------------------------------------------------------
# sampling helpers


def _chunks(num: int):
    full, rest = divmod(num, CHUNK)
    yield from [CHUNK] * full
    if rest:
        yield rest


def sample_statistic(statistic: str, d: int, eps: float, povm: Povm | None, num: int, rng) -> np.ndarray:
    """Draw `num` values of diag_norm, phi (|phi| is not taken here) or k_stat."""
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {STATISTICS}")
    if povm is None:
        povm = standard_basis_povm(d)
    out = []
    for n in _chunks(num):
        us = haar_unitaries(n, d, rng)
        if statistic == "diag_norm":
            out.append(np.sqrt((column_deltas(us) ** 2).sum(axis=1)))
            continue
        vs = haar_unitaries(n, d, rng)
        fn = phi_batch if statistic == "phi" else k_batch
        out.append(fn(povm, us, vs, eps))
    return np.concatenate(out) if out else np.zeros(0)


STATISTICS = ("diag_norm", "phi", "k_stat")


# ---------------------------------------------------------------------------
# tails


def tail_bound(statistic: str, threshold: float, d: int, eps: float) -> float:
    """Reference tail shape with the frozen constants, capped at 1."""
    t = threshold
    if statistic == "diag_norm":
        val = math.exp(-DIAG_TAIL_C * d * (t - 1) ** 2) if t > 1 else 1.0
    elif statistic == "phi":
        if t <= 0 or eps == 0:
            val = 1.0
        else:
            val = math.exp(-PHI_TAIL_C * min(d**3 * t**2 / eps**4, d**2 * t / eps**2))
    elif statistic == "k_stat":
        base = K_TAIL_C * eps**2 / d
        extra = t - base
        val = math.exp(-K_TAIL_C_PRIME * extra * d**2 / eps**2) if extra > base else 1.0
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    return min(1.0, val)


@dataclass(frozen=True)
class TailCurve:
    statistic: str
    d: int
    eps: float
    thresholds: np.ndarray
    empirical_p: np.ndarray
    stderr: np.ndarray
    bound_p: np.ndarray
    samples: int
    seed: int | None = None

    CSV_HEADER = ("statistic", "d", "eps", "threshold", "empirical_p", "stderr", "bound_p", "samples", "seed")

    def rows(self) -> list[dict]:
        return [
            {
                "statistic": self.statistic,
                "d": self.d,
                "eps": self.eps,
                "threshold": float(t),
                "empirical_p": float(p),
                "stderr": float(s),
                "bound_p": float(b),
                "samples": self.samples,
                "seed": self.seed,
            }
            for t, p, s, b in zip(self.thresholds, self.empirical_p, self.stderr, self.bound_p)
        ]


def bound_scale(statistic: str, d: int, eps: float) -> float:
    if statistic == "diag_norm":
        return 1.0
    if statistic == "phi":
        return eps**2 / d**1.5
    return eps**2 / d


def default_thresholds(statistic: str, d: int, eps: float, values: np.ndarray, count: int = 24) -> np.ndarray:
    """Geometric grid from a tenth of the natural scale to the largest observed value."""
    lo = bound_scale(statistic, d, eps) / 10
    hi = max(float(np.max(values)), lo * 10) if len(values) else lo * 10
    return np.geomspace(lo, hi, count)


def exceedance(values, thresholds) -> tuple[np.ndarray, np.ndarray]:
    """P(value > t) per threshold with binomial stderr."""
    v = np.sort(np.asarray(values, dtype=float))
    th = np.asarray(thresholds, dtype=float)
    n = len(v)
    p = (n - np.searchsorted(v, th, side="right")) / n
    return p, np.sqrt(p * (1 - p) / n)


def tail_experiment(
    statistic: str,
    d: int,
    eps: float,
    povm: Povm | None,
    num_samples: int,
    thresholds=None,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> TailCurve:
    """Empirical exceedance curve for one statistic against its reference bound.

    phi is compared in absolute value, as in its two-sided tail statement.
    """
    if num_samples < 1000:
        raise ValueError("num_samples must be >= 1000")
    vals = sample_statistic(statistic, d, eps, povm, num_samples, rng)
    if statistic == "phi":
        vals = np.abs(vals)
    th = default_thresholds(statistic, d, eps, vals) if thresholds is None else np.sort(np.asarray(thresholds, dtype=float))
    p, se = exceedance(vals, th)
    bound = np.array([tail_bound(statistic, t, d, eps) for t in th])
    return TailCurve(statistic, d, eps, th, p, se, bound, num_samples, seed)


# ---------------------------------------------------------------------------
# moment growth


def _regime_guard(n: int, d: int, eps: float, name: str) -> None:
    if n < 0:
        raise ValueError(f"{name} must be >= 0")
    if eps > 0 and n > REGIME_FRACTION * d**2 / eps**2:
        raise ValueError(f"{name}={n} exceeds the regime limit {REGIME_FRACTION} d^2/eps^2")


def moment_growth_experiment(
    d: int, eps: float, n: int, gamma: float, povm: Povm | None, num_pairs: int, rng
) -> DivergenceEstimate:
    """MC estimate of E_{U,U'}[(1 + gamma K)^n]; details carry the reference exp(C gamma n eps^2 / d)."""
    _regime_guard(n, d, eps, "n")
    bound = math.exp(C_MOMENT * gamma * n * eps**2 / d)
    if n == 0 or gamma == 0 or eps == 0:
        est = exact(1.0, num_pairs, "moment_growth")
    else:
        k = sample_statistic("k_stat", d, eps, povm, num_pairs, rng)
        est = estimate(np.exp(n * np.log1p(gamma * k)), "moment_growth")
    return DivergenceEstimate(est.mean, est.stderr, est.samples, est.estimator_name, {"bound": bound})


def psi_second_moment_experiment(
    d: int, eps: float, t: int, schedule, num: int, rng, pairs_per_transcript: int = 64
) -> DivergenceEstimate:
    """MC estimate of E[(Psi^{U,U'}_{x<=t})^2] with x ~ null and independent Haar U, U'.

    Each of `num` null transcripts is paired with `pairs_per_transcript` Haar
    pairs; the per-transcript averages are the i.i.d. samples.
    """
    _regime_guard(t, d, eps, "t")
    bound = math.exp(C_PSI_SQ * t * eps**2 / d)
    if t == 0 or eps == 0:
        est = exact(1.0, num, "psi_second_moment")
    else:
        null = maximally_mixed(d)
        vals = np.zeros(num)
        for i in range(num):
            tr = run_schedule(null, schedule, t, rng)
            us = haar_unitaries(pairs_per_transcript, d, rng)
            vs = haar_unitaries(pairs_per_transcript, d, rng)
            lu = prefix_likelihoods(tr, us, eps)[:, -1]
            lv = prefix_likelihoods(tr, vs, eps)[:, -1]
            vals[i] = np.mean((lu * lv) ** 2)
        est = estimate(vals, "psi_second_moment")
    return DivergenceEstimate(est.mean, est.stderr, est.samples, est.estimator_name, {"bound": bound})


# ---------------------------------------------------------------------------
# fluctuation scaling


@dataclass(frozen=True)
class ScalingReport:
    ds: tuple[int, ...]
    stds: tuple[float, ...]
    slope: float
    intercept: float


def fluctuation_scaling(d_list, eps: float, povm_family=None, num_pairs: int = 10_000, rng=None) -> ScalingReport:
    """Std of phi over Haar pairs at each d, and the least-squares slope of log std against log d."""
    ds = [int(d) for d in d_list]
    if len(set(ds)) < 3:
        raise ValueError("need at least three distinct values of d")
    family = standard_basis_povm if povm_family is None else povm_family
    stds = []
    for d in ds:
        vals = sample_statistic("phi", d, eps, family(d), num_pairs, rng)
        stds.append(float(np.std(vals, ddof=1)))
    slope, intercept = np.polyfit(np.log(ds), np.log(stds), 1)
    return ScalingReport(tuple(ds), tuple(stds), float(slope), float(intercept))


def phi_std_standard_basis(d: int, eps: float) -> float:
    """Exact std of phi for an orthonormal basis: eps^2 / ((d + 1) sqrt(d - 1)).

    phi = (eps^2/d) sum_i delta_i delta'_i with independent columns sets; using
    E[delta_i^2] = 1/(d+1) and E[delta_i delta_j] = -1/((d+1)(d-1)) for i != j.
    """
    return eps**2 / ((d + 1) * math.sqrt(d - 1))


def g_second_moment_mc(povm: Povm, x: int, eps: float, num: int, rng) -> DivergenceEstimate:
    vals = np.concatenate([factor_table(povm, haar_unitaries(n, povm.d, rng), eps, [x])[:, 0] ** 2 for n in _chunks(num)])
    return estimate(vals, "g_squared_mc")
