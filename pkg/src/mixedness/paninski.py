"""Paninski's classical uniformity lower-bound instance, closed forms and a brute-force oracle.

Symbols are 0-based: symbol j stands for the 1-based x = j + 1, so pair a
covers the symbols (2a, 2a + 1), carrying perturbations (-eps z_a / d, +eps z_a / d).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

ENUMERATION_BUDGET = 10**8
LOG_SPACE_THRESHOLD = 30.0


@dataclass(frozen=True)
class SignVector:
    z: tuple[int, ...]
    eps: float

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.z):
            raise ValueError("sign vector entries must be +1 or -1")
        object.__setattr__(self, "z", tuple(int(s) for s in self.z))

    @property
    def d(self) -> int:
        return 2 * len(self.z)


def _check_d(d: int) -> None:
    if d < 2 or d % 2:
        raise ValueError(f"d must be even and >= 2, got {d}")


def _symbol_signs(d: int) -> np.ndarray:
    """(-1)^x for 1-based x: -1 on even 0-based symbols."""
    return np.where(np.arange(d) % 2 == 0, -1.0, 1.0)


def classical_g(z: SignVector, x: int) -> float:
    """eps (-1)^x z_{ceil(x/2)} in 0-based symbols."""
    if not 0 <= x < z.d:
        raise ValueError(f"symbol {x} out of range for d={z.d}")
    return z.eps * (1.0 if x % 2 else -1.0) * z.z[x // 2]


def paninski_marginals(z: SignVector) -> np.ndarray:
    if z.eps >= 1:
        raise ValueError("eps must be < 1")
    d = z.d
    zz = np.repeat(np.asarray(z.z, dtype=float), 2)
    return 1.0 / d + _symbol_signs(d) * z.eps / d * zz


def tv_distance(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def classical_phi(z: SignVector, z2: SignVector) -> float:
    if z.d != z2.d:
        raise ValueError("sign vectors of different dimension")
    return 2 * z.eps**2 / z.d * float(np.dot(z.z, z2.z))


def ab_coefficients(h1: int, h2: int, eps: float) -> tuple[float, float]:
    lo, hi = (1 - eps), (1 + eps)
    a = lo**h1 * hi**h2
    b = lo**h2 * hi**h1
    return 0.5 * (a + b), 0.5 * (a - b)


def histogram(outcomes, d: int) -> np.ndarray:
    return np.bincount(np.asarray(outcomes, dtype=int), minlength=d)[:d]


def _log_ab(h1: int, h2: int, eps: float) -> tuple[float, float]:
    """log A and log |B| computed stably."""
    la = h1 * math.log1p(-eps) + h2 * math.log1p(eps)
    lb = h2 * math.log1p(-eps) + h1 * math.log1p(eps)
    hi, lo = max(la, lb), min(la, lb)
    log_a = hi + math.log1p(math.exp(lo - hi)) - math.log(2)
    diff = -math.expm1(lo - hi)
    log_b = hi + math.log(diff) - math.log(2) if diff > 0 else -math.inf
    return log_a, log_b


def delta_closed_form(outcomes, d: int, eps: float) -> float:
    """Delta(x_<t) = prod_a A^{h_{2a-1}, h_{2a}}."""
    _check_d(d)
    h = histogram(outcomes, d)
    if len(outcomes) * eps**2 > LOG_SPACE_THRESHOLD:
        return math.exp(sum(_log_ab(h[2 * a], h[2 * a + 1], eps)[0] for a in range(d // 2)))
    return math.prod(ab_coefficients(h[2 * a], h[2 * a + 1], eps)[0] for a in range(d // 2))


def inner_psi_closed_form(outcomes, d: int, eps: float) -> float:
    """E_{z,z'}[<z, z'> Psi^{z,z'}] = sum_a B_a^2 prod_{a' != a} A_{a'}^2."""
    _check_d(d)
    h = histogram(outcomes, d)
    ab = [ab_coefficients(h[2 * a], h[2 * a + 1], eps) for a in range(d // 2)]
    total = 0.0
    for a, (_, b) in enumerate(ab):
        total += b**2 * math.prod(ab[k][0] ** 2 for k in range(len(ab)) if k != a)
    return total


def _log_binom_pmf(n: int, p: float) -> np.ndarray:
    k = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        return (
            gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
            + k * np.log(p) + (n - k) * np.log1p(-p)
        )


def chisq_exact(d: int, n: int, eps: float) -> float:
    """E_{z,z'}[(1 + 2 eps^2 <z,z'> / d)^N] - 1 via the law of <z,z'> = d/2 - 2k, k ~ Bin(d/2, 1/2)."""
    _check_d(d)
    if n < 0:
        raise ValueError("n must be >= 0")
    half = d // 2
    k = np.arange(half + 1)
    base = 1 + 2 * eps**2 * (half - 2 * k) / d
    logw = _log_binom_pmf(half, 0.5)
    with np.errstate(divide="ignore"):
        logs = n * np.log(base) if n else np.zeros_like(base)
    if n * eps**2 > LOG_SPACE_THRESHOLD:
        return float(np.expm1(logsumexp(logs + logw)))
    return float(np.dot(np.exp(logw), base**n) - 1)


def zt_exact(d: int, eps: float, t: int) -> float:
    """Z_t = eps^2 * C with C = E_{l ~ Bin(t-1, 2/d)} E_{h ~ Bin(l, 1/2)}[B^2 / A].

    The histogram covers the t - 1 symbols of x_<t, hence t - 1 draws.
    """
    _check_d(d)
    if t < 1:
        raise ValueError("t must be >= 1")
    m = t - 1
    if m == 0:
        return 0.0
    p_l = np.exp(_log_binom_pmf(m, 2.0 / d)) if d > 2 else np.eye(m + 1)[m]
    c = 0.0
    for ell in range(m + 1):
        if p_l[ell] == 0 or ell == 0:
            continue
        p_h = np.exp(_log_binom_pmf(ell, 0.5))
        inner = 0.0
        for h1 in range(ell + 1):
            log_a, log_b = _log_ab(h1, ell - h1, eps)
            if log_b > -math.inf:
                inner += p_h[h1] * math.exp(2 * log_b - log_a)
        c += p_l[ell] * inner
    return float((2 * eps**2 / d) * (d / 2) * c)


def psi_second_moment_exact(z: SignVector, z2: SignVector, t: int) -> float:
    """Exact E_{x<t ~ uniform}[(Psi^{z,z'})^2] = (E_x[(1+g)^2 (1+g')^2])^{t-1}."""
    gz = np.array([classical_g(z, x) for x in range(z.d)])
    gz2 = np.array([classical_g(z2, x) for x in range(z.d)])
    step = np.mean((1 + gz) ** 2 * (1 + gz2) ** 2)
    return float(step ** (t - 1))


# ---------------------------------------------------------------------------
# brute force


def all_sign_vectors(d: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=d // 2)), dtype=float)


def all_transcripts(d: int, t: int) -> np.ndarray:
    if t == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(itertools.product(range(d), repeat=t)), dtype=int)


@dataclass(frozen=True)
class OracleTable:
    """Exact quantities over all length-t transcripts (rows in lexicographic order)."""

    t: int
    transcripts: np.ndarray
    delta: np.ndarray
    inner_psi: np.ndarray
    z_term: float
    chisq: float
    kl: float


def enumeration_oracle(d: int, eps: float, t_max: int) -> list[OracleTable]:
    """Brute force over z, z' in {+-1}^{d/2} and transcripts in [d]^t for t = 0..t_max.

    Row t holds Delta and E[<z,z'> Psi] for every length-t transcript, the exact
    chi-square and KL between the length-t alternative and null laws, and the
    chain-rule term Z_{t+1} (which conditions on a length-t prefix).
    """
    _check_d(d)
    nz = 2 ** (d // 2)
    if nz * d**t_max > ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded: 2^{d // 2} * {d}^{t_max} > {ENUMERATION_BUDGET}")
    zs = all_sign_vectors(d)
    g = eps * _symbol_signs(d)[None, :] * np.repeat(zs, 2, axis=1)
    gram = zs @ zs.T
    phi = 2 * eps**2 / d * gram
    tables = []
    for t in range(t_max + 1):
        xs = all_transcripts(d, t)
        lik = np.prod(1 + g[:, xs], axis=2) if t else np.ones((nz, 1))
        delta = lik.mean(axis=0)
        inner = np.einsum("zt,zw,wt->t", lik, gram, lik) / nz**2
        num = np.einsum("zt,zw,wt->t", lik, phi, lik) / nz**2
        z_term = float(np.mean(num / delta))
        chisq = float(np.mean((delta - 1) ** 2))
        kl = float(np.mean(delta * np.log(delta)))
        tables.append(OracleTable(t, xs, delta, inner, z_term, chisq, kl))
    return tables
