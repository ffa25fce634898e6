"""Likelihood-ratio factors and key quantities for the rotated hard instance.

For a POVM element M_x and unitary U the factor is

    g^U(x) = <M_hat_x, U^dagger X U>,   M_hat_x = M_x / Tr(M_x),

so that Tr(M_x U^dagger Lambda U) = (Tr(M_x)/d) * (1 + g^U(x)). Everything
below is built from stacked factor tables of shape (num_unitaries, outcomes).

Divergences are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimates import DivergenceEstimate, estimate, exact
from .linalg import half_signs, haar_unitaries
from .states import (
    HardInstance,
    Nonadaptive,
    Povm,
    Transcript,
    maximally_mixed,
    run_schedule,
)

DEFAULT_OUTER = 200
DEFAULT_PAIRS = 2000
DEFAULT_INNER = 2000


@dataclass(frozen=True)
class LikelihoodContext:
    d: int
    eps: float
    signs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ValueError(f"d must be even and >= 2, got {self.d}")
        if not 0 <= self.eps <= 1:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        object.__setattr__(self, "signs", half_signs(self.d))

    @property
    def X(self) -> np.ndarray:
        return np.diag(self.eps * self.signs).astype(complex)


# ---------------------------------------------------------------------------
# factor tables


def _rotated_x(us: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """U^dagger X' U for a stack of unitaries."""
    return np.einsum("nka,k,nkb->nab", us.conj(), signs, us)


def factor_table(povm: Povm, us: np.ndarray, eps: float, outcomes=None) -> np.ndarray:
    """g^U(x) for every U in the stack and every requested outcome: shape (n, k)."""
    us = np.asarray(us)
    single = us.ndim == 2
    if single:
        us = us[None]
    signs = half_signs(povm.d)
    xs = np.arange(povm.m) if outcomes is None else np.asarray(outcomes, dtype=int)
    if povm.vectors is not None:
        w = us @ povm.vectors[:, xs]
        g = np.einsum("k,nkx->nx", signs, np.abs(w) ** 2)
    else:
        y = _rotated_x(us, signs)
        mhat = povm.normalized[xs]
        g = np.einsum("xab,nba->nx", mhat, y).real
    g = eps * g
    return g[0] if single else g


def g_factor(povm: Povm, x: int, u, ctx: LikelihoodContext) -> float:
    if not 0 <= x < povm.m:
        raise ValueError(f"outcome {x} out of range")
    return float(factor_table(povm, u, ctx.eps, [x])[0])


def phi_batch(povm: Povm, us: np.ndarray, vs: np.ndarray, eps: float) -> np.ndarray:
    p = povm.null_weights
    return (factor_table(povm, us, eps) * factor_table(povm, vs, eps)) @ p


def phi(povm: Povm, u, v, ctx: LikelihoodContext) -> float:
    """E_{x ~ p}[g^U(x) g^V(x)] with p the outcome law under the maximally mixed state."""
    return float(phi_batch(povm, np.asarray(u)[None], np.asarray(v)[None], ctx.eps)[0])


def k_batch(povm: Povm, us: np.ndarray, vs: np.ndarray, eps: float) -> np.ndarray:
    p = povm.null_weights
    return (factor_table(povm, us, eps) + factor_table(povm, vs, eps)) ** 2 @ p


def k_statistic(povm: Povm, u, v, ctx: LikelihoodContext) -> float:
    """E_{x ~ p}[(g^U(x) + g^V(x))^2]."""
    return float(k_batch(povm, np.asarray(u)[None], np.asarray(v)[None], ctx.eps)[0])


def step_factors(tr: Transcript, us: np.ndarray, eps: float) -> np.ndarray:
    """g^U_{x<i}(x_i) for every step of the transcript: shape (n, t)."""
    n = len(us)
    out = np.zeros((n, len(tr)))
    groups: dict[int, list[int]] = {}
    for i, povm in enumerate(tr.povms):
        groups.setdefault(id(povm), []).append(i)
    for steps in groups.values():
        povm = tr.povms[steps[0]]
        xs = [tr.outcomes[i] for i in steps]
        out[:, steps] = factor_table(povm, us, eps, xs)
    return out


def prefix_likelihoods(tr: Transcript, us: np.ndarray, eps: float) -> np.ndarray:
    """prod_{i<t}(1 + g_i) for t = 0..len(tr): shape (n, len(tr) + 1)."""
    g = step_factors(tr, us, eps)
    out = np.ones((len(us), len(tr) + 1))
    if len(tr):
        out[:, 1:] = np.cumprod(1.0 + g, axis=1)
    return out


def psi(tr: Transcript, u, v, ctx: LikelihoodContext) -> float:
    """prod_i (1 + g^U(x_i)) (1 + g^V(x_i)) along the transcript's recorded POVMs."""
    us = np.stack([np.asarray(u), np.asarray(v)])
    lik = prefix_likelihoods(tr, us, ctx.eps)[:, -1]
    return float(lik[0] * lik[1])


# ---------------------------------------------------------------------------
# Monte-Carlo estimators


def delta_mc(tr: Transcript, num_u: int, rng: np.random.Generator, ctx: LikelihoodContext) -> DivergenceEstimate:
    """Mixture likelihood ratio E_U[prod_i (1 + g^U(x_i))] by Haar sampling."""
    if num_u < 2:
        raise ValueError("num_u must be >= 2")
    if len(tr) == 0 or ctx.eps == 0:
        return exact(1.0, num_u, "delta_mc")
    us = haar_unitaries(num_u, ctx.d, rng)
    return estimate(prefix_likelihoods(tr, us, ctx.eps)[:, -1], "delta_mc")


def psi_mean_mc(tr: Transcript, num_pairs: int, rng: np.random.Generator, ctx: LikelihoodContext) -> DivergenceEstimate:
    """E_{U,V}[Psi^{U,V}] over independent Haar pairs."""
    us = haar_unitaries(num_pairs, ctx.d, rng)
    vs = haar_unitaries(num_pairs, ctx.d, rng)
    vals = prefix_likelihoods(tr, us, ctx.eps)[:, -1] * prefix_likelihoods(tr, vs, ctx.eps)[:, -1]
    return estimate(vals, "psi_mean_mc")


def chisq_bound_mc(schedule, n: int, num_pairs: int, rng: np.random.Generator, ctx: LikelihoodContext) -> DivergenceEstimate:
    """max over the schedule's POVMs of E_{U,V}[(1 + phi)^N] - 1 (nonadaptive chi-square bound)."""
    if not isinstance(schedule, Nonadaptive):
        raise ValueError("chisq_bound_mc requires a nonadaptive schedule")
    if n == 0 or ctx.eps == 0:
        return exact(0.0, num_pairs, "chisq_bound_mc")
    best = None
    for povm in schedule.distinct():
        us = haar_unitaries(num_pairs, ctx.d, rng)
        vs = haar_unitaries(num_pairs, ctx.d, rng)
        f = phi_batch(povm, us, vs, ctx.eps)
        vals = np.expm1(n * np.log1p(f))
        est = estimate(vals, "chisq_bound_mc")
        if best is None or est.mean > best.mean:
            best = est
    return best


def chain_rule_bound_mc(
    schedule,
    n: int,
    num_outer: int = DEFAULT_OUTER,
    num_pairs: int = DEFAULT_PAIRS,
    rng: np.random.Generator | None = None,
    ctx: LikelihoodContext | None = None,
) -> DivergenceEstimate:
    """Nested MC estimate of sum_t Z_t, Z_t = E_{x<t ~ null}[E_{U,V}[phi_t Psi_{<t}] / Delta(x<t)].

    Each outer draw is one null transcript of length N; its prefixes serve every t.
    Per draw, the same `num_pairs` Haar pairs feed the numerator and the plug-in
    Delta (averaged over both halves of each pair). The ratio is therefore biased
    at order 1/num_pairs; `details` reports per-term means, stderrs and counts.
    """
    if num_outer < 2:
        raise ValueError("num_outer must be >= 2")
    if n == 0 or ctx.eps == 0:
        return exact(0.0, num_outer, "chain_rule_bound_mc")
    null = maximally_mixed(ctx.d)
    terms = np.zeros((num_outer, n))
    for o in range(num_outer):
        tr = run_schedule(null, schedule, n, rng)
        us = haar_unitaries(num_pairs, ctx.d, rng)
        vs = haar_unitaries(num_pairs, ctx.d, rng)
        lu = prefix_likelihoods(tr, us, ctx.eps)
        lv = prefix_likelihoods(tr, vs, ctx.eps)
        phis: dict[int, np.ndarray] = {}
        for t in range(n):
            povm = tr.povms[t]
            if id(povm) not in phis:
                phis[id(povm)] = phi_batch(povm, us, vs, ctx.eps)
            num = np.mean(phis[id(povm)] * lu[:, t] * lv[:, t])
            den = 0.5 * (lu[:, t].mean() + lv[:, t].mean())
            terms[o, t] = num / den
    per_term = [estimate(terms[:, t], f"Z_{t + 1}") for t in range(n)]
    details = {
        "term_means": [e.mean for e in per_term],
        "term_stderrs": [e.stderr for e in per_term],
        "num_outer": num_outer,
        "num_pairs": num_pairs,
    }
    return estimate(terms.sum(axis=1), "chain_rule_bound_mc", details)


def kl_plugin_mc(
    schedule,
    n: int,
    num_outer: int = DEFAULT_OUTER,
    num_inner: int = DEFAULT_INNER,
    rng: np.random.Generator | None = None,
    ctx: LikelihoodContext | None = None,
) -> DivergenceEstimate:
    """Plug-in KL(p1 || p0) = E_{x ~ p1}[ln Delta(x)] with Delta from `num_inner` Haar draws.

    ln of a sample mean is biased low by about Var/(2 num_inner Delta^2) (Jensen).
    """
    if n == 0:
        return exact(0.0, num_outer, "kl_plugin_mc")
    source = maximally_mixed(ctx.d) if ctx.eps == 0 else HardInstance(ctx.d, ctx.eps)
    vals = np.zeros(num_outer)
    for o in range(num_outer):
        tr = run_schedule(source, schedule, n, rng)
        us = haar_unitaries(num_inner, ctx.d, rng)
        delta = prefix_likelihoods(tr, us, ctx.eps)[:, -1].mean()
        if delta <= 0:
            raise ArithmeticError(f"non-positive Delta estimate {delta}; raise num_inner")
        vals[o] = np.log(delta)
    return estimate(vals, "kl_plugin_mc", {"num_outer": num_outer, "num_inner": num_inner})
