"""Single-basis mixedness certifier.

Measure every copy of rho in one Haar-random basis and run the collision
tester on the outcomes. Under rho_mm the outcome law is uniform in any basis.
For the hard instance it is u + (eps/d) diag(U^dagger X' U), whose L2 distance
from uniform concentrates near eps/d.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .constants import C1
from .linalg import haar_unitary, make_rng
from .states import DensityMatrix, HardInstance, basis_povm, outcome_distribution, sample_outcomes
from .uniformity import test_uniformity_l2

YES = "YES"
NO = "NO"


def copies_needed(d: int, eps: float, c1: float = C1) -> int:
    """N = ceil(C1 d^{3/2} / eps^2)."""
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.ceil(c1 * d**1.5 / eps**2)


def inner_eps_prime(d: int, eps: float) -> float:
    """Tester parameter detecting L2 distance eps/(2d), i.e. eps' = eps / (2 sqrt(d))."""
    return eps / (2 * math.sqrt(d))


@dataclass(frozen=True)
class CertifyResult:
    verdict: str
    d: int
    eps: float
    n: int
    statistic: int
    threshold: float
    seed: int

    def to_json(self) -> dict:
        out = asdict(self)
        out["N"] = out.pop("n")
        out["S"] = out.pop("statistic")
        return {k: out[k] for k in ("verdict", "d", "eps", "N", "S", "threshold", "seed")}


def test_mixed(source, d: int, eps: float, seed: int, n: int | None = None) -> CertifyResult:
    """Certify rho = I/d against eps-far states.

    `source` is a DensityMatrix or a HardInstance (a fresh U is drawn from the
    trial's stream). One stream, seeded by `seed`, covers the state draw, the
    basis, and the outcomes, so the verdict is a function of (seed, source).
    """
    if n is None:
        n = copies_needed(d, eps)
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = make_rng(seed)
    rho = source.sample(rng) if isinstance(source, HardInstance) else source
    if not isinstance(rho, DensityMatrix) or rho.d != d:
        raise ValueError("source must be a density matrix of dimension d")
    povm = basis_povm(haar_unitary(d, rng))
    xs = sample_outcomes(rho, povm, n, rng)
    res = test_uniformity_l2(xs, d, inner_eps_prime(d, eps), enforce_budget=False)
    return CertifyResult(YES if res.uniform else NO, d, eps, n, res.statistic, res.threshold, seed)


test_mixed.__test__ = False


def l2_from_uniform(rho: DensityMatrix, u) -> float:
    """||q - u||_2 for the outcome law of rho in the basis given by the columns of u."""
    q = outcome_distribution(rho, basis_povm(u))
    return float(np.linalg.norm(q - 1.0 / rho.d))
