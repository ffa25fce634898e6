"""Dense complex linear algebra, a Jacobi Hermitian eigensolver, and Haar sampling.

Matrices are plain ``numpy`` complex arrays. Validation helpers (``hermitian``,
``check_unitary``) are used at construction boundaries; hot Monte-Carlo loops
work on stacked arrays directly.

Randomness: every sampler takes an explicit ``numpy.random.Generator``. Build
one with :func:`make_rng` from a 64-bit seed, and derive per-worker/per-trial
seeds with :func:`rng_derive`. Nothing here touches global RNG state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100
JACOBI_REL_TOL = 1e-12

_MASK64 = (1 << 64) - 1


class NumericalError(ArithmeticError):
    """Raised when an iterative routine fails to converge."""


# ---------------------------------------------------------------------------
# basic arithmetic


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite square complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(A^dagger B)."""
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


def hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (A + A^dagger)/2, refusing inputs that are not Hermitian to `tol`.

    The tolerance is absolute on entries; it absorbs rounding from products like
    U^dagger A U without hiding a genuinely non-Hermitian input.
    """
    m = as_matrix(a)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max |H - H^dagger| = {dev:.3e})")
    return (m + m.conj().T) / 2


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    u = as_matrix(u)
    dev = np.max(np.abs(u.conj().T @ u - np.eye(len(u))))
    if dev > tol:
        raise ValueError(f"matrix is not unitary (max |U^dagger U - I| = {dev:.3e})")
    return u


# ---------------------------------------------------------------------------
# eigensolver


@dataclass(frozen=True)
class EighResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int


def _off_norm(a: np.ndarray) -> float:
    # direct sum over off-diagonal entries; total minus diagonal would floor at ~sqrt(eps_mach) ||A||
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(h, tol: float = JACOBI_REL_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EighResult:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    Each (p, q) rotation first removes the phase of ``a[p, q]`` with a diagonal
    unitary, then applies the real symmetric Jacobi rotation. Converged when
    the off-diagonal HS norm is at most ``tol * ||H||_HS``.

    Returns eigenvalues ascending and the matching unitary ``V`` with
    ``H = V diag(w) V^dagger``.
    """
    a = hermitian(h).copy()
    d = len(a)
    v = np.eye(d, dtype=complex)
    scale = float(np.linalg.norm(a))
    target = tol * scale
    sweeps = 0
    while _off_norm(a) > target:
        if sweeps >= max_sweeps:
            raise NumericalError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal residual {_off_norm(a):.3e}, target {target:.3e})"
            )
        sweeps += 1
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300 or r < 1e-18 * scale:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                # columns p, q transform by W = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                w = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ w
                a[idx, :] = w.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ w
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return EighResult(eigenvalues=w[order], eigenvectors=v[:, order], sweeps=sweeps)


def trace_norm(h) -> float:
    """Schatten-1 norm sum |lambda_i| of a Hermitian matrix."""
    return float(np.sum(np.abs(jacobi_eigh(h).eigenvalues)))


# ---------------------------------------------------------------------------
# randomness


def rng_derive(seed: int, stream_index: int) -> int:
    """Child seed for stream `stream_index` of `seed`.

    Uses numpy's SeedSequence hashing (spawn-key mixing), which is deterministic
    and designed to give independent-looking streams for distinct keys.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(int(stream_index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def haar_unitaries(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of `n` Haar-random d x d unitaries, shape (n, d, d).

    Ginibre matrix -> QR -> rescale column j of Q by the phase of R[j, j], so the
    factorization is the unique one with positive real diag(R).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[:, None, :]


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return haar_unitaries(1, d, rng)[0]


def random_unit_vectors(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    if d < 1:
        raise ValueError("d must be >= 1")
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_unit_vectors(1, d, rng)[0]


# ---------------------------------------------------------------------------
# hard-instance helpers


def half_signs(d: int) -> np.ndarray:
    """Diagonal of X' = X/eps: +1 on the first d/2 entries, -1 on the rest."""
    if d % 2:
        raise ValueError(f"d must be even, got {d}")
    return np.concatenate([np.ones(d // 2), -np.ones(d // 2)])


def half_swap(d: int) -> np.ndarray:
    """Block permutation T with T^dagger X T = -X."""
    if d % 2:
        raise ValueError(f"d must be even, got {d}")
    h = d // 2
    t = np.zeros((d, d), dtype=complex)
    t[:h, h:] = np.eye(h)
    t[h:, :h] = np.eye(h)
    return t


def delta_statistic(v) -> float:
    """Sum of |v_i|^2 over the first half minus the second half.

    Squared moduli, so the value is invariant to per-coordinate phases. For the
    i-th column of U this equals (U^dagger X' U)_ii.
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise ValueError("expected a vector")
    if len(v) % 2:
        raise ValueError(f"dimension must be even, got {len(v)}")
    if np.linalg.norm(v) > 1 + 1e-9:
        raise ValueError("vector norm exceeds 1")
    w = np.abs(v) ** 2
    h = len(v) // 2
    return float(w[:h].sum() - w[h:].sum())


def column_deltas(us: np.ndarray) -> np.ndarray:
    """delta of every column for a stack of unitaries: shape (..., d)."""
    d = us.shape[-1]
    return np.einsum("k,...kx->...x", half_signs(d), np.abs(us) ** 2)


# ---------------------------------------------------------------------------
# matrix file format


def matrix_to_json(a) -> dict:
    a = as_matrix(a)
    return {"d": len(a), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        d = int(obj["d"])
        m = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if m.shape != (d, d):
        raise ValueError(f"matrix shape {m.shape} does not match d={d}")
    return as_matrix(m)


def save_matrix(path: str | Path, a) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(a)))


def load_matrix(path: str | Path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()))
