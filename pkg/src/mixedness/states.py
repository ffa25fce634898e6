"""Density matrices, the rotated hard instance, finite POVMs and measurement runs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .linalg import (
    as_matrix,
    check_unitary,
    half_signs,
    haar_unitary,
    hermitian,
    jacobi_eigh,
    matrix_from_json,
    matrix_to_json,
)

TRACE_TOL = 1e-10
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-9
CLAMP_TOL = 1e-12
CONSISTENCY_TOL = 1e-6


class ConsistencyError(ValueError):
    """A probability model or schedule produced inconsistent output."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = hermitian(self.matrix, tol=1e-10)
        tr = np.trace(m).real
        if abs(tr - 1) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -PSD_TOL:
            raise ValueError(f"density matrix is not PSD (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def d(self) -> int:
        return len(self.matrix)


def maximally_mixed(d: int) -> DensityMatrix:
    if d < 1:
        raise ValueError("d must be >= 1")
    return DensityMatrix(np.eye(d) / d)


def pure_state(v) -> DensityMatrix:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def _check_instance_params(d: int, eps: float) -> None:
    if d < 2 or d % 2:
        raise ValueError(f"hard instance needs an even d >= 2, got {d}")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")


def perturbation(d: int, eps: float) -> np.ndarray:
    """X = eps * diag(+1 x d/2, -1 x d/2)."""
    return np.diag(eps * half_signs(d)).astype(complex)


def hard_instance_state(d: int, eps: float, u) -> DensityMatrix:
    """U^dagger Lambda U with Lambda = (I + X)/d."""
    _check_instance_params(d, eps)
    u = check_unitary(u)
    if len(u) != d:
        raise ValueError(f"unitary has dimension {len(u)}, expected {d}")
    lam = (np.eye(d) + perturbation(d, eps)) / d
    return DensityMatrix(u.conj().T @ lam @ u)


@dataclass(frozen=True)
class HardInstance:
    """Alternative-hypothesis sampler: each call to `sample` rotates Lambda by a fresh Haar U."""

    d: int
    eps: float

    def __post_init__(self):
        _check_instance_params(self.d, self.eps)

    def sample(self, rng: np.random.Generator) -> DensityMatrix:
        return hard_instance_state(self.d, self.eps, haar_unitary(self.d, rng))


# ---------------------------------------------------------------------------
# POVMs


@dataclass(frozen=True, eq=False)
class Povm:
    """Finite-outcome POVM. `vectors` is set for rank-one POVMs (columns v_x with M_x = w_x v_x v_x^dagger)."""

    elements: np.ndarray
    vectors: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        els = np.asarray(self.elements, dtype=complex)
        if els.ndim != 3 or els.shape[1] != els.shape[2] or len(els) == 0:
            raise ValueError(f"POVM elements must have shape (m, d, d), got {els.shape}")
        d = els.shape[1]
        els = np.stack([hermitian(m, tol=1e-10) for m in els])
        dev = np.max(np.abs(els.sum(axis=0) - np.eye(d)))
        if dev > COMPLETENESS_TOL:
            raise ValueError(f"POVM elements do not sum to identity (max dev {dev:.3e})")
        traces = np.trace(els, axis1=1, axis2=2).real
        # rank-one elements w v v^dagger with w = Tr > 0 are PSD by construction
        if self.vectors is None or np.any(traces <= 0):
            mins = np.linalg.eigvalsh(els)[:, 0]
            if np.any(mins < -PSD_TOL):
                raise ValueError(f"POVM element not PSD (min eigenvalue {mins.min():.3e})")
        if np.any(traces <= 0):
            raise ValueError("POVM element with zero trace")
        object.__setattr__(self, "elements", _frozen(els))
        if self.vectors is not None:
            object.__setattr__(self, "vectors", _frozen(np.asarray(self.vectors, dtype=complex)))

    @property
    def d(self) -> int:
        return self.elements.shape[1]

    @property
    def m(self) -> int:
        return self.elements.shape[0]

    @property
    def traces(self) -> np.ndarray:
        return np.trace(self.elements, axis1=1, axis2=2).real

    @property
    def normalized(self) -> np.ndarray:
        """M_hat_x = M_x / Tr(M_x)."""
        return self.elements / self.traces[:, None, None]

    @property
    def null_weights(self) -> np.ndarray:
        """Outcome law under the maximally mixed state: Tr(M_x)/d."""
        return self.traces / self.d


def basis_povm(u, label: str = "") -> Povm:
    """Projective measurement onto the columns of a unitary."""
    u = check_unitary(u)
    els = np.einsum("ix,jx->xij", u, u.conj())
    return Povm(els, vectors=u, label=label)


def standard_basis_povm(d: int) -> Povm:
    return basis_povm(np.eye(d, dtype=complex), label="standard")


def rank_one_povm(vectors, weights) -> Povm:
    """M_x = w_x v_x v_x^dagger for unit columns v_x."""
    v = np.asarray(vectors, dtype=complex)
    v = v / np.linalg.norm(v, axis=0, keepdims=True)
    w = np.asarray(weights, dtype=float)
    return Povm(np.einsum("x,ix,jx->xij", w, v, v.conj()), vectors=v)


def outcome_distribution(rho: DensityMatrix, povm: Povm) -> np.ndarray:
    """q_x = Tr(rho M_x), with rounding-level negatives clamped to zero."""
    if rho.d != povm.d:
        raise ValueError(f"dimension mismatch: state {rho.d}, POVM {povm.d}")
    q = np.einsum("ij,xji->x", rho.matrix, povm.elements).real
    total = q.sum()
    if abs(total - 1) > CONSISTENCY_TOL:
        raise ConsistencyError(f"outcome probabilities sum to {total!r}")
    if np.any(q < -CLAMP_TOL):
        raise ConsistencyError(f"negative outcome probability {q.min():.3e}")
    q = np.clip(q, 0.0, None)
    return q / q.sum()


def sample_outcomes(rho: DensityMatrix, povm: Povm, n: int, rng: np.random.Generator) -> np.ndarray:
    """`n` i.i.d. outcome indices by inverse-CDF lookup."""
    if n < 0:
        raise ValueError("n must be >= 0")
    q = outcome_distribution(rho, povm)
    cdf = np.cumsum(q)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int64)


# ---------------------------------------------------------------------------
# transcripts and schedules


@dataclass
class Transcript:
    outcomes: list[int] = field(default_factory=list)
    povms: list[Povm] = field(default_factory=list)
    povm_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not len(self.outcomes) == len(self.povms) == len(self.povm_ids):
            raise ValueError("transcript fields must have equal length")
        for x, p in zip(self.outcomes, self.povms):
            if not 0 <= x < p.m:
                raise ValueError(f"outcome {x} invalid for a {p.m}-outcome POVM")

    def __len__(self) -> int:
        return len(self.outcomes)

    def append(self, x: int, povm: Povm, povm_id: str) -> None:
        if not 0 <= x < povm.m:
            raise ValueError(f"outcome {x} invalid for a {povm.m}-outcome POVM")
        self.outcomes.append(int(x))
        self.povms.append(povm)
        self.povm_ids.append(povm_id)

    def prefix(self, t: int) -> "Transcript":
        return Transcript(self.outcomes[:t], self.povms[:t], self.povm_ids[:t])


class Schedule(Protocol):
    name: str
    adaptive: bool

    def choose(self, transcript: Transcript, rng: np.random.Generator) -> Povm: ...


@dataclass(frozen=True, eq=False)
class Nonadaptive:
    """Fixed POVM sequence; a shorter sequence is cycled."""

    povms: tuple[Povm, ...]
    name: str = "fixed"
    adaptive: bool = False

    def __post_init__(self):
        if not self.povms:
            raise ValueError("need at least one POVM")
        object.__setattr__(self, "povms", tuple(self.povms))

    def choose(self, transcript: Transcript, rng: np.random.Generator) -> Povm:
        return self.povms[len(transcript) % len(self.povms)]

    def distinct(self) -> list[Povm]:
        seen, out = set(), []
        for p in self.povms:
            if id(p) not in seen:
                seen.add(id(p))
                out.append(p)
        return out


@dataclass(frozen=True, eq=False)
class Adaptive:
    """POVM chosen by `strategy(transcript, rng)`; randomness only from the supplied stream."""

    strategy: Callable[[Transcript, np.random.Generator], Povm]
    name: str = "adaptive"
    adaptive: bool = True

    def choose(self, transcript: Transcript, rng: np.random.Generator) -> Povm:
        return self.strategy(transcript, rng)


def fixed_basis(d: int, u=None) -> Nonadaptive:
    povm = standard_basis_povm(d) if u is None else basis_povm(u)
    return Nonadaptive((povm,), name="fixed")


def fresh_haar(d: int) -> Adaptive:
    """A new Haar-random basis every step (history-independent, randomized)."""

    def strategy(tr: Transcript, rng: np.random.Generator) -> Povm:
        return basis_povm(haar_unitary(d, rng))

    return Adaptive(strategy, name="fresh-haar")


def greedy_realign(d: int) -> Adaptive:
    """Alternate exploration and exploitation.

    Even steps measure in a fresh Haar basis; those outcomes feed the linear
    inversion estimate rho_hat = mean((d + 1) v v^dagger - I). Odd steps measure
    in the eigenbasis of rho_hat.
    """

    def strategy(tr: Transcript, rng: np.random.Generator) -> Povm:
        t = len(tr)
        if t % 2 == 0:
            return basis_povm(haar_unitary(d, rng))
        est = np.zeros((d, d), dtype=complex)
        for i in range(0, t, 2):
            v = tr.povms[i].vectors[:, tr.outcomes[i]]
            est += (d + 1) * np.outer(v, v.conj()) - np.eye(d)
        est /= (t + 1) // 2
        return basis_povm(jacobi_eigh(est).eigenvectors)

    return Adaptive(strategy, name="greedy-realign")


SCHEDULE_KINDS = ("fixed", "fresh-haar", "greedy-realign")


def make_schedule(kind: str, d: int) -> Nonadaptive | Adaptive:
    if kind == "fixed":
        return fixed_basis(d)
    if kind == "fresh-haar":
        return fresh_haar(d)
    if kind == "greedy-realign":
        return greedy_realign(d)
    raise ValueError(f"unknown schedule {kind!r}; choose from {SCHEDULE_KINDS}")


def run_schedule(source, schedule, n: int, rng: np.random.Generator) -> Transcript:
    """Measure `n` copies, choosing each POVM from the transcript so far.

    `source` is a DensityMatrix (null run) or a HardInstance, in which case a
    single U is drawn first and held fixed for all `n` steps.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rho = source.sample(rng) if isinstance(source, HardInstance) else source
    tr = Transcript()
    for t in range(n):
        povm = schedule.choose(tr, rng)
        if not isinstance(povm, Povm) or povm.d != rho.d:
            raise ConsistencyError(f"schedule returned an invalid POVM at step {t}")
        x = sample_outcomes(rho, povm, 1, rng)[0]
        tr.append(x, povm, povm.label or schedule.name)
    return tr


# ---------------------------------------------------------------------------
# I/O


def write_transcripts_jsonl(path, transcripts: Iterable[Transcript], kind: str) -> None:
    with open(path, "w") as fh:
        for i, tr in enumerate(transcripts):
            fh.write(json.dumps({"trial": i, "outcomes": list(tr.outcomes), "povm": kind}) + "\n")


def read_transcripts_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_state(path) -> DensityMatrix:
    with open(path) as fh:
        return DensityMatrix(matrix_from_json(json.load(fh)))


def save_state(path, rho: DensityMatrix) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json(rho.matrix), fh)


def load_povm(path) -> Povm:
    with open(path) as fh:
        objs = json.load(fh)
    return Povm(np.stack([matrix_from_json(o) for o in objs]))


def save_povm(path, povm: Povm) -> None:
    with open(path, "w") as fh:
        json.dump([matrix_to_json(m) for m in povm.elements], fh)


def povm_from_matrices(mats: Sequence) -> Povm:
    return Povm(np.stack([as_matrix(m) for m in mats]))
