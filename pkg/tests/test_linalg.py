import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import random_hermitian
from mixedness.linalg import (
    NumericalError,
    adjoint,
    check_unitary,
    column_deltas,
    delta_statistic,
    haar_unitaries,
    haar_unitary,
    half_signs,
    half_swap,
    hermitian,
    hs_inner,
    hs_norm,
    jacobi_eigh,
    load_matrix,
    make_rng,
    matmul,
    random_unit_vector,
    random_unit_vectors,
    rng_derive,
    save_matrix,
    trace,
    trace_norm,
)
from mixedness.states import perturbation

seeds = st.integers(min_value=0, max_value=2**63)


def test_identity_product():
    a = np.arange(9).reshape(3, 3) + 1j
    assert np.array_equal(matmul(np.eye(3), a), a)


def test_pauli_product():
    x = [[0, 1], [1, 0]]
    z = [[1, 0], [0, -1]]
    assert np.array_equal(matmul(x, z), np.array([[0, -1], [1, 0]]))


def test_perturbation_orthogonal_to_identity():
    assert hs_inner(perturbation(6, 0.3), np.eye(6)) == 0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        matmul(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        hs_inner(np.eye(2), np.eye(3))


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        trace([[np.nan, 0], [0, 1]])


@given(seeds)
def test_hs_inner_self_is_norm_squared(seed):
    rng = make_rng(seed)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    val = hs_inner(a, a)
    assert abs(val.imag) < 1e-12
    assert val.real == pytest.approx(hs_norm(a) ** 2)
    assert np.allclose(adjoint(adjoint(a)), a)


def test_hermitian_symmetrizes_and_refuses():
    h = np.array([[1, 1j], [-1j + 1e-14, 2]])
    out = hermitian(h)
    assert np.allclose(out, out.conj().T, atol=0)
    with pytest.raises(ValueError):
        hermitian([[0, 1], [0, 0]])


class TestJacobi:
    def test_diagonal(self):
        r = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(r.eigenvalues, [1, 2, 3])

    def test_pauli_x(self):
        r = jacobi_eigh([[0, 1], [1, 0]])
        assert np.allclose(r.eigenvalues, [-1, 1], atol=1e-14)

    @given(seeds, st.sampled_from([1, 2, 3, 8, 17, 32]))
    def test_reconstruction(self, seed, d):
        h = random_hermitian(d, make_rng(seed))
        r = jacobi_eigh(h)
        v = r.eigenvectors
        recon = v @ np.diag(r.eigenvalues) @ v.conj().T
        assert np.linalg.norm(recon - h) <= 1e-9 * max(1.0, np.linalg.norm(h))
        assert np.abs(v.conj().T @ v - np.eye(d)).max() <= 1e-10
        assert np.all(np.diff(r.eigenvalues) >= 0)

    def test_large_reconstruction(self):
        h = random_hermitian(64, make_rng(3))
        r = jacobi_eigh(h)
        recon = r.eigenvectors @ np.diag(r.eigenvalues) @ r.eigenvectors.conj().T
        assert np.linalg.norm(recon - h) <= 1e-9 * np.linalg.norm(h)
        assert np.allclose(r.eigenvalues, np.linalg.eigvalsh(h), atol=1e-9)

    def test_nonconvergence_reports_residual(self):
        h = random_hermitian(6, make_rng(0))
        with pytest.raises(NumericalError, match="residual"):
            jacobi_eigh(h, max_sweeps=1)

    def test_degenerate_spectrum(self):
        u = haar_unitary(6, make_rng(1))
        h = u @ np.diag([1, 1, 1, -1, -1, 2.0]) @ u.conj().T
        assert np.allclose(jacobi_eigh(h).eigenvalues, [-1, -1, 1, 1, 1, 2], atol=1e-10)


class TestTraceNorm:
    def test_perturbation(self):
        assert trace_norm(perturbation(8, 0.3)) == pytest.approx(8 * 0.3)

    def test_identity(self):
        assert trace_norm(np.eye(5)) == pytest.approx(5)

    def test_lambda_minus_mixed(self):
        d, eps = 10, 0.37
        lam = (np.eye(d) + perturbation(d, eps)) / d
        assert abs(trace_norm(lam - np.eye(d) / d) - eps) <= 1e-10

    @given(seeds)
    def test_dominates_trace(self, seed):
        h = random_hermitian(5, make_rng(seed))
        assert trace_norm(h) >= abs(np.trace(h).real) - 1e-12


class TestHaar:
    @given(seeds, st.integers(1, 12))
    def test_unitary(self, seed, d):
        u = haar_unitary(d, make_rng(seed))
        assert np.abs(u.conj().T @ u - np.eye(d)).max() <= 1e-10
        assert abs(abs(np.linalg.det(u)) - 1) < 1e-10

    def test_seed_reproducible(self):
        assert np.array_equal(haar_unitary(4, make_rng(42)), haar_unitary(4, make_rng(42)))

    def test_first_entry_modulus(self):
        us = haar_unitaries(100_000, 8, make_rng(5))
        w = np.abs(us[:, 0, 0]) ** 2
        se = w.std(ddof=1) / np.sqrt(len(w))
        assert abs(w.mean() - 1 / 8) <= 3 * se

    def test_phase_of_entries_uniform(self):
        # without the diagonal-phase correction, arg(U_11) is not uniform
        us = haar_unitaries(20_000, 3, make_rng(6))
        ang = np.angle(us[:, 0, 0])
        assert stats.kstest(ang, stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 0.01

    def test_left_invariance(self):
        rng = make_rng(7)
        v = haar_unitary(8, rng)
        us = haar_unitaries(10_000, 8, rng)
        a = column_deltas(us)[:, 0]
        b = column_deltas(v @ haar_unitaries(10_000, 8, rng))[:, 0]
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_check_unitary_rejects(self):
        with pytest.raises(ValueError):
            check_unitary(2 * np.eye(3))


class TestUnitVectors:
    @given(seeds, st.integers(1, 20))
    def test_norm(self, seed, d):
        assert abs(np.linalg.norm(random_unit_vector(d, make_rng(seed))) - 1) <= 1e-12

    def test_first_coordinate(self):
        v = random_unit_vectors(100_000, 16, make_rng(8))
        w = np.abs(v[:, 0]) ** 2
        assert abs(w.mean() - 1 / 16) <= 3 * w.std(ddof=1) / np.sqrt(len(w))

    def test_delta_second_moment(self):
        v = random_unit_vectors(100_000, 8, make_rng(9))
        dl = np.array([delta_statistic(x) for x in v[:20_000]])
        full = (np.abs(v[:, :4]) ** 2).sum(1) - (np.abs(v[:, 4:]) ** 2).sum(1)
        assert np.allclose(dl, full[:20_000])
        sq = full**2
        assert abs(sq.mean() - 1 / 9) <= 3 * sq.std(ddof=1) / np.sqrt(len(sq))


class TestDelta:
    def test_basis_vectors(self):
        assert delta_statistic(np.eye(6)[0]) == 1
        assert delta_statistic(np.eye(6)[5]) == -1

    def test_flat(self):
        assert delta_statistic(np.full(6, 1 / np.sqrt(6))) == pytest.approx(0, abs=1e-15)

    def test_odd_dimension(self):
        with pytest.raises(ValueError):
            delta_statistic(np.ones(3) / np.sqrt(3))

    def test_norm_guard(self):
        with pytest.raises(ValueError):
            delta_statistic(np.ones(4))

    @given(seeds)
    def test_phase_invariance_and_bound(self, seed):
        rng = make_rng(seed)
        v = random_unit_vector(8, rng)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        assert delta_statistic(v * phases) == pytest.approx(delta_statistic(v), abs=1e-13)
        assert abs(delta_statistic(v)) <= 1 + 1e-12

    def test_column_deltas_match_diagonal(self):
        u = haar_unitary(6, make_rng(10))
        diag = np.diag(u.conj().T @ np.diag(half_signs(6)) @ u).real
        assert np.allclose(column_deltas(u[None])[0], diag)

    def test_half_swap_flips_x(self):
        t = half_swap(6)
        x = np.diag(half_signs(6))
        assert np.allclose(t.conj().T @ x @ t, -x)


class TestRngDerive:
    def test_deterministic(self):
        assert rng_derive(123, 7) == rng_derive(123, 7)

    def test_distinct(self):
        assert rng_derive(5, 0) != rng_derive(5, 1)
        assert len({rng_derive(5, i) for i in range(10_001)}) == 10_001

    def test_children_uniform(self):
        first = np.array([make_rng(rng_derive(99, i)).random() for i in range(10_001)])
        counts = np.histogram(first, bins=20, range=(0, 1))[0]
        assert stats.chisquare(counts).pvalue > 0.01


def test_matrix_file_round_trip(tmp_path):
    a = make_rng(0).standard_normal((3, 3)) + 1j
    save_matrix(tmp_path / "m.json", a)
    assert np.array_equal(load_matrix(tmp_path / "m.json"), a)
    obj = json.loads((tmp_path / "m.json").read_text())
    assert set(obj) == {"d", "re", "im"}


def test_matrix_file_shape_mismatch(tmp_path):
    (tmp_path / "bad.json").write_text(json.dumps({"d": 3, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}))
    with pytest.raises(ValueError):
        load_matrix(tmp_path / "bad.json")
