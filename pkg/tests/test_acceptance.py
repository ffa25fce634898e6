"""One test per acceptance criterion, each logging a single pass/fail line.

The lines are collected into an "acceptance criteria" section of the pytest
terminal summary. Tolerances and budgets are the stated ones; nothing here is
loosened to make a criterion pass.
"""

import io
import math
import time

import numpy as np

from conftest import random_hermitian
from mixedness.certifier import NO, YES, copies_needed, test_mixed
from mixedness.cli import run
from mixedness.likelihood import LikelihoodContext, delta_mc, psi_mean_mc
from mixedness.linalg import haar_unitary, half_signs, make_rng, random_unit_vector, rng_derive
from mixedness.moments import fluctuation_scaling, sample_statistic, second_moment_mc, second_moment_trace
from mixedness.paninski import (
    chisq_exact,
    delta_closed_form,
    enumeration_oracle,
    inner_psi_closed_form,
    zt_exact,
)
from mixedness.states import HardInstance, basis_povm, fresh_haar, maximally_mixed, run_schedule
from mixedness.uniformity import l2_far_perturbation, required_samples_l2, test_uniformity_l2


def _finish(record, number, title, passed, detail, started, limit):
    elapsed = time.perf_counter() - started
    ok = passed and elapsed <= limit
    record(number, title, ok, f"{detail}; {elapsed:.1f}s (limit {limit}s)")
    assert passed, detail
    assert elapsed <= limit, f"took {elapsed:.1f}s"


def test_01_certifier_guarantee(acceptance_log):
    t0 = time.perf_counter()
    d, eps, trials = 16, 0.5, 200
    n = copies_needed(d, eps)
    yes = np.mean([test_mixed(maximally_mixed(d), d, eps, rng_derive(101, i)).verdict == YES for i in range(trials)])
    no = np.mean([test_mixed(HardInstance(d, eps), d, eps, rng_derive(102, i)).verdict == NO for i in range(trials)])
    _finish(acceptance_log, 1, "certifier guarantee", yes >= 0.75 and no >= 0.75,
            f"N={n}, YES rate on mixed {yes:.3f}, NO rate on hard {no:.3f} (need >= 0.75)", t0, 300)


def test_02_inner_tester(acceptance_log):
    t0 = time.perf_counter()
    d, eps_p, trials = 100, 1.0, 500
    n = required_samples_l2(d, eps_p)
    far = l2_far_perturbation(d, eps_p)
    rng = make_rng(201)
    acc = np.mean([test_uniformity_l2(rng.integers(0, d, size=n), d, eps_p).uniform for _ in range(trials)])
    rej = np.mean([not test_uniformity_l2(rng.choice(d, size=n, p=far), d, eps_p).uniform for _ in range(trials)])
    _finish(acceptance_log, 2, "collision tester", acc >= 0.85 and rej >= 0.85,
            f"N={n}, accept uniform {acc:.3f}, reject far {rej:.3f} (need >= 0.85)", t0, 60)


def test_03_classical_identities(acceptance_log):
    t0 = time.perf_counter()
    worst, bound_ok = 0.0, True
    for eps in (0.3, 0.5):
        for d in (2, 4, 6):
            tables = enumeration_oracle(d, eps, 6)
            for tab in tables:
                for x, delta in zip(tab.transcripts, tab.delta):
                    worst = max(worst, abs(delta_closed_form(x, d, eps) - delta))
                # equality holds on balanced histograms, where the two sides differ by a few ulps
                bound_ok &= bool(np.all(tab.delta >= (1 - eps**2) ** (tab.t / 2) * (1 - 1e-12)))
                if d <= 4 and tab.t <= 5:
                    for x, val in zip(tab.transcripts, tab.inner_psi):
                        worst = max(worst, abs(inner_psi_closed_form(x, d, eps) - val))
    chi_dev = max(abs(chisq_exact(4, 3, eps) - enumeration_oracle(4, eps, 3)[3].chisq) for eps in (0.3, 0.5))
    passed = worst <= 1e-12 and chi_dev <= 1e-10 and bound_ok
    _finish(acceptance_log, 3, "exact classical identities", passed,
            f"closed-form max dev {worst:.2e} (<= 1e-12), chisq dev {chi_dev:.2e} (<= 1e-10), "
            f"Delta lower bound on every transcript: {bound_ok}", t0, 120)


def test_04_chain_rule_ordering(acceptance_log):
    t0 = time.perf_counter()
    gaps = []
    for eps in (0.25, 0.5):
        tables = enumeration_oracle(4, eps, 4)
        for n in range(5):
            gaps.append(sum(zt_exact(4, eps, t) for t in range(1, n + 1)) - tables[n].kl)
    _finish(acceptance_log, 4, "KL <= sum Z_t", min(gaps) >= 0,
            f"smallest slack {min(gaps):.3e} over d=4, eps in (0.25, 0.5), N <= 4", t0, 60)


def test_05_weingarten(acceptance_log):
    t0 = time.perf_counter()
    rng = make_rng(501)
    worst = 0.0
    for d in (4, 8):
        for _ in range(20):
            a, b = random_hermitian(d, rng), random_hermitian(d, rng)
            est = second_moment_mc(a, b, 100_000, rng)
            worst = max(worst, abs(est.mean - second_moment_trace(a, b)) / est.stderr)
    proj_dev, rank1_dev = 0.0, 0.0
    for d in (4, 8, 16, 32):
        v = random_unit_vector(d, rng)
        pi = np.outer(v, v.conj())
        proj_dev = max(proj_dev, abs(second_moment_trace(pi, np.diag(half_signs(d))) - 1 / (d + 1)))
        rank1_dev = max(rank1_dev, abs(second_moment_trace(pi, LikelihoodContext(d, 0.5).X) - 0.25 / (d + 1)))
    passed = worst <= 3 and proj_dev <= 1e-14 and rank1_dev <= 1e-14
    _finish(acceptance_log, 5, "Weingarten identities", passed,
            f"worst |MC - exact| = {worst:.2f} SE (<= 3); projector case dev {proj_dev:.1e}; rank-one case dev {rank1_dev:.1e}",
            t0, 180)


def test_06_k_mean_bound(acceptance_log):
    # Faithful check of the stated bound eps^2/(d+1). The exact mean is 2 eps^2/(d+1),
    # so this criterion is expected to fail; the measured values are logged.
    t0 = time.perf_counter()
    eps = 0.5
    rng = make_rng(601)
    parts, passed = [], True
    for d in (8, 16):
        povm = basis_povm(haar_unitary(d, rng))
        k = sample_statistic("k_stat", d, eps, povm, 10_000, rng)
        limit = eps**2 / (d + 1) * 1.05
        passed &= bool(k.mean() <= limit)
        parts.append(f"d={d}: mean K {k.mean():.5f} vs limit {limit:.5f} (2 eps^2/(d+1) = {2 * eps**2 / (d + 1):.5f})")
    _finish(acceptance_log, 6, "mean of K below eps^2/(d+1)", passed, "; ".join(parts), t0, 120)


def test_07_fluctuation_scaling(acceptance_log):
    t0 = time.perf_counter()
    rep = fluctuation_scaling([8, 16, 32, 64], 0.5, num_pairs=10_000, rng=make_rng(701))
    _finish(acceptance_log, 7, "phi fluctuation slope", -1.7 <= rep.slope <= -1.3,
            f"slope {rep.slope:.3f} (need [-1.7, -1.3]); stds {', '.join(f'{s:.2e}' for s in rep.stds)}", t0, 240)


def test_08_tail_shapes(acceptance_log):
    t0 = time.perf_counter()
    rng = make_rng(801)
    diag = sample_statistic("diag_norm", 32, 0.5, None, 10_000, rng)
    p_diag = float(np.mean(diag > 1 + 10 / math.sqrt(32)))
    phi = np.abs(sample_statistic("phi", 16, 0.5, None, 10_000, rng))
    p_phi = float(np.mean(phi > 5 * 0.25 / 16**1.5))
    _finish(acceptance_log, 8, "tail shapes", p_diag <= 0.01 and p_phi <= 0.02,
            f"diag-norm exceedance {p_diag:.4f} (<= 0.01), |phi| exceedance {p_phi:.4f} (<= 0.02)", t0, 180)


def test_09_likelihood_identity(acceptance_log):
    t0 = time.perf_counter()
    d, eps = 8, 0.5
    ctx = LikelihoodContext(d, eps)
    rng = make_rng(901)
    worst = 0.0
    for _ in range(20):
        tr = run_schedule(maximally_mixed(d), fresh_haar(d), 10, rng)
        dl = delta_mc(tr, 4000, rng, ctx)
        ps = psi_mean_mc(tr, 4000, rng, ctx)
        comb = math.hypot(2 * dl.mean * dl.stderr, ps.stderr)
        worst = max(worst, abs(dl.mean**2 - ps.mean) / comb)
    _finish(acceptance_log, 9, "Delta^2 = E[Psi]", worst <= 3,
            f"worst gap {worst:.2f} combined SE over 20 transcripts (<= 3)", t0, 120)


DETERMINISM_RUNS = {
    "certify": ["--d", "8", "--trials", "20", "--state", "hard"],
    "sweep": ["--d", "4,8", "--trials", "10", "--multipliers", "0.5,1"],
    "paninski": ["--d", "4", "--n", "3"],
    "verify": ["--samples", "1000", "--pairs", "500"],
    "tails": ["--d", "8", "--samples", "2000"],
    "simulate": ["--d", "4", "--trials", "5", "--n", "8", "--schedule", "greedy-realign"],
}


def _rows(argv):
    out = io.StringIO()
    code = run(argv, stdout=out, stderr=io.StringIO())
    return code, out.getvalue()


def test_10_determinism(acceptance_log):
    t0 = time.perf_counter()
    mismatched = []
    for cmd, args in DETERMINISM_RUNS.items():
        base = [cmd, *args, "--seed", "13"]
        first = _rows(base + ["--jobs", "1"])
        again = _rows(base + ["--jobs", "1"])
        if cmd in ("certify", "sweep"):
            parallel = _rows(base + ["--jobs", "2"])
        else:
            parallel = again
        if not (first == again == parallel) or not first[1]:
            mismatched.append(cmd)
    _finish(acceptance_log, 10, "determinism", not mismatched,
            f"byte-identical rows for {len(DETERMINISM_RUNS) - len(mismatched)}/{len(DETERMINISM_RUNS)} commands"
            + (f"; mismatched: {mismatched}" if mismatched else ""), t0, 60)
