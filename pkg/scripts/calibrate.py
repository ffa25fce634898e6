"""One-shot calibration of the constants in mixedness/constants.py.

Prints, for each constant, the empirical value implied by a seeded MC run and
the value that would be frozen (with a safety factor). Run:

    python3 scripts/calibrate.py --seed 0
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from mixedness.certifier import copies_needed, test_mixed
from mixedness.likelihood import LikelihoodContext, delta_mc
from mixedness.linalg import make_rng, rng_derive
from mixedness.moments import exceedance, moment_growth_experiment, psi_second_moment_experiment, sample_statistic
from mixedness.states import HardInstance, fixed_basis, make_schedule, maximally_mixed, run_schedule
from mixedness.uniformity import l2_far_perturbation, required_samples_l2, test_uniformity_l2

SAFETY = 0.5


def collision_rates(d, eps_prime, trials, rng):
    n = required_samples_l2(d, eps_prime)
    far = l2_far_perturbation(d, eps_prime)
    ok_u = ok_f = 0
    for _ in range(trials):
        ok_u += test_uniformity_l2(rng.integers(0, d, n), d, eps_prime).uniform
        ok_f += not test_uniformity_l2(rng.choice(d, n, p=far), d, eps_prime).uniform
    return n, ok_u / trials, ok_f / trials


def certifier_rates(d, eps, trials, seed):
    null = maximally_mixed(d)
    hard = HardInstance(d, eps)
    yes = sum(test_mixed(null, d, eps, rng_derive(seed, 2 * i)).verdict == "YES" for i in range(trials))
    no = sum(test_mixed(hard, d, eps, rng_derive(seed, 2 * i + 1)).verdict == "NO" for i in range(trials))
    return yes / trials, no / trials


def implied_tail_constant(values, shape, min_hits=10):
    """min over thresholds of -ln P(X > t) / shape(t), using thresholds with enough hits."""
    v = np.sort(values)
    n = len(v)
    best = math.inf
    for t in v[:-min_hits][:: max(1, n // 200)]:
        p, _ = exceedance(v, [t])
        if p[0] <= 0 or shape(t) <= 0:
            continue
        best = min(best, -math.log(p[0]) / shape(t))
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    rng = make_rng(args.seed)
    trials = 100 if args.quick else 500

    print("== collision tester, C0")
    for d in (64, 100, 256):
        n, acc, rej = collision_rates(d, 1.0, trials, rng)
        print(f"d={d} N={n} accept(uniform)={acc:.3f} reject(far)={rej:.3f}")

    print("== certifier, C1")
    for d, eps in ((8, 0.5), (16, 0.5), (16, 0.25)):
        yes, no = certifier_rates(d, eps, trials // 2, args.seed)
        print(f"d={d} eps={eps} N={copies_needed(d, eps)} yes(mixed)={yes:.3f} no(hard)={no:.3f}")

    print("== C_DELTA: d (1 - Delta^{1/(t-1)}) / eps^2 on null transcripts, t = 20")
    worst = 0.0
    for d in (4, 8, 16):
        for eps in (0.25, 0.5):
            ctx = LikelihoodContext(d, eps)
            for _ in range(5):
                tr = run_schedule(maximally_mixed(d), fixed_basis(d), 20, rng)
                est = delta_mc(tr, 4000, rng, ctx)
                c = d * (1 - max(est.mean, 1e-300) ** (1 / 19)) / eps**2
                worst = max(worst, c)
    print(f"largest implied C_DELTA = {worst:.3f}")

    print("== tail constants")
    phi_c = k_c = math.inf
    for d in (8, 16, 32):
        for eps in (0.25, 0.5):
            phi = np.abs(sample_statistic("phi", d, eps, None, 20000, rng))
            phi_c = min(phi_c, implied_tail_constant(
                phi, lambda t: min(d**3 * t**2 / eps**4, d**2 * t / eps**2)))
            k = sample_statistic("k_stat", d, eps, None, 20000, rng)
            base = 2 * eps**2 / d
            shifted = k - base
            k_c = min(k_c, implied_tail_constant(
                shifted, lambda t: t * d**2 / eps**2 if t > base else 0.0))
    print(f"PHI_TAIL_C implied {phi_c:.4f} -> frozen {SAFETY * phi_c:.4f}")
    print(f"K_TAIL_C_PRIME implied {k_c:.4f} -> frozen {SAFETY * k_c:.4f}")

    print("== moment growth constants")
    c2 = c3 = 0.0
    for d in (8, 16):
        for eps in (0.25, 0.5):
            lim = int(0.1 * d**2 / eps**2)
            for n in sorted({max(1, lim // 4), lim // 2, lim}):
                est = moment_growth_experiment(d, eps, n, 1.0, None, 4000, rng)
                c2 = max(c2, math.log(est.mean) / (n * eps**2 / d))
            for t in sorted({max(1, lim // 4), lim // 2}):
                est = psi_second_moment_experiment(d, eps, t, make_schedule("fixed", d), 200, rng)
                c3 = max(c3, math.log(est.mean) / (t * eps**2 / d))
    print(f"C_MOMENT implied {c2:.3f} -> frozen {c2 / SAFETY:.3f}")
    print(f"C_PSI_SQ implied {c3:.3f} -> frozen {c3 / SAFETY:.3f}")


if __name__ == "__main__":
    main()
