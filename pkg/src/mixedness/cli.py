"""Command-line harness: certify, sweep, paninski, verify, tails, simulate.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .certifier import NO, YES, copies_needed, test_mixed
from .config import COMMANDS, FORMATS, STATISTIC_CHOICES, ExperimentConfig, UsageError, load_config_file, merge
from .constants import C1, C_DELTA
from .estimates import wilson_interval
from .likelihood import LikelihoodContext, delta_mc, k_batch, psi_mean_mc
from .linalg import haar_unitaries, make_rng, random_unit_vectors, rng_derive
from .moments import (
    STATISTICS,
    expected_g_squared,
    expected_k,
    fluctuation_scaling,
    moment_growth_experiment,
    psi_second_moment_experiment,
    sample_statistic,
    second_moment_mc,
    second_moment_trace,
    tail_experiment,
)
from .paninski import (
    chisq_exact,
    delta_closed_form,
    enumeration_oracle,
    inner_psi_closed_form,
    zt_exact,
)
from .report import ExperimentReport, emit_report
from .states import (
    HardInstance,
    basis_povm,
    load_state,
    make_schedule,
    maximally_mixed,
    pure_state,
    run_schedule,
    standard_basis_povm,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# parallel trials


def run_trials(fn, tasks: list, jobs: int) -> list:
    """Map `fn` over `tasks`, preserving order. Each task carries its own seed,
    so the results do not depend on `jobs`."""
    if jobs <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def _single_d(cfg: ExperimentConfig) -> int:
    if len(cfg.d) != 1:
        raise UsageError(f"{cfg.command} takes a single --d value")
    return cfg.d[0]


def parse_state(spec: str, d: int, eps: float):
    """mixed | hard | pure | file:<path>."""
    if spec == "mixed":
        return maximally_mixed(d)
    if spec == "hard":
        if d % 2:
            raise UsageError("the hard instance needs an even --d")
        return HardInstance(d, eps)
    if spec == "pure":
        return pure_state(np.eye(d)[0])
    if spec.startswith("file:"):
        try:
            rho = load_state(spec[5:])
        except ValueError as exc:
            raise UsageError(f"bad state file: {exc}") from exc
        if rho.d != d:
            raise UsageError(f"state file has dimension {rho.d}, expected {d}")
        return rho
    raise UsageError(f"unknown state {spec!r}; use mixed, hard, pure or file:<path>")


# ---------------------------------------------------------------------------
# certify


def _certify_task(task):
    source, d, eps, seed, n = task
    return test_mixed(source, d, eps, seed, n).to_json()


def cmd_certify(cfg: ExperimentConfig) -> ExperimentReport:
    d = _single_d(cfg)
    source = parse_state(cfg.state, d, cfg.eps)
    n = cfg.n if cfg.n is not None else copies_needed(d, cfg.eps)
    tasks = [(source, d, cfg.eps, rng_derive(cfg.seed, i), n) for i in range(cfg.trials)]
    rows = run_trials(_certify_task, tasks, cfg.jobs)
    yes = sum(r["verdict"] == YES for r in rows)
    no = len(rows) - yes
    summary = {
        "trials": len(rows),
        "N": n,
        "yes_rate": yes / len(rows) if rows else None,
        "no_rate": no / len(rows) if rows else None,
        "yes_wilson95": wilson_interval(yes, len(rows)),
        "no_wilson95": wilson_interval(no, len(rows)),
    }
    return ExperimentReport("certify", cfg.to_json(), ("verdict", "d", "eps", "N", "S", "threshold", "seed"), rows, summary)


# ---------------------------------------------------------------------------
# sweep


def sweep_copies(d: int, eps: float, multiplier: float) -> int:
    return math.ceil(multiplier * C1 * d**1.5 / eps**2)


def _sweep_task(task):
    d, eps, seed, n = task
    null = test_mixed(maximally_mixed(d), d, eps, rng_derive(seed, 0), n).verdict == YES
    hard = test_mixed(HardInstance(d, eps), d, eps, rng_derive(seed, 1), n).verdict == NO
    return null, hard


def cmd_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    if len(cfg.d) < 2:
        raise UsageError("sweep needs at least two --d grid points")
    if any(d % 2 for d in cfg.d):
        raise UsageError("sweep needs even dimensions")
    grid = [(d, m) for d in cfg.d for m in cfg.multipliers]
    tasks, index = [], []
    for g, (d, m) in enumerate(grid):
        cell_seed = rng_derive(cfg.seed, g)
        n = sweep_copies(d, cfg.eps, m)
        for i in range(cfg.trials):
            tasks.append((d, cfg.eps, rng_derive(cell_seed, i), n))
            index.append(g)
    results = run_trials(_sweep_task, tasks, cfg.jobs)
    rows = []
    for g, (d, m) in enumerate(grid):
        cell = [r for r, k in zip(results, index) if k == g]
        t = len(cell)
        yes = sum(r[0] for r in cell) / t if t else None
        no = sum(r[1] for r in cell) / t if t else None
        rows.append({
            "d": d, "eps": cfg.eps, "multiplier": float(m), "N": sweep_copies(d, cfg.eps, m), "trials": t,
            "yes_rate_mixed": yes, "no_rate_hard": no,
            "success_rate": (yes + no) / 2 if t else None,
            "seed": rng_derive(cfg.seed, g),
        })
    plot = {"x": "multiplier", "y": ["success_rate"], "group": "d", "title": "certifier success vs N / (C1 d^1.5 / eps^2)",
            "ylabel": "success rate"}
    header = ("d", "eps", "multiplier", "N", "trials", "yes_rate_mixed", "no_rate_hard", "success_rate", "seed")
    return ExperimentReport("sweep", cfg.to_json(), header, rows, {"C1": C1}, plot=plot)


# ---------------------------------------------------------------------------
# paninski


def cmd_paninski(cfg: ExperimentConfig) -> ExperimentReport:
    d = _single_d(cfg)
    if d % 2:
        raise UsageError("paninski needs an even --d")
    if cfg.eps >= 1:
        raise UsageError("paninski needs --eps < 1")
    n = 4 if cfg.n is None else cfg.n
    try:
        tables = enumeration_oracle(d, cfg.eps, n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows, total, failures = [], 0.0, []
    for t in range(1, n + 1):
        prefix = tables[t - 1]
        z = zt_exact(d, cfg.eps, t)
        total += z
        dev = abs(z - prefix.z_term)
        for i, x in enumerate(prefix.transcripts):
            dev = max(dev, abs(delta_closed_form(x, d, cfg.eps) - prefix.delta[i]),
                      abs(inner_psi_closed_form(x, d, cfg.eps) - prefix.inner_psi[i]))
        chisq = chisq_exact(d, t, cfg.eps)
        dev = max(dev, abs(chisq - tables[t].chisq))
        kl = tables[t].kl
        if kl > total + 1e-12:
            failures.append(f"kl_le_sum_zt[t={t}]")
        rows.append({
            "d": d, "eps": cfg.eps, "t": t, "Zt_exact": z,
            "delta_min_over_transcripts": float(prefix.delta.min()),
            "chisq_exact": chisq, "kl_exact": kl, "sum_Zt": total, "closed_form_max_dev": dev,
        })
    header = ("d", "eps", "t", "Zt_exact", "delta_min_over_transcripts", "chisq_exact", "kl_exact", "sum_Zt", "closed_form_max_dev")
    plot = {"x": "t", "y": ["kl_exact", "sum_Zt", "chisq_exact"], "title": f"exact divergences, d={d}", "ylabel": "nats"}
    report = ExperimentReport("paninski", cfg.to_json(), header, rows, {"failed": failures}, plot=plot)
    if failures:
        report.summary["exit"] = EXIT_CHECK
    return report


# ---------------------------------------------------------------------------
# tails


def cmd_tails(cfg: ExperimentConfig) -> ExperimentReport:
    d = _single_d(cfg)
    stats = STATISTICS if cfg.statistic == "all" else (cfg.statistic,)
    if d % 2:
        raise UsageError("tails needs an even --d")
    rows = []
    for i, stat in enumerate(stats):
        seed = rng_derive(cfg.seed, i)
        curve = tail_experiment(stat, d, cfg.eps, standard_basis_povm(d), cfg.samples, rng=make_rng(seed), seed=seed)
        rows.extend(curve.rows())
    header = ("statistic", "d", "eps", "threshold", "empirical_p", "stderr", "bound_p", "samples", "seed")
    plot = {"x": "threshold", "y": ["empirical_p", "bound_p"], "group": "statistic", "logx": True, "logy": True,
            "title": f"tail curves, d={d}, eps={cfg.eps}", "ylabel": "P(statistic > threshold)"}
    return ExperimentReport("tails", cfg.to_json(), header, rows, plot=plot)


# ---------------------------------------------------------------------------
# verify


def _check(rows, name, d, value, target, stderr, passed, gating=True, note=""):
    rows.append({"check": name, "d": d, "value": float(value), "target": float(target),
                 "stderr": float(stderr), "passed": bool(passed), "gating": gating, "note": note})


def _random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def verify_checks(cfg: ExperimentConfig) -> list[dict]:
    """Every identity and bound check at the configured budgets; one row per check."""
    eps = cfg.eps
    rows: list[dict] = []
    rng = make_rng(rng_derive(cfg.seed, 0))
    mc = max(cfg.samples, 1000)
    for d in cfg.d:
        if d % 2:
            raise UsageError("verify needs even dimensions")
        # E[delta(v)^2] = 1/(d+1)
        vs = random_unit_vectors(mc, d, rng)
        w = np.abs(vs) ** 2
        vals = (w[:, : d // 2].sum(1) - w[:, d // 2:].sum(1)) ** 2
        se = vals.std(ddof=1) / math.sqrt(mc)
        _check(rows, "delta_sq_mean", d, vals.mean(), 1 / (d + 1), se, abs(vals.mean() - 1 / (d + 1)) <= 3 * se)
        # Weingarten second moment, random Hermitian pair
        a, b = _random_hermitian(d, rng), _random_hermitian(d, rng)
        exact_v = second_moment_trace(a, b)
        est = second_moment_mc(a, b, mc, rng)
        _check(rows, "weingarten_random_pair", d, est.mean, exact_v, est.stderr, abs(est.mean - exact_v) <= 3 * est.stderr)
        # E_U[g^2] for a random rank-one M_hat
        v = random_unit_vectors(1, d, rng)[0]
        mhat = np.outer(v, v.conj())
        target = expected_g_squared(mhat, d, eps)
        us = haar_unitaries(mc, d, rng)
        signs = np.concatenate([np.ones(d // 2), -np.ones(d // 2)])
        g = eps * (np.abs(us @ v) ** 2) @ signs
        gs = g**2
        se = gs.std(ddof=1) / math.sqrt(mc)
        _check(rows, "g_squared_closed_form", d, gs.mean(), target, se, abs(gs.mean() - target) <= 3 * se)
        # mean of K: exact value, plus the stated eps^2/(d+1) bound as an informational row
        povm = basis_povm(haar_unitaries(1, d, rng)[0])
        k = np.concatenate([k_batch(povm, haar_unitaries(500, d, rng), haar_unitaries(500, d, rng), eps) for _ in range(max(1, mc // 500))])
        se = k.std(ddof=1) / math.sqrt(len(k))
        ek = expected_k(povm, eps)
        _check(rows, "k_mean_closed_form", d, k.mean(), ek, se, abs(k.mean() - ek) <= 3 * se)
        stated = eps**2 / (d + 1)
        _check(rows, "k_mean_below_eps2_over_d_plus_1", d, k.mean(), stated * 1.05, se, k.mean() <= stated * 1.05,
               gating=False, note="informational: the exact mean is 2 eps^2/(d+1)")
        # Delta^2 vs E[Psi] on a random null transcript
        ctx = LikelihoodContext(d, eps)
        tr = run_schedule(maximally_mixed(d), make_schedule("fresh-haar", d), 6, rng)
        dl = delta_mc(tr, cfg.pairs, rng, ctx)
        ps = psi_mean_mc(tr, cfg.pairs, rng, ctx)
        comb = math.sqrt((2 * dl.mean * dl.stderr) ** 2 + ps.stderr**2)
        _check(rows, "delta_sq_equals_psi_mean", d, dl.mean**2, ps.mean, comb, abs(dl.mean**2 - ps.mean) <= 3 * comb)

    # fixed-dimension checks; at the default --samples 20000 these use 10^4 draws each
    half = max(mc // 2, 1000)
    diag = sample_statistic("diag_norm", 32, eps, None, half, rng)
    p = float(np.mean(diag > 1 + 10 / math.sqrt(32)))
    _check(rows, "diag_norm_tail", 32, p, 0.01, math.sqrt(p * (1 - p) / len(diag)), p <= 0.01)
    phi = sample_statistic("phi", 16, eps, standard_basis_povm(16), half, rng)
    p = float(np.mean(np.abs(phi) > 5 * eps**2 / 16**1.5))
    _check(rows, "phi_tail", 16, p, 0.02, math.sqrt(p * (1 - p) / len(phi)), p <= 0.02)
    # fluctuation slope
    rep = fluctuation_scaling([8, 16, 32, 64], eps, None, half, rng)
    _check(rows, "phi_fluctuation_slope", 0, rep.slope, -1.5, 0.0, -1.7 <= rep.slope <= -1.3)
    # moment growth and Psi second moment
    est = moment_growth_experiment(16, eps, min(64, int(0.1 * 256 / eps**2)), 1.0, None, max(mc // 5, 200), rng)
    _check(rows, "k_moment_growth", 16, est.mean, est.details["bound"], est.stderr, est.mean <= est.details["bound"])
    est = psi_second_moment_experiment(16, eps, min(50, int(0.1 * 256 / eps**2)), make_schedule("fixed", 16), max(mc // 100, 20), rng)
    _check(rows, "psi_second_moment", 16, est.mean, est.details["bound"], est.stderr, est.mean <= est.details["bound"])
    # Delta lower bound
    ctx = LikelihoodContext(4, eps)
    tr = run_schedule(maximally_mixed(4), make_schedule("fixed", 4), 20, rng)
    dl = delta_mc(tr, cfg.pairs, rng, ctx)
    lb = (1 - C_DELTA * eps**2 / 4) ** 19
    _check(rows, "delta_lower_bound", 4, dl.mean, lb, dl.stderr, dl.mean >= lb - 3 * dl.stderr)
    return rows


def cmd_verify(cfg: ExperimentConfig) -> ExperimentReport:
    rows = verify_checks(cfg)
    failed = [f'{r["check"]}[d={r["d"]}]' for r in rows if r["gating"] and not r["passed"]]
    header = ("check", "d", "value", "target", "stderr", "passed", "gating", "note")
    summary = {"failed": failed, "checks": len(rows)}
    if failed:
        summary["exit"] = EXIT_CHECK
    return ExperimentReport("verify", cfg.to_json(), header, rows, summary)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(cfg: ExperimentConfig) -> ExperimentReport:
    d = _single_d(cfg)
    source = parse_state(cfg.state, d, cfg.eps)
    n = 10 if cfg.n is None else cfg.n
    rows = []
    for i in range(cfg.trials):
        rng = make_rng(rng_derive(cfg.seed, i))
        tr = run_schedule(source, make_schedule(cfg.schedule, d), n, rng)
        rows.append({"trial": i, "outcomes": list(tr.outcomes), "povm": cfg.schedule})
    return ExperimentReport("simulate", cfg.to_json(), ("trial", "outcomes", "povm"), rows)


COMMAND_FUNCS = {
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "paninski": cmd_paninski,
    "verify": cmd_verify,
    "tails": cmd_tails,
    "simulate": cmd_simulate,
}

COMMAND_DEFAULTS = {
    "sweep": {"d": [8, 16, 32]},
    "verify": {"d": [8, 16], "samples": 20_000},
    "paninski": {"d": [4]},
    "simulate": {"format": "jsonl", "trials": 10},
}


# ---------------------------------------------------------------------------
# entry point


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from exc


def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixedness", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--d", type=_int_list, help="dimension, or comma-separated grid")
        p.add_argument("--eps", type=float)
        p.add_argument("--n", type=int, help="copies / transcript length override")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--schedule", choices=("fixed", "fresh-haar", "greedy-realign"))
        p.add_argument("--state", help="mixed | hard | pure | file:<path>")
        p.add_argument("--out")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--config", help="JSON file mirroring ExperimentConfig")
        p.add_argument("--jobs", type=int)
        p.add_argument("--outer", type=int)
        p.add_argument("--pairs", type=int)
        p.add_argument("--inner", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--statistic", choices=STATISTIC_CHOICES)
        p.add_argument("--multipliers", type=_float_list)
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    cli = vars(args)
    command = cli.pop("command")
    config_path = cli.pop("config")
    try:
        file_values = dict(COMMAND_DEFAULTS.get(command, {}))
        if config_path:
            file_values.update(load_config_file(config_path))
            file_values.pop("command", None)
        cfg = merge(command, file_values, cli)
        if cfg.format == "svg" and command not in ("sweep", "tails", "paninski"):
            raise UsageError(f"svg output is not available for {command}")
        start = time.perf_counter()
        report = COMMAND_FUNCS[command](cfg)
        report.wall_clock = round(time.perf_counter() - start, 3)
        emit_report(report, cfg.format, cfg.out, stdout)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=stderr)
        return EXIT_IO
    code = report.summary.get("exit", EXIT_OK)
    if code:
        print("failed checks: " + ", ".join(report.summary.get("failed", [])), file=stderr)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
