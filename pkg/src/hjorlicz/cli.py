"""Command-line frontend: one JSON config per run, reports plus figures out.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 resource limit.  --threads is accepted for symmetry with batch launchers but
never affects values; all sampling is counter-based and partition invariant.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .concentration import (
    DEFAULT_C_GRID,
    CrucialLemmaParams,
    EmpiricalProcessSpec,
    bennett_rhs,
    bernstein_rhs,
    calibrate_c,
    crucial_lemma_check,
    empirical_process_tail,
    poisson_check,
)
from .counterexample import build_counterexample
from .distributions import Family, FiniteDist, InvalidParameterError, ResourceError, make_three_point
from .hjcheck import check_hj
from .lab import lemma_suite, make_series_spec, ratio_sweep, schedule_ratio_sweep, series_experiment
from .norms import norm_exact, norm_mc
from .orlicz import ExpPower, HeavyTailLog, OrliczError, PowerLaw, from_record, validate
from .plots import plot_report
from .reports import Report

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

MC_COMMANDS = {"tails", "calibrate", "crucial-check", "verify-lemmas"}

_COMMAND_KEYS = {
    "norm": {"psi", "values", "probs", "value", "mode", "n_samples", "n_members", "seed"},
    "check-hj": {"psi", "s_grid", "u_grid"},
    "counterexample": {"phi", "n_max"},
    "ratio-sweep": {"psi", "u_grid", "n_grid", "mode", "n_samples", "schedule_phi", "schedule_depth", "seed"},
    "series": {"phi", "n_max", "k_max"},
    "tails": {"psi", "process", "n_samples", "t_grid", "seed"},
    "calibrate": {"psi", "process", "n_samples", "t_grid", "bounds", "c_grid", "seed"},
    "verify-lemmas": {"psis", "cases", "seed"},
    "crucial-check": {"psi", "family", "q", "k", "u", "u_prime", "n_samples", "seed"},
    "poisson-check": {"psi", "u_grid", "s_grid", "n_grid"},
}

_PROCESS_KEYS = {"base_probs", "class_values", "n_members", "symmetric"}
_FAMILY_KEYS = {"kind", "u", "n_members", "values", "probs"}


class ConfigError(ValueError):
    pass


def _no_duplicates(pairs):
    seen = set()
    for k, _ in pairs:
        if k in seen:
            raise ConfigError(f"duplicate key {k!r} in config")
        seen.add(k)
    return dict(pairs)


def parse_config(text, command):
    """Parse and validate the JSON run config for one subcommand."""
    try:
        cfg = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    allowed = _COMMAND_KEYS[command]
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    return cfg


def _load_psi(cfg, key="psi"):
    rec = cfg.get(key)
    if rec is None:
        raise ConfigError(f"config needs an Orlicz function under {key!r}")
    try:
        fn = from_record(rec)
    except OrliczError as exc:
        raise ConfigError(str(exc)) from exc
    rep = validate(fn)
    if not rep.passed:
        raise ConfigError(f"Orlicz axioms fail for {fn.label()}: {rep.first_violation}")
    return fn


def _load_family(cfg, fn):
    spec = cfg.get("family")
    if not isinstance(spec, dict):
        raise ConfigError("config needs a 'family' object")
    unknown = set(spec) - _FAMILY_KEYS
    if unknown:
        raise ConfigError(f"unknown family keys: {sorted(unknown)}")
    n = int(spec.get("n_members", 1))
    kind = spec.get("kind", "atoms")
    if kind == "three_point":
        return Family.iid(make_three_point(fn, float(spec["u"]), n), n)
    if kind == "atoms":
        d = FiniteDist.from_probs(spec["values"], spec["probs"])
        return Family.iid(d, n)
    raise ConfigError(f"unknown family kind {kind!r}")


def _require_seed(seed, command):
    if seed is None:
        raise ConfigError(f"{command} draws samples; --seed is mandatory")
    return int(seed)


# ---------------------------------------------------------------------------
# Subcommand runners; each returns (report, exit_code)


def _run_norm(cfg, seed):
    fn = _load_psi(cfg)
    if "value" in cfg:
        dist = FiniteDist.point_mass(float(cfg["value"]))
    else:
        dist = FiniteDist.from_probs(cfg["values"], cfg["probs"])
    mode = cfg.get("mode", "exact")
    rep = Report("norm", ("norm", "ci_low", "ci_high", "n_samples"), psi_hash=fn.spec_hash(), seed=seed)
    if mode == "exact":
        est = norm_exact(fn, dist)
    elif mode == "monte-carlo":
        seed = _require_seed(seed, "norm --mode monte-carlo")
        fam = Family.iid(dist, int(cfg.get("n_members", 1)))
        est = norm_mc(fn, fam, "sum", int(cfg.get("n_samples", 20_000)), seed)
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    rep.method = est.method
    rep.add_row(norm=est.value, ci_low=est.ci_low, ci_high=est.ci_high, n_samples=est.n_samples)
    return rep, EXIT_OK


def _run_check_hj(cfg, seed):
    fn = _load_psi(cfg)
    s_grid = np.asarray(cfg["s_grid"], dtype=float) if "s_grid" in cfg else None
    u_grid = np.asarray(cfg["u_grid"], dtype=float) if "u_grid" in cfg else None
    res = check_hj(fn, s_grid, u_grid)
    rep = Report("check-hj", ("s", "u", "ratio"), psi_hash=fn.spec_hash(), seed=seed)
    for s, u, r in res.grid:
        rep.add_row(s=s, u=u, ratio=r)
    rep.meta = {
        "verdict": res.verdict,
        "grid_K": res.grid_K,
        "trend": res.trend,
        "sub_checks": res.sub_checks,
    }
    return rep, EXIT_OK


def _run_counterexample(cfg, seed):
    phi = _load_psi(cfg, "phi")
    res = build_counterexample(phi, int(cfg.get("n_max", 4)))
    rep = Report("counterexample", ("k", "u_k", "log_margin"), psi_hash=phi.spec_hash(), seed=seed)
    for k in range(2, res.depth + 1):
        rep.add_row(k=k, u_k=res.breakpoints[k - 1], log_margin=res.margins[k])
    rep.meta = {
        "depth": res.depth,
        "requested_depth": res.requested_depth,
        "complete": res.complete,
        "psi": res.psi.to_record(),
    }
    return rep, EXIT_OK


def _run_ratio_sweep(cfg, seed):
    columns = ("u", "N", "sum_norm", "l1", "max_norm", "ratio", "log_a_low")
    if "schedule_phi" in cfg:
        phi = _load_psi(cfg, "schedule_phi")
        res = build_counterexample(phi, int(cfg.get("schedule_depth", 6)))
        report = schedule_ratio_sweep(res.psi, res.schedule())
        psi_hash = res.psi.spec_hash()
    else:
        fn = _load_psi(cfg)
        mode = cfg.get("mode", "exact")
        if mode == "monte-carlo":
            seed = _require_seed(seed, "ratio-sweep --mode monte-carlo")
        report = ratio_sweep(
            fn, cfg["u_grid"], cfg["n_grid"], mode=mode, n_samples=int(cfg.get("n_samples", 20_000)), seed=seed
        )
        psi_hash = fn.spec_hash()
    rep = Report("ratio-sweep", columns, psi_hash=psi_hash, seed=seed)
    rep.method = report.metadata.get("mode", "exact")
    for c in report.cells:
        rep.add_row(
            u=c.u, N=c.n_members, sum_norm=c.sum_norm, l1=c.l1, max_norm=c.max_norm,
            ratio=c.ratio, log_a_low=c.log_a_low,
        )
    rep.meta = {"empirical_D": report.empirical_D}
    return rep, EXIT_OK


def _run_series(cfg, seed):
    phi = _load_psi(cfg, "phi")
    res = build_counterexample(phi, int(cfg.get("n_max", 9)))
    spec = make_series_spec(res.psi, res.breakpoints[1:], int(cfg.get("k_max", 4)))
    out = series_experiment(res.psi, spec)
    rep = Report(
        "series", ("k", "u_k", "N_k", "sum_norm_lower", "block_max_norm"),
        psi_hash=res.psi.spec_hash(), seed=seed, method="lower-bound",
    )
    for k, u, n, lower, bmax in out.rows:
        rep.add_row(k=k, u_k=u, N_k=n, sum_norm_lower=lower, block_max_norm=bmax)
    rep.meta = {
        "sup_norm_upper": out.sup_norm_upper,
        "diverging": out.verdict_diverging,
        "truncated_at": out.truncated_at,
    }
    return rep, EXIT_OK


def _load_process(cfg):
    spec = cfg.get("process")
    if not isinstance(spec, dict):
        raise ConfigError("config needs a 'process' object")
    unknown = set(spec) - _PROCESS_KEYS
    if unknown:
        raise ConfigError(f"unknown process keys: {sorted(unknown)}")
    return EmpiricalProcessSpec(
        np.asarray(spec["base_probs"], dtype=float),
        np.asarray(spec["class_values"], dtype=float),
        int(spec["n_members"]),
        bool(spec.get("symmetric", False)),
    )


def _run_tails(cfg, seed, with_bounds=False):
    fn = _load_psi(cfg)
    proc = _load_process(cfg)
    seed = _require_seed(seed, "tails")
    t_grid = np.asarray(cfg["t_grid"], dtype=float) if "t_grid" in cfg else None
    stats, curve = empirical_process_tail(proc, fn, int(cfg.get("n_samples", 100_000)), seed, t_grid=t_grid)
    columns = ["t", "survival", "ci_low", "ci_high"]
    meta = {"U": stats.U, "Sigma2": stats.Sigma2, "ES": stats.ES}
    code = EXIT_OK
    bound_cols = {}
    if with_bounds:
        c_grid = cfg.get("c_grid", list(DEFAULT_C_GRID))
        for bound in cfg.get("bounds", ["bennett", "bernstein"]):
            c = calibrate_c(curve, bound, stats, fn, c_grid)
            meta[f"c_{bound}"] = c
            if c is None:
                code = EXIT_VERIFICATION
            else:
                evals = {
                    "bennett": lambda t: bennett_rhs(t, stats.U, stats.Sigma2, c, fn).raw,
                    "bernstein": lambda t: bernstein_rhs(t, stats.U, stats.Sigma2, c, fn).raw,
                }[bound]
                bound_cols[bound] = [evals(t) for t in curve.t_grid]
                columns.append(bound)
    rep = Report("calibrate" if with_bounds else "tails", tuple(columns),
                 psi_hash=fn.spec_hash(), seed=seed, method=stats.method)
    for i, t in enumerate(curve.t_grid):
        row = {
            "t": float(t),
            "survival": float(curve.survival[i]),
            "ci_low": float(curve.ci_low[i]),
            "ci_high": float(curve.ci_high[i]),
        }
        for bound, vals in bound_cols.items():
            row[bound] = vals[i]
        rep.add_row(**row)
    rep.meta = meta
    return rep, code


def _default_lemma_psis():
    return [ExpPower(1.0), ExpPower(0.5), PowerLaw(2.0), HeavyTailLog(2.0)]


def _run_verify_lemmas(cfg, seed):
    seed = _require_seed(seed, "verify-lemmas")
    fns = [_validate_or_raise(from_record(r)) for r in cfg["psis"]] if "psis" in cfg else _default_lemma_psis()
    out = lemma_suite(fns, seed, int(cfg.get("cases", 1000)))
    rep = Report("verify-lemmas", ("lemma", "case", "lhs", "rhs"), seed=seed)
    for lemma, case, lhs, rhs in out.violations:
        rep.add_row(lemma=lemma, case=case, lhs=lhs, rhs=rhs)
    rep.meta = {"cases": out.cases, "checks": out.checks, "violations": len(out.violations)}
    return rep, EXIT_OK if out.passed else EXIT_VERIFICATION


def _validate_or_raise(fn):
    rep = validate(fn)
    if not rep.passed:
        raise ConfigError(f"Orlicz axioms fail for {fn.label()}: {rep.first_violation}")
    return fn


def _run_crucial_check(cfg, seed):
    fn = _load_psi(cfg) if "psi" in cfg else ExpPower(1.0)
    fam = _load_family(cfg, fn)
    params = CrucialLemmaParams(int(cfg["q"]), int(cfg["k"]), float(cfg["u"]), float(cfg["u_prime"]))
    res = crucial_lemma_check(fam, params, n=int(cfg.get("n_samples", 100_000)), seed=seed)
    rep = Report(
        "crucial-check", ("lhs", "rhs", "M", "top_k_tail", "stderr", "passed"),
        psi_hash=fn.spec_hash(), seed=seed, method=res.method,
    )
    rep.add_row(lhs=res.lhs, rhs=res.rhs, M=res.M, top_k_tail=res.top_k_tail,
                stderr=res.stderr, passed=res.passed)
    rep.meta = {"q": params.q, "k": params.k, "u": params.u, "u_prime": params.u_prime}
    return rep, EXIT_OK if res.passed else EXIT_VERIFICATION


def _run_poisson_check(cfg, seed):
    fn = _load_psi(cfg)
    out = poisson_check(fn, cfg["u_grid"], cfg["s_grid"], cfg["n_grid"])
    rep = Report(
        "poisson-check", ("s", "u", "N", "log_binomial_tail", "log_poisson_tail", "fitted_C"),
        psi_hash=fn.spec_hash(), seed=seed,
    )
    for s, u, n, lb, lp, c in out.rows:
        rep.add_row(s=s, u=u, N=n, log_binomial_tail=lb, log_poisson_tail=lp, fitted_C=c)
    rep.meta = {
        "fitted_C": out.fitted_C,
        "tail_dominance_ok": out.tail_dominance_ok,
        "discrepancy_by_N": out.discrepancy_by_N,
    }
    return rep, EXIT_OK if out.tail_dominance_ok else EXIT_VERIFICATION


_RUNNERS = {
    "norm": _run_norm,
    "check-hj": _run_check_hj,
    "counterexample": _run_counterexample,
    "ratio-sweep": _run_ratio_sweep,
    "series": _run_series,
    "tails": lambda cfg, seed: _run_tails(cfg, seed, with_bounds=False),
    "calibrate": lambda cfg, seed: _run_tails(cfg, seed, with_bounds=True),
    "verify-lemmas": _run_verify_lemmas,
    "crucial-check": _run_crucial_check,
    "poisson-check": _run_poisson_check,
}


def build_parser():
    p = argparse.ArgumentParser(prog="hjorlicz", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1, help="accepted; never affects values")
    return p


def run(command, cfg, out_dir, fmt, seed):
    """Execute one subcommand and write the report plus its figure."""
    report, code = _RUNNERS[command](cfg, seed)
    out_path = report.write(out_dir, fmt)
    fig_path = Path(out_dir) / f"{report.command}.png"
    plot_report(report, fig_path)
    return report, code, out_path, fig_path


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(text, args.command)
        seed = args.seed if args.seed is not None else cfg.get("seed")
        report, code, out_path, fig_path = run(args.command, cfg, args.out, args.format, seed)
    except (ConfigError, OrliczError, InvalidParameterError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    summary = {k: v for k, v in report.meta.items() if not isinstance(v, (dict, list))}
    print(f"{args.command}: wrote {out_path} and {fig_path} ({len(report.rows)} rows) {summary}")
    return code


if __name__ == "__main__":
    sys.exit(main())
