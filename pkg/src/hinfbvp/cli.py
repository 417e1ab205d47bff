"""Command-line front end.

    hinfbvp <command> --config PATH [--out DIR] [--seed N] [--threads N]

Commands: resolvent, sector-scan, hinfty, decay-probe, parametrix-report,
hilbert-probe, and ``run --probe NAME`` (or every name listed in
``[probe] name``). Exit codes: 0 ok, 2 config error, 3 numerical
precondition failure, 4 probe instability.
"""
import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import ConfigError, HinfError, InstabilityError

SECTOR_HEADER = ["theta", "mu", "lambda_re", "lambda_im", "norm_est"]
HINFTY_HEADER = ["family_member", "eps", "sup_norm", "ratio"]


def _num(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "nan" if np.isnan(v) else repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else _num(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(r[h]) for h in header])


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def _engine(cfg, grid=None):
    from .resolvent import ResolventEngine
    return ResolventEngine(cfg.operator_spec(), cfg.boundary_spec(), grid or cfg.grid(),
                           cfg.get("grid", "mode"))


def _rng(cfg):
    return np.random.default_rng(cfg.get("probe", "seed"))


# -- commands ---------------------------------------------------------------


def cmd_resolvent(cfg, out):
    from . import oracle
    from .grid import read_field, write_field
    from .resolvent import SpectralPoint
    src = cfg.get("probe", "input")
    if src is None:
        raise ConfigError(f"{cfg.source}: resolvent needs [probe] input = <field file>")
    try:
        f = read_field(src)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{cfg.source}: cannot read input field: {exc}") from exc
    lam = cfg.get("probe", "lambda")
    eng = _engine(cfg, f.grid)
    u = eng.apply(SpectralPoint.from_lambda(lam), f)
    write_field(out / "solution.bin", u)
    report = {"lambda": lam, "input_norm": f.norm(), "output_norm": u.norm(),
              "boundary_residual_max": float(np.max(np.abs(eng.boundary_residual(u)), initial=0.0)),
              "mode": eng.mode, "approximate": bool(eng.approximate)}
    try:
        op = oracle.assemble(eng.spec, eng.bspec, f.grid)
    except NotImplementedError:
        report["fd_defect"] = None
    else:
        r = oracle.apply_operator(op, u) - lam * u.values - f.values
        inner = np.s_[:, 1:-1]
        den = np.linalg.norm(f.values[inner])
        report["fd_defect"] = float(np.linalg.norm(r[inner]) / den) if den else 0.0
    write_json(out / "resolvent_report.json", report)
    return report


def cmd_sector_scan(cfg, out):
    from .resolvent import sector_scan, trend_slope, variation
    cfg.require_seed("sector-scan")
    eng = _engine(cfg)
    thetas, mus = cfg.get("probe", "thetas"), cfg.get("probe", "mus")
    rows = sector_scan(eng, thetas, mus, cfg.get("probe", "trials"), _rng(cfg),
                       power_iters=cfg.get("probe", "power_iters"))
    write_csv(out / "sector_scan.csv", SECTOR_HEADER, rows)
    summary = {}
    for th in thetas:
        sel = [r for r in rows if r["theta"] == th]
        if len(sel) >= 2:
            m = [r["mu"] for r in sel]
            v = [r["norm_est"] for r in sel]
            summary[_num(th)] = {"variation": variation(v), "slope": trend_slope(m, v),
                                 "max": max(v)}
    write_json(out / "sector_scan_summary.json", summary)
    return summary


def cmd_hinfty(cfg, out):
    from .calculus import bound_probe, hstar_family
    cfg.require_seed("hinfty")
    q = cfg.contour()
    count = cfg.get("probe", "family_count")
    family = [f for e in cfg.get("probe", "eps") for f in hstar_family(e, count, q.theta_p)] \
        if count > 0 else []
    if not family:
        write_csv(out / "hinfty.csv", HINFTY_HEADER, [])
        write_json(out / "hinfty_summary.json", {"C_est": None, "refinement_delta": None,
                                                  "members": 0})
        return {}
    eng = _engine(cfg)
    try:
        res = bound_probe(family, q, eng, trials=cfg.get("probe", "trials"), rng=_rng(cfg))
    except InstabilityError as exc:
        write_json(out / "hinfty_summary.json", {"error": str(exc), **exc.diagnostics})
        raise
    write_csv(out / "hinfty.csv", HINFTY_HEADER, res.rows)
    by_eps = {}
    for r in res.rows:
        by_eps[_num(r["eps"])] = max(by_eps.get(_num(r["eps"]), 0.0), r["ratio"])
    vals = list(by_eps.values())
    summary = {**res.summary(), "C_by_eps": by_eps, "theta_contour": q.theta_p,
               "nodes": q.N, "eps_spread": max(vals) / min(vals) if min(vals) > 0 else None}
    write_json(out / "hinfty_summary.json", summary)
    return summary


def cmd_decay_probe(cfg, out):
    from .resolvent import decay_probe
    spec, bspec = cfg.operator_spec(), cfg.boundary_spec()
    rows, slopes = [], {}
    for comp in cfg.get("probe", "components"):
        for th in cfg.get("probe", "thetas"):
            try:
                r = decay_probe(comp, spec, bspec, th, cfg.get("probe", "mus"),
                                cfg.get("probe", "boundary_norm"))
            except ValueError as exc:
                raise ConfigError(f"{cfg.source}: decay probe: {exc}") from exc
            slopes.setdefault(comp, {})[_num(th)] = r["slope"]
            rows += [{"component": comp, "theta": th, "mu": m, "norm": n}
                     for m, n in zip(r["mu"], r["norm"])]
    from .resolvent import EXPECTED_DECAY
    write_csv(out / "decay.csv", ["component", "theta", "mu", "norm"], rows)
    summary = {"slopes": slopes, "expected": {c: EXPECTED_DECAY[c] for c in slopes},
               "boundary_norm": cfg.get("probe", "boundary_norm")}
    write_json(out / "decay_summary.json", summary)
    return summary


def cmd_parametrix_report(cfg, out):
    from .degenerate import (order_gain, parametrix_sigma, sigma_symbol, symbol_shell_sups,
                             verify_hypoellipticity)
    from .roots import kappa_symbol
    from .symbols import SymbolLattice, fit_shell_slope
    spec, bspec = cfg.operator_spec(), cfg.boundary_spec()
    theta = cfg.get("probe", "thetas")[0]
    pi = kappa_symbol(spec, theta, "plus", principal_only=True, period=bspec.period)
    sigma = sigma_symbol(bspec, pi)
    period = bspec.period or 2 * np.pi
    xs = np.linspace(0.0, period, 64, endpoint=False)
    lat = SymbolLattice(xs, J=cfg.get("probe", "lattice_J"))
    rep = verify_hypoellipticity(sigma, bspec, lat, 3, pi=pi)
    report = json.loads(rep.to_json())
    if bspec.dirichlet:
        report.update({"s_slope": None, "order_gain": float("-inf"), "residual_slope": None})
    else:
        s = parametrix_sigma(sigma, cfg.get("probe", "parametrix_N"), R=rep.radius_R,
                             lattice=lat, report=rep)
        report["s_slope"] = fit_shell_slope(*symbol_shell_sups(s, lat, 2 * s.R))
        report["order_gain"] = order_gain(s, bspec, lat)
        report["residual_slope"] = s.residual_slope(lat)
    report["theta"] = theta
    write_json(out / "parametrix_report.json", report)
    return report


def cmd_hilbert_probe(cfg, out):
    from .grid import gaussian_field
    from .resolvent import hilbert_bound_probe
    eng = _engine(cfg)
    u = gaussian_field(eng.grid)
    theta = cfg.get("probe", "thetas")[0]
    res = hilbert_bound_probe(eng, u, cfg.get("probe", "mu_max"), theta=theta)
    rows = [{"mu_max": m, "norm": n, "ratio": r, "coarse_ratio": c}
            for m, n, r, c in zip(res.mu_max, res.norms, res.ratios, res.coarse_ratios)]
    write_csv(out / "hilbert.csv", ["mu_max", "norm", "ratio", "coarse_ratio"], rows)
    summary = {"theta": theta,
               "last_change": res.last_change if len(res.ratios) > 1 else None}
    write_json(out / "hilbert_summary.json", summary)
    return summary


COMMANDS = {
    "resolvent": cmd_resolvent,
    "sector-scan": cmd_sector_scan,
    "hinfty": cmd_hinfty,
    "decay-probe": cmd_decay_probe,
    "parametrix-report": cmd_parametrix_report,
    "hilbert-probe": cmd_hilbert_probe,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration file")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--seed", type=int, help="overrides [probe] seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker count; results do not depend on it")
    common.add_argument("--probe", help="probe to run (for 'run')")
    p = argparse.ArgumentParser(prog="hinfbvp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["run"]:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = cfgmod.load(args.config)
        if args.seed is not None:
            cfg.set("probe", "seed", args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "run":
            names = [args.probe] if args.probe else cfg.get("probe", "name")
            if not names:
                raise ConfigError(f"{cfg.source}: nothing to run; pass --probe or set [probe] name")
        else:
            names = [args.command]
        unknown = [n for n in names if n not in COMMANDS]
        if unknown:
            raise ConfigError(f"unknown probe(s): {', '.join(unknown)}")
        for n in names:
            cfg.require_seed(n)
        for n in names:
            COMMANDS[n](cfg, out)
    except HinfError as exc:
        print(f"hinfbvp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
