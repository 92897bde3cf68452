"""Command-line entry point: ``elastoutm {solve,zeros,compare,appendix,oracle}``.

Exit codes: 0 success, 1 usage or configuration error, 2 success with a
tolerance flag (results written), 3 internal or numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, ElastoError, RootSearchIncomplete, ToleranceNotMet

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_INTERNAL = 0, 1, 2, 3


def _outdir(cfg: RunConfig, args):
    out = args.out or cfg.output
    os.makedirs(out, exist_ok=True)
    return out


def _write_invocation(out, cfg: RunConfig, command, extra=None):
    meta = {"command": command, "version": __version__, "config": cfg.to_dict()}
    if extra:
        meta.update(extra)
    with open(os.path.join(out, f"{command}_run.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)


# ---------------------------------------------------------------------- commands

def cmd_solve(cfg: RunConfig, args) -> int:
    from .solver import evaluate_grid
    problem = cfg.problem_spec()
    quad = cfg.quad_config()
    xs, ys, ts = cfg.nodes("x"), cfg.nodes("y"), cfg.nodes("t")
    sigma0 = cfg.problem.forcing.sigma0
    grid = evaluate_grid(problem, xs, ys, ts, quad, mode=cfg.eval.mode, sigma0=sigma0)
    out = _outdir(cfg, args)
    path = os.path.join(out, "solve.csv")
    grid.to_csv(path)
    _write_invocation(out, cfg, "solve", {"converged": grid.meta.get("converged", True)})
    flagged = not grid.meta.get("converged", True)
    print(f"wrote {path} ({len(ts)}x{len(ys)}x{len(xs)} nodes)" + (" [TOLERANCE NOT MET]" if flagged else ""))
    return EXIT_TOLERANCE if flagged else EXIT_OK


def zeros_report(params) -> list:
    from .laplace import rayleigh_zeros
    from .spectral import delta_zeros, rationalized_zeros
    lines = [f"lambda = {params.lam:g}, mu = {params.mu:g}, mu/lambda = {params.mu / params.lam:.6g}"
             if params.lam != 0 else f"lambda = 0, mu = {params.mu:g}"]
    for j in (1, 2):
        zs = delta_zeros(j, params)
        lines.append(f"Delta_{j} zeros on the cut plane (l/|k|): "
                     + ", ".join(_fmt(a) for a in zs.ratios))
        roots = rationalized_zeros(j, params)
        lines.append(f"Delta_{j} rationalised zeros (both sheets):")
        for r in roots:
            tag = "principal" if r.principal else "other sheet"
            lines.append(f"  {_fmt(r.ratio):>24}  [{tag}]")
    lines.append("Rayleigh report:")
    lines += ["  " + s for s in rayleigh_zeros(params).lines()]
    return lines


def _fmt(z):
    z = complex(z)
    if abs(z.real) < 5e-13:
        return f"{z.imag:+.4f}i"
    if abs(z.imag) < 5e-13:
        return f"{z.real:+.4f}"
    return f"{z.real:+.4f}{z.imag:+.4f}i"


def cmd_zeros(cfg: RunConfig, args) -> int:
    from .spectral import MaterialParams
    lam = args.lam if args.lam is not None else cfg.material.lam
    mu = args.mu if args.mu is not None else cfg.material.mu
    try:
        params = MaterialParams(float(lam), float(mu))
    except ValueError as exc:
        print(f"error: invalid material: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if params.lam <= 0:
        print("error: lambda must be positive for the mu/lambda classification", file=sys.stderr)
        return EXIT_CONFIG
    try:
        lines = zeros_report(params)
    except RootSearchIncomplete as exc:
        print(f"error: root search incomplete: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print("\n".join(lines))
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, args) -> int:
    from .fdtd import run
    fc = cfg.fdtd_config()
    grid = run(fc, cfg.forcing(), cfg.initial(), cfg.nodes("x"), cfg.nodes("y"), cfg.nodes("t"),
               convergence=cfg.oracle.convergence)
    out = _outdir(cfg, args)
    path = os.path.join(out, "oracle.csv")
    grid.to_csv(path)
    _write_invocation(out, cfg, "oracle", {"meta": grid.meta})
    print(f"wrote {path}")
    return EXIT_OK


def compare_grids(main, oracle, threshold):
    from .fdtd import relative_l2
    rows = []
    for i, t in enumerate(main.t):
        rows.append((float(t), relative_l2(main, oracle, i)))
    overall = relative_l2(main, oracle)
    return rows, overall, all(d < threshold for _, d in rows)


def cmd_compare(cfg: RunConfig, args) -> int:
    from .fdtd import run
    from .solver import evaluate_grid
    xs, ys, ts = cfg.nodes("x"), cfg.nodes("y"), cfg.nodes("t")
    t0 = time.time()
    main = evaluate_grid(cfg.problem_spec(), xs, ys, ts, cfg.quad_config())
    t1 = time.time()
    oracle = run(cfg.fdtd_config(), cfg.forcing(), cfg.initial(), xs, ys, ts)
    t2 = time.time()
    rows, overall, ok = compare_grids(main, oracle, cfg.compare.threshold)
    out = _outdir(cfg, args)
    main.to_csv(os.path.join(out, "compare_main.csv"))
    oracle.to_csv(os.path.join(out, "compare_oracle.csv"))
    lines = [f"main path {t1 - t0:.1f}s, FDTD {t2 - t1:.1f}s (h={cfg.oracle.h:g})"]
    lines += [f"t = {t:g}: relative L2 difference {d:.4%}" for t, d in rows]
    lines.append(f"overall relative L2 difference {overall:.4%}; threshold {cfg.compare.threshold:.2%}: "
                 + ("PASS" if ok else "FAIL"))
    with open(os.path.join(out, "compare_report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_invocation(out, cfg, "compare", {"pass": ok, "per_time": rows, "overall": overall})
    print("\n".join(lines))
    if not main.meta.get("converged", True):
        return EXIT_TOLERANCE
    return EXIT_OK if ok else EXIT_TOLERANCE


def appendix_traces(params, forcing, initial, k, t, n_inv=64, trace_y=0.0, quad=None):
    """(volterra, laplace, main-path-or-None) boundary traces for one k."""
    from .laplace import laplace_trace, main_path_trace, solve_volterra
    a = solve_volterra(params, forcing, initial, k, t)
    if initial.is_zero:
        b = laplace_trace(params, forcing, k, t, n_inv)
        c = main_path_trace(params, forcing, k, t, y=trace_y, quad=quad)
    else:
        b = None  # the initial-data term needs Re p beyond the contour bound; not inverted here
        c = None
    return a, b, c


def _rel(a, b):
    num = np.linalg.norm(np.concatenate([a.u - b.u, a.v - b.v]))
    den = np.linalg.norm(np.concatenate([b.u, b.v]))
    return float(num / den) if den > 0 else float(num)


def cmd_appendix(cfg: RunConfig, args) -> int:
    from .solver import QuadConfig
    params = cfg.material_params()
    forcing, initial = cfg.forcing(), cfg.initial()
    t = cfg.nodes("appendix")
    out = _outdir(cfg, args)
    lines = ["k, volterra-vs-laplace, volterra-vs-mainpath, laplace-vs-mainpath (relative L2)"]
    quad = QuadConfig(**{**cfg.quad_config().__dict__, "y_min": 0.0})
    for k in cfg.appendix.k_list:
        a, b, c = appendix_traces(params, forcing, initial, float(k), t, cfg.appendix.inversion_nodes,
                                  cfg.appendix.trace_y, quad)
        a.to_csv(os.path.join(out, f"trace_volterra_k{k:g}.csv"))
        if b is None:
            lines.append(f"{k:g}, n/a (initial data: main path and inversion routes not defined here)")
            continue
        b.to_csv(os.path.join(out, f"trace_laplace_k{k:g}.csv"))
        c.to_csv(os.path.join(out, f"trace_mainpath_k{k:g}.csv"))
        lines.append(f"{k:g}, {_rel(a, b):.3e}, {_rel(a, c):.3e}, {_rel(b, c):.3e}")
    with open(os.path.join(out, "appendix_report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_invocation(out, cfg, "appendix")
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "zeros": cmd_zeros, "compare": cmd_compare, "appendix": cmd_appendix,
            "oracle": cmd_oracle}


def build_parser():
    ap = argparse.ArgumentParser(prog="elastoutm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory (overrides config 'output')")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-path override, value parsed as JSON when possible")
        if name == "zeros":
            sp.add_argument("--lambda", dest="lam", type=float)
            sp.add_argument("--mu", dest="mu", type=float)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToleranceNotMet as exc:
        print(f"tolerance not met: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except ElastoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())


def main_exit():
    sys.exit(main())
