"""Command-line surface: verify, render, implode.

Exit codes are a stable contract: 0 success, 1 scientific failure or
an inconclusive scene, 2 usage/config errors.  All artifact filenames
embed the eps value and a grid-hash prefix, so reruns with the same
config overwrite byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config, parse_config
from .errors import ConfigError, ImplabError, InconclusiveScene, NotRegular
from .fatou import convergence_rows_to_csv
from .julia import boundary_slice, render_K_slice, report_summary, \
    witnesses_to_csv, write_ppm
from .lavaurs import estimates_to_csv
from . import suite


def _eps_tag(eps: complex) -> str:
    return f"{eps.real!r}_{eps.imag!r}"


def _print_result(res) -> None:
    mark = "PASS" if res.passed else "FAIL"
    print(f"criterion {res.criterion} {mark} ({res.elapsed:.2f} s): "
          f"{res.name}: {res.details}")


def _cmd_verify(rc, out: Path, threads) -> int:
    suite.warm_up(rc.map)
    v = rc.verify
    results = [
        suite.criterion1_functional_equation(rc.map, rc.regions,
                                             points=v.fatou_points,
                                             phi_tol=v.phi_tol),
        suite.criterion2_almost_fatou(ladder=v.incoming_ladder,
                                      phi_tol=v.phi_tol),
        suite.criterion3_lavaurs_1d(rc.map, alpha=rc.lavaurs.alpha,
                                    ladder=v.lavaurs_ladder),
        suite.criterion4_lavaurs_2d(rc.map, rc.regions,
                                    alpha=rc.lavaurs.alpha,
                                    ladder=v.lavaurs_ladder),
        suite.criterion5_orbit_estimates(rc.map,
                                         eps_denominators=v.eps_denominators,
                                         n_points=v.estimate_points),
        suite.criterion6_telescoping(),
        suite.criterion7_entry_exit(rc.map,
                                    eps_denominators=v.eps_denominators,
                                    n_points=v.estimate_points),
        suite.criterion9_determinism(rc.map),
    ]
    for res in results:
        _print_result(res)
        if res.criterion == 2:
            (out / "almost_fatou_convergence.csv").write_text(
                convergence_rows_to_csv(res.data))
        elif res.criterion == 4:
            estimates, residuals = res.data
            (out / "lavaurs_estimates.csv").write_text(
                estimates_to_csv(estimates, residuals))
        elif res.criterion == 5:
            res.data.to_csv(out / "orbit_estimates.csv")
    lines = [f"{r.criterion},{r.name},{'pass' if r.passed else 'fail'},"
             f"{r.details}" for r in results]
    (out / "verify_summary.csv").write_text(
        "criterion,name,status,details\n" + "\n".join(lines) + "\n")
    return 0 if all(r.passed for r in results) else 1


def _cmd_render(rc, out: Path, threads, eps: complex) -> int:
    try:
        raster = render_K_slice(rc.map, eps, rc.grid, threads)
    except NotRegular as exc:
        print(f"invalid slice: {exc}", file=sys.stderr)
        return 2
    boundary = boundary_slice(raster)
    stem = f"K_eps_{_eps_tag(eps)}_{rc.grid.grid_hash[:12]}"
    write_ppm(out / f"{stem}.ppm", raster, boundary=boundary)
    write_ppm(out / f"{stem}_boundary.ppm", boundary)
    print(f"wrote {stem}.ppm ({int(raster.bounded.sum())} bounded pixels) "
          f"and {stem}_boundary.ppm")
    return 0


def _cmd_implode(rc, out: Path, threads) -> int:
    res = suite.criterion8_discontinuity(
        rc.map, rc.regions, base=rc.implode.base, target=rc.implode.target,
        n_list=rc.implode.n_list, band=tuple(rc.implode.band),
        m_max=rc.implode.m_max, grid=rc.grid, threads=threads)
    report = res.data
    h = rc.grid.grid_hash[:12]
    write_ppm(out / f"K_base_{h}.ppm", report.base,
              boundary=boundary_slice(report.base))
    for raster, eps in zip(report.per_eps, report.seq.eps_list):
        write_ppm(out / f"K_eps_{_eps_tag(eps)}_{h}.ppm", raster)
    (out / "witnesses.csv").write_text(witnesses_to_csv(report))
    (out / "implode_summary.txt").write_text(report_summary(report))
    _print_result(res)
    return 0 if res.passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="implab",
        description="escape-time and transfer-map experiments for a "
                    "perturbed tangent-to-identity family of C^2")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (("verify", "run the property suite"),
                       ("render", "rasterize a filled slice"),
                       ("implode", "run the discontinuity scene")):
        sp = sub.add_parser(name, help=desc)
        sp.add_argument("--config", default=None,
                        help="INI config (omit for the shipped scenario)")
        sp.add_argument("--out", default=None,
                        help="output directory (default from [run])")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default IMPLAB_THREADS or all)")
        if name == "render":
            sp.add_argument("--eps", nargs=2, type=float, default=None,
                            metavar=("RE", "IM"),
                            help="perturbation parameter (default 0 0)")
    args = parser.parse_args(argv)
    try:
        rc = load_config(args.config) if args.config else parse_config("")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    threads = args.threads if args.threads is not None else rc.threads
    out = Path(args.out) if args.out else Path(rc.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output dir {out}: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "verify":
            return _cmd_verify(rc, out, threads)
        if args.command == "render":
            eps = complex(args.eps[0], args.eps[1]) if args.eps else 0j
            return _cmd_render(rc, out, threads, eps)
        return _cmd_implode(rc, out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InconclusiveScene as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 1
    except ImplabError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
