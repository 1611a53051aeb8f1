"""Batch command-line front-end; the only module with I/O.

Modes:
  sample    dump exact draws of M, one CSV/JSON row per draw
  estimate  budgeted density estimation at the given points
  grid      density surface over a rectangle in two coordinates
  kde       plug-in KDE baseline at the given points
  oracle    CDF Monte Carlo and finite-difference density at the points

Exit codes: 2 for configuration errors, 3 for numerical errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from .errors import ConfigError, MaxStableError
from .gaussian import CovarianceSpec, build_design
from .inference import kde_report, run_budget, sample_max_stable
from .oracle import cdf_mc, density_fd
from .streams import make_stream


def _parse_reals(text: str) -> list[float]:
    out = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(float(Fraction(tok)) if "/" in tok else float(tok))
    return out


def _parse_cov(text: str, mu: str | None) -> CovarianceSpec:
    mean = _parse_reals(mu) if mu else None
    if text.startswith("brownian:"):
        return CovarianceSpec.brownian(_parse_reals(text[len("brownian:"):]),
                                       mean=mean)
    if text.startswith("matrix:"):
        path = text[len("matrix:"):]
        try:
            matrix = np.loadtxt(path, ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read matrix file {path}: {exc}") from exc
        return CovarianceSpec.explicit(matrix, mean=mean)
    raise ConfigError("--cov must be brownian:t1,t2,... or matrix:PATH")


def _parse_points(text: str, d: int) -> np.ndarray:
    if text.startswith("@"):
        rows = []
        with open(text[1:]) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(_parse_reals(line.replace(" ", ",")))
        pts = np.asarray(rows, dtype=np.float64)
    else:
        pts = np.asarray([_parse_reals(p) for p in text.split(";") if p.strip()],
                         dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ConfigError(f"points must have {d} coordinates each")
    return pts


def _grid_points(rect: str, fixed: str | None, d: int) -> np.ndarray:
    vals = rect.split(",")
    if len(vals) != 6:
        raise ConfigError("--grid-rect must be x1lo,x1hi,n1,x2lo,x2hi,n2")
    lo1, hi1, n1, lo2, hi2, n2 = (float(vals[0]), float(vals[1]), int(vals[2]),
                                  float(vals[3]), float(vals[4]), int(vals[5]))
    rest = _parse_reals(fixed) if fixed else [0.0] * (d - 2)
    if len(rest) != d - 2:
        raise ConfigError(f"--grid-fixed must give {d - 2} values")
    g1 = np.linspace(lo1, hi1, n1)
    g2 = np.linspace(lo2, hi2, n2)
    pts = np.empty((n1 * n2, d))
    k = 0
    for x1 in g1:
        for x2 in g2:
            pts[k, 0] = x1
            pts[k, 1] = x2
            pts[k, 2:] = rest
            k += 1
    return pts


def _write_rows(path: str | None, fmt: str, header: list[str], rows):
    rows = [[repr(float(v)) if isinstance(v, float) else v for v in row]
            for row in rows]
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        if fmt == "csv":
            writer = csv.writer(out)
            writer.writerow(header)
            writer.writerows(rows)
        else:
            json.dump([dict(zip(header, row)) for row in rows], out, indent=1)
            out.write("\n")
    finally:
        if path:
            out.close()


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxstable", description=__doc__)
    p.add_argument("--mode", required=True,
                   choices=["sample", "estimate", "grid", "kde", "oracle"])
    p.add_argument("--cov", required=True,
                   help="brownian:t1,t2,... or matrix:PATH")
    p.add_argument("--mu", help="per-location drift values")
    p.add_argument("--points", help="inline x1,..,xd;y1,..,yd or @file")
    p.add_argument("--grid-rect", help="x1lo,x1hi,n1,x2lo,x2hi,n2")
    p.add_argument("--grid-fixed", help="values of the remaining coordinates")
    p.add_argument("--budget", type=float, default=10 ** 5)
    p.add_argument("--budget-unit", choices=["draws", "elementary"],
                   default="draws")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a", type=float, default=0.5, help="record exponent")
    p.add_argument("--gamma", type=float, default=0.5, help="walk drift")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--output", help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--fd-step", type=float, default=0.2,
                   help="finite-difference step for oracle mode")
    return p


def _run_sample(args, design):
    n = int(args.budget)
    samples = sample_max_stable(design, n, args.seed, a=args.a,
                                gamma=args.gamma, workers=args.threads)
    header = (["draw_id", "N", "N_A", "N_X", "N_a", "cost"]
              + [f"M_{i + 1}" for i in range(design.d)])
    rows = [[i, s.n, s.n_walk, s.n_x, s.n_a, s.cost] + [float(v) for v in s.m]
            for i, s in enumerate(samples)]
    _write_rows(args.output, args.format, header, rows)


def _run_estimate(args, design, pts):
    reports = run_budget(pts, design, args.budget, args.alpha, args.seed,
                         a=args.a, gamma=args.gamma,
                         budget_unit=args.budget_unit, workers=args.threads)
    header = ([f"x{i + 1}" for i in range(design.d)]
              + ["f_hat", "s_hat", "ci_lo", "ci_hi", "b", "b_count", "rel_err"])
    rows = []
    for r in reports:
        rel = (r.ci_hi - r.ci_lo) / (2.0 * r.f_hat) if r.f_hat != 0.0 else float("nan")
        rows.append(list(r.point) + [r.f_hat, r.s_hat, r.ci_lo, r.ci_hi,
                                     r.b, r.b_count, float(f"{rel:.2f}")])
    _write_rows(args.output, args.format, header, rows)


def _run_grid(args, design):
    if not args.grid_rect:
        raise ConfigError("grid mode requires --grid-rect")
    pts = _grid_points(args.grid_rect, args.grid_fixed, design.d)
    reports = run_budget(pts, design, args.budget, args.alpha, args.seed,
                         a=args.a, gamma=args.gamma,
                         budget_unit=args.budget_unit, workers=args.threads)
    rows = [[r.point[0], r.point[1], r.f_hat] for r in reports]
    _write_rows(args.output, args.format, ["x1", "x2", "f_hat"], rows)


def _run_kde(args, design, pts):
    samples = sample_max_stable(design, int(args.budget), args.seed,
                                a=args.a, gamma=args.gamma,
                                workers=args.threads)
    m = np.array([s.m for s in samples])
    header = ([f"x{i + 1}" for i in range(design.d)]
              + ["f_kde", "ci_lo", "ci_hi", "b"])
    rows = []
    for pt in pts:
        value, lo, hi = kde_report(m, pt, alpha=args.alpha)
        rows.append(list(map(float, pt)) + [value, lo, hi, int(args.budget)])
    _write_rows(args.output, args.format, header, rows)


def _run_oracle(args, design, pts):
    n = int(args.budget)
    header = ([f"x{i + 1}" for i in range(design.d)]
              + ["cdf", "cdf_se", "density_fd", "density_fd_se"])
    rows = []
    for i, pt in enumerate(pts):
        cdf = cdf_mc(pt, design, n, make_stream(args.seed, 2 * i))
        fd = density_fd(pt, design, args.fd_step, n,
                        make_stream(args.seed, 2 * i + 1))
        rows.append(list(map(float, pt))
                    + [cdf.value, cdf.std_err, fd.value, fd.std_err])
    _write_rows(args.output, args.format, header, rows)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        design = build_design(_parse_cov(args.cov, args.mu))
        if args.mode in ("estimate", "grid", "kde") and design.d < 3:
            raise ConfigError(f"density modes need d >= 3, got d = {design.d}")
        pts = None
        if args.mode in ("estimate", "kde", "oracle"):
            if not args.points:
                raise ConfigError(f"{args.mode} mode requires --points")
            pts = _parse_points(args.points, design.d)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, MaxStableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.mode == "sample":
            _run_sample(args, design)
        elif args.mode == "estimate":
            _run_estimate(args, design, pts)
        elif args.mode == "grid":
            _run_grid(args, design)
        elif args.mode == "kde":
            _run_kde(args, design, pts)
        else:
            _run_oracle(args, design, pts)
    except MaxStableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
