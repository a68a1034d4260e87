"""Command line interface: ``mplab {law,sample,distance,deloc,sweep,verify}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import mp_law as L
from .deloc import deloc_stats
from .distance import choose_config, distance_report
from .ensembles import EntryDistribution, MatrixShape, sample_matrix, split_seed
from .errors import MPLabError
from .harness import MEASURES, ExperimentConfig, emit, load_config, rate_path, run_sweep
from .spectral import eigen_sym, sample_covariance, write_spectrum_csv
from .verify import run_all

DEFAULTS = {
    "y": 0.5,
    "n": 256,
    "n_list": "128,256,512,1024",
    "dist": "gaussian",
    "kappa": 2.0,
    "alpha": 1.0,
    "d": 32.0,
    "trials": 20,
    "seed": 0,
    "trial": 0,
    "out": None,
    "format": "csv",
    "workers": 1,
    "tol": 1e-14,
    "measure": "distance",
}

CASTS = {
    "y": float, "n": int, "kappa": float, "alpha": float, "d": float, "trials": int,
    "seed": int, "trial": int, "workers": int, "tol": float,
}


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _complexes(text: str) -> list[complex]:
    return [complex(t.replace(" ", "").replace("i", "j")) for t in text.split(",") if t.strip()]


def _common(p: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "y": "aspect ratio n/p in (0, 1]",
        "n": "number of rows",
        "n_list": "comma-separated sizes for a sweep",
        "dist": "gaussian | rademacher | weibull:<kappa>",
        "kappa": "tail exponent in the rate factor beta",
        "alpha": "log-log exponent in the rate factor",
        "d": "constant in v0 = d y beta^4 / n",
        "trials": "trials per size",
        "seed": "master seed (64-bit)",
        "trial": "trial index used to derive the matrix seed",
        "out": "output path",
        "format": "csv or json",
        "workers": "worker processes",
        "tol": "Jacobi convergence tolerance (relative off-diagonal norm)",
        "measure": "comma-separated subset of " + ",".join(MEASURES),
    }
    for name in names:
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, default=None, help=helps[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mplab", description=__doc__)
    parser.add_argument("--config", help="key = value file; command line flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("law", help="evaluate the law and its transforms")
    _common(p, "y", "tol")
    p.add_argument("--x", default="", help="comma-separated real points")
    p.add_argument("--z", default="", help="comma-separated complex points, e.g. 1+0.1j")

    p = sub.add_parser("sample", help="one trial; write the spectrum of W")
    _common(p, "y", "n", "dist", "seed", "trial", "out", "tol")

    p = sub.add_parser("distance", help="Kolmogorov distances and smoothing bound for one trial")
    _common(p, "y", "n", "dist", "seed", "trial", "alpha", "kappa", "d", "out", "tol")
    p.add_argument("--no-smoothing", action="store_true")

    p = sub.add_parser("deloc", help="eigenvector statistics for one trial")
    _common(p, "y", "n", "dist", "seed", "trial", "alpha", "kappa", "d", "out", "tol")

    p = sub.add_parser("sweep", help="Monte Carlo sweep over sizes with a rate fit")
    _common(p, "y", "n_list", "dist", "alpha", "kappa", "d", "trials", "seed", "out", "format", "workers", "tol", "measure")

    p = sub.add_parser("verify", help="run the exact-identity and lemma suites")
    _common(p, "seed")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags."""
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(load_config(args.config))
    for key, value in vars(args).items():
        if value is not None and key in DEFAULTS:
            merged[key] = value
    for key, cast in CASTS.items():
        if merged.get(key) is not None:
            merged[key] = cast(merged[key])
    return merged


def _matrix(opts):
    dist = EntryDistribution.parse(opts["dist"])
    shape = MatrixShape.from_ratio(opts["n"], opts["y"])
    seed = split_seed(opts["seed"], opts["n"], opts["trial"])
    return shape, sample_matrix(dist, shape, seed)


def _write(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_law(opts, args) -> int:
    law = L.MPParams(opts["y"])
    rows = [f"# y={law.y!r} a={law.a!r} b={law.b!r}"]
    xs = _floats(args.x)
    if xs:
        rows.append("x\tdensity\tcdf\tsym_density\tsym_cdf")
        cdfs = L.cdf_values(law, xs)
        for x, c in zip(xs, cdfs):
            rows.append(f"{x!r}\t{L.density(law, x)!r}\t{float(c)!r}\t{L.sym_density(law, x)!r}\t{L.sym_cdf(law, x)!r}")
    zs = _complexes(args.z)
    if zs:
        rows.append("z\tstieltjes_mp\tstieltjes_sym")
        for z in zs:
            rows.append(f"{z!r}\t{L.stieltjes_mp(law, z)!r}\t{L.stieltjes_sym(law, z)!r}")
    print("\n".join(rows))
    return 0


def cmd_sample(opts, args) -> int:
    shape, X = _matrix(opts)
    lam = eigen_sym(sample_covariance(X), tol=opts["tol"], vectors=False).eigenvalues
    write_spectrum_csv(lam, opts["out"] or sys.stdout)
    return 0


def cmd_distance(opts, args) -> int:
    shape, X = _matrix(opts)
    law = L.MPParams(shape.y)
    lam = eigen_sym(sample_covariance(X), tol=opts["tol"], vectors=False).eigenvalues
    cfg = None
    if not args.no_smoothing:
        cfg = choose_config(law, L.RateScale(opts["alpha"], opts["kappa"], shape.n), opts["d"])
    rep = distance_report(lam, law, cfg, smoothing=not args.no_smoothing)
    _write(rep.to_json() + "\n", opts["out"])
    return 0


def cmd_deloc(opts, args) -> int:
    shape, X = _matrix(opts)
    dec = eigen_sym(sample_covariance(X), tol=opts["tol"])
    rep = deloc_stats(dec.vectors, L.RateScale(opts["alpha"], opts["kappa"], shape.n), opts["d"])
    d = rep.to_dict()
    d["v0"] *= shape.y
    _write(json.dumps(d, indent=2, sort_keys=True) + "\n", opts["out"])
    return 0


def cmd_sweep(opts, args) -> int:
    cfg = ExperimentConfig(
        y=opts["y"],
        n_list=tuple(int(t) for t in str(opts["n_list"]).split(",") if t.strip()),
        dist=EntryDistribution.parse(opts["dist"]),
        alpha=opts["alpha"],
        kappa=opts["kappa"],
        d=opts["d"],
        trials=opts["trials"],
        seed0=opts["seed"],
        measure=tuple(t.strip() for t in str(opts["measure"]).split(",") if t.strip()),
        out_path=opts["out"],
        format=opts["format"],
        workers=opts["workers"],
        tol=opts["tol"],
    )
    result = run_sweep(cfg, fit=len(cfg.n_list) >= 2)
    out = cfg.out_path or f"sweep.{cfg.format}"
    emit(result, cfg.format, out)
    failed = sum(r.status != "ok" for r in result.records)
    print(f"wrote {len(result.records)} records to {out} ({failed} failed); medians in {rate_path(out)}")
    if result.fit is not None:
        f = result.fit
        print(f"slope {f.slope:.4f}  intercept {f.intercept:.4f}  r2 {f.r2:.4f}")
    return 0


def cmd_verify(opts, args) -> int:
    checks = run_all(opts["seed"])
    for c in checks:
        print(c.line())
    bad = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(bad)}/{len(checks)} checks passed")
    return 1 if bad else 0


COMMANDS = {
    "law": cmd_law,
    "sample": cmd_sample,
    "distance": cmd_distance,
    "deloc": cmd_deloc,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts, args)
    except (MPLabError, OSError, ValueError) as exc:
        print(f"mplab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
