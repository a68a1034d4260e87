"""Monte Carlo trials, sweeps over matrix sizes, rate fitting and output."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .deloc import deloc_stats
from .distance import choose_config, distance_report, g_n_threshold
from .ensembles import EntryDistribution, MatrixShape, sample_matrix, split_seed
from .errors import DomainError, InsufficientData, MPLabError
from .mp_law import MPParams, RateScale
from .spectral import eigen_sym, sample_covariance, self_consistency

log = logging.getLogger(__name__)

MEASURES = ("distance", "smoothing", "deloc", "diagnostics")
DIAGNOSTICS_MAX_N = 128
DIAGNOSTICS_Z = complex(1.0, 0.5)


@dataclass(frozen=True)
class ExperimentConfig:
    y: float = 0.5
    n_list: tuple = (128, 256)
    dist: EntryDistribution = field(default_factory=lambda: EntryDistribution("gaussian"))
    alpha: float = 1.0
    kappa: float = 2.0
    d: float = 32.0
    trials: int = 1
    seed0: int = 0
    measure: tuple = ("distance",)
    out_path: str | None = None
    format: str = "csv"
    workers: int = 1
    tol: float = 1e-14

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(sorted(set(int(n) for n in self.n_list))))
        unknown = set(self.measure) - set(MEASURES)
        if unknown:
            raise DomainError(f"unknown measures {sorted(unknown)}")
        object.__setattr__(self, "measure", tuple(m for m in MEASURES if m in set(self.measure)))
        if not self.n_list:
            raise DomainError("n_list is empty")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if self.format not in ("csv", "json"):
            raise DomainError(f"unknown format {self.format!r}")
        if not (0.0 < self.y <= 1.0):
            raise DomainError("y must lie in (0, 1]")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dist"] = self.dist.label()
        d["n_list"] = list(self.n_list)
        d["measure"] = list(self.measure)
        return d


@dataclass
class TrialRecord:
    n: int
    p: int
    y: float
    trial: int
    seed: int
    dist: str
    status: str = "ok"
    error: str | None = None
    sweeps: int | None = None
    kolmogorov_plain: float | None = None
    kolmogorov_sym: float | None = None
    factor2_residual: float | None = None
    smoothing_regime: str | None = None
    smoothing_v: float | None = None
    smoothing_eps: float | None = None
    smoothing_bound: float | None = None
    horizontal_integral: float | None = None
    vertical_sup_integral: float | None = None
    C1v: float | None = None
    C2eps32: float | None = None
    tail_bound: float | None = None
    quad_error: float | None = None
    bound_holds: bool | None = None
    max_coord_sq: float | None = None
    max_partial_dev: float | None = None
    max_partial_dev_spectral: float | None = None
    threshold_coord: float | None = None
    threshold_partial: float | None = None
    pass_coord: bool | None = None
    pass_partial: bool | None = None
    diagnostics_pass: bool | None = None
    schur_residual: float | None = None
    expansion_residual: float | None = None
    gn_residual: float | None = None
    trace_residual: float | None = None
    eps3_ratio: float | None = None
    delta_n3_ratio: float | None = None
    abs_g_n: float | None = None
    g_n_threshold: float | None = None


CSV_COLUMNS = [f.name for f in fields(TrialRecord)]


def run_trial(cfg: ExperimentConfig, n: int, trial: int, spectrum: list | None = None) -> TrialRecord:
    """One matrix: sample, diagonalize and measure. Errors are recorded in
    the returned record instead of being raised. When ``spectrum`` is a list
    the eigenvalues of ``W`` are appended to it."""
    shape = MatrixShape.from_ratio(n, cfg.y)
    seed = split_seed(cfg.seed0, n, trial)
    rec = TrialRecord(n=n, p=shape.p, y=shape.y, trial=trial, seed=seed, dist=cfg.dist.label())
    try:
        law = MPParams(shape.y)
        scale = RateScale(cfg.alpha, cfg.kappa, n)
        X = sample_matrix(cfg.dist, shape, seed)
        want = "deloc" in cfg.measure
        dec = eigen_sym(sample_covariance(X), tol=cfg.tol, vectors=want)
        rec.sweeps = dec.sweeps
        if spectrum is not None:
            spectrum.extend(dec.eigenvalues.tolist())
        if "distance" in cfg.measure or "smoothing" in cfg.measure:
            smooth = "smoothing" in cfg.measure
            scfg = choose_config(law, scale, cfg.d) if smooth else None
            rep = distance_report(dec.eigenvalues, law, scfg, smoothing=smooth)
            rec.kolmogorov_plain = rep.kolmogorov_plain
            rec.kolmogorov_sym = rep.kolmogorov_sym
            rec.factor2_residual = abs(rep.kolmogorov_plain - 2.0 * rep.kolmogorov_sym)
            if smooth:
                t = rep.terms
                rec.smoothing_regime = scfg.regime
                rec.smoothing_v = scfg.v
                rec.smoothing_eps = scfg.epsilon
                rec.smoothing_bound = rep.smoothing_bound
                rec.horizontal_integral = t.horizontal_integral
                rec.vertical_sup_integral = t.vertical_sup_integral
                rec.C1v = t.C1v
                rec.C2eps32 = t.C2eps32
                rec.tail_bound = t.tail_bound
                rec.quad_error = t.quad_error
                rec.bound_holds = bool(rep.smoothing_bound >= rep.kolmogorov_sym)
        if want:
            dr = deloc_stats(dec.vectors, scale, cfg.d)
            rec.max_coord_sq = dr.max_coord_sq
            rec.max_partial_dev = dr.max_partial_dev
            rec.max_partial_dev_spectral = dr.max_partial_dev_spectral
            rec.threshold_coord = dr.threshold_coord
            rec.threshold_partial = dr.threshold_partial
            rec.pass_coord = dr.pass_coord
            rec.pass_partial = dr.pass_partial
        if "diagnostics" in cfg.measure and n <= DIAGNOSTICS_MAX_N:
            diag = self_consistency(X, DIAGNOSTICS_Z, law)
            rec.diagnostics_pass = diag.identities_hold(1e-8)
            rec.schur_residual = diag.schur_residual
            rec.expansion_residual = diag.expansion_residual
            rec.gn_residual = diag.gn_residual
            rec.trace_residual = diag.trace_residual
            rec.eps3_ratio = diag.eps3_ratio
            rec.delta_n3_ratio = diag.delta_n3_ratio
            rec.abs_g_n = abs(diag.g_n)
            rec.g_n_threshold = g_n_threshold(law, scale, DIAGNOSTICS_Z.imag, DIAGNOSTICS_Z.real)
    except (MPLabError, ArithmeticError, ValueError) as exc:
        rec.status = "error"
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    points: list  # (log n, log median) pairs

    def to_dict(self) -> dict:
        return asdict(self)


def fit_power_law(ns, values) -> RateFit:
    """Ordinary least squares of ``log value`` on ``log n``."""
    x = np.log(np.asarray(ns, dtype=float))
    yv = np.log(np.asarray(values, dtype=float))
    if x.size < 2 or np.unique(x).size < 2:
        raise InsufficientData("need at least two distinct sizes")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, yv, rcond=None)
    resid = yv - (slope * x + intercept)
    sst = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
    return RateFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0), [(float(a), float(b)) for a, b in zip(x, yv)])


def medians_by_n(records) -> dict:
    groups: dict = {}
    for r in records:
        if r.status == "ok" and r.kolmogorov_plain is not None:
            groups.setdefault(r.n, []).append(r.kolmogorov_plain)
    return {n: float(np.median(v)) for n, v in sorted(groups.items())}


def fit_rate(records) -> RateFit:
    med = medians_by_n(records)
    if len(med) < 2:
        raise InsufficientData(f"only {len(med)} size(s) with successful trials")
    return fit_power_law(list(med), list(med.values()))


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list
    fit: RateFit | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "records": [asdict(r) for r in self.records],
            "medians": {str(k): v for k, v in medians_by_n(self.records).items()},
            "fit": None if self.fit is None else self.fit.to_dict(),
        }


def _work(args):
    cfg, n, t = args
    return run_trial(cfg, n, t)


def run_sweep(cfg: ExperimentConfig, fit: bool = True) -> SweepResult:
    if "diagnostics" in cfg.measure and any(n > DIAGNOSTICS_MAX_N for n in cfg.n_list):
        log.warning("diagnostics skipped for n > %d", DIAGNOSTICS_MAX_N)
    tasks = [(cfg, n, t) for n in cfg.n_list for t in range(cfg.trials)]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_work, tasks))
    else:
        records = [_work(t) for t in tasks]
    records.sort(key=lambda r: (r.n, r.trial))
    result = SweepResult(cfg, records)
    if fit:
        result.fit = fit_rate(records)
    return result


# ----------------------------------------------------------------------------
# Output
# ----------------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([_cell(d[c]) for c in CSV_COLUMNS])


def rate_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + "_rate.tsv")


def write_rate_table(records, path) -> None:
    with open(path, "w") as fh:
        fh.write("n\tmedian_delta\n")
        for n, m in medians_by_n(records).items():
            fh.write(f"{n}\t{m!r}\n")


def emit(result: SweepResult, format: str, path) -> None:
    """Write the sweep as CSV (one row per trial) or JSON (full nested
    result), plus a two-column ``<stem>_rate.tsv`` table of per-size medians."""
    if format == "csv":
        write_csv(result.records, path)
    elif format == "json":
        with open(path, "w") as fh:
            json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise DomainError(f"unknown format {format!r}")
    write_rate_table(result.records, rate_path(path))


def load_config(path) -> dict:
    """Read ``key = value`` lines (``#`` starts a comment)."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DomainError(f"{path}:{lineno}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out
