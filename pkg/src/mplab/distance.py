"""Kolmogorov distances to the Marchenko-Pastur law and the smoothing bound.

The smoothing bound controls ``sup_x |F(x) - G~(x)|`` for a distribution
``F`` through Stieltjes transforms:

    2 * int |S_F - S_G~|(u + iV) du + C1 v + C2 eps**1.5
      + 2 * sup_{|x| in J'_eps} int_{v/sqrt(gamma(x))}^{V} |S_F - S_G~|(x + iu) du

The horizontal integral is computed on ``[-U, U]`` and the rest is bounded
analytically from the second and fourth moments of both laws (both must be
symmetric). The supremum is taken over a uniform grid of ``x`` values.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import EpsilonTooLarge, InadmissibleConfig, QuadratureNotConverged
from .mp_law import MPParams, RateScale, cdf_values, gamma, stieltjes_sym, sym_cdf_values
from .spectral import StepDistribution, empirical_stieltjes, esd, singular_values_from_eigs, sym_esd

H_DEFAULT = 1.0 + math.sqrt(2.0)


def smoothing_constants(law: MPParams, H: float = H_DEFAULT) -> tuple[float, float]:
    if law.y == 1.0:
        return H * H / math.pi, 1.0 / math.pi
    root = math.sqrt(law.y * (1.0 - law.sqrt_y))
    return 2.0 * H * H * math.sqrt(3.0) / (math.pi**2 * root), 4.0 / (math.pi * root)


@dataclass(frozen=True)
class SmoothingConfig:
    y: float
    v: float
    epsilon: float
    V_top: float
    C1: float
    C2: float
    H: float = H_DEFAULT
    u_max: float = 8.0
    u_grid: int = 512
    quad_tol: float = 1e-8
    regime: str = "custom"

    @property
    def tau(self) -> float:
        return 2.0 / math.pi * math.atan(self.H)

    @property
    def admissible(self) -> bool:
        # epsilon is usually defined by inverting the constraint, so allow rounding
        return 2.0 * self.v * self.H <= self.epsilon**1.5 * (1.0 + 1e-12)

    @classmethod
    def from_window(cls, law: MPParams, v: float, u_max: float, regime: str, **kw) -> SmoothingConfig:
        eps = (2.0 * H_DEFAULT * v) ** (2.0 / 3.0)
        if eps >= law.sqrt_y / 2.0:
            raise EpsilonTooLarge(
                f"eps = (2Hv)^(2/3) = {eps:.4g} is not below sqrt(y)/2 = {law.sqrt_y / 2:.4g} (v = {v:.4g})"
            )
        C1, C2 = smoothing_constants(law)
        return cls(law.y, v, eps, 4.0 * law.sqrt_y, C1, C2, u_max=u_max, regime=regime, **kw)


def default_config(law: MPParams, scale: RateScale, d: float = 32.0, **kw) -> SmoothingConfig:
    """Window at the theoretical height ``v0 = d y beta^4 / n``."""
    v0 = d * law.y * scale.beta**4 / scale.n
    return SmoothingConfig.from_window(law, v0, max(8.0, 2.0 * scale.n), "asymptotic", **kw)


def desk_config(law: MPParams, n: int, v: float | None = None, **kw) -> SmoothingConfig:
    """Window at height ``v = 1/n`` (or as given), for sizes where ``v0`` is
    far outside the admissible range."""
    v = 1.0 / n if v is None else v
    return SmoothingConfig.from_window(law, v, max(8.0, 2.0 * n), "desk", **kw)


@dataclass
class SmoothingTerms:
    horizontal_integral: float
    vertical_sup_integral: float
    C1v: float
    C2eps32: float
    tail_bound: float
    quad_error: float
    sup_grid_points: int

    @property
    def total(self) -> float:
        return (
            2.0 * (self.horizontal_integral + self.tail_bound)
            + self.C1v + self.C2eps32
            + 2.0 * self.vertical_sup_integral
            + self.quad_error
        )


@dataclass(frozen=True)
class Moments:
    """Second and fourth moments and a support radius of a symmetric law."""

    m2: float
    m4: float
    radius: float

    @classmethod
    def of_law(cls, law: MPParams) -> Moments:
        return cls(law.sym_second_moment, law.sym_fourth_moment, law.hi)

    @classmethod
    def of_spectrum(cls, singular_values) -> Moments:
        s = np.asarray(singular_values, dtype=float)
        return cls(float(np.mean(s**2)), float(np.mean(s**4)), float(np.max(s)))


def horizontal_tail_bound(mf: Moments, mg: Moments, U: float) -> float:
    """Bound on ``int_{|u| > U} |S_F - S_G|(u + iV) du`` for symmetric laws.

    From ``1/(x-z) = -1/z - x/z^2 - x^2/z^3 - x^3/z^4 + x^4/(z^4 (x - z))``
    the odd terms cancel and ``|x - z| >= |u| - L`` on the supports.
    """
    L = max(mf.radius, mg.radius)
    if U <= L:
        raise InadmissibleConfig("u_max must exceed the support radius")
    return abs(mf.m2 - mg.m2) / U**2 + 2.0 * (mf.m4 + mg.m4) / (3.0 * U**3 * (U - L))


def _quad(f, a, b, tol):
    val, err, *rest = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=400, full_output=1)
    if err > tol:
        raise QuadratureNotConverged(f"quad error {err:.3g} exceeds {tol:.3g} on [{a}, {b}]")
    return val, err


def smoothing_bound(
    m_eval: Callable,
    law: MPParams,
    cfg: SmoothingConfig,
    moments: Moments | None = None,
) -> SmoothingTerms:
    """Evaluate the smoothing bound for a symmetric distribution ``F``.

    ``m_eval`` maps complex arrays to ``S_F``; ``moments`` describes ``F``
    (defaults to the law's own moments, right when ``F`` equals the law).
    """
    if not cfg.admissible:
        raise InadmissibleConfig(f"2vH = {2 * cfg.v * cfg.H:.4g} > eps^1.5 = {cfg.epsilon**1.5:.4g}")
    mg = Moments.of_law(law)
    mf = mg if moments is None else moments
    V, U, tol = cfg.V_top, cfg.u_max, cfg.quad_tol

    def horiz(u):
        z = complex(u, V)
        return abs(complex(m_eval(z)) - stieltjes_sym(law, z))

    cuts = [c for c in (-U, -32.0, -4.0, -law.hi, 0.0, law.hi, 4.0, 32.0, U) if -U <= c <= U]
    cuts = sorted(set(cuts))
    h_val = 0.0
    h_err = 0.0
    piece_tol = tol / (2 * len(cuts))
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, err = _quad(horiz, a, b, piece_tol)
        h_val += val
        h_err += err
    tail = horizontal_tail_bound(mf, mg, U)

    lo, hi = law.lo + cfg.epsilon / 2.0, law.hi - cfg.epsilon / 2.0
    # both laws are symmetric, so |S_F - S_G| takes equal values at x and -x
    xs = np.linspace(lo, hi, cfg.u_grid)
    vprime = cfg.v / np.sqrt(gamma(law, xs))
    if np.any(vprime >= V):
        raise InadmissibleConfig("v / sqrt(gamma) reaches V on the grid")
    span = np.log(V / vprime)

    def vert(t):
        u = vprime * np.exp(t * span)
        z = xs + 1j * u
        return np.abs(m_eval(z) - stieltjes_sym(law, z)) * u * span

    v_vals, v_err, info = integrate.quad_vec(vert, 0.0, 1.0, epsabs=tol, epsrel=0.0, norm="max", full_output=True)
    if v_err > tol or not info.success:
        raise QuadratureNotConverged(f"vertical quadrature error {v_err:.3g} exceeds {tol:.3g}")
    C1v = cfg.C1 * cfg.v
    C2e = cfg.C2 * cfg.epsilon**1.5
    return SmoothingTerms(
        horizontal_integral=h_val,
        vertical_sup_integral=float(np.max(v_vals)),
        C1v=C1v,
        C2eps32=C2e,
        tail_bound=tail,
        quad_error=2.0 * h_err + 2.0 * float(v_err),
        sup_grid_points=xs.size,
    )


# ----------------------------------------------------------------------------
# Exact Kolmogorov distance
# ----------------------------------------------------------------------------

def kolmogorov(step: StepDistribution, cdf: Callable) -> float:
    """Exact ``sup_x |F(x) - G(x)|`` for a step ``F`` and continuous ``G``.

    Between atoms ``F`` is constant and ``G`` monotone, so the sup is attained
    at an atom, either at the value or at the left limit of ``F``.
    """
    G = np.asarray(cdf(step.atoms), dtype=float)
    right = np.abs(step.cdf(step.atoms) - G)
    left = np.abs(step.cdf_left(step.atoms) - G)
    return float(max(right.max(), left.max()))


def kolmogorov_plain(eigenvalues, law: MPParams) -> float:
    return kolmogorov(esd(eigenvalues), lambda x: cdf_values(law, x))


def kolmogorov_sym(singular_values, law: MPParams) -> float:
    s = np.asarray(singular_values, dtype=float)
    return kolmogorov(sym_esd(s, s.size), lambda x: sym_cdf_values(law, x))


def g_n_threshold(law: MPParams, scale: RateScale, v: float, x: float) -> float:
    """Diagnostic size of ``|g_n|`` at ``x + iv``:
    ``32 beta^4 (1 + sqrt(y) + c0) / (n v) + 32 beta^4 / (n^2 v^2 sqrt(gamma + v))``."""
    c0 = 0.0 if law.y == 1.0 else math.sqrt((1.0 + law.sqrt_y) / (1.0 - law.sqrt_y))
    b4 = scale.beta**4
    n = scale.n
    g = max(gamma(law, x), 0.0)
    return 32.0 * b4 * (1.0 + law.sqrt_y + c0) / (n * v) + 32.0 * b4 / (n * n * v * v * math.sqrt(g + v))


@dataclass
class DistanceReport:
    kolmogorov_plain: float
    kolmogorov_sym: float
    smoothing_bound: float | None = None
    terms: SmoothingTerms | None = None
    config: SmoothingConfig | None = None

    def to_dict(self) -> dict:
        return {
            "kolmogorov_plain": self.kolmogorov_plain,
            "kolmogorov_sym": self.kolmogorov_sym,
            "smoothing_bound": self.smoothing_bound,
            "terms": None if self.terms is None else asdict(self.terms),
            "config": None if self.config is None else asdict(self.config),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def choose_config(law: MPParams, scale: RateScale, d: float = 32.0) -> SmoothingConfig:
    """``default_config`` when admissible, otherwise ``desk_config``."""
    try:
        return default_config(law, scale, d)
    except EpsilonTooLarge:
        return desk_config(law, scale.n)


def distance_report(
    eigenvalues,
    law: MPParams,
    cfg: SmoothingConfig | None = None,
    smoothing: bool = True,
) -> DistanceReport:
    """Plain and symmetrized Kolmogorov distances of the spectrum of ``W``,
    plus the smoothing bound when ``smoothing`` is set."""
    lam = np.asarray(eigenvalues, dtype=float)
    s = singular_values_from_eigs(lam)
    rep = DistanceReport(kolmogorov_plain(lam, law), kolmogorov_sym(s, law))
    if smoothing:
        cfg = desk_config(law, lam.size) if cfg is None else cfg
        terms = smoothing_bound(lambda z: empirical_stieltjes(s, z), law, cfg, Moments.of_spectrum(s))
        rep.smoothing_bound = terms.total
        rep.terms = terms
        rep.config = cfg
    return rep
