"""Marchenko-Pastur law, its symmetrization and both Stieltjes transforms.

Conventions
-----------
``y = n/p`` lies in ``(0, 1]``. The MP law lives on ``[a, b]`` with
``a = (1 - sqrt(y))**2`` and ``b = (1 + sqrt(y))**2``. The symmetrized law is
the law of ``+/- sqrt(X)`` with a fair random sign, supported on
``1 - sqrt(y) <= |x| <= 1 + sqrt(y)``.

The CDF is computed by adaptive Gauss-Kronrod quadrature after the change of
variables ``x = 1 + y - 2 sqrt(y) cos(phi)``, which maps ``[a, b]`` onto
``[0, pi]`` and turns the square-root edge behaviour (and, for ``y = 1``, the
``x**-1/2`` pole at the origin) into a smooth integrand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DegenerateQuadratic, DomainError, QuadratureNotConverged

CDF_TOL = 1e-10


@dataclass(frozen=True)
class MPParams:
    y: float

    def __post_init__(self):
        if not (0.0 < self.y <= 1.0) or not math.isfinite(self.y):
            raise DomainError(f"y must lie in (0, 1], got {self.y!r}")

    @property
    def sqrt_y(self) -> float:
        return math.sqrt(self.y)

    @property
    def a(self) -> float:
        return (1.0 - self.sqrt_y) ** 2

    @property
    def b(self) -> float:
        return (1.0 + self.sqrt_y) ** 2

    @property
    def lo(self) -> float:
        """Inner edge of the symmetrized support, ``1 - sqrt(y)``."""
        return 1.0 - self.sqrt_y

    @property
    def hi(self) -> float:
        return 1.0 + self.sqrt_y

    # Moments of the symmetrized law: E x^2 = E_MP[t] = 1, E x^4 = E_MP[t^2] = 1 + y.
    @property
    def sym_second_moment(self) -> float:
        return 1.0

    @property
    def sym_fourth_moment(self) -> float:
        return 1.0 + self.y


@dataclass(frozen=True)
class RateScale:
    """Polylogarithmic rate factors ``ell = ln n (ln ln n)**alpha`` and
    ``beta = ell**(1/kappa + 1/2)``. Natural logarithms throughout."""

    alpha: float
    kappa: float
    n: int

    def __post_init__(self):
        if self.alpha <= 0 or self.kappa <= 0:
            raise DomainError("alpha and kappa must be positive")
        if self.n < 3:
            raise DomainError("n must be at least 3 so that ln ln n > 0")
        if self.n >= 16 and self.beta < 1.0:
            raise DomainError(f"beta={self.beta} < 1 for n={self.n}")

    @property
    def ell(self) -> float:
        ln = math.log(self.n)
        return ln * math.log(ln) ** self.alpha

    @property
    def beta(self) -> float:
        return self.ell ** (1.0 / self.kappa + 0.5)


def gamma(params: MPParams, x):
    """Distance of ``|x|`` to the nearer edge of the symmetrized support."""
    ax = np.abs(np.asarray(x, dtype=float))
    g = np.minimum(ax - params.lo, params.hi - ax)
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class SpectralDomain:
    params: MPParams
    epsilon: float
    v0: float
    d: float = 32.0

    def __post_init__(self):
        if not (0.0 < self.epsilon < self.params.sqrt_y / 2):
            raise DomainError("epsilon must lie in (0, sqrt(y)/2)")
        if self.d < 32:
            raise DomainError("d must be at least 32")

    @classmethod
    def from_scale(cls, params: MPParams, scale: RateScale, epsilon: float, d: float = 32.0):
        return cls(params, epsilon, d * params.y * scale.beta**4 / scale.n, d)

    def gamma(self, x):
        return gamma(self.params, x)

    def v0prime(self, x):
        """``sqrt(y) v0 / sqrt(gamma)``; at least ``v0`` only where ``gamma <= y``."""
        return self.params.sqrt_y * self.v0 / np.sqrt(self.gamma(x))

    def v0prime_alt(self, x):
        """``v0 / sqrt(gamma)``; at least ``v0`` on the whole support."""
        return self.v0 / np.sqrt(self.gamma(x))

    @property
    def j_eps(self) -> tuple[float, float]:
        return self.params.lo + self.epsilon, self.params.hi - self.epsilon

    @property
    def j_eps_half(self) -> tuple[float, float]:
        return self.params.lo + self.epsilon / 2, self.params.hi - self.epsilon / 2


# ----------------------------------------------------------------------------
# Densities and distribution functions
# ----------------------------------------------------------------------------

def density(params: MPParams, x):
    """MP density ``sqrt((x-a)(b-x)) / (2 pi y x)`` on ``[a, b]``, 0 elsewhere.

    For ``y = 1`` the density has an integrable pole at 0 and ``inf`` is
    returned there.
    """
    x = np.asarray(x, dtype=float)
    a, b, y = params.a, params.b, params.y
    inside = (x >= a) & (x <= b) & (x > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sqrt(np.clip((x - a) * (b - x), 0.0, None)) / (2 * math.pi * y * x)
    out = np.where(inside, val, 0.0)
    if a == 0.0:
        out = np.where(x == 0.0, np.inf, out)
    return out if out.ndim else float(out)


def sym_density(params: MPParams, x):
    """Density of the symmetrized law, ``|x| * density(x**2)``; even in ``x``."""
    x = np.abs(np.asarray(x, dtype=float))
    y = params.y
    x2 = x * x
    inside = (x >= params.lo) & (x <= params.hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        if params.a == 0.0:
            val = np.sqrt(np.clip(params.b - x2, 0.0, None)) / (2 * math.pi * y)
        else:
            val = np.sqrt(np.clip((x2 - params.a) * (params.b - x2), 0.0, None)) / (2 * math.pi * y * x)
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def _angle(params: MPParams, x: np.ndarray) -> np.ndarray:
    c = ((1.0 + params.y) - x) / (2.0 * params.sqrt_y)
    return np.arccos(np.clip(c, -1.0, 1.0))


def _angle_integrand(phi: float, y: float, r: float) -> float:
    s = math.sin(0.5 * phi)
    c = math.cos(0.5 * phi)
    if y == 1.0:
        return 2.0 * c * c / math.pi
    return 8.0 * s * s * c * c / (math.pi * ((1.0 - r) ** 2 + 4.0 * r * s * s))


def _quad_angle(params: MPParams, lo: float, hi: float, tol: float) -> tuple[float, float]:
    if hi <= lo:
        return 0.0, 0.0
    val, err, info = integrate.quad(
        _angle_integrand, lo, hi, args=(params.y, params.sqrt_y),
        epsabs=tol, epsrel=0.0, limit=200, full_output=1,
    )[:3]
    if err > tol:
        raise QuadratureNotConverged(f"quad error {err:.3g} exceeds {tol:.3g} on [{lo}, {hi}]")
    return val, err


def cdf(params: MPParams, x: float, tol: float = CDF_TOL) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    if x <= params.a:
        return 0.0
    phi = math.pi if x >= params.b else float(_angle(params, np.array(x)))
    val, _ = _quad_angle(params, 0.0, phi, tol)
    return min(max(val, 0.0), 1.0)


def cdf_values(params: MPParams, xs, tol: float = CDF_TOL) -> np.ndarray:
    """Vectorized ``cdf``: integrates between consecutive sorted points and
    accumulates, so the cost is one short quadrature per distinct point."""
    xs = np.asarray(xs, dtype=float)
    flat = xs.ravel()
    if flat.size == 0:
        return np.zeros_like(xs)
    phis = _angle(params, np.clip(flat, params.a, params.b))
    uniq, inverse = np.unique(phis, return_inverse=True)
    seg_tol = tol / max(1, uniq.size)
    acc = 0.0
    prev = 0.0
    vals = np.empty(uniq.size)
    for i, phi in enumerate(uniq):
        piece, _ = _quad_angle(params, prev, float(phi), seg_tol)
        acc += piece
        vals[i] = acc
        prev = float(phi)
    out = np.clip(vals[inverse], 0.0, 1.0)
    out[flat <= params.a] = 0.0
    return out.reshape(xs.shape)


def total_mass(params: MPParams, tol: float = CDF_TOL) -> float:
    return _quad_angle(params, 0.0, math.pi, tol)[0]


def sym_cdf(params: MPParams, x: float, tol: float = CDF_TOL) -> float:
    x = float(x)
    return 0.5 * (1.0 + math.copysign(1.0, x) * cdf(params, x * x, tol)) if x != 0 else 0.5


def sym_cdf_values(params: MPParams, xs, tol: float = CDF_TOL) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    return 0.5 * (1.0 + np.sign(xs) * cdf_values(params, xs * xs, tol))


def quantile(params: MPParams, q: float) -> float:
    """Inverse of ``cdf`` by bracketing root search."""
    from scipy.optimize import brentq

    if q <= 0:
        return params.a
    if q >= 1:
        return params.b
    return brentq(lambda t: cdf(params, t) - q, params.a, params.b, xtol=1e-14, rtol=1e-15)


# ----------------------------------------------------------------------------
# Stieltjes transforms
# ----------------------------------------------------------------------------

def _stable_roots(A, B, C):
    """Both roots of ``A s^2 + B s + C = 0`` without cancellation."""
    sq = np.sqrt(B * B - 4.0 * A * C)
    sgn = np.where((np.conj(B) * sq).real >= 0.0, 1.0, -1.0)
    q = -0.5 * (B + sgn * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = q / A
        r2 = C / q
    return r1, r2


def _as_complex(z):
    z = np.asarray(z, dtype=complex)
    return z, z.ndim == 0


def stieltjes_mp(params: MPParams, z):
    """Stieltjes transform ``s_y(z) = int dG_y(x) / (x - z)``.

    Solves ``y z s^2 + (y - 1 + z) s + 1 = 0``. In the upper half-plane this
    is the root with positive imaginary part, which is also the root of
    smaller modulus; the modulus rule is used because it stays well defined
    when ``Im z`` underflows. On the support the limit from above is
    returned, and in the lower half-plane the conjugate of the upper value.
    """
    z, scalar = _as_complex(z)
    if np.any(z == 0):
        raise DegenerateQuadratic("z = 0 collapses the leading coefficient")
    y = params.y
    flip = z.imag < 0
    w = np.where(flip, np.conj(z), z)
    A = y * w
    B = y - 1.0 + w
    r1, r2 = _stable_roots(A, B, 1.0 + 0j)
    # Off the support the two roots have |s * s_hat| = 1/(y|w|) and the
    # transform is the smaller one; on the support the moduli tie and the
    # limit from the upper half-plane has Im s >= 0.
    m1, m2 = np.abs(r1), np.abs(r2)
    tie = np.abs(m1 - m2) <= 1e-9 * np.maximum(m1, m2)
    upper = np.where(r1.imag >= r2.imag, r1, r2)
    smaller = np.where(m1 <= m2, r1, r2)
    s = np.where(tie, upper, smaller)
    # one Newton step polishes the residual to rounding level
    f = (A * s + B) * s + 1.0
    df = 2.0 * A * s + B
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(df != 0, f / df, 0.0)
    s = s - step
    s = np.where(flip, np.conj(s), s)
    return complex(s) if scalar else s


def stieltjes_sym(params: MPParams, z):
    """Transform of the symmetrized law, ``S_y(z) = z s_y(z^2)``; satisfies
    ``y S^2 + (z + (y-1)/z) S + 1 = 0``."""
    z, scalar = _as_complex(z)
    S = z * stieltjes_mp(params, z * z)
    return complex(S) if scalar else S


def mp_residual(params: MPParams, z, s):
    y = params.y
    return np.abs(y * z * s * s + (y - 1.0 + z) * s + 1.0)


def sym_residual(params: MPParams, z, S):
    y = params.y
    return np.abs(y * S * S + ((y - 1.0) / z + z) * S + 1.0)


def sym_transform_slack(params: MPParams, z):
    """Slack in ``|S_y| <= 1/sqrt(y)`` and ``|z + (y-1)/z + y S_y| >= sqrt(y)``.

    Both returned arrays are nonnegative when the inequalities hold.
    """
    z = np.asarray(z, dtype=complex)
    S = stieltjes_sym(params, z)
    r = params.sqrt_y
    return 1.0 / r - np.abs(S), np.abs(z + (params.y - 1.0) / z + params.y * S) - r


def branch_diagnostics(params: MPParams, z) -> tuple[float, float]:
    """Return ``Re{(z + (y-1)/z)^2 - 4y}`` (expected <= 0) and the slack
    ``Im sqrt(...) - y**(1/4)/2 * sqrt(gamma + v)`` (expected >= 0), using the
    square root with nonnegative imaginary part.

    Requires ``1 - sqrt(y) <= |Re z| <= 1 + sqrt(y)`` and ``Im z > 0``; the
    point ``Re z = 0`` is therefore admissible only when ``y = 1``.
    """
    z = complex(z)
    u, v = z.real, z.imag
    if v <= 0:
        raise DomainError("Im z must be positive")
    if not (params.lo <= abs(u) <= params.hi):
        raise DomainError(f"|Re z| = {abs(u)} outside [{params.lo}, {params.hi}]")
    y = params.y
    D = (z + (y - 1.0) / z) ** 2 - 4.0 * y
    root = np.sqrt(D)
    if root.imag < 0:
        root = -root
    g = gamma(params, u)
    return D.real, root.imag - 0.5 * y**0.25 * math.sqrt(g + v)


def density_bound_check(params: MPParams, x: float) -> bool:
    """Whether ``sym_density(x) <= 3 sqrt(gamma) / (pi sqrt(y (1 - sqrt y)))``."""
    if params.y == 1.0:
        raise DomainError("the edge bound needs y < 1")
    if not (params.lo <= abs(x) <= params.hi):
        raise DomainError("|x| outside the symmetrized support")
    g = max(gamma(params, x), 0.0)
    bound = 3.0 * math.sqrt(g) / (math.pi * math.sqrt(params.y * (1.0 - params.sqrt_y)))
    return sym_density(params, x) <= bound
