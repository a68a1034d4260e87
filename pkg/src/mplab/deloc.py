"""Eigenvector delocalization statistics and weighted spectral distributions."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, NotOrthonormal
from .mp_law import RateScale
from .spectral import SpectralDecomposition, StepDistribution


@dataclass
class DelocReport:
    n: int
    max_coord_sq: float
    max_partial_dev: float
    max_partial_dev_spectral: float
    threshold_coord: float
    threshold_partial: float
    pass_coord: bool
    pass_partial: bool
    v0: float
    v0_alt: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_orthonormal(Q: np.ndarray, tol: float = 1e-8) -> None:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise NotOrthonormal(f"expected a square matrix, got shape {Q.shape}")
    I = np.eye(Q.shape[0])
    if np.max(np.abs(Q.T @ Q - I)) > tol or np.max(np.abs(Q @ Q.T - I)) > tol:
        raise NotOrthonormal("columns are not orthonormal within tolerance")


def partial_sum_deviation(Q: np.ndarray, axis: int = 0) -> np.ndarray:
    """``max_k |sum_{l <= k} Q_l^2 - k/n|`` for every line of ``Q``.

    ``axis=0`` accumulates down each column (the coordinates of one
    eigenvector); ``axis=1`` accumulates along each row (one coordinate
    across eigenvectors in ascending eigenvalue order).
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[axis]
    c = np.cumsum(Q * Q, axis=axis)
    k = np.arange(1, n + 1) / n
    k = k[:, None] if axis == 0 else k[None, :]
    return np.max(np.abs(c - k), axis=axis)


def deloc_stats(vectors, scale: RateScale, d: float = 32.0, tol: float = 1e-8) -> DelocReport:
    Q = np.asarray(vectors, dtype=float)
    check_orthonormal(Q, tol)
    n = Q.shape[0]
    coord = float(np.max(Q * Q))
    dev = float(np.max(partial_sum_deviation(Q, axis=0)))
    dev_spectral = float(np.max(partial_sum_deviation(Q, axis=1)))
    beta = scale.beta
    t_coord = beta**4 / n
    t_part = beta**2 / np.sqrt(n)
    return DelocReport(
        n=n,
        max_coord_sq=coord,
        max_partial_dev=dev,
        max_partial_dev_spectral=dev_spectral,
        threshold_coord=float(t_coord),
        threshold_partial=float(t_part),
        pass_coord=bool(coord <= t_coord),
        pass_partial=bool(dev <= t_part),
        v0=float(d * beta**4 / scale.n),  # multiplied by y by the caller when relevant
        v0_alt=float(d * beta / scale.n),
    )


def weighted_esd(decomp: SpectralDecomposition, j: int) -> StepDistribution:
    """Eigenvalues of ``V`` weighted by the squared ``j``-th coordinates of
    the eigenvectors; its Stieltjes transform is ``R_jj``."""
    if not (0 <= j < decomp.size):
        raise DomainError(f"index {j} outside [0, {decomp.size})")
    w = decomp.vectors[j] ** 2
    return StepDistribution.from_points(decomp.eigenvalues, w)


def concentration_Q(step: StepDistribution, lam: float) -> float:
    """``sup_x (F(x + lam) - F(x))``, the largest mass in a window
    ``[a_i, a_i + lam)`` starting at an atom."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    cum = np.concatenate([[0.0], np.cumsum(step.weights)])
    end = np.searchsorted(step.atoms, step.atoms + lam, side="left")
    start = np.arange(step.atoms.size)
    return float(np.max(cum[end] - cum[start]))


def concentration_upper(decomp: SpectralDecomposition, j: int, lam: float, grid=None) -> float:
    """``2 sup_u lam Im R_jj(u + i lam)`` over a grid of ``u``.

    The default grid holds every eigenvalue shifted by ``0`` and ``lam/2``;
    at ``u = a + lam/2`` each atom of ``[a, a + lam)`` contributes at least
    ``0.8`` of its weight, so the grid value already dominates ``Q``.
    """
    lam_k = decomp.eigenvalues
    if grid is None:
        grid = np.concatenate([lam_k, lam_k + lam / 2.0])
    u = np.asarray(grid, dtype=float)
    w = decomp.vectors[j] ** 2
    im = (w * lam / ((lam_k - u[:, None]) ** 2 + lam * lam)).sum(axis=1)
    return float(2.0 * lam * np.max(im))


def step_distance(F: StepDistribution, G: StepDistribution) -> float:
    """Exact ``sup_x |F(x) - G(x)|`` for two step distributions."""
    pts = np.union1d(F.atoms, G.atoms)
    return float(np.max(np.abs(F.cdf(pts) - G.cdf(pts))))
