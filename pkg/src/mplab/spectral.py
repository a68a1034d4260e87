"""Eigendecomposition, spectral distributions, resolvents and minors.

Index conventions are 0-based. For an ``n x p`` data matrix ``X`` the block
matrix ``V = [[0, X], [X^T, 0]] / sqrt(p)`` has rows ``0..n-1`` (upper block)
and ``n..n+p-1`` (lower block). Removing upper row ``j`` shifts the lower
block of the minor to rows ``n-1..n+p-2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._jacobi import jacobi_kernel, stieltjes_sum_kernel
from .errors import DomainError, EmptySpectrum, InvalidShape, NoConvergence
from .mp_law import MPParams, stieltjes_sym

TIE_TOL = 1e-12


@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray | None
    sweeps: int = 0

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def orthogonality_residual(self) -> float:
        Q = self.vectors
        return float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))))

    def reconstruction_residual(self, M: np.ndarray) -> float:
        Q = self.vectors
        return float(np.max(np.abs(M - (Q * self.eigenvalues) @ Q.T)))


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidShape(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] == 0:
        raise EmptySpectrum("empty matrix")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise DomainError("matrix is not symmetric")
    return M


def eigen_sym(M, tol: float = 1e-14, max_sweeps: int = 64, vectors: bool = True) -> SpectralDecomposition:
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Eigenvalues are returned in ascending order (stable sort). Each
    eigenvector is signed so that its largest-magnitude entry (first one on
    ties) is positive.
    """
    M = _check_symmetric(M)
    a = np.ascontiguousarray(0.5 * (M + M.T))
    d, vt, sweeps = jacobi_kernel(a, vectors, float(tol), int(max_sweeps))
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    lam = np.diag(d).copy()
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    if not vectors:
        return SpectralDecomposition(lam, None, sweeps)
    Q = np.ascontiguousarray(vt[order].T)
    lead = np.argmax(np.abs(Q), axis=0)
    signs = np.where(Q[lead, np.arange(Q.shape[1])] < 0, -1.0, 1.0)
    return SpectralDecomposition(lam, Q * signs, sweeps)


# ----------------------------------------------------------------------------
# Step distributions
# ----------------------------------------------------------------------------

@dataclass
class StepDistribution:
    atoms: np.ndarray
    weights: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.atoms.size == 0:
            raise EmptySpectrum("a step distribution needs at least one atom")
        if np.any(np.diff(self.atoms) <= 0):
            raise DomainError("atoms must be strictly increasing")
        self._cum = np.cumsum(self.weights)

    @classmethod
    def from_points(cls, points, weights=None, tie_tol: float = TIE_TOL) -> StepDistribution:
        x = np.asarray(points, dtype=float).ravel()
        if x.size == 0:
            raise EmptySpectrum("no points")
        w = np.full(x.size, 1.0 / x.size) if weights is None else np.asarray(weights, dtype=float).ravel()
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        new_group = np.empty(x.size, dtype=bool)
        new_group[0] = True
        new_group[1:] = np.diff(x) > tie_tol * np.maximum(1.0, np.abs(x[1:]))
        gid = np.cumsum(new_group) - 1
        atoms = x[new_group]
        merged = np.bincount(gid, weights=w)
        keep = merged != 0
        return cls(atoms[keep], merged[keep])

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1])

    def cdf(self, x):
        """Right-continuous CDF ``F(x) = mass of atoms <= x``."""
        idx = np.searchsorted(self.atoms, x, side="right")
        out = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        return out if np.ndim(out) else float(out)

    def cdf_left(self, x):
        """Left limit ``F(x-) = mass of atoms < x``."""
        idx = np.searchsorted(self.atoms, x, side="left")
        out = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        return out if np.ndim(out) else float(out)

    def stieltjes(self, z):
        z = np.asarray(z, dtype=complex)
        out = (self.weights / (self.atoms - z[..., None])).sum(axis=-1)
        return complex(out) if out.ndim == 0 else out


def esd(eigenvalues) -> StepDistribution:
    return StepDistribution.from_points(eigenvalues)


def sym_esd(singular_values, n: int) -> StepDistribution:
    s = np.asarray(singular_values, dtype=float).ravel()
    if s.size == 0:
        raise EmptySpectrum("no singular values")
    if s.size != n:
        raise DomainError(f"expected {n} singular values, got {s.size}")
    if np.any(s < 0):
        raise DomainError("singular values must be nonnegative")
    pts = np.concatenate([-s, s])
    return StepDistribution.from_points(pts, np.full(2 * n, 0.5 / n))


def singular_values_from_eigs(eigenvalues) -> np.ndarray:
    return np.sqrt(np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None))


# ----------------------------------------------------------------------------
# Matrices built from X
# ----------------------------------------------------------------------------

def sample_covariance(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidShape("X must be a 2-d array with p >= 1")
    W = X @ X.T / X.shape[1]
    return 0.5 * (W + W.T)


def symmetrize_block(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    V = np.zeros((n + p, n + p))
    A = X / np.sqrt(p)
    V[:n, n:] = A
    V[n:, :n] = A.T
    return V


def empirical_stieltjes(singular_values, z):
    """``m_n(z) = (z/n) sum_k 1/(s_k^2 - z^2)``; vectorized over ``z``."""
    s2 = np.ascontiguousarray(np.asarray(singular_values, dtype=float) ** 2)
    z = np.asarray(z, dtype=complex)
    out = stieltjes_sum_kernel(s2, np.ascontiguousarray(z.ravel())).reshape(z.shape)
    return complex(out) if out.ndim == 0 else out


def delta_n3(singular_values, z: complex) -> complex:
    s2 = np.asarray(singular_values, dtype=float) ** 2
    n = s2.size
    return complex(z * z / n**2 * np.sum(1.0 / (s2 - z * z) ** 2))


# ----------------------------------------------------------------------------
# Resolvents
# ----------------------------------------------------------------------------

def resolvent_diag(decomp: SpectralDecomposition, z: complex, j: int) -> complex:
    """``R_jj(z) = sum_k Q[j, k]^2 / (lambda_k - z)``."""
    q = decomp.vectors[j]
    return complex(np.sum(q * q / (decomp.eigenvalues - z)))


def resolvent_diagonal(decomp: SpectralDecomposition, z: complex) -> np.ndarray:
    Q = decomp.vectors
    return (Q * Q) @ (1.0 / (decomp.eigenvalues - z))


def resolvent_trace(decomp: SpectralDecomposition, z: complex) -> complex:
    return complex(np.sum(1.0 / (decomp.eigenvalues - z)))


def resolvent_matrix(decomp: SpectralDecomposition, z: complex) -> np.ndarray:
    Q = decomp.vectors
    return (Q * (1.0 / (decomp.eigenvalues - z))) @ Q.T


def resolvent_oracle(M, z: complex) -> np.ndarray:
    """Independent reference: ``(M - zI)^{-1}`` by a dense complex solve."""
    M = np.asarray(M, dtype=float)
    return np.linalg.solve(M - z * np.eye(M.shape[0]), np.eye(M.shape[0], dtype=complex))


def block_resolvent(X, z: complex) -> np.ndarray:
    """Resolvent of ``V(X)`` assembled from the eigendecomposition of ``W``.

    With ``A = X/sqrt(p)`` and ``M = A A^T - z^2`` the blocks are ``z M^{-1}``,
    ``M^{-1} A`` and ``-(I - A^T M^{-1} A)/z``.
    """
    X = np.asarray(X, dtype=float)
    m, p = X.shape
    R = np.empty((m + p, m + p), dtype=complex)
    if m == 0:
        R[:] = -np.eye(p) / z
        return R
    A = X / np.sqrt(p)
    dec = eigen_sym(0.5 * (A @ A.T + (A @ A.T).T))
    U = dec.vectors
    inv = 1.0 / (dec.eigenvalues - z * z)
    Minv = (U * inv) @ U.T
    UA = U.T @ A
    MinvA = U @ (inv[:, None] * UA)
    R[:m, :m] = z * Minv
    R[:m, m:] = MinvA
    R[m:, :m] = MinvA.T
    R[m:, m:] = -(np.eye(p) - UA.T @ (inv[:, None] * UA)) / z
    return R


def minor_resolvent(X, j: int, z: complex, method: str = "block") -> np.ndarray:
    """Resolvent of ``V`` with row and column ``j`` (``0 <= j < n``) removed.

    ``method="block"`` uses the block formula on ``X`` without row ``j``;
    ``method="full"`` diagonalizes the ``(n+p-1)``-dimensional minor directly.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if not (0 <= j < n):
        raise DomainError(f"row index {j} outside [0, {n})")
    if z.imag <= 0:
        raise DomainError("Im z must be positive")
    if method == "block":
        return block_resolvent(np.delete(X, j, axis=0), z)
    if method == "full":
        V = symmetrize_block(X)
        Vj = np.delete(np.delete(V, j, axis=0), j, axis=1)
        return resolvent_matrix(eigen_sym(Vj), z)
    raise DomainError(f"unknown method {method!r}")


def minor_stieltjes(X, j: int, z: complex) -> complex:
    """``m_n^{(j)}``: mean of the upper-block diagonal of the minor resolvent."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    Rj = minor_resolvent(X, j, z)
    return complex(np.mean(np.diag(Rj)[: n - 1]))


class EpsilonTerms(NamedTuple):
    eps1: complex
    eps2: complex
    eps3: complex


def _row_terms(X, j, z, lower_diag_full):
    n, p = X.shape
    Rj = minor_resolvent(X, j, z)
    L = Rj[n - 1:, n - 1:]
    x = X[j]
    quad = complex(x @ L @ x) / p
    dL = np.diag(L)
    eps1 = complex(np.sum((x * x - 1.0) * dL)) / p
    eps2 = quad - complex(np.sum(x * x * dL)) / p
    eps3 = complex(np.sum(dL) - np.sum(lower_diag_full)) / p
    return EpsilonTerms(eps1, eps2, eps3), quad, Rj


def epsilon_decomposition(X, j: int, z: complex) -> EpsilonTerms:
    """The diagonal, off-diagonal and trace-difference parts of row ``j``.

    ``eps1 = (1/p) sum_k (x_k^2 - 1) L_kk``, ``eps2 = (1/p) sum_{k != l} x_k x_l L_kl``
    and ``eps3 = (1/p)(tr L - tr R_lower)``, where ``L`` is the lower block of
    the minor resolvent and ``R_lower`` that of the full resolvent.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    R = block_resolvent(X, z)
    return _row_terms(X, j, z, np.diag(R)[n:])[0]


@dataclass
class ResolventDiagnostics:
    z: complex
    y: float
    m_n: complex
    S: complex
    a_n: complex
    b_n: complex
    g_n: complex
    delta_n: complex
    delta_n3: complex
    eps: np.ndarray  # shape (n, 3)
    R_diag: np.ndarray  # upper-block diagonal of R
    schur_residual: float
    expansion_residual: float
    gn_residual: float
    trace_residual: float
    eps3_ratio: float  # max_j |eps_j3| / (y/(n v)), must not exceed 1
    delta_n3_ratio: float  # |delta_n3| / (Im m_n/(n v)), must not exceed 1

    def identities_hold(self, tol: float = 1e-8) -> bool:
        return (
            self.schur_residual <= tol
            and self.expansion_residual <= tol
            and self.gn_residual <= tol
            and self.trace_residual <= tol
            and self.eps3_ratio <= 1.0 + 1e-12
            and self.delta_n3_ratio <= 1.0 + 1e-12
        )


def self_consistency(X, z: complex, law: MPParams | None = None) -> ResolventDiagnostics:
    """All row expansions of the resolvent at ``z`` and their exact identities.

    With ``a_n = z + (y-1)/z + y m_n`` and ``eps_j = eps1 + eps2 + eps3`` each
    diagonal entry satisfies ``R_jj (a_n + eps_j) = -1``; averaging over rows
    gives ``g_n b_n = -delta_n`` with ``delta_n = mean_j eps_j R_jj``. The
    residuals of both relations and of the Schur-complement form
    ``R_jj = 1/(-z - x_j^T L x_j / p)`` are recorded.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    y = n / p
    law = MPParams(y) if law is None else law
    z = complex(z)
    v = z.imag
    if v <= 0:
        raise DomainError("Im z must be positive")
    R = block_resolvent(X, z)
    Rd = np.diag(R)
    lower = Rd[n:]
    s = singular_values_from_eigs(eigen_sym(sample_covariance(X), vectors=False).eigenvalues)
    m_n = empirical_stieltjes(s, z)
    S = stieltjes_sym(law, z)
    a_n = z + (law.y - 1.0) / z + law.y * m_n
    b_n = a_n + law.y * S
    g_n = m_n - S
    eps = np.empty((n, 3), dtype=complex)
    schur = 0.0
    for j in range(n):
        terms, quad, _ = _row_terms(X, j, z, lower)
        eps[j] = terms
        schur = max(schur, abs(Rd[j] - 1.0 / (-z - quad)))
    e = eps.sum(axis=1)
    upper = Rd[:n]
    expansion = float(np.max(np.abs(upper - (-1.0 / a_n - e * upper / a_n))))
    delta_n = complex(np.mean(e * upper))
    gn_res = abs(g_n + delta_n / b_n)
    V = symmetrize_block(X)
    trace_res = abs(n * m_n - (0.5 * resolvent_trace(eigen_sym(V, vectors=False), z) + (p - n) / (2 * z)))
    d3 = delta_n3(s, z)
    return ResolventDiagnostics(
        z=z, y=law.y, m_n=m_n, S=S, a_n=a_n, b_n=b_n, g_n=g_n,
        delta_n=delta_n, delta_n3=d3, eps=eps, R_diag=upper,
        schur_residual=float(schur), expansion_residual=expansion,
        gn_residual=float(gn_res), trace_residual=float(trace_res),
        eps3_ratio=float(np.max(np.abs(eps[:, 2])) / (y / (n * v))),
        delta_n3_ratio=float(abs(d3) / (m_n.imag / (n * v))),
    )


def delta_n3_direct(X, z: complex) -> complex:
    """``(1/n^2) sum_j sum_k (R_{k+n,k+n} - R^{(j)}_{k+n,k+n}) R_jj`` from minors.

    Equals ``delta_n3(s, z) + m_n(z)/(n z)``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    R = block_resolvent(X, z)
    Rd = np.diag(R)
    total = 0.0 + 0.0j
    for j in range(n):
        Rj = minor_resolvent(X, j, z)
        total += (np.sum(Rd[n:]) - np.sum(np.diag(Rj)[n - 1:])) * Rd[j]
    return complex(total / n**2)


# ----------------------------------------------------------------------------
# Block diagonalization of V through the singular value decomposition of X
# ----------------------------------------------------------------------------

def _orthonormal_complement(H1: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt of the columns of ``C`` against ``H1`` (twice)."""
    basis = [H1[:, i] for i in range(H1.shape[1])]
    out = []
    for i in range(C.shape[1]):
        w = C[:, i].copy()
        for _ in range(2):
            for b in basis:
                w -= (b @ w) * b
        w /= np.linalg.norm(w)
        basis.append(w)
        out.append(w)
    return np.column_stack(out) if out else np.zeros((H1.shape[0], 0))


def z_matrix(X) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal ``Z`` with ``Z^T V Z = diag(S, -S, 0)``.

    Columns are ``[u_k; h_k]/sqrt(2)``, ``[u_k; -h_k]/sqrt(2)`` and ``[0; H2]``
    where ``u_k`` are eigenvectors of ``W``, ``h_k = X^T u_k / (sqrt(p) s_k)``
    and ``H2`` completes ``{h_k}`` to a basis of ``R^p``. Returns ``(Z, S)``
    with ``S`` the singular values of ``X/sqrt(p)``. All ``s_k`` must be
    positive.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    dec = eigen_sym(sample_covariance(X))
    s = singular_values_from_eigs(dec.eigenvalues)
    if np.any(s <= 1e-12):
        raise DomainError("X must have full row rank")
    U = dec.vectors
    H1 = X.T @ U / (np.sqrt(p) * s)
    if p > n:
        dec2 = eigen_sym(X.T @ X / p)
        H2 = _orthonormal_complement(H1, dec2.vectors[:, : p - n])
    else:
        H2 = np.zeros((p, 0))
    r = 1.0 / np.sqrt(2.0)
    Z = np.zeros((n + p, n + p))
    Z[:n, :n] = r * U
    Z[n:, :n] = r * H1
    Z[:n, n:2 * n] = r * U
    Z[n:, n:2 * n] = -r * H1
    Z[n:, 2 * n:] = H2
    return Z, s


def write_spectrum_csv(eigenvalues, path) -> None:
    np.savetxt(path, np.asarray(eigenvalues, dtype=float), fmt="%.17g")
