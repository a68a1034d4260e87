"""Seeded random matrices with independent standardized entries.

Every generator is a Philox counter-based stream keyed by a 64-bit seed, so a
trial is fully determined by its seed and no state is shared between calls.
Per-trial seeds are derived from a master seed with ``split_seed``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import log_ndtr

from .errors import DomainError, InvalidShape

KINDS = ("gaussian", "rademacher", "weibull")

# t-grid on which the tail condition P(|X| > t) <= exp(-t**k) / k is checked
_TAIL_GRID = np.concatenate([np.linspace(1.0, 10.0, 901), np.linspace(10.0, 40.0, 301)[1:]])


def symmetrized_weibull_scale(kappa: float) -> float:
    """Scale ``c`` making ``c * S * E**(1/kappa)`` unit variance."""
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    return 1.0 / math.sqrt(gamma_fn(1.0 + 2.0 / kappa))


@dataclass(frozen=True)
class EntryDistribution:
    kind: str
    kappa: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown distribution {self.kind!r}")
        if self.kind == "weibull":
            if self.kappa is None or not self.kappa > 0:
                raise DomainError("weibull needs kappa > 0")
        elif self.kappa is not None:
            raise DomainError(f"{self.kind} takes no shape parameter")

    @classmethod
    def parse(cls, text: str) -> EntryDistribution:
        text = text.strip().lower()
        if text.startswith("weibull"):
            _, _, k = text.partition(":")
            if not k:
                raise DomainError("use weibull:<kappa>")
            return cls("weibull", float(k))
        return cls(text)

    def label(self) -> str:
        return f"weibull:{self.kappa:g}" if self.kind == "weibull" else self.kind

    def log_tail(self, t):
        """``log P(|X| > t)`` (``-inf`` where the probability is zero)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            return math.log(2.0) + log_ndtr(-t)
        if self.kind == "rademacher":
            return np.where(t < 1.0, 0.0, -np.inf)
        c = symmetrized_weibull_scale(self.kappa)
        return -((np.maximum(t, 0.0) / c) ** self.kappa)

    def tail(self, t):
        return np.exp(self.log_tail(t))

    @property
    def kappa_effective(self) -> float:
        return kappa_effective(self)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        c = symmetrized_weibull_scale(self.kappa)
        sign = 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        return c * sign * rng.standard_exponential(size) ** (1.0 / self.kappa)


def _tail_condition_holds(dist: EntryDistribution, k: float) -> bool:
    lhs = dist.log_tail(_TAIL_GRID) + _TAIL_GRID**k + math.log(k)
    return bool(np.all(lhs <= 0.0))


def kappa_effective(dist: EntryDistribution) -> float:
    """Largest exponent ``k`` (up to a cap) with ``P(|X|>t) <= exp(-t**k)/k``
    for all ``t >= 1`` on a dense grid, found by bisection.

    The cap is 2 for bounded and Gaussian entries and ``kappa`` for Weibull.
    Rademacher entries satisfy the condition for every ``k`` because
    ``P(|X| > t) = 0`` once ``t >= 1``.
    """
    if dist.kind == "rademacher":
        return 2.0
    cap = 2.0 if dist.kind == "gaussian" else float(dist.kappa)
    if _tail_condition_holds(dist, cap):
        return cap
    lo, hi = 0.0, cap
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid > 0 and _tail_condition_holds(dist, mid):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise DomainError(f"{dist.label()} violates the tail condition for every exponent")
    return lo


@dataclass(frozen=True)
class MatrixShape:
    n: int
    p: int

    def __post_init__(self):
        if self.n < 2 or self.p < self.n:
            raise InvalidShape(f"need 2 <= n <= p, got n={self.n}, p={self.p}")

    @classmethod
    def from_ratio(cls, n: int, y: float) -> MatrixShape:
        if not (0.0 < y <= 1.0):
            raise InvalidShape(f"y must lie in (0, 1], got {y}")
        return cls(n, int(round(n / y)))

    @property
    def y(self) -> float:
        return self.n / self.p


def split_seed(seed0: int, *keys: int) -> int:
    """Derive an independent 64-bit seed for the work item named by ``keys``."""
    ss = np.random.SeedSequence(seed0, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF))


def sample_matrix(dist: EntryDistribution, shape: MatrixShape, seed: int) -> np.ndarray:
    if not isinstance(shape, MatrixShape):
        raise InvalidShape("shape must be a MatrixShape")
    return dist.sample(make_rng(seed), (shape.n, shape.p))
