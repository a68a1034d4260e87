"""Self-check suites run by ``mplab verify``.

Each suite returns ``Check`` results; the deterministic identities must hold
on every sampled instance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mp_law as L
from .deloc import concentration_Q, concentration_upper, weighted_esd
from .distance import H_DEFAULT
from .spectral import (
    eigen_sym,
    resolvent_diag,
    sample_covariance,
    self_consistency,
    singular_values_from_eigs,
    symmetrize_block,
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _upper_half(rng, size, lo=-3.0, hi=3.0):
    u = rng.uniform(lo, hi, size)
    v = 10.0 ** rng.uniform(-3, 1, size)
    return u + 1j * v


def stieltjes_suite(rng, points: int = 1000) -> list[Check]:
    out = []
    for y in (0.25, 0.5, 1.0):
        p = L.MPParams(y)
        z = _upper_half(rng, points)
        s = L.stieltjes_mp(p, z)
        S = L.stieltjes_sym(p, z)
        r1 = float(np.max(L.mp_residual(p, z, s)))
        r2 = float(np.max(L.sym_residual(p, z, S)))
        herg = bool(np.all(s.imag > 0) and np.all(S.imag > 0))
        out.append(Check(f"stieltjes residuals y={y}", max(r1, r2) <= 1e-12 and herg, f"max residual {max(r1, r2):.2e}"))
    return out


def inversion_suite() -> list[Check]:
    out = []
    for y in (0.25, 0.5, 1.0):
        p = L.MPParams(y)
        x = np.linspace(p.a + 0.1, p.b - 0.1, 200)
        err = float(np.max(np.abs(L.stieltjes_mp(p, x + 1e-4j).imag / math.pi - L.density(p, x))))
        out.append(Check(f"inversion y={y}", err <= 2e-3, f"max error {err:.2e}"))
    return out


def normalization_suite() -> list[Check]:
    tau = 2.0 / math.pi * math.atan(H_DEFAULT)
    out = [Check("tau identity", abs(tau - 0.75) <= 1e-12, f"|tau - 3/4| = {abs(tau - 0.75):.1e}")]
    for y in (0.09, 0.25, 0.5, 0.75, 1.0):
        p = L.MPParams(y)
        c = L.total_mass(p)
        out.append(Check(f"total mass y={y}", abs(c - 1.0) <= 1e-8, f"mass - 1 = {c - 1:.1e}"))
    return out


def lemma_suite(rng, points: int = 10000) -> list[Check]:
    out = []
    worst95 = worst96 = worst97 = math.inf
    for y in (0.25, 0.5, 1.0):
        p = L.MPParams(y)
        z = _upper_half(rng, points)
        a, b = L.sym_transform_slack(p, z)
        worst95 = min(worst95, float(a.min()), float(b.min()))
        u = rng.uniform(p.lo, p.hi, points) * rng.choice([-1.0, 1.0], points)
        v = 10.0 ** rng.uniform(-4, 1, points)
        for uu, vv in zip(u, v):
            re, im = L.branch_diagnostics(p, complex(uu, vv))
            worst96 = min(worst96, -re)
            worst97 = min(worst97, im)
    out.append(Check("modulus bounds on the symmetrized transform", worst95 >= -1e-12, f"min slack {worst95:.2e}"))
    out.append(Check("real part of the discriminant", worst96 >= -1e-12, f"min -Re {worst96:.2e}"))
    out.append(Check("imaginary part of its square root", worst97 >= -1e-12, f"min slack {worst97:.2e}"))
    ok = True
    for y in (0.09, 0.25, 0.49):
        p = L.MPParams(y)
        xs = np.linspace(p.lo, p.hi, 1000)
        ok &= all(L.density_bound_check(p, x) for x in xs)
    out.append(Check("edge density bound", ok, "y in {0.09, 0.25, 0.49}, 1000 points each"))
    return out


def eigensolver_suite(rng, sizes=(10, 50, 128)) -> list[Check]:
    out = []
    for n in sizes:
        A = rng.standard_normal((n, n))
        M = (A + A.T) / 2
        dec = eigen_sym(M)
        orth = dec.orthogonality_residual()
        rec = dec.reconstruction_residual(M)
        out.append(Check(f"jacobi n={n}", orth <= 1e-9 and rec <= 1e-9, f"orth {orth:.1e}, recon {rec:.1e}"))
    for n, p in ((3, 5), (16, 32)):
        X = rng.standard_normal((n, p))
        lam = eigen_sym(symmetrize_block(X), vectors=False).eigenvalues
        s = singular_values_from_eigs(eigen_sym(sample_covariance(X), vectors=False).eigenvalues)
        want = np.sort(np.concatenate([s, -s, np.zeros(p - n)]))
        err = float(np.max(np.abs(lam - want)))
        out.append(Check(f"block spectrum n={n} p={p}", err <= 1e-8, f"max error {err:.1e}"))
    return out


def identity_suite(rng, trials: int = 10, n: int = 16, p: int = 32) -> list[Check]:
    worst = 0.0
    ratios = 0.0
    for _ in range(trials):
        X = rng.standard_normal((n, p))
        d = self_consistency(X, complex(1.0, 0.5))
        worst = max(worst, d.schur_residual, d.expansion_residual, d.gn_residual, d.trace_residual)
        ratios = max(ratios, d.eps3_ratio, d.delta_n3_ratio)
    return [
        Check("resolvent identities", worst <= 1e-8, f"max residual {worst:.1e} over {trials} instances"),
        Check("deterministic resolvent bounds", ratios <= 1.0, f"max ratio {ratios:.3f}"),
    ]


def weighted_esd_suite(rng, trials: int = 5) -> list[Check]:
    err = 0.0
    ok = True
    for _ in range(trials):
        n, p = int(rng.integers(2, 9)), int(rng.integers(9, 17))
        dec = eigen_sym(symmetrize_block(rng.standard_normal((n, p))))
        z = complex(rng.uniform(-2, 2), rng.uniform(0.05, 1))
        for j in range(n + p):
            F = weighted_esd(dec, j)
            err = max(err, abs(F.stieltjes(z) - resolvent_diag(dec, z, j)))
            for lam in (0.01, 0.1, 0.5):
                ok &= concentration_Q(F, lam) <= concentration_upper(dec, j, lam)
    return [
        Check("weighted distribution transform", err <= 1e-10, f"max error {err:.1e}"),
        Check("window concentration bound", bool(ok), "grid at atoms and atoms + lambda/2"),
    ]


def run_all(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    checks += stieltjes_suite(rng)
    checks += inversion_suite()
    checks += normalization_suite()
    checks += lemma_suite(rng, 2000)
    checks += eigensolver_suite(rng)
    checks += identity_suite(rng)
    checks += weighted_esd_suite(rng)
    return checks
