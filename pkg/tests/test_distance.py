from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mplab.distance import (
    H_DEFAULT,
    Moments,
    SmoothingConfig,
    default_config,
    desk_config,
    distance_report,
    g_n_threshold,
    horizontal_tail_bound,
    kolmogorov,
    kolmogorov_plain,
    kolmogorov_sym,
    smoothing_bound,
    smoothing_constants,
)
from mplab.ensembles import EntryDistribution, MatrixShape, sample_matrix
from mplab.errors import EpsilonTooLarge, InadmissibleConfig
from mplab.mp_law import MPParams, RateScale, cdf_values, quantile, stieltjes_sym
from mplab.spectral import (
    StepDistribution,
    eigen_sym,
    empirical_stieltjes,
    esd,
    sample_covariance,
    singular_values_from_eigs,
)


def G1(x):
    # closed form of the y = 1 law on [0, 4]
    phi = np.arccos(np.clip(1 - np.asarray(x, dtype=float) / 2, -1, 1))
    return (phi + np.sin(phi)) / np.pi


def gaussian_spectrum(n, p, seed):
    X = sample_matrix(EntryDistribution("gaussian"), MatrixShape(n, p), seed)
    return eigen_sym(sample_covariance(X), vectors=False).eigenvalues


# ---- exact distance ----------------------------------------------------------

def test_single_atom_against_arcsine():
    step = StepDistribution(np.array([1.0]), np.array([1.0]))
    d = kolmogorov(step, G1)
    g = (np.pi / 3 + np.sqrt(3) / 2) / np.pi
    assert d == pytest.approx(max(g, 1 - g), abs=1e-15)
    assert d == pytest.approx(0.60900, abs=1e-4)
    assert kolmogorov(step, lambda x: cdf_values(MPParams(1.0), x)) == pytest.approx(0.60900, abs=1e-4)


@pytest.mark.parametrize("y", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("n", [5, 40])
def test_quantile_construction(y, n):
    law = MPParams(y)
    q = np.array([quantile(law, k / n) for k in range(1, n + 1)])
    d = kolmogorov(esd(q), lambda x: cdf_values(law, x))
    assert d <= 1 / n + 1e-9
    assert d == pytest.approx(1 / n, abs=1e-9)
    mid = np.array([quantile(law, (k - 0.5) / n) for k in range(1, n + 1)])
    assert kolmogorov(esd(mid), lambda x: cdf_values(law, x)) == pytest.approx(0.5 / n, abs=1e-9)


def test_kolmogorov_uniform_examples():
    unif = lambda x: np.clip(x, 0, 1)
    assert kolmogorov(esd([0.5]), unif) == 0.5
    assert kolmogorov(esd([0.25, 0.75]), unif) == 0.25
    assert kolmogorov(esd([1.0]), unif) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-0.5, 1.5), min_size=1, max_size=30))
def test_kolmogorov_against_dense_scan(pts):
    # a dense scan can only underestimate the exact sup
    unif = lambda x: np.clip(x, 0, 1)
    F = esd(pts)
    d = kolmogorov(F, unif)
    grid = np.linspace(-1, 2, 4001)
    scan = max(abs(F.cdf(x) - unif(x)) for x in grid)
    assert scan <= d + 1e-15
    assert 0 <= d <= 1


@pytest.mark.parametrize("seed", range(5))
def test_factor_two_identity(seed):
    lam = gaussian_spectrum(32, 64, seed)
    law = MPParams(0.5)
    s = singular_values_from_eigs(lam)
    assert abs(kolmogorov_plain(lam, law) - 2 * kolmogorov_sym(s, law)) <= 1e-12


def test_factor_two_identity_square():
    lam = gaussian_spectrum(24, 24, 3)
    law = MPParams(1.0)
    s = singular_values_from_eigs(lam)
    assert abs(kolmogorov_plain(lam, law) - 2 * kolmogorov_sym(s, law)) <= 1e-12


# ---- configuration -----------------------------------------------------------

def test_tau_identity():
    cfg = desk_config(MPParams(0.5), 256)
    assert abs(cfg.tau - 0.75) <= 1e-12
    assert H_DEFAULT == pytest.approx(math.tan(3 * math.pi / 8), abs=1e-14)


def test_constants():
    C1, C2 = smoothing_constants(MPParams(1.0))
    assert C1 == pytest.approx((1 + math.sqrt(2)) ** 2 / math.pi, rel=1e-15)
    assert C1 == pytest.approx(1.855246, abs=1e-6)
    assert C2 == pytest.approx(0.31831, abs=1e-5)
    C1, C2 = smoothing_constants(MPParams(0.25))
    r = math.sqrt(0.25 * 0.5)
    assert C1 == pytest.approx(2 * H_DEFAULT**2 * math.sqrt(3) / (math.pi**2 * r), rel=1e-15)
    assert C2 == pytest.approx(4 / (math.pi * r), rel=1e-15)


def test_default_config_arithmetic():
    law = MPParams(0.5)
    scale = RateScale(1.0, 2.0, 1024)
    ln = 10 * math.log(2)
    beta = ln * math.log(ln)
    assert scale.beta == pytest.approx(beta, rel=1e-15)
    v0 = 32 * 0.5 * beta**4 / 1024
    assert v0 == pytest.approx(506.7666673578, rel=1e-10)
    with pytest.raises(EpsilonTooLarge):
        default_config(law, scale)
    # a small enough d reaches the admissible regime
    cfg = default_config(law, scale, d=1e-5)
    assert cfg.v == pytest.approx(1e-5 * 0.5 * beta**4 / 1024, rel=1e-14)
    assert cfg.epsilon == pytest.approx((2 * H_DEFAULT * cfg.v) ** (2 / 3), rel=1e-15)
    assert cfg.V_top == pytest.approx(4 * math.sqrt(0.5))
    assert cfg.admissible
    assert 2 * cfg.v * cfg.H / cfg.epsilon**1.5 == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60)
@given(st.floats(0.05, 1.0), st.integers(64, 4096))
def test_desk_config_admissible(y, n):
    law = MPParams(y)
    try:
        cfg = desk_config(law, n)
    except EpsilonTooLarge:
        assert (2 * H_DEFAULT / n) ** (2 / 3) >= math.sqrt(y) / 2
        return
    assert cfg.admissible
    assert cfg.epsilon < math.sqrt(y) / 2
    assert abs(cfg.tau - 0.75) <= 1e-12


def test_inadmissible_config_rejected():
    law = MPParams(0.5)
    cfg = desk_config(law, 256)
    bad = SmoothingConfig(cfg.y, cfg.v * 10, cfg.epsilon, cfg.V_top, cfg.C1, cfg.C2)
    assert not bad.admissible
    with pytest.raises(InadmissibleConfig):
        smoothing_bound(lambda z: stieltjes_sym(law, z), law, bad)


# ---- tail bound and smoothing bound ------------------------------------------

def test_tail_bound_dominates_numeric_tail():
    law = MPParams(0.5)
    s = singular_values_from_eigs(gaussian_spectrum(16, 32, 0))
    mf, mg = Moments.of_spectrum(s), Moments.of_law(law)
    V = 4 * law.sqrt_y
    from scipy import integrate

    f = lambda u: abs(empirical_stieltjes(s, complex(u, V)) - stieltjes_sym(law, complex(u, V)))
    for U in (8.0, 20.0, 64.0):
        numeric = 2 * integrate.quad(f, U, np.inf, epsabs=1e-13, limit=200)[0]
        assert numeric <= horizontal_tail_bound(mf, mg, U)
    assert horizontal_tail_bound(mf, mg, 64.0) < horizontal_tail_bound(mf, mg, 8.0)
    with pytest.raises(InadmissibleConfig):
        horizontal_tail_bound(mf, mg, 1.0)


@pytest.mark.parametrize("y", [0.25, 0.5, 1.0])
def test_bound_for_exact_transform(y):
    law = MPParams(y)
    cfg = desk_config(law, 256)
    t = smoothing_bound(lambda z: stieltjes_sym(law, z), law, cfg)
    base = cfg.C1 * cfg.v + cfg.C2 * cfg.epsilon**1.5
    assert t.total >= 0
    assert t.total <= base + 1e-6
    assert t.C1v == pytest.approx(cfg.C1 * cfg.v)
    assert t.C2eps32 == pytest.approx(cfg.C2 * cfg.epsilon**1.5)


def test_bound_dominates_gaussian_sample():
    law = MPParams(0.5)
    lam = gaussian_spectrum(256, 512, 7)
    rep = distance_report(lam, law)
    assert rep.smoothing_bound >= rep.kolmogorov_sym
    assert rep.config.regime == "desk"
    assert abs(rep.kolmogorov_plain - 2 * rep.kolmogorov_sym) <= 1e-12


def test_bound_dominates_small_samples():
    for seed in range(3):
        lam = gaussian_spectrum(32, 64, seed)
        rep = distance_report(lam, MPParams(0.5))
        assert rep.smoothing_bound >= rep.kolmogorov_sym


def test_report_json():
    rep = distance_report(gaussian_spectrum(64, 128, 1), MPParams(0.5))
    d = json.loads(rep.to_json())
    assert set(d["terms"]) >= {"horizontal_integral", "vertical_sup_integral", "C1v", "C2eps32"}
    assert d["smoothing_bound"] == pytest.approx(rep.smoothing_bound)
    plain = distance_report(gaussian_spectrum(64, 128, 1), MPParams(0.5), smoothing=False)
    assert plain.smoothing_bound is None
    assert json.loads(plain.to_json())["terms"] is None


def test_g_n_threshold_positive_and_decreasing():
    law = MPParams(0.5)
    vals = [g_n_threshold(law, RateScale(1, 2, n), 0.1, 1.0) for n in (256, 1024, 4096)]
    assert all(v > 0 for v in vals)
    assert vals[0] > vals[1] > vals[2]
