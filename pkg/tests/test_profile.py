import math

import numpy as np
import pytest

from erodewave.model import ModelError
from erodewave.profile import (
    c_phi_min,
    constants,
    d_hk,
    d_ss,
    h_prime_max,
    h_prime_min,
    hsq_over_hprime_max,
    kappa,
    phi,
    phi_inverse,
    phi_prime,
    psi,
    z_adm,
    z_stat,
)


def bisect_oracle(f, lo, hi, iters=200):
    """Independent plain bisection used to freeze expected roots."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (f(mid) < 0.0) == (flo < 0.0):
            lo = mid
            flo = f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- phi -----------------------------------------------------------------------


def test_phi_closed_form_quadratic(quad):
    qs = np.linspace(-0.5, 0.0, 101)
    expected = (1.0 + 2.0 * qs) / (1.0 - 2.0 * qs)
    assert np.max(np.abs(phi(quad, qs) - expected)) < 1e-8


def test_phi_point_examples(quad):
    assert phi(quad, -0.25) == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert phi(quad, 0.0) == 1.0
    assert phi(quad, -0.5) == pytest.approx(0.0, abs=1e-12)
    assert phi(quad, -0.7) == 0.0  # extension by zero


def test_phi_rejects_positive_q(quad):
    with pytest.raises(ModelError):
        phi(quad, 0.1)


def test_phi_strictly_increasing(quad, ex5):
    for model in (quad, ex5):
        qs = np.linspace(-d_hk(model) + 1e-9, 0.0, 400)
        vals = np.asarray(phi(model, qs))
        assert np.all(np.diff(vals) > 0.0)


def test_phi_inverse_consistent(quad):
    zs = np.linspace(0.01, 0.99, 50)
    qs = phi_inverse(quad, zs)
    assert np.max(np.abs(np.asarray(phi(quad, qs)) - zs)) < 1e-10


def test_first_integral_identity_quadratic(quad):
    # h(phi(q)) = h(1)/(1 - h(1) q)
    qs = np.linspace(-0.49, 0.0, 200)
    lhs = quad.h(np.asarray(phi(quad, qs)))
    rhs = 2.0 / (1.0 - 2.0 * qs)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


# -- critical drops -------------------------------------------------------------


def test_d_hk_values(quad, ex5, degenerate_h0):
    assert d_hk(quad) == pytest.approx(0.5, abs=1e-14)
    assert d_hk(ex5) == pytest.approx(1.0 / 0.5 - 1.0 / 1.5, abs=1e-14)
    assert math.isinf(d_hk(degenerate_h0))


def test_d_ss_against_bisection_oracle(quad, ex5, degenerate_h0):
    oracle_quad = bisect_oracle(lambda s: (math.exp(s) - 1.0) / s - 2.0, 1e-6, 10.0)
    assert d_ss(quad) == pytest.approx(oracle_quad, abs=1e-10)
    oracle_e5 = bisect_oracle(lambda s: (math.exp(0.5 * s) - 1.0) / s - 1.5, 1e-6, 50.0)
    assert d_ss(ex5) == pytest.approx(oracle_e5, abs=1e-10)
    assert math.isinf(d_ss(degenerate_h0))


# -- psi ------------------------------------------------------------------------


def test_psi_values(quad, ex5):
    assert psi(quad, 0.0) == quad.h0
    assert psi(quad, 1.0) == pytest.approx(math.e - 1.0, rel=1e-12)
    assert psi(ex5, 2.0) == pytest.approx((math.e - 1.0) / 2.0, rel=1e-12)
    with pytest.raises(ModelError):
        psi(quad, -0.5)


def test_psi_series_branch_is_continuous(quad):
    below = float(psi(quad, 9.9e-9))
    above = float(psi(quad, 1.01e-8))
    assert abs(below - above) < 1e-12
    assert below == pytest.approx(quad.h0, abs=1e-7)


def test_psi_strictly_increasing(quad):
    s = np.linspace(0.0, 5.0, 1000)
    vals = np.asarray(psi(quad, s))
    assert np.all(np.diff(vals) > 0.0)


# -- stationarity and admissibility curves ---------------------------------------


def test_z_stat_closed_form_quadratic(quad):
    ds = np.linspace(0.0, d_ss(quad), 101)
    expected = np.expm1(ds[1:]) / ds[1:] - 1.0
    got = np.asarray(z_stat(quad, ds))
    assert np.max(np.abs(got[1:] - expected)) < 1e-8
    assert got[0] == pytest.approx(0.0, abs=1e-12)


def test_z_adm_closed_form_quadratic(quad):
    ds = np.linspace(0.0, d_ss(quad), 101)
    expected = np.sqrt(np.expm1(ds[1:]) / ds[1:] - 1.0)
    got = np.asarray(z_adm(quad, ds))
    assert np.max(np.abs(got[1:] - expected)) < 1e-8


def test_curve_endpoints(quad, ex5):
    for model in (quad, ex5):
        dss = d_ss(model)
        assert z_stat(model, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert z_adm(model, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert z_stat(model, dss) == pytest.approx(1.0, abs=1e-9)
        assert z_adm(model, dss) == pytest.approx(1.0, abs=1e-9)


def test_z_stat_point_example(quad):
    assert z_stat(quad, 1.0) == pytest.approx(math.e - 2.0, abs=1e-10)
    assert z_adm(quad, 1.0) == pytest.approx(math.sqrt(math.e - 2.0), abs=1e-10)


def test_curves_increase_and_separate(quad, ex5):
    for model in (quad, ex5):
        dss = d_ss(model)
        ds = np.linspace(0.01 * dss, 0.99 * dss, 400)
        stat = np.asarray(z_stat(model, ds))
        adm = np.asarray(z_adm(model, ds))
        assert np.all(np.diff(stat) > 0.0)
        assert np.all(np.diff(adm) > 0.0)
        assert np.min(adm - stat) > 0.0


def test_domain_errors(quad):
    with pytest.raises(ModelError):
        z_stat(quad, d_ss(quad) + 0.1)
    with pytest.raises(ModelError):
        z_adm(quad, -0.2)


def test_degenerate_h0_curves(degenerate_h0):
    assert z_stat(degenerate_h0, 3.0) == 0.0
    assert z_adm(degenerate_h0, 5.0) == 0.0


# -- structural constants --------------------------------------------------------


def test_kappa_values(quad, ex5):
    assert kappa(quad) == pytest.approx(0.5, rel=1e-9)
    assert kappa(ex5) == pytest.approx(0.125, rel=1e-9)


def test_kappa_degenerate_needs_drop(degenerate_h0):
    with pytest.raises(ModelError):
        kappa(degenerate_h0)
    # h = z: h^2/h' = z^2, minimized at c_o = phi(-D)
    D = 1.0
    c_o = float(phi(degenerate_h0, -D))
    got = kappa(degenerate_h0, total_drop=D)
    assert got == pytest.approx(c_o**2, rel=1e-6)
    assert got > 0.0


def test_extremal_helpers(quad, ex5):
    assert h_prime_max(quad) == pytest.approx(1.0, rel=1e-10)
    assert h_prime_min(quad) == pytest.approx(1.0, rel=1e-10)
    assert hsq_over_hprime_max(quad) == pytest.approx(4.0, rel=1e-10)
    assert hsq_over_hprime_max(ex5) == pytest.approx(2.25, rel=1e-10)


def test_phi_prime_lower_bound(quad, ex5):
    for model in (quad, ex5):
        lo = c_phi_min(model)
        qs = np.linspace(-d_hk(model) + 1e-4, -1e-4, 500)
        fd = (np.asarray(phi(model, qs + 1e-6)) - np.asarray(phi(model, qs - 1e-6))) / 2e-6
        assert np.min(fd) >= lo - 1e-6


def test_transversality_gap(quad, ex5):
    # where z_stat(Delta) = phi(q), the slopes differ by at least kappa
    for model in (quad, ex5):
        kap = kappa(model)
        dss = d_ss(model)
        deltas = np.linspace(0.05 * dss, 0.95 * dss, 60)
        zs = np.asarray(z_stat(model, deltas))
        qs = np.asarray(phi_inverse(model, zs))
        fd_phi = (np.asarray(phi(model, qs + 1e-6)) - np.asarray(phi(model, qs - 1e-6))) / 2e-6
        fd_stat = (np.asarray(z_stat(model, deltas + 1e-6)) - np.asarray(z_stat(model, deltas - 1e-6))) / 2e-6
        assert np.min(fd_phi - fd_stat) >= kap - 1e-6


def test_d_hk_below_d_ss(quad, ex5):
    for model in (quad, ex5):
        assert d_hk(model) < d_ss(model)


def test_constants_bundle(quad):
    c = constants(quad)
    assert c.d_hk == pytest.approx(0.5)
    assert c.d_ss == pytest.approx(1.2564312086, abs=1e-9)
    assert c.kappa == pytest.approx(0.5, rel=1e-9)
    assert c.c_phi_min == pytest.approx(1.0, rel=1e-9)
    assert c.d_hk < c.d_ss


def test_phi_prime_analytic_matches_fd(quad):
    qs = np.linspace(-0.45, -0.01, 100)
    fd = (np.asarray(phi(quad, qs + 1e-6)) - np.asarray(phi(quad, qs - 1e-6))) / 2e-6
    assert np.max(np.abs(np.asarray(phi_prime(quad, qs)) - fd)) < 1e-5
