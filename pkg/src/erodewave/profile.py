"""Smooth stationary profile and the implicit curves attached to it.

Provides the profile phi(q), the critical drops d_hk (where phi reaches 0)
and d_ss (smallest stationary shock), the exponential mean psi, the
admissibility and stationarity curves z_adm / z_stat, and the structural
constants (kappa, lower bound on phi') used by the stability envelopes.

All implicit equations here are strictly monotone, so roots are found by
bracketed bisection with a single Newton polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._solve import bisect_newton, bisect_vec, grid_golden_max, grid_golden_min
from .model import ErosionModel, ModelError

# psi switches to its 2-term Taylor series below this to avoid cancellation
_PSI_SERIES_CUTOFF = 1e-8

_DSS_BRACKET = (1e-6, 100.0)


@dataclass(frozen=True)
class ProfileConstants:
    """Structural constants of a model (optionally at a fixed total drop)."""

    d_hk: float
    d_ss: float
    kappa: float
    c_phi_min: float


def phi(model: ErosionModel, q):
    """Smooth stationary profile, extended by zero left of -d_hk.

    phi(q) = h^{-1}( h(1) / (1 - h(1) q) ) on [-d_hk, 0], phi(0) = 1.
    """
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(q_arr > 1e-12):
        raise ModelError(f"phi is defined for q <= 0, got {q}")
    q_arr = np.minimum(q_arr, 0.0)
    dhk = d_hk(model)
    out = np.zeros_like(q_arr)
    mask = q_arr >= -dhk
    if np.any(mask):
        arg = model.h1 / (1.0 - model.h1 * q_arr[mask])
        out[mask] = np.asarray(model.h_inverse(np.clip(arg, model.h0, model.h1)))
    return out if np.ndim(q) else float(out[0])


def phi_inverse(model: ErosionModel, z):
    """q <= 0 with phi(q) = z, from the explicit first integral."""
    z_arr = np.asarray(z, dtype=float)
    q = 1.0 / model.h1 - 1.0 / model.h(z_arr)
    return q if q.ndim else float(q)


def phi_prime(model: ErosionModel, q):
    """Analytic phi'(q) = h^2(phi)/h'(phi); zero on the extension."""
    p = np.atleast_1d(np.asarray(phi(model, q), dtype=float))
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    val = model.h(p) ** 2 / model.h_prime(p)
    val = np.where(q_arr < -d_hk(model), 0.0, val)
    return val if np.ndim(q) else float(val[0])


def d_hk(model: ErosionModel) -> float:
    """Drop at which phi reaches zero: 1/h(0) - 1/h(1); +inf when h(0) = 0."""
    if model.h0 == 0.0:
        return math.inf
    return 1.0 / model.h0 - 1.0 / model.h1


def psi(model: ErosionModel, s):
    """psi(s) = (e^{h(0) s} - 1)/s with psi(0) = h(0); strictly increasing."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0):
        raise ModelError(f"psi is defined for s >= 0, got {s}")
    small = s_arr <= _PSI_SERIES_CUTOFF
    safe = np.where(small, 1.0, s_arr)
    with np.errstate(over="ignore"):
        val = np.expm1(model.h0 * safe) / safe
    series = model.h0 + 0.5 * model.h0**2 * s_arr
    out = np.where(small, series, val)
    return out if out.ndim else float(out)


def _psi_prime(model: ErosionModel, s: float) -> float:
    if s <= _PSI_SERIES_CUTOFF:
        return 0.5 * model.h0**2
    e = math.exp(model.h0 * s)
    return (model.h0 * s * e - e + 1.0) / s**2


@lru_cache(maxsize=None)
def d_ss(model: ErosionModel) -> float:
    """Smallest shock size whose right front is stationary with z+ = 1.

    Unique root of psi(D) = h(1); +inf when h(0) = 0 (psi stays at 0).
    """
    if model.h0 == 0.0:
        return math.inf
    return bisect_newton(
        lambda s: psi(model, s) - model.h1,
        *_DSS_BRACKET,
        f_tol=1e-13,
        df=lambda s: _psi_prime(model, s),
    )


def _check_delta(model: ErosionModel, delta) -> np.ndarray:
    delta_arr = np.asarray(delta, dtype=float)
    dss = d_ss(model)
    if np.any(delta_arr < -1e-12) or np.any(delta_arr > dss * (1.0 + 1e-12) + 1e-12):
        raise ModelError(f"shock size {delta} outside [0, d_ss={dss}]")
    return np.clip(delta_arr, 0.0, dss)


def z_stat(model: ErosionModel, delta):
    """Right state making a shock of size delta stationary: h(z) = psi(delta)."""
    delta_arr = _check_delta(model, delta)
    if model.h0 == 0.0:
        out = np.zeros_like(delta_arr)
        return out if out.ndim else 0.0
    return model.h_inverse(np.clip(psi(model, delta_arr), model.h0, model.h1))


def z_adm(model: ErosionModel, delta):
    """Largest admissible right state of a shock of size delta.

    Solves h(z) - z(1-z)h'(z) = psi(delta); the left side is strictly
    increasing, so [0, 1] brackets the root.
    """
    delta_arr = _check_delta(model, delta)
    if model.h0 == 0.0:
        out = np.zeros_like(delta_arr)
        return out if out.ndim else 0.0
    target = np.clip(psi(model, delta_arr), model.h0, model.h1)

    def resid(z):
        return model.h(z) - z * (1.0 - z) * model.h_prime(z) - target

    def dresid(z):
        # d/dz (h - z(1-z)h') = z (2h' - (1-z)h''); guard the z=1 limit
        z_in = np.minimum(z, 1.0 - 1e-9)
        return z * (2.0 * model.h_prime(z_in) - (1.0 - z_in) * model.h_second(z_in))

    x = bisect_vec(resid, np.zeros_like(target), np.ones_like(target), polish_df=dresid)
    return x if x.ndim else float(x)


# -- extremal constants ------------------------------------------------------


@lru_cache(maxsize=None)
def h_prime_max(model: ErosionModel, z_lo: float = 0.0) -> float:
    _, v = grid_golden_max(lambda z: np.asarray(model.h_prime(z)), z_lo, 1.0)
    return v


@lru_cache(maxsize=None)
def h_prime_min(model: ErosionModel, z_lo: float = 0.0) -> float:
    _, v = grid_golden_min(lambda z: np.asarray(model.h_prime(z)), z_lo, 1.0)
    return v


@lru_cache(maxsize=None)
def hsq_over_hprime_max(model: ErosionModel) -> float:
    """max of h^2/h' on [0, 1]; equals the maximal slope of phi."""
    _, v = grid_golden_max(
        lambda z: np.asarray(model.h(z)) ** 2 / np.asarray(model.h_prime(z)), 0.0, 1.0
    )
    return v


def kappa(model: ErosionModel, total_drop: float | None = None) -> float:
    """Transversality gap between phi' and z_stat' at equal values.

    For h(0) > 0 this is h(0)^2 / (2 max h').  For h(0) = 0 the stationarity
    curve is identically zero and the gap reduces to the minimum of h^2/h'
    over the values phi actually takes, [phi(-D), 1], so a total drop is
    required.
    """
    if model.h0 > 0.0:
        return model.h0**2 / (2.0 * h_prime_max(model))
    if total_drop is None:
        raise ModelError("kappa for a model with h(0) = 0 needs a total drop")
    c_o = float(phi(model, -total_drop))
    _, v = grid_golden_min(
        lambda z: np.asarray(model.h(z)) ** 2 / np.asarray(model.h_prime(z)), c_o, 1.0
    )
    return v


def c_phi_min(model: ErosionModel, total_drop: float | None = None) -> float:
    """Lower bound for phi' on the interval the profile actually occupies."""
    if model.h0 > 0.0:
        return model.h0**2 / h_prime_max(model)
    if total_drop is None:
        raise ModelError("phi' lower bound for h(0) = 0 needs a total drop")
    c_o = float(phi(model, -total_drop))
    return float(model.h(c_o)) ** 2 / h_prime_max(model, z_lo=c_o)


def constants(model: ErosionModel, total_drop: float | None = None) -> ProfileConstants:
    return ProfileConstants(
        d_hk=d_hk(model),
        d_ss=d_ss(model),
        kappa=kappa(model, total_drop),
        c_phi_min=c_phi_min(model, total_drop),
    )
