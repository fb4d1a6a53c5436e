"""Small deterministic root-finding and 1-D minimization helpers.

Every implicit function in this package is monotone on a known bracket, so
plain bisection is unconditionally safe; a single Newton polish recovers the
last digits cheaply.
"""

from __future__ import annotations

import math

import numpy as np


class BracketError(ValueError):
    """The requested root is not bracketed by the given interval."""


def bisect_newton(f, lo, hi, f_tol=1e-12, df=None, max_iter=200):
    """Root of a monotone scalar function on [lo, hi].

    Bisects until |f| <= f_tol or the bracket collapses, then applies one
    Newton step (if df is given) clipped back into the bracket.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    a, b, fa = lo, hi, flo
    x, fx = a, fa
    for _ in range(max_iter):
        x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) <= f_tol or (b - a) <= 4.0 * np.finfo(float).eps * max(abs(a), abs(b), 1.0):
            break
        if (fx < 0.0) == (fa < 0.0):
            a, fa = x, fx
        else:
            b = x
    if df is not None:
        d = df(x)
        if d != 0.0 and math.isfinite(d):
            x_new = x - fx / d
            if a <= x_new <= b:
                f_new = f(x_new)
                if abs(f_new) <= abs(fx):
                    x = x_new
    return x


def bisect_vec(f, lo, hi, iters=60, polish_df=None):
    """Vectorized bisection for a monotone family f(x) with common brackets.

    lo, hi are broadcastable arrays; f maps an array of x to residuals.
    Runs a fixed number of halvings (60 gives ~1e-18 relative brackets) and
    optionally one Newton polish.
    """
    a = np.asarray(lo, dtype=float).copy()
    b = np.asarray(hi, dtype=float).copy()
    a, b = np.broadcast_arrays(a, b)
    a = a.copy()
    b = b.copy()
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        # <= keeps an exact root at the lower bracket on the left side
        take_left = (fm <= 0.0) == (fa <= 0.0)
        a = np.where(take_left, m, a)
        fa = np.where(take_left, fm, fa)
        b = np.where(take_left, b, m)
    x = 0.5 * (a + b)
    if polish_df is not None:
        fx = f(x)
        d = polish_df(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d != 0.0, fx / d, 0.0)
        x_new = np.clip(x - step, a, b)
        better = np.abs(f(x_new)) <= np.abs(fx)
        x = np.where(better, x_new, x)
    return x


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f, a, b, rel_tol=1e-10, max_iter=200):
    """Golden-section minimum of a unimodal f on [a, b]; returns (x, f(x))."""
    if b < a:
        a, b = b, a
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if (b - a) <= rel_tol * (abs(a) + abs(b) + 1.0):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc < fd else d
    return x, min(fc, fd)


def grid_golden_min(f, a, b, n_grid=10001, rel_tol=1e-10):
    """Global minimum on [a, b]: dense grid scan plus golden refinement.

    Intended for smooth functions whose minima feed reported constants, not
    inner solver loops.
    """
    xs = np.linspace(a, b, n_grid)
    vals = f(xs)
    i = int(np.argmin(vals))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, n_grid - 1)]
    x, v = golden_min(lambda t: float(f(np.asarray([t]))[0]), float(lo), float(hi), rel_tol)
    if vals[i] < v:
        return float(xs[i]), float(vals[i])
    return x, v


def grid_golden_max(f, a, b, n_grid=10001, rel_tol=1e-10):
    x, v = grid_golden_min(lambda t: -f(t), a, b, n_grid, rel_tol)
    return x, -v
