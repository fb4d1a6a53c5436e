"""Erosion-rate model in its three coordinate systems.

A single model carries the erosion rate as a polynomial g(z) of the inverse
slope z = 1/u_x, from which the slope-variable form f(w) = w*g(1/w) and the
drop-coordinate form h(z) = g(z)/(1-z) are derived analytically.  The limits
h(1) = -g'(1) and h'(1) = -g''(1)/2 are removable singularities and are
cached at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from ._solve import bisect_vec

BUILTIN_G_COEFFS = {
    # g(z) = 1 - z^2  ->  h(z) = 1 + z
    "quadratic": (1.0, 0.0, -1.0),
    # g(z) = (1 - z)(1/2 + z)  ->  h(z) = 1/2 + z
    "example5": (0.5, 0.5, -1.0),
}

# h and h' switch to their cached z=1 limits inside this window.
H_LIMIT_WINDOW = 1e-7

_VALIDATION_GRID_N = 1001


class ModelError(ValueError):
    """Malformed model specification or out-of-domain evaluation."""


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    worst_z: float
    worst_value: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(
                f"{status}  {c.name}  (worst at z={c.worst_z:.6g}, value={c.worst_value:.6g})"
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class ErosionModel:
    """Erosion function triple (f, g, h) with analytic derivatives.

    Immutable after construction; safe to share across threads.
    """

    g_spec: Union[str, tuple]
    g_coeffs: tuple
    h0: float = field(init=False)
    h1: float = field(init=False)
    hprime1: float = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.g_coeffs, dtype=float)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "_c1", npoly.polyder(c, 1))
        object.__setattr__(self, "_c2", npoly.polyder(c, 2))
        # h = g/(1-z) by synthetic division: identical to the quotient since
        # g(1) = 0, but immune to the 0/0 cancellation near z = 1
        hq, _rem = npoly.polydiv(c, np.array([1.0, -1.0]))
        object.__setattr__(self, "_hc", hq)
        object.__setattr__(self, "_hc1", npoly.polyder(hq, 1))
        object.__setattr__(self, "_hc2", npoly.polyder(hq, 2))
        object.__setattr__(self, "h0", float(npoly.polyval(0.0, c)))
        object.__setattr__(self, "h1", float(-npoly.polyval(1.0, self._c1)))
        object.__setattr__(self, "hprime1", float(-0.5 * npoly.polyval(1.0, self._c2)))

    # -- g and derivatives -------------------------------------------------

    def g(self, z):
        return npoly.polyval(z, self._c)

    def g_prime(self, z):
        return npoly.polyval(z, self._c1)

    def g_second(self, z):
        return npoly.polyval(z, self._c2)

    # -- h = g/(1-z) with removable limit at z = 1 -------------------------

    def h(self, z):
        z = np.asarray(z, dtype=float)
        near_one = np.abs(1.0 - z) < H_LIMIT_WINDOW
        val = npoly.polyval(z, self._hc)
        out = np.where(near_one, self.h1, val)
        return out if out.ndim else float(out)

    def h_prime(self, z):
        z = np.asarray(z, dtype=float)
        near_one = np.abs(1.0 - z) < H_LIMIT_WINDOW
        val = npoly.polyval(z, self._hc1)
        out = np.where(near_one, self.hprime1, val)
        return out if out.ndim else float(out)

    def h_second(self, z):
        z = np.asarray(z, dtype=float)
        val = npoly.polyval(z, self._hc2)
        return val if val.ndim else float(val)

    # -- f(w) = w g(1/w) on w >= 1 ------------------------------------------

    def f(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 1.0):
            raise ModelError("f is defined for slopes w >= 1")
        val = w * self.g(1.0 / w)
        return val if val.ndim else float(val)

    def f_prime(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 1.0):
            raise ModelError("f is defined for slopes w >= 1")
        z = 1.0 / w
        val = self.g(z) - z * self.g_prime(z)
        return val if val.ndim else float(val)

    @property
    def f_prime_at_one(self) -> float:
        return self.h1

    @property
    def f_prime_at_inf(self) -> float:
        # limit of f(w)/w, i.e. g(0); never extrapolated numerically
        return self.h0

    # -- selector interface --------------------------------------------------

    def eval(self, which: str, z):
        z_arr = np.asarray(z, dtype=float)
        if np.any(z_arr < 0.0) or np.any(z_arr > 1.0):
            raise ModelError(f"z={z} outside [0, 1]")
        table = {
            "g": self.g,
            "g_prime": self.g_prime,
            "h": self.h,
            "h_prime": self.h_prime,
        }
        if which not in table:
            raise ModelError(f"unknown selector {which!r}")
        return table[which](z)

    def h_inverse(self, y):
        """z in [0, 1] with h(z) = y, to |h(z) - y| <= 1e-12.

        h is strictly increasing on [0, 1], so the bracket [0, 1] is exact.
        """
        y_arr = np.asarray(y, dtype=float)
        tol = 1e-9 * max(1.0, abs(self.h1))
        if np.any(y_arr < self.h0 - tol) or np.any(y_arr > self.h1 + tol):
            raise ModelError(f"h_inverse target {y} outside [h(0), h(1)] = [{self.h0}, {self.h1}]")
        y_clip = np.clip(y_arr, self.h0, self.h1)
        x = bisect_vec(
            lambda z: self.h(z) - y_clip,
            np.zeros_like(y_clip),
            np.ones_like(y_clip),
            polish_df=self.h_prime,
        )
        # h is flat on the limit window [1 - 1e-7, 1]; targets there invert to 1
        x = np.where(y_clip >= self.h1 - self.hprime1 * H_LIMIT_WINDOW, 1.0, x)
        return x if x.ndim else float(x)

    def validate(self) -> ValidationReport:
        """Check the structural hypotheses on g and h on a 1001-point grid.

        Failures are reported, never raised.
        """
        zs = np.linspace(0.0, 1.0, _VALIDATION_GRID_N)
        checks = []

        g1 = float(self.g(1.0))
        checks.append(HypothesisCheck("g(1) = 0", abs(g1) <= 1e-12, 1.0, g1))

        g0 = self.h0
        checks.append(HypothesisCheck("g(0) >= 0", g0 >= 0.0, 0.0, g0))

        gpp = np.asarray(self.g_second(zs))
        i = int(np.argmax(gpp))
        checks.append(HypothesisCheck("g'' < 0", bool(gpp[i] < 0.0), float(zs[i]), float(gpp[i])))

        hv = np.asarray(self.h(zs))
        i = int(np.argmin(hv))
        checks.append(HypothesisCheck("h >= 0", bool(hv[i] >= 0.0), float(zs[i]), float(hv[i])))

        hp = np.asarray(self.h_prime(zs))
        i = int(np.argmin(hp))
        checks.append(HypothesisCheck("h' > 0", bool(hp[i] > 0.0), float(zs[i]), float(hp[i])))

        zin = zs[zs <= 1.0 - 1e-3]
        gap = 2.0 * np.asarray(self.h_prime(zin)) / (1.0 - zin) - np.asarray(self.h_second(zin))
        i = int(np.argmin(gap))
        checks.append(
            HypothesisCheck("h'' < 2h'/(1-z)", bool(gap[i] > 0.0), float(zin[i]), float(gap[i]))
        )

        return ValidationReport(tuple(checks))


def make_model(spec: Union[str, Sequence[float]]) -> ErosionModel:
    """Build an ErosionModel from a builtin name or g-polynomial coefficients.

    Coefficients are ascending powers of z: [c0, c1, ...] for
    g(z) = c0 + c1 z + ...  At least two are required.
    """
    if isinstance(spec, str):
        if spec not in BUILTIN_G_COEFFS:
            raise ModelError(
                f"unknown builtin {spec!r}; choose from {sorted(BUILTIN_G_COEFFS)}"
            )
        return ErosionModel(g_spec=spec, g_coeffs=BUILTIN_G_COEFFS[spec])
    coeffs = tuple(float(c) for c in spec)
    if len(coeffs) < 2:
        raise ModelError("polynomial g needs at least 2 coefficients")
    return ErosionModel(g_spec=coeffs, g_coeffs=coeffs)
