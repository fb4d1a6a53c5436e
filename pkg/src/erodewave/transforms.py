"""Maps between the height-graph coordinate systems.

Three pictures of the same profile: z(u) (inverse slope against height),
zeta(q) (inverse slope against the drop coordinate, where traveling waves
are stationary), and the physical curve (x, u(x)) with slope w = 1/z.
The drop function q(u) = int_u^inf (z - 1) dv links the first two; vertical
jumps of u correspond to intervals where z = 0, which keep their length
under u <-> q (dq = du there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .tracking import MarkerField

# zeta is capped below 1 by this amount when mapping back to u, so the
# infinite flat tail near the boundary becomes a long finite one
CAP_EPS = 1e-6

# geometric refinement step for the tail quadrature: consecutive samples keep
# (1 - z) within a factor e^0.002, making trapezoid drops accurate to ~1e-9/seg
_LOG_STEP = 2e-3


@dataclass
class ZProfile:
    """Sampled z(u) on a finite window, z = 1 outside."""

    u: np.ndarray
    z: np.ndarray
    zero_intervals: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if len(self.u) != len(self.z):
            raise ValueError("u and z must have equal length")
        if np.any(np.diff(self.u) < 0.0):
            raise ValueError("u samples must be non-decreasing")
        if np.any(self.z < -1e-12) or np.any(self.z > 1.0 + 1e-12):
            raise ValueError("z out of [0, 1]")
        self.z = np.clip(self.z, 0.0, 1.0)


@dataclass
class HeightCurve:
    """Physical profile (x, u) with explicit vertical-jump markers."""

    x: np.ndarray
    u: np.ndarray
    w: np.ndarray  # slope 1/z, +inf on jumps
    jump_flag: np.ndarray
    left_offset: float = 0.0  # u - x at the left end (should be -D)
    right_offset: float = 0.0  # u - x at the right end (should be 0)


@dataclass
class QProfile:
    """zeta(q) samples produced by u_to_q; callable as an initial-data sampler."""

    total_drop: float
    q: np.ndarray
    zeta: np.ndarray
    shock_right: Optional[float] = None

    def __call__(self, q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.interp(q_arr, self.q, self.zeta, left=self.zeta[0], right=1.0)
        out = np.where(q_arr >= -1e-15, 1.0, out)
        if self.shock_right is not None:
            out = np.where(q_arr <= self.shock_right, 0.0, out)
        return out if np.ndim(q) else float(out[0])


def total_drop(zp: ZProfile) -> float:
    """D = int (1 - z) du by trapezoid; exact on z = 0 intervals."""
    return float(np.trapezoid(1.0 - zp.z, zp.u))


def u_to_q(zp: ZProfile) -> QProfile:
    """Change variables z(u) -> zeta(q) through the drop function.

    Requires z non-decreasing right of the leading z = 1 plateau.  A zero
    interval at the left edge of the nontrivial region becomes the shock
    [-D, -D + length] (dq = du there); z = 1 plateaus collapse to single q
    nodes.
    """
    u, z = zp.u, zp.z
    nontrivial = np.nonzero(z < 1.0 - 1e-14)[0]
    if len(nontrivial) == 0:
        return QProfile(total_drop=0.0, q=np.array([0.0]), zeta=np.array([1.0]))
    start = int(nontrivial[0])
    if np.any(np.diff(z[start:]) < -1e-12):
        i = start + int(np.argmin(np.diff(z[start:])))
        raise ValueError(f"z is not non-decreasing on the nontrivial region (near u={u[i]:.6g})")

    # q(u_i) = -int_{u_i}^{u_max} (1 - z) dv, cumulated from the right
    seg = np.diff(u) * 0.5 * ((1.0 - z[:-1]) + (1.0 - z[1:]))
    q = np.zeros_like(u)
    q[:-1] = -np.cumsum(seg[::-1])[::-1]
    D = -q[0]

    shock_right = None
    if z[start] < 1e-14:
        j = start
        while j < len(z) and z[j] < 1e-14:
            j += 1
        shock_right = float(q[j - 1])
        if shock_right <= -D + 1e-15:
            shock_right = None

    # interpolation nodes right of the shock; on runs of equal q keep the
    # last node (the top of a jump)
    mask = np.ones(len(q), dtype=bool)
    mask[:-1] = np.diff(q) > 1e-15
    if shock_right is not None:
        mask &= (q >= shock_right - 1e-15) & (z >= 1e-14)
    qk, zk = q[mask], z[mask]
    if len(qk) == 0 or qk[-1] < -1e-15:
        qk = np.append(qk, 0.0)
        zk = np.append(zk, 1.0)
    return QProfile(total_drop=float(D), q=qk, zeta=zk, shock_right=shock_right)


def q_to_u(state: MarkerField, u_anchor: float, cap_eps: float = CAP_EPS) -> ZProfile:
    """Map a marker field back to z(u), anchored by u(q=0) = u_anchor.

    du/dq = 1/(1 - zeta) with zeta capped at 1 - cap_eps; each linear segment
    of the reconstruction is subdivided geometrically in (1 - zeta) so the
    trapezoid in u resolves the exponential tails.
    """
    nodes_q: List[float] = []
    nodes_z: List[float] = []
    D = state.total_drop
    if state.shock_right is not None:
        nodes_q.extend([-D, state.shock_right])
        nodes_z.extend([0.0, 0.0])
    elif state.n_markers:
        nodes_q.append(-D)
        nodes_z.append(float(state.zs[0]))
    for qv, zv in zip(state.qs, state.zs):
        if state.shock_right is not None and qv <= state.shock_right:
            continue
        nodes_q.append(float(qv))
        nodes_z.append(float(zv))
    nodes_q.append(0.0)
    nodes_z.append(1.0)

    qs = [nodes_q[0]]
    zs = [min(nodes_z[0], 1.0 - cap_eps)]
    for (qa, za), (qb, zb) in zip(zip(nodes_q[:-1], nodes_z[:-1]), zip(nodes_q[1:], nodes_z[1:])):
        if qb <= qa:
            continue
        za_c = min(za, 1.0 - cap_eps)
        zb_c = min(zb, 1.0 - cap_eps)
        ratio = (1.0 - za_c) / (1.0 - zb_c)
        n_sub = max(int(math.ceil(abs(math.log(max(ratio, 1e-300))) / _LOG_STEP)), 1)
        frac = np.arange(1, n_sub + 1) / n_sub
        sub_q = qa + frac * (qb - qa)
        sub_z = np.minimum(za + frac * (zb - za), 1.0 - cap_eps)
        qs.extend(sub_q.tolist())
        zs.extend(sub_z.tolist())

    q_arr = np.asarray(qs)
    z_arr = np.asarray(zs)
    du = np.diff(q_arr) * 0.5 * (1.0 / (1.0 - z_arr[:-1]) + 1.0 / (1.0 - z_arr[1:]))
    u_arr = np.empty_like(q_arr)
    u_arr[-1] = u_anchor
    u_arr[:-1] = u_anchor - np.cumsum(du[::-1])[::-1]

    zero_intervals = []
    if state.shock_right is not None:
        zero_intervals.append((float(u_arr[0]), float(u_arr[0]) + state.shock_size))
    return ZProfile(u=u_arr, z=z_arr, zero_intervals=zero_intervals)


def reconstruct_height(zp: ZProfile, x_anchor: float) -> HeightCurve:
    """Physical curve x(u) = x_anchor + int z du; z = 0 intervals collapse
    to vertical jumps at a single x."""
    u, z = zp.u, zp.z
    dx = np.diff(u) * 0.5 * (z[:-1] + z[1:])
    x = np.empty_like(u)
    x[0] = x_anchor
    x[1:] = x_anchor + np.cumsum(dx)
    with np.errstate(divide="ignore"):
        w = np.where(z > 0.0, 1.0 / np.maximum(z, 1e-300), np.inf)
    jump = np.zeros(len(u), dtype=bool)
    if len(u) >= 2:
        flat = np.diff(x) <= 1e-15 * max(abs(x[-1]), 1.0)
        steep = np.diff(u) > 0
        seg_jump = flat & steep
        jump[:-1] |= seg_jump
        jump[1:] |= seg_jump
    D = total_drop(zp)
    return HeightCurve(
        x=x,
        u=u,
        w=w,
        jump_flag=jump,
        left_offset=float(u[0] - x[0]),
        right_offset=float(u[-1] - x[-1]),
    )
