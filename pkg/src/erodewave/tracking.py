"""Characteristic-marker solver for the drop-coordinate evolution.

The unknown zeta(t, q) on [-D, 0] is represented by an ordered set of moving
markers (q_i, zeta_i), each advected by the characteristic ODEs

    dq/dt    = -(1 - zeta)^2 h'(zeta) F(zeta; q)
    dzeta/dt = -(1 - zeta)^2 h(zeta)^2 F(zeta; q)

with the nonlocal factor F(zeta; q) = exp int_q^0 h(zeta(s)) ds evaluated on
the piecewise-linear reconstruction (method of lines).  An optional leftmost
shock interval [-D, q+] carries zeta = 0; its right front moves by the
Rankine-Hugoniot-type speed with the exponential mean psi of the shock size,
and the Lax admissibility bound on the front's right state is enforced by
tangential marker re-emission.  Markers whose value reaches zero are clamped
into the shock; this realizes the nonnegativity projection.

Only monotone (non-decreasing) data is accepted: the scheme relies on the
single-shock structure such data preserves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .model import ErosionModel
from .profile import d_ss, h_prime_min, psi, z_adm
from .waves import StationaryWave, evaluate as wave_evaluate

_DT_UNDERFLOW = 1e-14
_SHOCK_MERGE_TOL = 1e-12  # shock removed when its size drops below this


class SolverError(RuntimeError):
    """Unrecoverable solver condition (dt underflow, broken invariant)."""


@dataclass
class SolverConfig:
    """Numerical parameters of one run.

    delta_q is the target marker spacing; boundary_gap (default 2*delta_q)
    triggers re-seeding of the rarefaction fan at q = 0; clamp_eps is the
    threshold below which a marker value counts as zero.
    """

    delta_q: float
    cfl: float = 0.4
    clamp_eps: float = 1e-10
    boundary_gap: Optional[float] = None
    t_end: float = 0.0
    snapshot_times: Tuple[float, ...] = ()
    series_dt: Optional[float] = None

    def __post_init__(self):
        if self.delta_q <= 0.0:
            raise ValueError("delta_q must be positive")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must be in (0, 1]")
        if self.boundary_gap is None:
            self.boundary_gap = 2.0 * self.delta_q


@dataclass
class MarkerField:
    """Solver state: ordered markers plus an optional leftmost shock.

    Markers satisfy -D < q_0 < ... < q_{n-1} < 0 with non-decreasing values
    in [0, 1]; when a shock is present all markers lie right of its front.
    u_left integrates the physical position of the left edge of the profile
    (anchored at 0 for t = 0), which lets snapshots be placed in absolute
    height coordinates.
    """

    total_drop: float
    qs: np.ndarray
    zs: np.ndarray
    shock_right: Optional[float] = None
    time: float = 0.0
    u_left: float = 0.0
    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    next_id: int = 0

    def copy(self) -> "MarkerField":
        return MarkerField(
            total_drop=self.total_drop,
            qs=self.qs.copy(),
            zs=self.zs.copy(),
            shock_right=self.shock_right,
            time=self.time,
            u_left=self.u_left,
            ids=self.ids.copy(),
            next_id=self.next_id,
        )

    @property
    def n_markers(self) -> int:
        return len(self.qs)

    @property
    def shock_size(self) -> float:
        if self.shock_right is None:
            return 0.0
        return self.shock_right + self.total_drop

    def total_variation(self) -> float:
        """TV of the reconstruction including both boundary jumps."""
        left = 0.0 if self.shock_right is not None else (self.zs[0] if len(self.zs) else 1.0)
        vals = np.concatenate([[1.0, left], self.zs, [1.0]])
        return float(np.sum(np.abs(np.diff(vals))))


@dataclass(frozen=True)
class Event:
    kind: str  # clamped | absorbed | emitted | seeded | merged | shock_created | shock_removed
    time: float
    q: float
    value: float = math.nan


@dataclass
class RunResult:
    snapshots: List[MarkerField]
    events: List[Event]
    series_times: np.ndarray
    series_l1: np.ndarray
    series_shock: np.ndarray
    series_u_left: np.ndarray
    stats: dict
    config: SolverConfig
    reference: Optional[StationaryWave] = None


# -- construction -------------------------------------------------------------


def init_state(
    zeta0: Callable[[np.ndarray], np.ndarray],
    total_drop: float,
    config: SolverConfig,
) -> MarkerField:
    """Sample non-decreasing initial data into a marker field.

    A maximal interval adjacent to -D on which zeta0 < clamp_eps becomes the
    initial shock; its right edge is located by bisection on the sampler.
    """
    D = float(total_drop)
    if D <= 0.0:
        raise ValueError("total drop must be positive")
    n_cells = max(int(math.ceil(D / config.delta_q)), 2)
    grid = np.linspace(-D, 0.0, n_cells + 1)
    qs = grid[1:-1]
    zs = np.asarray(zeta0(qs), dtype=float)
    z_end = float(np.asarray(zeta0(np.array([0.0])))[0])
    if abs(z_end - 1.0) > 1e-9:
        raise ValueError(f"initial data must satisfy zeta0(0) = 1, got {z_end}")
    if np.any(zs < -1e-12) or np.any(zs > 1.0 + 1e-12):
        raise ValueError("initial data out of [0, 1]")
    if np.any(np.diff(zs) < -1e-12):
        i = int(np.argmin(np.diff(zs)))
        raise ValueError(
            f"initial data is not non-decreasing near q={qs[i]:.6g}; "
            "this solver only accepts monotone data"
        )
    zs = np.clip(zs, 0.0, 1.0)

    shock_right = None
    below = zs < config.clamp_eps
    k = int(np.argmin(below)) if not below.all() else len(zs)
    if k > 0:
        # refine the edge of the zero set between the last zero sample and
        # the first positive one (or the boundary point q=0)
        lo = qs[k - 1]
        hi = qs[k] if k < len(zs) else 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(np.asarray(zeta0(np.array([mid])))[0]) < config.clamp_eps:
                lo = mid
            else:
                hi = mid
        shock_right = 0.5 * (lo + hi)
        qs = qs[k:]
        zs = zs[k:]

    ids = np.arange(len(qs), dtype=np.int64)
    return MarkerField(
        total_drop=D,
        qs=qs.astype(float).copy(),
        zs=zs.copy(),
        shock_right=shock_right,
        ids=ids,
        next_id=len(qs),
    )


# -- reconstruction and integrals ---------------------------------------------


def state_eval(state: MarkerField, q) -> np.ndarray:
    """Piecewise-linear reconstruction at arbitrary q in [-D, 0].

    Left of the first marker the value is extended as a constant (the jump at
    -D or at the shock front carries the actual discontinuity); the boundary
    node (0, 1) closes the fan on the right.
    """
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    if state.n_markers == 0:
        out = np.ones_like(q_arr)
    else:
        nodes_q = np.append(state.qs, 0.0)
        nodes_z = np.append(state.zs, 1.0)
        out = np.interp(q_arr, nodes_q, nodes_z, left=state.zs[0], right=1.0)
    if state.shock_right is not None:
        out = np.where(q_arr <= state.shock_right, 0.0, out)
    return out if np.ndim(q) else float(out[0])


def _suffix_integrals(model: ErosionModel, qs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """int_{q_i}^0 h(zeta(s)) ds at each marker, trapezoid on the polyline."""
    h_vals = np.asarray(model.h(zs))
    nodes_q = np.append(qs, 0.0)
    nodes_h = np.append(h_vals, model.h1)
    seg = np.diff(nodes_q) * 0.5 * (nodes_h[:-1] + nodes_h[1:])
    suffix = np.zeros(len(qs) + 1)
    if len(seg):
        suffix[:-1] = np.cumsum(seg[::-1])[::-1]
    return suffix[:-1]


def integral_F(state: MarkerField, model: ErosionModel, q: float) -> float:
    """F(zeta; q) = exp int_q^0 h(zeta) ds on the current reconstruction.

    Exact on the shock interval (integrand h(0)); 1 at q = 0.
    """
    D = state.total_drop
    if q < -D - 1e-9 or q > 1e-12:
        raise ValueError(f"q={q} outside [-{D}, 0]")
    q = min(q, 0.0)
    qs, zs = state.qs, state.zs
    n = len(qs)
    if n == 0:
        if state.shock_right is not None and q <= state.shock_right:
            acc = model.h1 * (0.0 - state.shock_right) + model.h0 * (state.shock_right - q)
        else:
            acc = model.h1 * (0.0 - q)
        return float(np.exp(acc))
    suffix = _suffix_integrals(model, qs, zs)
    if q >= qs[-1]:
        za = state_eval(state, q)
        acc = 0.5 * (model.h(za) + model.h1) * (0.0 - q)
        return float(np.exp(acc))
    front = state.shock_right if state.shock_right is not None else -D
    if q <= front:
        acc = suffix[0] + float(model.h(zs[0])) * (qs[0] - front) + model.h0 * (front - q)
        return float(np.exp(acc))
    if q <= qs[0]:
        acc = suffix[0] + float(model.h(zs[0])) * (qs[0] - q)
        return float(np.exp(acc))
    i = int(np.searchsorted(qs, q, side="right"))  # qs[i-1] < q <= qs[i]
    za = state_eval(state, q)
    acc = suffix[i] + 0.5 * (float(model.h(za)) + float(model.h(zs[i]))) * (qs[i] - q)
    return float(np.exp(acc))


# -- velocities ---------------------------------------------------------------


def _derivatives(
    model: ErosionModel,
    D: float,
    qs: np.ndarray,
    zs: np.ndarray,
    shock_right: Optional[float],
):
    """Right-hand sides for all markers, the shock front, and the left edge."""
    zc = np.clip(zs, 0.0, 1.0)
    suffix = _suffix_integrals(model, qs, zc)
    F = np.exp(suffix)
    hv = np.asarray(model.h(zc))
    hp = np.asarray(model.h_prime(zc))
    omz2 = (1.0 - zc) ** 2
    dq = -omz2 * hp * F
    dz = -omz2 * hv**2 * F

    ds = 0.0
    if shock_right is not None:
        # the front's right state is the first marker still right of the
        # front (a stage state may have markers that just crossed it)
        i0 = int(np.searchsorted(qs, shock_right, side="right"))
        if i0 < len(qs):
            z_plus = float(zc[i0])
            i_front = suffix[i0] + float(hv[i0]) * (qs[i0] - shock_right)
        else:
            z_plus = 1.0
            i_front = model.h1 * (0.0 - shock_right)
        f_front = math.exp(i_front)
        delta = shock_right + D
        if z_plus > 0.0:
            ds = f_front * (1.0 - z_plus) / z_plus * (
                float(psi(model, max(delta, 0.0))) - float(model.h(z_plus))
            )
        du_left = f_front * float(psi(model, max(delta, 0.0)))
    else:
        i0 = int(np.searchsorted(qs, -D, side="right"))
        if i0 < len(qs):
            z_edge = float(zc[i0])
            f_edge = math.exp(suffix[i0] + float(hv[i0]) * (qs[i0] + D))
            du_left = f_edge * float(model.h(z_edge))
        else:
            du_left = model.h1
    return dq, dz, ds, du_left


def marker_velocity(state: MarkerField, model: ErosionModel, i: int) -> Tuple[float, float]:
    """(dq/dt, dzeta/dt) of marker i in the current state."""
    dq, dz, _, _ = _derivatives(model, state.total_drop, state.qs, state.zs, state.shock_right)
    return float(dq[i]), float(dz[i])


def shock_right_speed(state: MarkerField, model: ErosionModel) -> float:
    """Speed of the shock's right front; 0 (degenerate) when z+ = 0."""
    if state.shock_right is None:
        raise SolverError("state has no shock")
    _, _, ds, _ = _derivatives(model, state.total_drop, state.qs, state.zs, state.shock_right)
    return float(ds)


def merge_time_bound(model: ErosionModel, total_drop: float, zeta_o: float) -> float:
    """Upper bound on the time a characteristic starting at value zeta_o < 1
    needs to merge into a singularity, using the squared (1 - zeta_o) factor
    carried by the characteristic speed."""
    if zeta_o >= 1.0:
        return math.inf
    return total_drop / ((1.0 - zeta_o) ** 2 * h_prime_min(model))


# -- time stepping -------------------------------------------------------------


def _dt_limit(
    qs: np.ndarray,
    zs: np.ndarray,
    dq: np.ndarray,
    dz: np.ndarray,
    shock_right: Optional[float],
    ds: float,
    D: float,
    cross_slack: float,
    z_floor: float,
) -> float:
    limit = math.inf
    if len(qs) >= 2:
        closing = dq[:-1] - dq[1:]
        gaps = np.diff(qs)
        mask = closing > 0.0
        if np.any(mask):
            limit = min(limit, float(np.min(gaps[mask] / closing[mask])))
    # markers already below z_floor are allowed to overshoot zero within one
    # step (the clamp projection absorbs them); throttling dt down to the
    # exact zero-hitting time would stall the run at every absorption
    mask = (dz < 0.0) & (zs > z_floor)
    if np.any(mask):
        limit = min(limit, float(np.min(zs[mask] / -dz[mask])))
    if shock_right is not None:
        # the front's right state must track the adjacent marker, so markers
        # are absorbed roughly one at a time: the leftmost one may close on
        # the front but only overshoot it by cross_slack.  (No such limit at
        # the plain -D boundary: suffix integrals never look left, so a deep
        # crossing there is inert and removed after the step.)
        if len(qs):
            closing = ds - float(dq[0])
            if closing > 0.0:
                limit = min(limit, (float(qs[0]) - shock_right + cross_slack) / closing)
        if ds > 0.0:
            room = (float(qs[0]) - shock_right + cross_slack) if len(qs) else (0.0 - shock_right)
            limit = min(limit, room / ds)
        elif ds < 0.0:
            limit = min(limit, (shock_right + D) / -ds)
    return limit


def step(
    state: MarkerField,
    model: ErosionModel,
    config: SolverConfig,
    dt_cap: float = math.inf,
) -> Tuple[MarkerField, List[Event]]:
    """One explicit RK2 (Heun) step followed by the structural projections.

    After the ODE update, in order: (a) values below clamp_eps are clamped
    into the shock (creating one if needed), (b) markers overtaken by the
    shock front or the left boundary are absorbed, (c) an inadmissible front
    state re-emits a tangential marker at z_adm, (d) the fan at q = 0 is
    re-seeded when the boundary gap opens beyond boundary_gap, (e) markers
    closer than delta_q/100 merge, (f) a shock shrunk back to -D is removed.
    """
    D = state.total_drop
    qs, zs = state.qs, state.zs
    s = state.shock_right

    dq1, dz1, ds1, du1 = _derivatives(model, D, qs, zs, s)
    phys = _dt_limit(
        qs, zs, dq1, dz1, s, ds1, D,
        cross_slack=config.delta_q / 2.0,
        z_floor=max(100.0 * config.clamp_eps, 0.5 * config.delta_q),
    )
    dt = min(config.cfl * phys, dt_cap)
    if not math.isfinite(dt):
        # equilibrium (all velocities vanish): advance time by a unit step
        dt = 1.0
    if dt <= _DT_UNDERFLOW:
        raise SolverError(f"time step underflow: dt={dt:.3e} at t={state.time:.6g}")

    q_mid = qs + dt * dq1
    z_mid = np.clip(zs + dt * dz1, 0.0, 1.0)
    s_mid = None if s is None else min(s + dt * ds1, -1e-15)
    dq2, dz2, ds2, du2 = _derivatives(model, D, q_mid, z_mid, s_mid)

    new_qs = qs + 0.5 * dt * (dq1 + dq2)
    new_zs = np.clip(zs + 0.5 * dt * (dz1 + dz2), 0.0, 1.0)
    new_s = None if s is None else min(s + 0.5 * dt * (ds1 + ds2), -1e-15)
    new_time = state.time + dt
    new_u_left = state.u_left + 0.5 * dt * (du1 + du2)
    ids = state.ids
    next_id = state.next_id
    events: List[Event] = []

    # (a) clamp vanished markers into the shock
    below = new_zs < config.clamp_eps
    k = int(np.argmin(below)) if not below.all() else len(new_zs)
    if k > 0:
        clamp_q = float(new_qs[k - 1])
        for j in range(k):
            events.append(Event("clamped", new_time, float(new_qs[j]), float(new_zs[j])))
        if new_s is None:
            new_s = min(clamp_q, -1e-15)
            events.append(Event("shock_created", new_time, new_s))
        else:
            new_s = min(max(new_s, clamp_q), -1e-15)
        new_qs, new_zs, ids = new_qs[k:], new_zs[k:], ids[k:]

    # (b) absorb markers overtaken by the front or the left boundary
    barrier = new_s if new_s is not None else -D
    k = int(np.searchsorted(new_qs, barrier, side="right"))
    if k > 0:
        for j in range(k):
            events.append(Event("absorbed", new_time, float(new_qs[j]), float(new_zs[j])))
        new_qs, new_zs, ids = new_qs[k:], new_zs[k:], ids[k:]

    # (c) tangential re-emission keeps the front state admissible
    if new_s is not None:
        delta = new_s + D
        if delta > 0.0:
            z_plus = float(new_zs[0]) if len(new_zs) else 1.0
            # z+ > z_adm(delta) iff h(z+) - z+(1-z+)h'(z+) > psi(delta),
            # since the left side is strictly increasing in z+
            lax_lhs = float(model.h(z_plus)) - z_plus * (1.0 - z_plus) * float(
                model.h_prime(z_plus)
            )
            if lax_lhs > float(psi(model, delta)) + 1e-12:
                za = float(z_adm(model, min(delta, d_ss(model))))
                room = (new_qs[0] - new_s) if len(new_qs) else (0.0 - new_s)
                if z_plus > za + 1e-12 and za >= 10.0 * config.clamp_eps and room > 2e-12:
                    q_new = new_s + min(1e-9 * max(1.0, D), 0.5 * room)
                    new_qs = np.insert(new_qs, 0, q_new)
                    new_zs = np.insert(new_zs, 0, za)
                    ids = np.insert(ids, 0, next_id)
                    next_id += 1
                    events.append(Event("emitted", new_time, q_new, za))

    # (d) re-seed the rarefaction fan: at the boundary, and inside any marker
    # gap stretched beyond boundary_gap (the fan spreads exponentially, so a
    # finite marker set thins out wherever characteristics separate)
    if len(new_qs):
        gap0 = 0.0 - new_qs[-1]
        if gap0 > config.boundary_gap:
            q_new = -0.5 * config.boundary_gap
            z_last = float(new_zs[-1])
            z_new = z_last + (1.0 - z_last) * (q_new - new_qs[-1]) / (0.0 - new_qs[-1])
            new_qs = np.append(new_qs, q_new)
            new_zs = np.append(new_zs, min(z_new, 1.0))
            ids = np.append(ids, next_id)
            next_id += 1
            events.append(Event("seeded", new_time, q_new, z_new))
    if len(new_qs) >= 2:
        gaps = np.diff(new_qs)
        if np.any(gaps > config.boundary_gap):
            fill_q, fill_z = [], []
            for i in np.nonzero(gaps > config.boundary_gap)[0]:
                n_ins = int(math.ceil(gaps[i] / config.boundary_gap)) - 1
                frac = (np.arange(1, n_ins + 1)) / (n_ins + 1)
                fill_q.append(new_qs[i] + frac * gaps[i])
                fill_z.append(new_zs[i] + frac * (new_zs[i + 1] - new_zs[i]))
            ins_q = np.concatenate(fill_q)
            ins_z = np.concatenate(fill_z)
            pos = np.searchsorted(new_qs, ins_q)
            new_qs = np.insert(new_qs, pos, ins_q)
            new_zs = np.insert(new_zs, pos, ins_z)
            ids = np.insert(ids, pos, np.arange(next_id, next_id + len(ins_q)))
            next_id += len(ins_q)
            for qv, zv in zip(ins_q, ins_z):
                events.append(Event("seeded", new_time, float(qv), float(zv)))

    # (e) merge markers that drifted too close
    if len(new_qs) >= 2:
        thresh = config.delta_q / 100.0
        if np.any(np.diff(new_qs) < thresh):
            keep_q, keep_z, keep_id = [], [], []
            i = 0
            n = len(new_qs)
            while i < n:
                if i + 1 < n and new_qs[i + 1] - new_qs[i] < thresh:
                    qm = 0.5 * (new_qs[i] + new_qs[i + 1])
                    zm = 0.5 * (new_zs[i] + new_zs[i + 1])
                    keep_q.append(qm)
                    keep_z.append(zm)
                    keep_id.append(next_id)
                    next_id += 1
                    events.append(Event("merged", new_time, qm, zm))
                    i += 2
                else:
                    keep_q.append(new_qs[i])
                    keep_z.append(new_zs[i])
                    keep_id.append(ids[i])
                    i += 1
            new_qs = np.asarray(keep_q)
            new_zs = np.asarray(keep_z)
            ids = np.asarray(keep_id, dtype=np.int64)

    # (f) drop a shock that has merged back into the left boundary
    if new_s is not None and new_s <= -D + _SHOCK_MERGE_TOL:
        events.append(Event("shock_removed", new_time, new_s))
        new_s = None

    # structural invariants; tiny violations are projected, real ones raise
    if len(new_zs) >= 2:
        dzv = np.diff(new_zs)
        worst = float(np.min(dzv)) if len(dzv) else 0.0
        if worst < -1e-9:
            raise SolverError(f"marker monotonicity violated by {worst:.3e} at t={new_time:.6g}")
        if worst < 0.0:
            new_zs = np.maximum.accumulate(new_zs)
    if len(new_qs) >= 2 and np.any(np.diff(new_qs) <= 0.0):
        raise SolverError(f"marker ordering violated at t={new_time:.6g}")

    new_state = MarkerField(
        total_drop=D,
        qs=new_qs,
        zs=new_zs,
        shock_right=new_s,
        time=new_time,
        u_left=new_u_left,
        ids=ids,
        next_id=next_id,
    )
    return new_state, events


def run(
    state: MarkerField,
    model: ErosionModel,
    config: SolverConfig,
    reference: Optional[StationaryWave] = None,
) -> RunResult:
    """Advance to t_end, recording scheduled snapshots and an L1 series.

    Deterministic for fixed inputs.  The L1 series is sampled every
    series_dt (if set, else only at snapshots) against the reference wave.
    """
    t_end = float(config.t_end)
    snap_times = sorted(t for t in config.snapshot_times if 0.0 < t <= t_end)
    if config.series_dt:
        n_series = int(math.floor(t_end / config.series_dt + 1e-9))
        series_marks = [i * config.series_dt for i in range(1, n_series + 1)]
    else:
        series_marks = list(snap_times)
    stops = sorted(set(snap_times) | set(series_marks) | ({t_end} if t_end > 0 else set()))

    current = state.copy()
    snapshots = [current.copy()]
    events: List[Event] = []
    s_t, s_l1, s_shock, s_ul = [], [], [], []

    def record_series(st: MarkerField):
        s_t.append(st.time)
        s_l1.append(l1_distance(st, reference, model) if reference is not None else math.nan)
        s_shock.append(st.shock_right if st.shock_right is not None else math.nan)
        s_ul.append(st.u_left)

    record_series(current)
    n_steps = 0
    min_dt = math.inf
    snap_set = set(snap_times)
    for stop in stops:
        while current.time < stop - 1e-12:
            prev_t = current.time
            current, evs = step(current, model, config, dt_cap=stop - current.time)
            events.extend(evs)
            n_steps += 1
            min_dt = min(min_dt, current.time - prev_t)
        if any(abs(stop - tm) < 1e-9 for tm in series_marks):
            record_series(current)
        if any(abs(stop - tm) < 1e-9 for tm in snap_set) or stop == t_end:
            snapshots.append(current.copy())

    stats = {
        "n_steps": n_steps,
        "min_dt": min_dt if math.isfinite(min_dt) else 0.0,
        "n_markers_final": current.n_markers,
        "n_events": len(events),
    }
    return RunResult(
        snapshots=snapshots,
        events=events,
        series_times=np.asarray(s_t),
        series_l1=np.asarray(s_l1),
        series_shock=np.asarray(s_shock),
        series_u_left=np.asarray(s_ul),
        stats=stats,
        config=config,
        reference=reference,
    )


# -- distance -----------------------------------------------------------------


def l1_distance(state: MarkerField, wave: StationaryWave, model: ErosionModel) -> float:
    """int |zeta - Z| dq by composite Simpson, split at both shock fronts.

    Subintervals where both arguments are identically zero contribute
    exactly 0.
    """
    if abs(state.total_drop - wave.total_drop) > 1e-9:
        raise ValueError("total drop mismatch between state and wave")
    D = state.total_drop
    cuts = {-D, 0.0}
    if state.shock_right is not None:
        cuts.add(float(state.shock_right))
    if wave.shock_right is not None:
        cuts.add(float(wave.shock_right))
    edges = sorted(c for c in cuts if -D <= c <= 0.0)
    total = 0.0
    interior = 1e-13 * max(D, 1.0)
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 2 * interior:
            continue
        state_zero = state.shock_right is not None and b <= state.shock_right + interior
        wave_zero = wave.shock_right is not None and b <= wave.shock_right + interior
        if state_zero and wave_zero:
            continue
        n = max(int(round(4000 * (b - a) / D)), 4)
        n += n % 2  # Simpson needs an even interval count
        xs = np.linspace(a + interior, b - interior, n + 1)
        ys = np.abs(state_eval(state, xs) - np.asarray(wave_evaluate(wave, model, xs)))
        hstep = (xs[-1] - xs[0]) / n
        weights = np.ones(n + 1)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        total += hstep / 3.0 * float(np.dot(weights, ys))
    return total
