"""Envelope barriers and the convergence experiment.

The solution with monotone data is trapped, after computable times, between
explicit lower and upper curves built from shifted copies of the smooth
profile: stage 1 controls the rarefaction fan (shift by eps), stage 2 moves
an auxiliary front along the shock-speed ODE until it passes the stationary
front location up to C*eps.  The L1 gap between the barriers is O(eps),
which is what makes the traveling wave an attractor.

Validity times are computed both by integrating the front ODE and from the
closed-form bounds; both are estimates (see sandwich_check, which also
reports the first time the sandwich empirically holds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ._solve import golden_min
from .model import ErosionModel, ModelError
from .profile import (
    d_hk,
    d_ss,
    h_prime_min,
    hsq_over_hprime_max,
    kappa,
    phi,
    psi,
    z_adm,
    z_stat,
)
from .tracking import MarkerField, RunResult, SolverConfig, init_state, run, state_eval
from .waves import StationaryWave, WaveType, construct, evaluate as wave_evaluate

_GRID_N = 4001


@dataclass
class Envelope:
    kind: str  # upper_stage1 | upper_stage2 | lower_stage1 | lower_stage2
    eps: float
    total_drop: float
    curve: Callable[[np.ndarray], np.ndarray]
    switch_q: Optional[float]  # q_hat for stage 2, q1 for the lower stage 1
    validity_time: float
    metadata: dict = field(default_factory=dict)

    def __call__(self, q):
        return self.curve(q)


@dataclass
class SandwichReport:
    holds: bool
    tol: float
    checked_from: float
    first_violation: Optional[tuple]  # (t, q, side, amount)
    empirical_onset: Optional[float]  # first snapshot time from which it holds onward
    worst_excess: float


@dataclass
class ConvergenceResult:
    run: RunResult
    wave: StationaryWave
    times: np.ndarray
    l1: np.ndarray
    speed_estimate: float
    feature_times: np.ndarray
    feature_positions: np.ndarray


# -- envelope curves -----------------------------------------------------------


def _phi_plus_curve(model, D, eps):
    def curve(q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.ones_like(q_arr)
        mid = (q_arr > -D) & (q_arr <= -eps)
        out[mid] = np.asarray(phi(model, q_arr[mid] + eps))
        out[q_arr <= -D] = 1.0
        return out if np.ndim(q) else float(out[0])

    return curve


def _phi_curve(model, D):
    def curve(q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.asarray(phi(model, np.minimum(q_arr, 0.0)), dtype=float).copy()
        out[q_arr <= -D] = 1.0
        return out if np.ndim(q) else float(out[0])

    return curve


def _z_stat_extended(model, delta):
    """z_stat clamped to 1 beyond d_ss (a larger shock admits z+ = 1)."""
    dss = d_ss(model)
    delta_arr = np.minimum(np.asarray(delta, dtype=float), dss)
    return z_stat(model, delta_arr)


def upper_envelope(model: ErosionModel, D: float, eps: float, zeta0) -> Envelope:
    """Stage-1 upper barrier: phi shifted left by eps, plateau 1 near q = 0.

    Valid after T1 = D / ((1 - zeta0(-eps)) min h').  When the data already
    sits below phi near the boundary the unshifted phi works.
    """
    if eps <= 0.0 or eps >= D:
        raise ModelError("need 0 < eps < D for the upper envelope")
    probe = np.linspace(-eps * (1.0 - 1e-9), -1e-12, 401)
    below_phi = bool(
        np.all(np.asarray(zeta0(probe)) <= np.asarray(phi(model, probe)) + 1e-12)
    )
    curve = _phi_curve(model, D) if below_phi else _phi_plus_curve(model, D, eps)
    zeta_o = float(np.asarray(zeta0(np.array([-eps])))[0])
    if zeta_o >= 1.0 - 1e-14:
        t1 = math.inf
    else:
        t1 = D / ((1.0 - zeta_o) * h_prime_min(model))
    return Envelope(
        kind="upper_stage1",
        eps=eps,
        total_drop=D,
        curve=curve,
        switch_q=-eps,
        validity_time=t1,
        metadata={"zeta_o": zeta_o, "plain_phi": below_phi},
    )


def _front_travel_time(model, D, grid_q, profile_vals, forward: bool) -> float:
    """Time for the auxiliary front to traverse grid_q, from the shock-speed
    ODE dq/dt = F (1-p)/p (psi(q+D) - h(p)) with p the envelope profile.

    Solved as a quadrature of dt/dq; returns +inf if the speed loses its
    sign on the way (the front would stall).
    """
    p = np.asarray(profile_vals, dtype=float)
    h_vals = np.asarray(model.h(np.clip(p, 0.0, 1.0)))
    # F along the envelope: exp of the suffix integral of h over [q, 0]
    seg = np.diff(grid_q) * 0.5 * (h_vals[:-1] + h_vals[1:])
    suffix = np.zeros_like(grid_q)
    suffix[:-1] = np.cumsum(seg[::-1])[::-1]
    F = np.exp(suffix)
    bracket = np.asarray(psi(model, np.maximum(grid_q + D, 0.0))) - h_vals
    if not forward:
        bracket = -bracket
    speed = np.where(p > 0.0, F * (1.0 - p) / np.maximum(p, 1e-300) * bracket, np.inf)
    interior = slice(1, None) if forward else slice(None, -1)
    if np.any(speed[interior] <= 0.0):
        return math.inf
    with np.errstate(divide="ignore"):
        dt_dq = np.where(speed > 0.0, 1.0 / speed, 0.0)
    return float(np.trapezoid(dt_dq, grid_q))


def upper_stage2(model: ErosionModel, D: float, eps: float, env1: Envelope) -> Envelope:
    """Stage-2 upper barrier Z+ for drops with a stationary shock (D > d_hk).

    The zero segment ends at q_hat = q+ - C1 eps with C1 = 2 max(phi')/kappa;
    the crossing time is integrated from the front ODE started at
    -d_hk - eps and bounded in closed form through v_eps.
    """
    dhk = d_hk(model)
    if not D > dhk:
        raise ModelError("upper stage 2 needs D > d_hk (Types 3 and 4)")
    wave = construct(model, D)
    q_plus = float(wave.shock_right)
    kap = kappa(model)
    c1 = 2.0 * hsq_over_hprime_max(model) / kap
    q_hat = q_plus - c1 * eps
    # C1*eps can exceed the distance to the boundary, leaving no zero
    # segment; Z+ then degenerates to phi+ and stage 2 adds no waiting time
    clamped = q_hat <= -D
    if clamped:
        q_hat = -D + 1e-12
    phi_plus = env1.curve

    def curve(q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.asarray(phi_plus(q_arr), dtype=float).copy()
        out[(q_arr > -D) & (q_arr <= q_hat)] = 0.0
        out[q_arr <= -D] = 1.0
        return out if np.ndim(q) else float(out[0])

    v_eps = math.nan
    if clamped:
        t2_ode = 0.0
        t2_bound = 0.0
    else:
        q_start = max(-dhk - eps, -D + 1e-9)
        if q_start < q_hat:
            grid = np.linspace(q_start, q_hat, _GRID_N)
            t2_ode = _front_travel_time(model, D, grid, phi_plus(grid), forward=True)
        else:
            t2_ode = 0.0

        vgrid = np.linspace(-D + (q_hat + D) / _GRID_N, q_hat, _GRID_N)
        vvals = np.asarray(_z_stat_extended(model, vgrid + D)) - np.asarray(phi_plus(vgrid))
        i = int(np.argmin(vvals))
        lo, hi = vgrid[max(i - 1, 0)], vgrid[min(i + 1, len(vgrid) - 1)]
        _, v_eps = golden_min(
            lambda t: float(_z_stat_extended(model, t + D)) - float(phi_plus(t)), lo, hi, 1e-8
        )
        v_eps = min(v_eps, float(vvals[i]))

        one_minus = 1.0 - float(phi(model, q_plus))
        if one_minus > 1e-12 and v_eps > 0.0:
            t2_bound = (dhk + eps) / (one_minus * h_prime_min(model) * v_eps)
        else:
            t2_bound = math.inf
    t2 = max(t2_ode, t2_bound) if math.isfinite(t2_bound) else t2_ode
    return Envelope(
        kind="upper_stage2",
        eps=eps,
        total_drop=D,
        curve=curve,
        switch_q=q_hat,
        validity_time=env1.validity_time + t2,
        metadata={
            "q_plus": q_plus,
            "C1": c1,
            "v_eps": v_eps,
            "t2_ode": t2_ode,
            "t2_bound": t2_bound,
            "q_hat_clamped": clamped,
        },
    )


def lower_envelope(model: ErosionModel, D: float, eps: float, zeta0) -> Envelope:
    """Stage-1 lower barrier: phi shifted right by eps, zero left of q1.

    q1 is the rightmost intersection of phi(q - eps) with z_adm(q + D), or
    -D when the shifted profile clears the admissibility curve entirely.
    """
    dss = d_ss(model)
    if not D < dss:
        raise ModelError("lower envelope needs D < d_ss")
    if eps <= 0.0 or eps >= D:
        raise ModelError("need 0 < eps < D for the lower envelope")

    grid = np.linspace(-D, 0.0, _GRID_N)
    f_vals = np.asarray(phi(model, grid - eps)) - np.asarray(z_adm(model, grid + D))
    q1 = -D
    if f_vals[-1] <= 0.0:
        q1 = 0.0
    else:
        idx = np.nonzero(f_vals <= 0.0)[0]
        if len(idx):
            i = int(idx[-1])  # rightmost non-positive sample
            lo, hi = grid[i], grid[i + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = float(phi(model, mid - eps)) - float(z_adm(model, mid + D))
                if fm <= 0.0:
                    lo = mid
                else:
                    hi = mid
            q1 = 0.5 * (lo + hi)

    def curve(q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.asarray(phi(model, np.minimum(q_arr - eps, 0.0)), dtype=float).copy()
        out[(q_arr > -D) & (q_arr < q1)] = 0.0
        out[q_arr <= -D] = 1.0
        return out if np.ndim(q) else float(out[0])

    # continuity construction: largest interval [q_o, 0] on which the data
    # already dominates the barrier determines zeta_o
    z0_vals = np.asarray(zeta0(grid))
    barrier = np.asarray(curve(grid))
    ok = z0_vals >= barrier - 1e-12
    q_o_idx = len(grid) - 1
    for i in range(len(grid) - 1, 0, -1):
        if not ok[i]:
            break
        q_o_idx = i
    zeta_o = float(z0_vals[q_o_idx])
    if zeta_o >= 1.0 - 1e-14:
        t1 = math.inf
    else:
        t1 = D / ((1.0 - zeta_o) * h_prime_min(model))
    return Envelope(
        kind="lower_stage1",
        eps=eps,
        total_drop=D,
        curve=curve,
        switch_q=q1,
        validity_time=t1,
        metadata={"q1": q1, "zeta_o": zeta_o},
    )


def lower_stage2(model: ErosionModel, D: float, eps: float, env1: Envelope) -> Envelope:
    """Stage-2 lower barrier Z-: zero segment up to q_hat = q+ + C2 eps.

    The auxiliary front starts at q1 and travels left along the shock-speed
    ODE; for Type 1 it merges into -D instead.
    """
    dss = d_ss(model)
    if not D < dss:
        raise ModelError("lower stage 2 needs D < d_ss")
    q1 = float(env1.metadata["q1"])
    if not q1 > -D:
        raise ModelError("lower stage 2 needs q1 > -D (graphs intersect)")
    wave = construct(model, D)
    q_plus = float(wave.shock_right) if wave.shock_right is not None else -D
    kap = kappa(model)
    c2 = 2.0 * hsq_over_hprime_max(model) / kap
    q_hat = min(q_plus + c2 * eps, -1e-12)
    type1 = wave.wave_type is WaveType.TYPE1

    def curve(q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.asarray(phi(model, np.minimum(q_arr - eps, 0.0)), dtype=float).copy()
        if not type1:
            out[(q_arr > -D) & (q_arr <= q_hat)] = 0.0
        out[q_arr <= -D] = 1.0
        return out if np.ndim(q) else float(out[0])

    # when C2*eps already pushes q_hat past q1, the zero segment of Z- covers
    # everything phi- guarantees and no further front travel is needed
    degenerate = q_hat >= q1
    v_eps = math.nan
    if degenerate:
        t2_ode = 0.0
        t2_bound = 0.0
    else:
        q_stop = max(q_hat, -D + 1e-9)
        grid = np.linspace(q_stop, q1, _GRID_N)
        profile_vals = np.asarray(phi(model, grid - eps))
        t2_ode = _front_travel_time(model, D, grid, profile_vals, forward=False)

        vgrid = np.linspace(q_hat, 0.0, _GRID_N)
        vvals = np.asarray(phi(model, np.minimum(vgrid - eps, 0.0))) - np.asarray(
            _z_stat_extended(model, vgrid + D)
        )
        i = int(np.argmin(vvals))
        lo, hi = vgrid[max(i - 1, 0)], vgrid[min(i + 1, len(vgrid) - 1)]
        _, v_eps = golden_min(
            lambda t: float(phi(model, min(t - eps, 0.0)))
            - float(_z_stat_extended(model, t + D)),
            lo,
            hi,
            1e-8,
        )
        v_eps = min(v_eps, float(vvals[i]))

        one_minus = 1.0 - float(phi(model, q1))
        if one_minus > 1e-12 and v_eps > 0.0:
            t2_bound = (d_hk(model) + eps) / (one_minus * h_prime_min(model) * v_eps)
        else:
            t2_bound = math.inf
    t2 = max(t2_ode, t2_bound) if math.isfinite(t2_bound) else t2_ode
    return Envelope(
        kind="lower_stage2",
        eps=eps,
        total_drop=D,
        curve=curve,
        switch_q=q_hat,
        validity_time=env1.validity_time + t2,
        metadata={
            "q_plus": q_plus,
            "C2": c2,
            "v_eps": v_eps,
            "t2_ode": t2_ode,
            "t2_bound": t2_bound,
            "type1_merge": type1,
        },
    )


def envelope_l1_gap(model: ErosionModel, env: Envelope, wave: StationaryWave) -> float:
    """L1 distance between an envelope curve and the stationary wave."""
    D = env.total_drop
    grid = np.linspace(-D + D / 20000.0, -D / 20000.0, 20001)
    diff = np.asarray(env.curve(grid)) - np.asarray(wave_evaluate(wave, model, grid))
    return float(np.trapezoid(np.abs(diff), grid))


# -- sandwich and convergence ---------------------------------------------------


def sandwich_check(
    run_result: RunResult,
    z_minus: Envelope,
    z_plus: Envelope,
    t_from: float,
    tol: Optional[float] = None,
) -> SandwichReport:
    """Check Z- - tol <= zeta(t) <= Z+ + tol pointwise on all snapshots with
    t >= t_from; also report the first time the sandwich holds onward."""
    if tol is None:
        tol = 10.0 * run_result.config.delta_q
    D = z_minus.total_drop
    grid = np.linspace(-D + D / 2000.0, -D / 2000.0, 2001)
    lower = np.asarray(z_minus.curve(grid))
    upper = np.asarray(z_plus.curve(grid))

    first_violation = None
    worst = 0.0
    holds = True
    ok_times: List[tuple] = []
    for snap in run_result.snapshots:
        vals = np.asarray(state_eval(snap, grid))
        over = vals - upper
        under = lower - vals
        i_over = int(np.argmax(over))
        i_under = int(np.argmax(under))
        excess = max(float(over[i_over]), float(under[i_under]))
        snap_ok = excess <= tol
        ok_times.append((snap.time, snap_ok))
        if snap.time >= t_from - 1e-12:
            worst = max(worst, excess)
            if not snap_ok and holds:
                holds = False
                side = "upper" if over[i_over] >= under[i_under] else "lower"
                q_bad = grid[i_over] if side == "upper" else grid[i_under]
                first_violation = (snap.time, float(q_bad), side, excess)

    empirical_onset = None
    for i in range(len(ok_times)):
        if all(ok for _, ok in ok_times[i:]):
            empirical_onset = ok_times[i][0]
            break
    return SandwichReport(
        holds=holds,
        tol=tol,
        checked_from=t_from,
        first_violation=first_violation,
        empirical_onset=empirical_onset,
        worst_excess=worst,
    )


def _feature_u(state: MarkerField, level: float, cap_eps: float = 1e-6) -> float:
    """Absolute u-position where the reconstruction crosses the given level."""
    u = state.u_left + state.shock_size
    if state.n_markers == 0 or level <= float(state.zs[0]):
        return u  # crossing sits on the jump at the front
    nodes_q = np.append(state.qs, 0.0)
    nodes_z = np.append(state.zs, 1.0)
    q_c = float(np.interp(level, nodes_z, nodes_q))
    left = state.shock_right if state.shock_right is not None else -state.total_drop
    m = nodes_q <= q_c + 1e-15
    qs = np.concatenate([[left], nodes_q[m], [q_c]])
    zs = np.concatenate([[nodes_z[0] if len(nodes_z) else 1.0],
                         nodes_z[m],
                         [level]])
    inv = 1.0 / (1.0 - np.minimum(zs, 1.0 - cap_eps))
    return u + float(np.sum(np.diff(qs) * 0.5 * (inv[:-1] + inv[1:])))


def estimate_speed(
    run_result: RunResult,
    model: ErosionModel,
    level: float = 0.5,
    t_from: Optional[float] = None,
) -> tuple:
    """Physical wave speed from tracking a fixed-height feature of the
    reconstructed u-profiles across late snapshots (linear regression)."""
    times = np.array([s.time for s in run_result.snapshots])
    if t_from is None:
        t_from = 0.5 * (times[0] + times[-1])
    feats = np.array([_feature_u(s, level) for s in run_result.snapshots])
    mask = times >= t_from - 1e-12
    if int(np.sum(mask)) < 2:
        mask = np.ones_like(times, dtype=bool)
    slope = float(np.polyfit(times[mask], feats[mask], 1)[0])
    return slope, times, feats


def windowed_running_max(times: np.ndarray, values: np.ndarray, width: float = 1.0):
    """max of the series over the trailing window [t - width, t] at each t."""
    out = np.empty_like(values)
    for i, t in enumerate(times):
        mask = (times >= t - width) & (times <= t)
        out[i] = np.max(values[mask])
    return out


def convergence_experiment(
    model: ErosionModel,
    zeta0,
    total_drop: float,
    config: SolverConfig,
    level: float = 0.5,
) -> ConvergenceResult:
    """Run the solver against the stationary wave of the same drop and
    collect the L1-distance series plus a feature-tracking speed estimate."""
    wave = construct(model, total_drop)
    state = init_state(zeta0, total_drop, config)
    result = run(state, model, config, reference=wave)
    speed, f_times, f_pos = estimate_speed(result, model, level=level)
    return ConvergenceResult(
        run=result,
        wave=wave,
        times=result.series_times,
        l1=result.series_l1,
        speed_estimate=speed,
        feature_times=f_times,
        feature_positions=f_pos,
    )
