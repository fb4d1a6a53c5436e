"""Command-line interface: JSON config in, deterministic CSV/JSON out.

Subcommands: validate, classify, wave, simulate, converge, physical,
envelope.  Identical inputs produce byte-identical outputs (numbers are
printed with 17 significant digits and no timestamps are recorded), so
emitted files can be diffed in regression suites.

Exit codes: 0 success, 1 model validation failure, 2 numerical or
configuration failure.  Set ERODEWAVE_LOG to error|info|debug for logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from ._solve import BracketError
from .model import ErosionModel, ModelError, make_model
from .profile import d_hk, d_ss
from .stability import (
    convergence_experiment,
    envelope_l1_gap,
    lower_envelope,
    lower_stage2,
    sandwich_check,
    upper_envelope,
    upper_stage2,
)
from .tracking import MarkerField, SolverConfig, SolverError, init_state, run, state_eval
from .transforms import QProfile, ZProfile, q_to_u, reconstruct_height, u_to_q
from .waves import WaveType, classify, construct, evaluate, physical_speed, physical_wave

log = logging.getLogger("erodewave")

MODES = ("validate", "classify", "wave", "simulate", "converge", "physical", "envelope")

DEFAULT_ENVELOPE_EPS = 0.05


class ConfigError(ValueError):
    """Schema violation; the message names the offending field path."""


@dataclass
class RunSpec:
    model_spec: object
    mode: str
    total_drop: Optional[float] = None
    initial_data: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    output_dir: Path = Path("erodewave-out")
    formats: tuple = ("csv",)

    def build_model(self) -> ErosionModel:
        return make_model(self.model_spec)

    def solver_config(self, total_drop: float) -> SolverConfig:
        s = dict(self.solver)
        delta_q = s.pop("delta_q", 1e-3 * total_drop)
        cfg = SolverConfig(
            delta_q=delta_q,
            cfl=s.pop("cfl", 0.4),
            clamp_eps=s.pop("clamp_eps", 1e-10),
            t_end=s.pop("t_end", 5.0),
            snapshot_times=tuple(s.pop("snapshot_times", ())),
            series_dt=s.pop("series_dt", None),
        )
        if not cfg.snapshot_times:
            cfg.snapshot_times = tuple(
                round(cfg.t_end * k / 9.0, 12) for k in range(1, 10)
            )
        return cfg


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def parse_config(path) -> RunSpec:
    """Read and validate a JSON config; fill solver defaults."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "<root>", "must be a JSON object")

    model = raw.get("model")
    _require(isinstance(model, dict), "model", "required object")
    if "builtin" in model:
        model_spec = model["builtin"]
        _require(isinstance(model_spec, str), "model.builtin", "must be a string")
    elif "g_poly" in model:
        model_spec = model["g_poly"]
        _require(
            isinstance(model_spec, list) and len(model_spec) >= 2,
            "model.g_poly",
            "must be a list of >= 2 coefficients",
        )
        model_spec = [float(c) for c in model_spec]
    else:
        raise ConfigError("model: needs either 'builtin' or 'g_poly'")

    mode = raw.get("mode")
    _require(mode in MODES, "mode", f"must be one of {MODES}")

    total_drop = raw.get("total_drop")
    if total_drop is not None:
        _require(
            isinstance(total_drop, (int, float)) and total_drop > 0,
            "total_drop",
            "must be a positive number",
        )
        total_drop = float(total_drop)

    initial_data = raw.get("initial_data", {})
    _require(isinstance(initial_data, dict), "initial_data", "must be an object")
    if initial_data:
        kind = initial_data.get("kind")
        _require(
            kind in ("wave", "piecewise_exponential"),
            "initial_data.kind",
            "must be 'wave' or 'piecewise_exponential'",
        )

    solver = raw.get("solver", {})
    _require(isinstance(solver, dict), "solver", "must be an object")
    for key in solver:
        _require(
            key in ("delta_q", "cfl", "t_end", "snapshot_times", "clamp_eps", "series_dt"),
            f"solver.{key}",
            "unknown field",
        )

    output = raw.get("output", {})
    _require(isinstance(output, dict), "output", "must be an object")
    out_dir = Path(output.get("dir", "erodewave-out"))
    formats = tuple(output.get("formats", ["csv"]))
    for f in formats:
        _require(f in ("csv", "json"), "output.formats", f"unknown format {f!r}")

    # construct the model now so unknown builtins fail at parse time
    make_model(model_spec)
    return RunSpec(
        model_spec=model_spec,
        mode=mode,
        total_drop=total_drop,
        initial_data=dict(initial_data),
        solver=dict(solver),
        output_dir=out_dir,
        formats=formats,
    )


# -- initial data ----------------------------------------------------------------


def piecewise_exponential_profile(
    jump_start: float = 0.0,
    jump_end: float = 0.6,
    rate: float = 0.5,
    shift: float = 0.11,
    u_max: Optional[float] = None,
    du: float = 0.004,
) -> ZProfile:
    """z(u) = 1 below jump_start, 0 on (jump_start, jump_end], then the
    monotone tail 1 - exp(-rate (u + shift)) above; sampled for u_to_q."""
    if u_max is None:
        u_max = jump_end + 40.0 / max(rate, 1e-6)
    tail_n = max(int(math.ceil((u_max - jump_end) / du)), 10)
    u_tail = np.linspace(jump_end, u_max, tail_n + 1)
    z_tail = 1.0 - np.exp(-rate * (u_tail + shift))
    # double nodes carry the jumps: 1 -> 0 at jump_start, 0 -> tail at jump_end
    u = np.concatenate([[jump_start - 1.0, jump_start, jump_start, jump_end], u_tail])
    z = np.concatenate([[1.0, 1.0, 0.0, 0.0], np.clip(z_tail, 0.0, 1.0)])
    return ZProfile(u=u, z=z)


def build_initial_data(spec: RunSpec, model: ErosionModel):
    """Returns (sampler, total_drop).  'wave' uses the stationary profile of
    spec.total_drop; 'piecewise_exponential' is transformed from u-space and
    determines the drop itself."""
    kind = spec.initial_data.get("kind", "wave")
    if kind == "piecewise_exponential":
        params = {
            k: float(spec.initial_data[k])
            for k in ("jump_start", "jump_end", "rate", "shift")
            if k in spec.initial_data
        }
        qp = u_to_q(piecewise_exponential_profile(**params))
        return qp, qp.total_drop
    _require(spec.total_drop is not None, "total_drop", "required for initial_data.kind='wave'")
    wave = construct(model, spec.total_drop)
    return (lambda q: evaluate(wave, model, q)), spec.total_drop


# -- emission ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def emit_snapshot(state: MarkerField, path: Path):
    """CSV of the reconstruction: header q,zeta; rows in ascending q."""
    lines = ["q,zeta"]
    D = state.total_drop
    lines.append(f"{_fmt(-D)},{_fmt(1.0)}")
    if state.shock_right is not None:
        lines.append(f"{_fmt(-D)},{_fmt(0.0)}")
        lines.append(f"{_fmt(state.shock_right)},{_fmt(0.0)}")
    for qv, zv in zip(state.qs, state.zs):
        lines.append(f"{_fmt(float(qv))},{_fmt(float(zv))}")
    lines.append(f"{_fmt(0.0)},{_fmt(1.0)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_series(result, path: Path):
    lines = ["t,l1_distance,shock_front,speed_estimate"]
    times = result.series_times
    ul = result.series_u_left
    speed = np.full_like(times, math.nan)
    if len(times) > 1:
        speed[1:] = np.diff(ul) / np.diff(times)
    for i in range(len(times)):
        lines.append(
            f"{_fmt(times[i])},{_fmt(result.series_l1[i])},"
            f"{_fmt(result.series_shock[i])},{_fmt(speed[i])}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_physical(pw, path: Path):
    lines = ["x,u,w,jump_flag"]
    for i in range(len(pw.x)):
        lines.append(
            f"{_fmt(float(pw.x[i]))},{_fmt(float(pw.u[i]))},"
            f"{_fmt(float(pw.w[i]))},{int(pw.jump_flag[i])}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_json(payload: dict, path: Path):
    path.write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ": "), indent=1) + "\n",
        encoding="utf-8",
    )


def _metadata(spec: RunSpec, model: ErosionModel, extra: dict) -> dict:
    meta = {
        "version": __version__,
        "model": spec.model_spec if isinstance(spec.model_spec, str) else list(spec.model_spec),
        "mode": spec.mode,
        "total_drop": spec.total_drop,
        "solver": spec.solver,
    }
    meta.update(extra)
    return meta


# -- modes ------------------------------------------------------------------------


def _mode_validate(spec: RunSpec, model: ErosionModel) -> int:
    report = model.validate()
    print(report)
    if spec.output_dir and "json" in spec.formats:
        spec.output_dir.mkdir(parents=True, exist_ok=True)
        emit_json(
            _metadata(
                spec,
                model,
                {
                    "checks": [
                        {
                            "name": c.name,
                            "passed": c.passed,
                            "worst_z": c.worst_z,
                            "worst_value": c.worst_value,
                        }
                        for c in report.checks
                    ]
                },
            ),
            spec.output_dir / "validate.json",
        )
    return 0 if report.ok else 1


def _mode_classify(spec: RunSpec, model: ErosionModel) -> int:
    _require(spec.total_drop is not None, "total_drop", "required for classify")
    cls = classify(model, spec.total_drop)
    q_str = "none" if cls.q_plus is None else f"{cls.q_plus:.4f}"
    print(f"type={int(cls.wave_type)} q_plus={q_str} d_hk={cls.d_hk:.4f} d_ss={cls.d_ss:.4f}")
    return 0


def _wave_nodes(model: ErosionModel, wave, n: int = 2001):
    D = wave.total_drop
    qs = np.linspace(-D, 0.0, n)
    zs = np.asarray(evaluate(wave, model, qs))
    return qs, zs


def _mode_wave(spec: RunSpec, model: ErosionModel) -> int:
    _require(spec.total_drop is not None, "total_drop", "required for wave")
    wave = construct(model, spec.total_drop)
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    qs, zs = _wave_nodes(model, wave)
    if "csv" in spec.formats:
        lines = ["q,zeta"]
        lines.append(f"{_fmt(qs[0])},{_fmt(1.0)}")  # left limit convention
        for qv, zv in zip(qs, zs):
            lines.append(f"{_fmt(float(qv))},{_fmt(float(zv))}")
        (spec.output_dir / "wave.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if "json" in spec.formats:
        emit_json(
            _metadata(
                spec,
                model,
                {
                    "wave_type": int(wave.wave_type),
                    "shock_right": wave.shock_right,
                    "speed": physical_speed(model, wave),
                },
            ),
            spec.output_dir / "wave.json",
        )
    print(
        f"wave type={int(wave.wave_type)} shock_right="
        f"{'none' if wave.shock_right is None else f'{wave.shock_right:.6f}'} "
        f"speed={physical_speed(model, wave):.6f}"
    )
    return 0


def _mode_simulate(spec: RunSpec, model: ErosionModel, with_reference=True) -> int:
    sampler, D = build_initial_data(spec, model)
    cfg = spec.solver_config(D)
    if cfg.series_dt is None:
        cfg.series_dt = max(cfg.t_end / 40.0, 1e-6)
    reference = construct(model, D) if with_reference else None
    state = init_state(sampler, D, cfg)
    result = run(state, model, cfg, reference=reference)
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    scheduled = [s for s in result.snapshots if any(
        abs(s.time - tm) < 1e-9 for tm in cfg.snapshot_times)]
    if "csv" in spec.formats:
        for i, snap in enumerate(scheduled):
            emit_snapshot(snap, spec.output_dir / f"snapshot_{i+1:02d}.csv")
        emit_series(result, spec.output_dir / "series.csv")
    if "json" in spec.formats:
        emit_json(
            _metadata(
                spec,
                model,
                {
                    "total_drop": D,
                    "delta_q": cfg.delta_q,
                    "t_end": cfg.t_end,
                    "snapshot_times": list(cfg.snapshot_times),
                    "stats": result.stats,
                    "final_l1": None
                    if not len(result.series_l1) or math.isnan(result.series_l1[-1])
                    else float(result.series_l1[-1]),
                },
            ),
            spec.output_dir / "run.json",
        )
    final_l1 = result.series_l1[-1] if len(result.series_l1) else math.nan
    print(
        f"simulated to t={cfg.t_end:g}: steps={result.stats['n_steps']} "
        f"markers={result.stats['n_markers_final']} final_l1={final_l1:.6g}"
    )
    log.info("events: %d", len(result.events))
    return 0


def _mode_converge(spec: RunSpec, model: ErosionModel) -> int:
    sampler, D = build_initial_data(spec, model)
    cfg = spec.solver_config(D)
    if cfg.series_dt is None:
        cfg.series_dt = max(cfg.t_end / 80.0, 1e-6)
    res = convergence_experiment(model, sampler, D, cfg)
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    scheduled = [s for s in res.run.snapshots if any(
        abs(s.time - tm) < 1e-9 for tm in cfg.snapshot_times)]
    if "csv" in spec.formats:
        for i, snap in enumerate(scheduled):
            emit_snapshot(snap, spec.output_dir / f"snapshot_{i+1:02d}.csv")
        emit_series(res.run, spec.output_dir / "series.csv")
    if "json" in spec.formats:
        emit_json(
            _metadata(
                spec,
                model,
                {
                    "total_drop": D,
                    "wave_type": int(res.wave.wave_type),
                    "speed_estimate": res.speed_estimate,
                    "expected_speed": physical_speed(model, res.wave),
                    "final_l1": float(res.l1[-1]),
                    "stats": res.run.stats,
                },
            ),
            spec.output_dir / "converge.json",
        )
    print(
        f"converge: D={D:.6f} type={int(res.wave.wave_type)} "
        f"final_l1={res.l1[-1]:.6g} speed={res.speed_estimate:.4f} "
        f"(expected {physical_speed(model, res.wave):.4f})"
    )
    return 0


def _mode_physical(spec: RunSpec, model: ErosionModel) -> int:
    _require(spec.total_drop is not None, "total_drop", "required for physical")
    wave = construct(model, spec.total_drop)
    pw = physical_wave(model, wave)
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in spec.formats:
        emit_physical(pw, spec.output_dir / "physical.csv")
    if "json" in spec.formats:
        emit_json(
            _metadata(spec, model, {"speed": pw.speed, **pw.metadata}),
            spec.output_dir / "physical.json",
        )
    print(f"physical wave: speed={pw.speed:.6f} jump_height={pw.jump_height:.6f}")
    return 0


def _mode_envelope(spec: RunSpec, model: ErosionModel) -> int:
    _require(spec.total_drop is not None, "total_drop", "required for envelope")
    D = spec.total_drop
    eps = DEFAULT_ENVELOPE_EPS
    wave = construct(model, D)
    zeta0 = lambda q: evaluate(wave, model, q)  # noqa: E731
    up1 = upper_envelope(model, D, eps, zeta0)
    upper = upper_stage2(model, D, eps, up1) if D > d_hk(model) else up1
    low1 = lower_envelope(model, D, eps, zeta0) if D < d_ss(model) else None
    lower = low1
    if low1 is not None and low1.metadata["q1"] > -D:
        lower = lower_stage2(model, D, eps, low1)
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    qs = np.linspace(-D + D / 2000.0, -1e-12, 2001)
    z_wave = np.asarray(evaluate(wave, model, qs))
    z_up = np.asarray(upper.curve(qs))
    z_lo = np.asarray(lower.curve(qs)) if lower is not None else np.asarray(
        evaluate(wave, model, qs))
    if "csv" in spec.formats:
        lines = ["q,z_minus,z,z_plus"]
        for i in range(len(qs)):
            lines.append(
                f"{_fmt(qs[i])},{_fmt(z_lo[i])},{_fmt(z_wave[i])},{_fmt(z_up[i])}"
            )
        (spec.output_dir / "envelope.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if "json" in spec.formats:
        emit_json(
            _metadata(
                spec,
                model,
                {
                    "eps": eps,
                    "upper_kind": upper.kind,
                    "upper_validity_time": upper.validity_time,
                    "upper_l1_gap": envelope_l1_gap(model, upper, wave),
                    "lower_kind": None if lower is None else lower.kind,
                    "lower_validity_time": None if lower is None else lower.validity_time,
                    "lower_l1_gap": None
                    if lower is None
                    else envelope_l1_gap(model, lower, wave),
                },
            ),
            spec.output_dir / "envelope.json",
        )
    print(
        f"envelope eps={eps}: upper={upper.kind} valid_after={upper.validity_time:.4g}"
        + ("" if lower is None else f" lower={lower.kind} valid_after={lower.validity_time:.4g}")
    )
    return 0


def dispatch(spec: RunSpec) -> int:
    """Run the requested mode; returns the process exit code."""
    model = spec.build_model()
    if spec.mode != "validate":
        report = model.validate()
        if not report.ok:
            print(report, file=sys.stderr)
            print("model fails structural hypotheses; aborting", file=sys.stderr)
            return 1
    handlers = {
        "validate": _mode_validate,
        "classify": _mode_classify,
        "wave": _mode_wave,
        "simulate": _mode_simulate,
        "converge": _mode_converge,
        "physical": _mode_physical,
        "envelope": _mode_envelope,
    }
    return handlers[spec.mode](spec, model)


def _setup_logging():
    level = os.environ.get("ERODEWAVE_LOG", "error").lower()
    level_map = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=level_map.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="erodewave",
        description="Traveling waves of the slow-erosion conservation law",
    )
    parser.add_argument("command", choices=MODES)
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--out", type=Path, help="output directory (overrides config)")
    parser.add_argument(
        "--format", choices=("csv", "json", "both"), help="output format (overrides config)"
    )
    parser.add_argument("--model", help="builtin model name (used when no config is given)")
    parser.add_argument("--total-drop", type=float, help="total drop D (when no config)")
    args = parser.parse_args(argv)

    try:
        if args.config is not None:
            spec = parse_config(args.config)
            spec.mode = args.command
        else:
            if args.model is None:
                parser.error("either --config or --model is required")
            spec = RunSpec(model_spec=args.model, mode=args.command, total_drop=args.total_drop)
        if args.out is not None:
            spec.output_dir = args.out
        if args.format is not None:
            spec.formats = ("csv", "json") if args.format == "both" else (args.format,)
        return dispatch(spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, BracketError, ModelError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
