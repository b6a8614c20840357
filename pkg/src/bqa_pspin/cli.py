"""Command-line front end: one subcommand per experiment.

Every experiment writes ``<experiment>.csv`` and ``<experiment>.json`` into
the output directory. The JSON summary embeds the full configuration, so

    bqa-pspin run --config results/sweep.json

replays a run and reproduces the same bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .exact import ConvergenceError, enumerate_basis, trace_distance_point
from .io import write_csv, write_json
from .minimize import SearchSettings
from .model import ModelParams, Schedule, single_spin_ground_state
from .semiclassics import (SWEEP_COLUMNS, classify_transitions, first_order_endpoint, phase_diagram_ab,
                           phase_diagram_sc, second_order_crossing, second_order_curve, sweep)

EXPERIMENTS = ("single-spin", "sweep", "phase-ab", "phase-sc", "second-order-curve", "trace-distance",
               "rotated-sweep")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str = "sweep"
    A0: float = 3.0
    sigma2: float = 0.1
    B0: float = 40.0
    p: int = 5
    C: float = 0.0
    chi: float = 0.0
    h: float = 0.0
    N: int = 40
    s_points: int = 2001
    s_min: float = 0.0
    s_max: float = 1.0
    a_min: float = 0.0
    a_max: float = 4.0
    a_points: int = 41
    b_min: float = -5.0
    b_max: float = 10.0
    b_points: int = 61
    c_min: float = 0.0
    c_max: float = 6.0
    c_step: float = 0.1
    p_values: list[int] = field(default_factory=list)
    theta_points: int = 200
    jump_threshold: float = 0.05
    onset_eps: float = 1e-3
    full_search: bool = False
    out: str = "results"

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        try:
            self.schedule()
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.s_points < 2:
            raise ConfigError("s_points must be >= 2")
        if not (0.0 <= self.s_min < self.s_max <= 1.0):
            raise ConfigError("need 0 <= s_min < s_max <= 1")
        if self.a_points < 1 or self.b_points < 1 or self.theta_points < 1:
            raise ConfigError("grid point counts must be positive")
        if self.c_step <= 0 or self.c_max < self.c_min:
            raise ConfigError("need c_step > 0 and c_max >= c_min")
        if any(int(q) != q or q < 2 for q in self.p_values):
            raise ConfigError("p_values must be integers >= 2")
        if self.jump_threshold <= 0 or self.onset_eps <= 0:
            raise ConfigError("jump_threshold and onset_eps must be positive")
        if self.experiment in ("phase-ab", "second-order-curve", "trace-distance", "sweep", "phase-sc") \
                and self.chi != 0.0:
            raise ConfigError(f"{self.experiment} requires chi = 0; use rotated-sweep for chi != 0")
        if self.experiment == "second-order-curve" and (self.C <= 0 or self.p < 3):
            raise ConfigError("second-order-curve requires C > 0 and p >= 3")

    def schedule(self) -> Schedule:
        return Schedule(self.A0, self.sigma2, self.B0)

    def params(self, **overrides) -> ModelParams:
        kw = dict(p=self.p, C=self.C, chi=self.chi, h=self.h, N=self.N)
        kw.update(overrides)
        return ModelParams(**kw)

    def s_grid(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.s_points)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name, value):
    kind = _FIELD_TYPES[name]
    try:
        if kind == "float":
            return float(value)
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "bool":
            return bool(value)
        if kind == "str":
            return str(value)
        if kind == "list[int]":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return [int(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {name}: {value!r}") from None
    raise ConfigError(f"unsupported field {name}")


def load_config(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]  # an output summary replays its own run
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    return {k: _coerce(k, v) for k, v in data.items()}


# --- experiments -------------------------------------------------------------

def _run_single_spin(cfg: RunConfig, out: Path):
    sched = cfg.schedule()
    rows = []
    for s in cfg.s_grid():
        probs, energy = single_spin_ground_state(sched, cfg.h, s)
        rows.append((s, *probs, energy))
    write_csv(out / "single-spin.csv", ("s", "prob_plus1", "prob_0", "prob_minus1", "energy"), rows)
    final = rows[-1]
    return {"final_probs": {"plus1": final[1], "0": final[2], "minus1": final[3]}}


def _settings(cfg: RunConfig, force_4d: bool = False) -> SearchSettings:
    return SearchSettings(full_search=cfg.full_search or force_4d)


def _run_sweep(cfg: RunConfig, out: Path, rotated: bool = False):
    name = "rotated-sweep" if rotated else "sweep"
    result = sweep(cfg.schedule(), cfg.params(), cfg.s_grid(), _settings(cfg, rotated))
    write_csv(out / f"{name}.csv", ("s",) + SWEEP_COLUMNS, result.rows())
    report = classify_transitions(result, cfg.jump_threshold, cfg.onset_eps)
    return {"transitions": report.to_dict()}


def _run_phase_ab(cfg: RunConfig, out: Path):
    diagram = phase_diagram_ab(cfg.params(), np.linspace(cfg.a_min, cfg.a_max, cfg.a_points),
                               np.linspace(cfg.b_min, cfg.b_max, cfg.b_points), _settings(cfg))
    write_csv(out / "phase-ab.csv", ("A", "B") + SWEEP_COLUMNS, diagram.rows())
    return {}


def _run_phase_sc(cfg: RunConfig, out: Path):
    n_c = int(math.floor((cfg.c_max - cfg.c_min) / cfg.c_step + 1e-9)) + 1
    c_grid = np.round(cfg.c_min + cfg.c_step * np.arange(n_c), 12)
    s_resolution = 1.0 / (cfg.s_points - 1)  # each C is swept over the full schedule
    rows, endpoints = [], {}
    for p in (cfg.p_values or [cfg.p]):
        points = phase_diagram_sc(cfg.schedule(), p, c_grid, s_resolution, _settings(cfg),
                                  cfg.jump_threshold, cfg.onset_eps)
        for pt in points:
            r = pt.report
            rows.append((p, pt.C, r.kind.value, r.s_first, r.jump, r.s_second))
        endpoints[str(p)] = first_order_endpoint(points)
    write_csv(out / "phase-sc.csv", ("p", "C", "kind", "s_first", "jump", "s_second"), rows)
    return {"first_order_endpoint": endpoints}


def _run_second_order_curve(cfg: RunConfig, out: Path):
    theta = np.linspace(0.0, math.pi, cfg.theta_points + 2)[1:-1]
    curve = second_order_curve(cfg.params(), theta)
    write_csv(out / "second-order-curve.csv", ("theta", "A", "B"),
              ((t, a, b) for t, (a, b) in zip(theta, curve)))
    return {"schedule_crossing_s": second_order_crossing(cfg.schedule(), cfg.params())}


def _run_trace_distance(cfg: RunConfig, out: Path):
    sched, params = cfg.schedule(), cfg.params()
    basis = enumerate_basis(cfg.N)
    settings = _settings(cfg)
    rows = []
    for s in cfg.s_grid():
        try:
            pt = trace_distance_point(sched, params, s, cfg.N, settings, basis)
        except ConvergenceError as exc:
            raise ConvergenceError(f"at s={float(s)!r}, N={cfg.N}: {exc.reason}", exc.residual) from exc
        rows.append((pt.s, pt.N, pt.D, pt.overlap, pt.energy_exact, pt.v_min_times_N))
    write_csv(out / "trace-distance.csv",
              ("s", "N", "D", "overlap", "energy_exact", "v_min_semiclassical_times_N"), rows)
    k = int(np.argmax([r[2] for r in rows]))
    return {"peak": {"s": rows[k][0], "D": rows[k][2]}}


RUNNERS = {
    "single-spin": _run_single_spin,
    "sweep": _run_sweep,
    "rotated-sweep": lambda cfg, out: _run_sweep(cfg, out, rotated=True),
    "phase-ab": _run_phase_ab,
    "phase-sc": _run_phase_sc,
    "second-order-curve": _run_second_order_curve,
    "trace-distance": _run_trace_distance,
}


def run(cfg: RunConfig) -> dict:
    """Run one experiment and write its CSV and JSON summary. Returns the summary."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = RUNNERS[cfg.experiment](cfg, out)
    payload = {"status": "ok", "version": __version__, "experiment": cfg.experiment,
               "config": dataclasses.asdict(cfg), **summary}
    write_json(out / f"{cfg.experiment}.json", payload)
    return payload


# --- argument parsing --------------------------------------------------------

_FLAGS = [
    ("A0", float), ("sigma2", float), ("B0", float), ("p", int), ("C", float), ("chi", float),
    ("h", float), ("N", int), ("s-points", int), ("s-min", float), ("s-max", float),
    ("a-min", float), ("a-max", float), ("a-points", int), ("b-min", float), ("b-max", float),
    ("b-points", int), ("c-min", float), ("c-max", float), ("c-step", float), ("p-values", str),
    ("theta-points", int), ("jump-threshold", float), ("onset-eps", float), ("out", str),
]


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="JSON config file (or a previous run's summary)")
    for flag, kind in _FLAGS:
        sub.add_argument(f"--{flag}", dest=flag.replace("-", "_"), type=kind, default=None)
    sub.add_argument("--full-search", dest="full_search", action="store_const", const=True, default=None,
                     help="search all four angles even when chi = 0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bqa-pspin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    _add_common(subs.add_parser("run", help="run the experiment named in --config"))
    for name in EXPERIMENTS:
        _add_common(subs.add_parser(name, help=f"run the {name} experiment"))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for name in _FIELD_TYPES:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = _coerce(name, flag_value)
    if args.command != "run":
        values["experiment"] = args.command
    elif "experiment" not in values:
        raise ConfigError("'run' needs a config that names the experiment")
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        payload = run(cfg)
    except ConfigError as exc:
        return _fail("config_error", str(exc), 2)
    except ConvergenceError as exc:
        return _fail("convergence_error", str(exc), 3, residual=exc.residual)
    print(json.dumps({"status": "ok", "experiment": payload["experiment"], "out": cfg.out}, sort_keys=True))
    return 0


def _fail(kind: str, message: str, code: int, **extra) -> int:
    record = {"status": "error", "error": kind, "message": message, **extra}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
