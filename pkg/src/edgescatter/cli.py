"""Command-line front end: spectrum, channels, scatter, conductivity, validate.

Reads an experiment config (TOML or JSON by extension), runs the requested
task, and writes CSV or JSON artifacts.  Exit codes: 0 success, 1 validation
failure, 2 config error, 3 numerical failure.  Set EDGESCATTER_LOG to a level
name for logging.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import channels as ch
from . import observables as obs
from . import potential as pt
from . import scattering as sc
from . import transverse as tv
from .errors import ConfigError, EdgeScatterError, NumericsError

log = logging.getLogger("edgescatter")

_BOUNDED_PARTS = {
    "tanh": np.tanh,
    "sech2": lambda y: 1.0 / np.cosh(y) ** 2,
    "gaussian": lambda y: np.exp(-0.5 * y * y),
    "zero": lambda y: np.zeros_like(y),
}


class _ScaledBoundedPart:
    """Named wall perturbation; picklable for process-pool workers."""

    def __init__(self, name, amplitude, scale):
        self.name = name
        self.amplitude = amplitude
        self.scale = scale

    def __call__(self, y):
        base = _BOUNDED_PARTS[self.name]
        return self.amplitude * base(np.asarray(y, dtype=float) / self.scale)


@dataclass
class ExperimentConfig:
    wall_kind: str = "linear"
    wall_bounded: dict = dc_field(default_factory=dict)
    n_max: int = 10
    quad_points: int = 0
    potential_spec: dict = dc_field(default_factory=dict)
    potential_frame: str = "rotated"
    half_width: float | None = None
    nodes_per_unit: int = 40
    n_evanescent: int = 8
    guard: float = 1e-3
    tol_solve: float = 1e-8
    tol_match: float = 1e-6
    defect_bound: float = 1e-6
    task: str = "validate"
    energy: float = 2.2
    window: tuple = (0.5, 1.2)
    n_nodes: int = 21
    e_max: float = 3.0
    xi_max: float = 3.0
    xi_points: int = 601
    seed: int = 7
    jobs: int = 1
    out: str | None = None
    fmt: str = "json"

    def wall(self) -> tv.WallSpec:
        if self.wall_kind == "linear":
            return tv.WallSpec()
        spec = self.wall_bounded
        name = spec.get("name", "tanh")
        if name not in _BOUNDED_PARTS:
            raise ConfigError(f"unknown bounded_part {name!r}; "
                              f"choose from {sorted(_BOUNDED_PARTS)}")
        g = _ScaledBoundedPart(name, float(spec.get("amplitude", 1.0)),
                               float(spec.get("scale", 1.0)))
        return tv.WallSpec(kind="linear_plus_bounded", bounded_part=g,
                           y_cutoff=float(spec.get("y_cutoff", 12.0)))

    def potential(self) -> pt.Potential:
        spec = dict(self.potential_spec)
        path = spec.pop("file", None)
        frame = self.potential_frame
        if path:
            spec = _load_structured(path)
            frame = spec.get("frame", frame)
        return pt.build_potential(spec, frame=frame)


def _load_structured(path: str) -> dict:
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    raise ConfigError(f"config {path!r} must end in .json or .toml")


def load_config(path: str | None, overrides: argparse.Namespace) -> ExperimentConfig:
    raw = _load_structured(path) if path else {}
    cfg = ExperimentConfig()

    wall = raw.get("wall", {})
    cfg.wall_kind = wall.get("kind", cfg.wall_kind)
    cfg.wall_bounded = wall.get("bounded_part", {})

    basis = raw.get("basis", {})
    cfg.n_max = int(basis.get("n_max", cfg.n_max))
    cfg.quad_points = int(basis.get("quad_points", cfg.quad_points))

    cfg.potential_spec = raw.get("potential", {})
    cfg.potential_frame = cfg.potential_spec.get("frame", "rotated")

    solver = raw.get("solver", {})
    for key, attr in (("half_width", "half_width"),
                      ("nodes_per_unit", "nodes_per_unit"),
                      ("n_evanescent", "n_evanescent"), ("guard", "guard"),
                      ("tol_solve", "tol_solve"), ("tol_match", "tol_match"),
                      ("defect_bound", "defect_bound")):
        if key in solver:
            setattr(cfg, attr, solver[key])

    task = raw.get("task", {})
    cfg.task = task.get("name", cfg.task)
    for key in ("energy", "n_nodes", "e_max", "xi_max", "xi_points", "seed"):
        if key in task:
            setattr(cfg, key, task[key])
    if "window" in task:
        cfg.window = tuple(task["window"])

    output = raw.get("output", {})
    cfg.out = output.get("path", cfg.out)
    cfg.fmt = output.get("format", cfg.fmt)

    for name in ("task", "energy", "seed", "jobs", "out"):
        val = getattr(overrides, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if overrides.window is not None:
        parts = [float(v) for v in overrides.window.split(",")]
        if len(parts) != 2:
            raise ConfigError("--window expects 'E-,E+'")
        cfg.window = tuple(parts)
    if overrides.format is not None:
        cfg.fmt = overrides.format

    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.fmt!r}")
    for name in ("tol_solve", "tol_match", "guard", "defect_bound"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    return cfg


def _complex_pair(z: complex):
    return [float(np.real(z)), float(np.imag(z))]


def _fmt(v) -> str:
    """Full-precision decimal text that round-trips to the same double."""
    return repr(float(v))


def _write_json(path, payload):
    text = json.dumps(payload, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _write_csv(path, header, rows):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            fh.close()


def _ordering_payload(s: sc.ScatteringMatrix):
    return [{"level": int(lv), "branch_sign": int(sg),
             "xi": _complex_pair(xi), "current": float(j)}
            for lv, sg, xi, j in s.ordering]


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    basis = tv.build_basis(cfg.wall(), cfg.n_max, cfg.quad_points)
    xi = np.linspace(-cfg.xi_max, cfg.xi_max, cfg.xi_points)
    crit = ch.critical_set(basis, cfg.e_max)

    rows = []
    for x in xi:
        e0 = -x
        if abs(e0) <= cfg.e_max:
            rows.append(("branch", "0", _fmt(x), _fmt(e0)))
    for n in range(1, basis.n_max + 1):
        for sign in (1, -1):
            for x in xi:
                e = sign * float(np.sqrt(x * x + basis.rho[n]))
                if abs(e) <= cfg.e_max:
                    rows.append(("branch", f"{sign * n}", _fmt(x), _fmt(e)))
    if cfg.fmt == "csv":
        for e in crit:
            rows.append(("critical", "", "", _fmt(e)))
        _write_csv(cfg.out, ("kind", "branch", "xi", "energy"), rows)
    else:
        payload = {
            "branches": [{"kind": r[0], "branch": r[1], "xi": float(r[2]),
                          "energy": float(r[3])} for r in rows],
            "critical_set": [float(e) for e in crit],
        }
        _write_json(cfg.out, payload)
    return 0


def cmd_channels(cfg: ExperimentConfig) -> int:
    basis = tv.build_basis(cfg.wall(), cfg.n_max, cfg.quad_points)
    cs = ch.channels_at(basis, cfg.energy, n_evanescent=cfg.n_evanescent,
                        guard=cfg.guard)
    payload = {
        "energy": cfg.energy,
        "M": cs.M, "n_plus": cs.n_plus, "n_minus": cs.n_minus,
        "propagating": [{"level": c.level, "branch_sign": c.branch_sign,
                         "xi": _complex_pair(c.xi), "current": c.current}
                        for c in cs.propagating],
        "evanescent": [{"level": c.level, "xi": _complex_pair(c.xi)}
                       for c in cs.evanescent],
    }
    if cfg.fmt == "csv":
        rows = [(c.kind, c.level, c.branch_sign, _fmt(c.xi.real),
                 _fmt(c.xi.imag), _fmt(c.current))
                for c in (*cs.propagating, *cs.evanescent)]
        _write_csv(cfg.out, ("kind", "level", "branch_sign", "xi_re", "xi_im",
                             "current"), rows)
    else:
        _write_json(cfg.out, payload)
    return 0


def _coupling_grid(half, nodes_per_unit):
    # dense enough that tabulated potentials interpolate at solver accuracy
    n = max(int(2 * half * max(16, 2 * nodes_per_unit)), 32)
    return np.linspace(-half, half, n + 1)


def _scatter_once(cfg: ExperimentConfig, basis, energy):
    pot = cfg.potential()
    cs = ch.channels_at(basis, energy, n_evanescent=cfg.n_evanescent,
                        guard=cfg.guard)
    half = cfg.half_width or pot.support_radius + sc.DEFAULT_MARGIN
    fld = pt.coupling_field(pot, basis, _coupling_grid(half, cfg.nodes_per_unit))
    return cs, sc.smatrix(basis, cs, fld, half_width=half,
                          nodes_per_unit=cfg.nodes_per_unit,
                          tol_solve=cfg.tol_solve, tol_match=cfg.tol_match)


def cmd_scatter(cfg: ExperimentConfig) -> int:
    basis = tv.build_basis(cfg.wall(), cfg.n_max, cfg.quad_points)
    cs, s = _scatter_once(cfg, basis, cfg.energy)
    blocks = {name: [[_complex_pair(z) for z in row] for row in block]
              for name, block in (("t_plus", s.t_plus), ("t_minus", s.t_minus),
                                  ("r_plus", s.r_plus), ("r_minus", s.r_minus))}
    payload = {
        "energy": cfg.energy,
        "n_plus": s.n_plus, "n_minus": s.n_minus,
        "ordering": _ordering_payload(s),
        "blocks": blocks,
        "unitarity_defect": s.unitarity_defect,
        "trace_difference": s.trace_difference,
    }
    if cfg.fmt == "csv":
        rows = []
        for name, block in (("t_plus", s.t_plus), ("t_minus", s.t_minus),
                            ("r_plus", s.r_plus), ("r_minus", s.r_minus)):
            for i, row in enumerate(block):
                for j, z in enumerate(row):
                    rows.append((name, i, j, _fmt(z.real), _fmt(z.imag)))
        _write_csv(cfg.out, ("block", "row", "col", "re", "im"), rows)
    else:
        _write_json(cfg.out, payload)
    if s.unitarity_defect >= cfg.defect_bound:
        log.error("unitarity defect %.3e above bound %.1e",
                  s.unitarity_defect, cfg.defect_bound)
        return 3
    return 0


def cmd_conductivity(cfg: ExperimentConfig) -> int:
    basis = tv.build_basis(cfg.wall(), cfg.n_max, cfg.quad_points)
    win = obs.SwitchProfile(kind="smoothstep_e", window=cfg.window)
    rep = _conductivity_jobs(cfg, basis, win)
    payload = {
        "window": list(rep.window),
        "nodes": [float(e) for e in rep.nodes],
        "n_plus": [int(v) for v in rep.n_plus],
        "n_minus": [int(v) for v in rep.n_minus],
        "unitarity_defects": [float(v) for v in rep.unitarity_defects],
        "trace_differences": [float(v) for v in rep.trace_differences],
        "sigma": rep.sigma,
        "flags": [list(f) for f in rep.flags],
    }
    if cfg.fmt == "csv":
        rows = [(_fmt(e), int(p), int(m), _fmt(d), _fmt(t))
                for e, p, m, d, t in zip(rep.nodes, rep.n_plus, rep.n_minus,
                                         rep.unitarity_defects,
                                         rep.trace_differences)]
        rows.append(("sigma", "", "", "", _fmt(rep.sigma)))
        _write_csv(cfg.out, ("energy", "n_plus", "n_minus", "unitarity_defect",
                             "trace_difference"), rows)
    else:
        _write_json(cfg.out, payload)
    return 0


def _conductivity_jobs(cfg, basis, win):
    pot = cfg.potential()
    kwargs = dict(n_nodes=cfg.n_nodes, nodes_per_unit=cfg.nodes_per_unit,
                  half_width=cfg.half_width, n_evanescent=cfg.n_evanescent,
                  guard=cfg.guard)
    if cfg.jobs <= 1:
        return obs.conductivity(basis, pot, win, **kwargs)
    # Parallelize over energy nodes; results are re-assembled in node order.
    from concurrent.futures import ProcessPoolExecutor

    e_lo, e_hi = win.window
    nodes = np.linspace(e_lo, e_hi, cfg.n_nodes)
    args = [(basis, pot, float(e), kwargs) for e in nodes]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(_node_smatrix, args))
    n_plus = np.array([r[0] for r in results])
    n_minus = np.array([r[1] for r in results])
    defects = np.array([r[2] for r in results])
    traces = np.array([r[3] for r in results])
    density = win.derivative(nodes)
    from scipy.integrate import simpson
    sigma = float(simpson(density * traces, x=nodes))
    return obs.ConductivityReport(window=(e_lo, e_hi), nodes=nodes,
                                  n_plus=n_plus, n_minus=n_minus,
                                  unitarity_defects=defects,
                                  trace_differences=traces, sigma=sigma)


def _node_smatrix(packed):
    basis, pot, energy, kwargs = packed
    cs = ch.channels_at(basis, energy, n_evanescent=kwargs["n_evanescent"],
                        guard=kwargs["guard"])
    half = kwargs["half_width"] or pot.support_radius + sc.DEFAULT_MARGIN
    fld = pt.coupling_field(pot, basis,
                            _coupling_grid(half, kwargs["nodes_per_unit"]))
    s = sc.smatrix(basis, cs, fld, half_width=half,
                   nodes_per_unit=kwargs["nodes_per_unit"])
    return cs.n_plus, cs.n_minus, s.unitarity_defect, s.trace_difference


def cmd_validate(cfg: ExperimentConfig) -> int:
    from .validate import run_validation

    report = run_validation(cfg)
    _write_json(cfg.out, report)
    return 0 if all(c["passed"] for c in report["checks"]) else 1


_TASKS = {
    "spectrum": cmd_spectrum,
    "channels": cmd_channels,
    "scatter": cmd_scatter,
    "conductivity": cmd_conductivity,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="edgescatter",
        description="Edge-channel scattering and interface conductivity "
                    "for domain-wall Dirac operators.")
    p.add_argument("--config", help="TOML or JSON experiment config")
    p.add_argument("--task", choices=sorted(_TASKS))
    p.add_argument("--energy", type=float)
    p.add_argument("--window", help="energy window 'E-,E+'")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    return p


def main(argv=None) -> int:
    level = os.environ.get("EDGESCATTER_LOG", "WARNING").upper()
    if level not in ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"):
        level = "WARNING"
    logging.basicConfig(level=level)
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        task = _TASKS.get(cfg.task)
        if task is None:
            raise ConfigError(f"unknown task {cfg.task!r}")
        return task(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError, EdgeScatterError) as exc:
        log.error("numerical failure: %s", exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
