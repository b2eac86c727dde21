"""Command-line interface: config parsing, the three run commands, CSV output.

Configs are flat INI files with sections [rheology], [solver], [scenario] and
[output]; command-line flags override file values.  Every effective value
(defaults included) is echoed to ``effective-config.ini`` next to the
outputs, and re-running that echo reproduces the run.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .multilayer import Environment, LayerPartition, total_energy, vertical_velocity
from .rheology import RHEOLOGY_PRESETS, RheologyParams
from .scenarios import (
    EXPERIMENT_BED_THICKNESS,
    CollapseSpec,
    UniformFlowSpec,
    bagnold_profile,
    front_position,
    layer_average_bagnold,
    run_collapse,
    run_uniform_flow,
    stopping_timescale,
)
from .solver import FrictionMode


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _fmt(value) -> str:
    """Locale-independent, lossless float formatting for CSV and echo files."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# --------------------------------------------------------------------------
# configuration schema
# --------------------------------------------------------------------------

_UNSET = object()


@dataclass
class RunConfig:
    command: str
    # [rheology]
    preset: str = ""
    mu_s: float = 0.0
    mu_2: float = 0.0
    i0: float = 0.0
    d_s: float = 0.0
    rho_s: float = 0.0
    phi_s: float = 0.0
    friction: str = "mu-i"
    regularization: str = "max-bound"
    delta: float = 1.0e-6
    eta_cap_coefficient: float = 250.0
    # [solver]
    layers: int = 20
    cfl: float = 0.5
    shear_order: int = 1
    t_end: float = 3.0
    u_stop: float = 1.0e-4
    n_stop: int = 10
    max_steps: int = 10_000_000
    steady_tol: float = 1.0e-6
    monolayer_basal_factor: float = 0.75
    # [scenario] - uniform-flow
    depth: float = 1.0
    theta_deg: float = 0.0
    nx: int = 20
    domain_length: float = 1.0
    layers_sweep: tuple = ()
    theta_sweep_deg: tuple = ()
    error_bound: float = 0.10
    # [scenario] - collapse
    h_i: float = 0.0
    h0: float = 0.14
    r0: float = 0.20
    x_min: float = -0.25
    x_max: float = 1.5
    dx: float = 2.5e-3
    stations: tuple = (0.095, 0.495, 0.995)
    # [scenario] - sweep
    theta_list_deg: tuple = (16.0, 19.0, 22.0)
    h_i_list: tuple = ()          # empty = experiment matrix per slope
    friction_modes: tuple = ("mu-i",)
    layers_list: tuple = (20,)
    shear_order_list: tuple = (1,)
    # [output]
    directory: str = "out"
    snapshot_dt: float = 0.01

    def rheology_params(self) -> RheologyParams:
        return RheologyParams(mu_s=self.mu_s, mu_2=self.mu_2, I0=self.i0,
                              d_s=self.d_s, rho_s=self.rho_s, phi_s=self.phi_s)

    def friction_mode(self) -> FrictionMode:
        return FrictionMode.MU_OF_I if self.friction == "mu-i" else FrictionMode.CONSTANT


def _float_tuple(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip() != "")


def _int_tuple(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip() != "")


def _str_tuple(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip() != "")


# key -> (section, parser); the echo writes them back in this order
_SCHEMA = {
    "preset": ("rheology", str),
    "mu_s": ("rheology", float),
    "mu_2": ("rheology", float),
    "i0": ("rheology", float),
    "d_s": ("rheology", float),
    "rho_s": ("rheology", float),
    "phi_s": ("rheology", float),
    "friction": ("rheology", str),
    "regularization": ("rheology", str),
    "delta": ("rheology", float),
    "eta_cap_coefficient": ("rheology", float),
    "layers": ("solver", int),
    "cfl": ("solver", float),
    "shear_order": ("solver", int),
    "t_end": ("solver", float),
    "u_stop": ("solver", float),
    "n_stop": ("solver", int),
    "max_steps": ("solver", int),
    "steady_tol": ("solver", float),
    "monolayer_basal_factor": ("solver", float),
    "depth": ("scenario", float),
    "theta_deg": ("scenario", float),
    "nx": ("scenario", int),
    "domain_length": ("scenario", float),
    "layers_sweep": ("scenario", _int_tuple),
    "theta_sweep_deg": ("scenario", _float_tuple),
    "error_bound": ("scenario", float),
    "h_i": ("scenario", float),
    "h0": ("scenario", float),
    "r0": ("scenario", float),
    "x_min": ("scenario", float),
    "x_max": ("scenario", float),
    "dx": ("scenario", float),
    "stations": ("scenario", _float_tuple),
    "theta_list_deg": ("scenario", _float_tuple),
    "h_i_list": ("scenario", _float_tuple),
    "friction_modes": ("scenario", _str_tuple),
    "layers_list": ("scenario", _int_tuple),
    "shear_order_list": ("scenario", _int_tuple),
    "directory": ("output", str),
    "snapshot_dt": ("output", float),
}

_KEYS_BY_COMMAND = {
    "uniform-flow": {
        "rheology": {"preset", "mu_s", "mu_2", "i0", "d_s", "rho_s", "phi_s",
                     "friction", "regularization", "delta", "eta_cap_coefficient"},
        "solver": {"layers", "cfl", "shear_order", "t_end", "u_stop", "n_stop",
                   "max_steps", "steady_tol", "monolayer_basal_factor"},
        "scenario": {"depth", "theta_deg", "nx", "domain_length",
                     "layers_sweep", "theta_sweep_deg", "error_bound"},
        "output": {"directory", "snapshot_dt"},
    },
    "collapse": {
        "rheology": {"preset", "mu_s", "mu_2", "i0", "d_s", "rho_s", "phi_s",
                     "friction", "regularization", "delta", "eta_cap_coefficient"},
        "solver": {"layers", "cfl", "shear_order", "t_end", "u_stop", "n_stop",
                   "max_steps", "monolayer_basal_factor"},
        "scenario": {"theta_deg", "h_i", "h0", "r0", "x_min", "x_max", "dx",
                     "stations"},
        "output": {"directory", "snapshot_dt"},
    },
    "sweep": {
        "rheology": {"preset", "mu_s", "mu_2", "i0", "d_s", "rho_s", "phi_s",
                     "regularization", "delta", "eta_cap_coefficient"},
        "solver": {"cfl", "t_end", "u_stop", "n_stop", "max_steps",
                   "monolayer_basal_factor"},
        "scenario": {"h0", "r0", "x_min", "x_max", "dx", "theta_list_deg",
                     "h_i_list", "friction_modes", "layers_list",
                     "shear_order_list"},
        "output": {"directory", "snapshot_dt"},
    },
}

_REQUIRED = {
    "uniform-flow": set(),
    "collapse": {"theta_deg", "h_i"},
    "sweep": set(),
}

_DEFAULT_PRESET = {
    "uniform-flow": "analytic-bagnold",
    "collapse": "experiments-2010",
    "sweep": "experiments-2010",
}

# slope grid mirroring the analytic surface-velocity figure; brackets the
# flow threshold arctan(mu_s) = 19.95 deg for the bagnold preset
_DEFAULT_THETA_SWEEP = (10.0, 14.0, 18.0, 19.5, 20.63, 22.0, 24.64, 26.0, 28.0)


def parse_config(path, command: str, overrides: dict | None = None) -> RunConfig:
    """Read an INI config for ``command``, apply flag overrides, validate.

    Unknown sections or keys are hard errors; missing required keys are
    errors naming the key; preset values fill any rheology fields the file
    does not set explicitly.
    """
    if command not in _KEYS_BY_COMMAND:
        raise ConfigError(f"unknown command: {command}")
    allowed = _KEYS_BY_COMMAND[command]

    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    raw: dict = {}
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(f"unknown section [{section}] for {command}")
        for key, value in parser.items(section):
            if key not in allowed[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            raw[key] = value

    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            raw[key] = value

    cfg = RunConfig(command=command)
    cfg.layers_sweep = (5, 10, 20, 50) if command == "uniform-flow" else ()
    cfg.theta_sweep_deg = _DEFAULT_THETA_SWEEP if command == "uniform-flow" else ()
    if command == "uniform-flow":
        cfg.theta_deg = math.degrees(0.43)
        cfg.t_end = 120.0
        cfg.regularization = "delta"
        cfg.nx = 4

    missing = [k for k in _REQUIRED[command] if k not in raw]
    if missing:
        section = _SCHEMA[missing[0]][0]
        raise ConfigError(f"missing required key '{missing[0]}' in section [{section}]")

    preset_name = raw.get("preset", _DEFAULT_PRESET[command])
    if preset_name:
        if preset_name not in RHEOLOGY_PRESETS:
            raise ConfigError(
                f"unknown rheology preset '{preset_name}' "
                f"(available: {', '.join(sorted(RHEOLOGY_PRESETS))})"
            )
        p = RHEOLOGY_PRESETS[preset_name]
        cfg.preset = preset_name
        cfg.mu_s, cfg.mu_2, cfg.i0 = p.mu_s, p.mu_2, p.I0
        cfg.d_s, cfg.rho_s, cfg.phi_s = p.d_s, p.rho_s, p.phi_s

    for key, value in raw.items():
        if key == "preset":
            continue
        section, conv = _SCHEMA[key]
        try:
            setattr(cfg, key, conv(value) if isinstance(value, str) else value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for '{key}' in [{section}]: {value!r}") from exc

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    checks = [
        (cfg.layers >= 1, "solver.layers must be >= 1"),
        (0.0 < cfg.cfl <= 1.0, "solver.cfl must be in (0, 1]"),
        (cfg.shear_order in (1, 2), "solver.shear_order must be 1 or 2"),
        (cfg.t_end > 0.0, "solver.t_end must be positive"),
        (cfg.snapshot_dt > 0.0, "output.snapshot_dt must be positive"),
        (cfg.friction in ("mu-i", "constant"), "rheology.friction must be mu-i or constant"),
        (cfg.regularization in ("max-bound", "delta"),
         "rheology.regularization must be max-bound or delta"),
        (cfg.delta > 0.0, "rheology.delta must be positive"),
        (cfg.eta_cap_coefficient > 0.0, "rheology.eta_cap_coefficient must be positive"),
        (all(m in ("mu-i", "constant") for m in cfg.friction_modes),
         "scenario.friction_modes entries must be mu-i or constant"),
        (all(n >= 1 for n in cfg.layers_list), "scenario.layers_list entries must be >= 1"),
        (all(o in (1, 2) for o in cfg.shear_order_list),
         "scenario.shear_order_list entries must be 1 or 2"),
    ]
    if cfg.command == "collapse":
        checks += [
            (cfg.h_i >= 0.0, "scenario.h_i must be non-negative"),
            (cfg.h0 > 0.0 and cfg.r0 > 0.0, "scenario.h0 and scenario.r0 must be positive"),
            (cfg.dx > 0.0, "scenario.dx must be positive"),
            (cfg.x_min <= -cfg.r0, "scenario.x_min must cover the column (x_min <= -r0)"),
        ]
    if cfg.command == "uniform-flow":
        checks += [
            (cfg.depth > 0.0, "scenario.depth must be positive"),
            (cfg.nx >= 2, "scenario.nx must be >= 2"),
            (cfg.error_bound > 0.0, "scenario.error_bound must be positive"),
        ]
    try:
        cfg.rheology_params()
    except ValueError as exc:
        raise ConfigError(f"rheology: {exc}") from exc
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)


def write_echo(cfg: RunConfig, path: Path) -> None:
    """Write every effective value, grouped by section, as a parseable INI."""
    sections: dict = {}
    allowed = _KEYS_BY_COMMAND[cfg.command]
    for key, (section, _) in _SCHEMA.items():
        if section not in allowed or key not in allowed[section]:
            continue
        value = getattr(cfg, key)
        if isinstance(value, tuple):
            text = ",".join(_fmt(v) for v in value)
        else:
            text = _fmt(value)
        sections.setdefault(section, []).append((key, text))
    with open(path, "w") as fh:
        fh.write(f"# effective configuration (command: {cfg.command})\n")
        for section in ("rheology", "solver", "scenario", "output"):
            if section not in sections:
                continue
            fh.write(f"\n[{section}]\n")
            for key, text in sections[section]:
                fh.write(f"{key} = {text}\n")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _layer_midpoints(partition: LayerPartition, depth: float) -> np.ndarray:
    cum = partition.cumulative
    return 0.5 * (cum[:-1] + cum[1:]) * depth


def cmd_uniform_flow(cfg: RunConfig, out_dir: Path) -> int:
    """Steady uniform-flow validation: profile, error curve, slope sweep."""
    params = cfg.rheology_params()
    theta = math.radians(cfg.theta_deg)
    spec = UniformFlowSpec(H=cfg.depth, theta=theta, rheology=params)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_echo(cfg, out_dir / "effective-config.ini")

    if not spec.flowing:
        print(f"uniform-flow: no steady flowing solution at theta = "
              f"{cfg.theta_deg:.4g} deg (tan theta outside (mu_s, mu_2))",
              file=sys.stderr)
        return 2

    def steady(n_layers, theta_):
        spec_ = UniformFlowSpec(H=cfg.depth, theta=theta_, rheology=params)
        t0 = time.perf_counter()
        res = run_uniform_flow(
            spec_, n_layers, nx=cfg.nx, cfl=cfg.cfl, t_end=cfg.t_end,
            steady_tol=cfg.steady_tol, shear_order=cfg.shear_order,
            friction_mode=cfg.friction_mode(), delta=cfg.delta,
        )
        return res, time.perf_counter() - t0

    partition = LayerPartition.uniform(cfg.layers)
    primary, wall = steady(cfg.layers, theta)
    z_mid = _layer_midpoints(partition, cfg.depth)
    u_exact = layer_average_bagnold(spec, partition)
    rows = []
    for j in range(cfg.layers):
        _, p_ex, tau_ex = bagnold_profile(z_mid[j], spec)
        rows.append((j + 1, z_mid[j], primary.u_layers[j], u_exact[j], p_ex, tau_ex))
    write_csv(out_dir / "profile.csv",
              ["layer_index", "z_mid", "u_sim", "u_exact", "p_exact", "tau_exact"],
              rows)

    err_rows = [(cfg.layers, primary.error, wall)]
    for n in cfg.layers_sweep:
        if n == cfg.layers:
            continue
        res, w = steady(n, theta)
        err_rows.append((n, res.error, w))
    err_rows.sort(key=lambda r: r[0])
    write_csv(out_dir / "error.csv", ["n_layers", "relative_error", "wall_time_s"],
              err_rows)

    sweep_rows = []
    for deg in cfg.theta_sweep_deg:
        th = math.radians(deg)
        spec_ = UniformFlowSpec(H=cfg.depth, theta=th, rheology=params)
        res, _ = steady(cfg.layers, th)
        u_surface = res.u_layers[-1]
        u_exact_surf = bagnold_profile(cfg.depth, spec_)[0] if spec_.flowing else 0.0
        sweep_rows.append((th, deg, math.tan(th), u_surface, u_exact_surf))
    write_csv(out_dir / "surface_velocity_vs_theta.csv",
              ["theta_rad", "theta_deg", "tan_theta", "u_surface_sim", "u_surface_exact"],
              sweep_rows)

    print(f"uniform-flow: N={cfg.layers} relative_error={primary.error:.6f} "
          f"(bound {cfg.error_bound})")
    return 0 if primary.error < cfg.error_bound else 1


def _collapse_outputs(result, cfg: RunConfig, params: RheologyParams,
                      out_dir: Path) -> None:
    spec = result.spec
    n = cfg.layers
    partition = LayerPartition.uniform(n)
    env = Environment(theta=spec.theta)

    header = ["t", "x", "h"] + [f"u_{j+1}" for j in range(n)]
    with open(out_dir / "snapshots.csv", "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for s in result.history:
            for i in range(s.nx):
                vals = [s.t, s.x_centers[i], s.h[i]] + [s.u[j, i] for j in range(n)]
                fh.write(",".join(_fmt(v) for v in vals) + "\n")

    station_idx = []
    for xs in cfg.stations:
        i = int(np.argmin(np.abs(result.history[0].x_centers - xs)))
        station_idx.append((xs, i))
    w_rows = []
    for s in result.history:
        w_bot, w_top = vertical_velocity(s, partition, env)
        z_if = partition.cumulative[:, None] * s.h[None, :]
        for xs, i in station_idx:
            for j in range(n):
                w_rows.append((s.t, s.x_centers[i], j + 1,
                               z_if[j, i], z_if[j + 1, i],
                               w_bot[j, i], w_top[j, i], s.u[j, i]))
    write_csv(out_dir / "w_profiles.csv",
              ["t", "x_station", "layer_index", "z_bottom", "z_top",
               "w_bottom", "w_top", "u"],
              w_rows)

    diag_rows = []
    for s in result.history:
        diag_rows.append((
            s.t,
            front_position(s, spec.h_i),
            s.max_speed(),
            s.total_mass(),
            total_energy(s, partition, env, params.rho),
        ))
    write_csv(out_dir / "diagnostics.csv",
              ["t", "x_front", "max_speed", "mass", "energy"], diag_rows)

    dep = result.deposit
    final = result.history[-1]
    write_csv(out_dir / "deposit.csv", ["x", "h"],
              [(final.x_centers[i], final.h[i]) for i in range(final.nx)])

    tau_c = stopping_timescale(spec.h0, spec.theta)
    write_csv(out_dir / "summary.csv",
              ["theta_deg", "h_i", "n_layers", "friction_mode", "shear_order",
               "r_f", "t_f", "h_f", "r_f_over_h0", "t_f_over_tau_c", "censored"],
              [(math.degrees(spec.theta), spec.h_i, n, cfg.friction,
                cfg.shear_order, dep.r_f, dep.t_f, dep.h_f,
                dep.r_f / spec.h0, dep.t_f / tau_c, dep.censored)])


def cmd_collapse(cfg: RunConfig, out_dir: Path) -> int:
    """Single granular-column collapse run with full field output."""
    params = cfg.rheology_params()
    out_dir.mkdir(parents=True, exist_ok=True)
    write_echo(cfg, out_dir / "effective-config.ini")

    spec = CollapseSpec(h0=cfg.h0, r0=cfg.r0, h_i=cfg.h_i,
                        theta=math.radians(cfg.theta_deg),
                        x_min=cfg.x_min, x_max=cfg.x_max)
    result = run_collapse(
        spec, params, n_layers=cfg.layers, dx=cfg.dx,
        friction_mode=cfg.friction_mode(), shear_order=cfg.shear_order,
        cfl=cfg.cfl, t_end=cfg.t_end, snapshot_dt=cfg.snapshot_dt,
        eta_cap_coefficient=cfg.eta_cap_coefficient,
        u_stop=cfg.u_stop, n_stop=cfg.n_stop,
        monolayer_basal_factor=cfg.monolayer_basal_factor,
    )
    _collapse_outputs(result, cfg, params, out_dir)
    dep = result.deposit
    print(f"collapse: r_f={dep.r_f:.4f} m, t_f={dep.t_f:.4f} s, "
          f"h_f={dep.h_f:.5f} m, censored={dep.censored}")
    return 1 if dep.censored else 0


def cmd_sweep(cfg: RunConfig, out_dir: Path) -> int:
    """Scenario matrix over slopes, bed thicknesses, modes and layer counts."""
    params = cfg.rheology_params()
    out_dir.mkdir(parents=True, exist_ok=True)
    write_echo(cfg, out_dir / "effective-config.ini")

    rows = []
    for theta_deg in cfg.theta_list_deg:
        bed_list = cfg.h_i_list or EXPERIMENT_BED_THICKNESS.get(
            theta_deg, (1.5e-3, 2.5e-3, 5.0e-3))
        for mode_name in cfg.friction_modes:
            mode = FrictionMode.MU_OF_I if mode_name == "mu-i" else FrictionMode.CONSTANT
            for n_layers in cfg.layers_list:
                for order in cfg.shear_order_list:
                    for h_i in bed_list:
                        status = "ok"
                        dep = None
                        x_max = cfg.x_max
                        try:
                            for _ in range(3):
                                spec = CollapseSpec(h0=cfg.h0, r0=cfg.r0, h_i=h_i,
                                                    theta=math.radians(theta_deg),
                                                    x_min=cfg.x_min, x_max=x_max)
                                result = run_collapse(
                                    spec, params, n_layers=n_layers, dx=cfg.dx,
                                    friction_mode=mode, shear_order=order,
                                    cfl=cfg.cfl, t_end=cfg.t_end,
                                    snapshot_dt=cfg.snapshot_dt,
                                    eta_cap_coefficient=cfg.eta_cap_coefficient,
                                    u_stop=cfg.u_stop, n_stop=cfg.n_stop,
                                    monolayer_basal_factor=cfg.monolayer_basal_factor,
                                )
                                dep = result.deposit
                                # deposit reached the open boundary: retry longer
                                if dep.r_f < x_max - 5.0 * cfg.dx:
                                    break
                                x_max *= 2.0
                            else:
                                status = "boundary"
                            if dep.censored:
                                status = "censored"
                        except Exception as exc:  # noqa: BLE001 - recorded per row
                            status = f"error: {exc}"
                        tau_c = stopping_timescale(cfg.h0, math.radians(theta_deg))
                        if dep is None:
                            rows.append((theta_deg, h_i, mode_name, n_layers, order,
                                         math.nan, math.nan, math.nan,
                                         math.nan, math.nan, status))
                        else:
                            rows.append((theta_deg, h_i, mode_name, n_layers, order,
                                         dep.r_f, dep.t_f, dep.h_f,
                                         dep.r_f / cfg.h0, dep.t_f / tau_c, status))
    write_csv(out_dir / "runout_vs_hi.csv",
              ["theta_deg", "h_i", "friction_mode", "layers", "shear_order",
               "r_f", "t_f", "h_f", "r_f_over_h0", "t_f_over_tau_c", "status"],
              rows)
    print(f"sweep: {len(rows)} scenarios -> {out_dir / 'runout_vs_hi.csv'}")
    return 1 if any(r[-1] != "ok" for r in rows) else 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="granflow",
        description="Multilayer shallow-flow simulator for dry granular media",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("uniform-flow", "steady uniform flow on an incline vs the closed-form profile"),
        ("collapse", "granular column collapse over an erodible bed"),
        ("sweep", "matrix of collapse scenarios (slopes x beds x modes x layers)"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--layers", type=int, default=None, help="number of layers")
        p.add_argument("--nx", type=int, default=None, help="cell count")
        p.add_argument("--cfl", type=float, default=None, help="CFL number")
        p.add_argument("--rheology", choices=("mu-i", "constant"), default=None,
                       help="friction law")
        p.add_argument("--shear-order", type=int, choices=(1, 2), default=None,
                       help="strain-rate estimate order")
        p.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "layers": args.layers,
        "cfl": args.cfl,
        "friction": args.rheology,
        "shear_order": args.shear_order,
        "directory": args.out,
    }
    try:
        cfg = parse_config(args.config, args.command, overrides)
        if args.nx is not None:
            if args.command == "uniform-flow":
                cfg.nx = args.nx
            else:
                # keep the gate x=0 on a cell edge: derive dx from the cell
                # count, then snap both ends outward to multiples of dx
                cfg.dx = (cfg.x_max - cfg.x_min) / args.nx
                cfg.x_min = -math.ceil(-cfg.x_min / cfg.dx - 1e-9) * cfg.dx
                cfg.x_max = math.ceil(cfg.x_max / cfg.dx - 1e-9) * cfg.dx
            _validate(cfg)
        out_dir = Path(cfg.directory)
        if args.command == "uniform-flow":
            return cmd_uniform_flow(cfg, out_dir)
        if args.command == "collapse":
            return cmd_collapse(cfg, out_dir)
        return cmd_sweep(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
