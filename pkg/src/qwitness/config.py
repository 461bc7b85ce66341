"""Experiment configuration: JSON schema, defaults, strict validation.

Defaults reproduce the baseline simulation setup: coupling 0.1, UV cutoff at
twice the oscillator frequency, IR cutoff at half, 20 Fock levels, bilinear
exchange and a zero-temperature thermal bath.  Unknown keys are hard errors;
time quantities in the file are given in cycles of 2 pi / omega.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

from .bath import BathSpec, SpectralDensity, SOFT_DOUBLE_CUTOFF, THERMAL

FOCK = "fock"
COHERENT_GRID = "coherent_grid"


class ConfigError(ValueError):
    """Configuration file failed to parse or validate."""


@dataclass(frozen=True)
class SystemConfig:
    omega: float = 1.0
    dim: int = 20
    n: int = 1


@dataclass(frozen=True)
class GridConfig:
    extent: float = 2.0
    points: int = 5


@dataclass(frozen=True)
class ProtocolConfig:
    basis: str = FOCK
    grid: GridConfig = field(default_factory=GridConfig)
    initial_state: Any = 5            # fock index, list of indices, or complex
    tau_start: float = 0.0025         # cycles
    tau_stop: float = 0.5
    tau_points: int = 200
    tau_values: tuple | None = None   # explicit grid overrides start/stop
    schedule: Any = "t2=2t1"
    delta: bool = False


@dataclass(frozen=True)
class NumericsConfig:
    quad_tol: float = 1e-9
    ode_rtol: float = 1e-8
    ode_atol: float = 1e-10
    rate_grid_points: int | None = None
    t_max: float | None = None        # cycles


@dataclass(frozen=True)
class OutputsConfig:
    directory: str = "out"
    emit_rates: bool = True
    emit_witness: bool = True
    emit_svg: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    bath_kind: str
    m: int
    beta: float
    r0: float
    alpha_exps: tuple[float, ...]     # one BathSpec per entry (batch fan-out)
    theta: float
    spectral: SpectralDensity
    protocol: ProtocolConfig
    numerics: NumericsConfig
    outputs: OutputsConfig

    def bath_specs(self) -> list[BathSpec]:
        return [BathSpec(kind=self.bath_kind, m=self.m, beta=self.beta,
                         r0=self.r0, alpha_exp=a, theta=self.theta,
                         omega_ref=self.system.omega)
                for a in self.alpha_exps]

    def tau_grid(self):
        import numpy as np
        p = self.protocol
        if p.tau_values is not None:
            return np.asarray(p.tau_values, dtype=float)
        return np.linspace(p.tau_start, p.tau_stop, p.tau_points)

    def initial_states(self) -> list[Any]:
        init = self.protocol.initial_state
        return list(init) if isinstance(init, (list, tuple)) else [init]

    def resolved(self) -> dict:
        """Canonical plain-dict form; every knob that affects output."""
        return {
            "system": {"omega": self.system.omega, "dim": self.system.dim,
                       "n": self.system.n},
            "bath": {"kind": self.bath_kind, "m": self.m,
                     "beta": "inf" if math.isinf(self.beta) else self.beta,
                     "r0": self.r0, "alpha_exp": list(self.alpha_exps),
                     "theta": self.theta},
            "spectral": {"coupling": self.spectral.coupling,
                         "omega_ir": self.spectral.omega_ir,
                         "omega_uv": self.spectral.omega_uv,
                         "form": self.spectral.form},
            "protocol": {
                "basis": self.protocol.basis,
                "grid": {"extent": self.protocol.grid.extent,
                         "points": self.protocol.grid.points},
                "initial_state": _initial_to_json(self.protocol.initial_state),
                "tau_grid": (list(self.protocol.tau_values)
                             if self.protocol.tau_values is not None else
                             {"start": self.protocol.tau_start,
                              "stop": self.protocol.tau_stop,
                              "points": self.protocol.tau_points}),
                "schedule": self.protocol.schedule,
                "delta": self.protocol.delta,
            },
            "numerics": {"quad_tol": self.numerics.quad_tol,
                         "ode_rtol": self.numerics.ode_rtol,
                         "ode_atol": self.numerics.ode_atol,
                         "rate_grid_points": self.numerics.rate_grid_points,
                         "t_max": self.numerics.t_max},
            "outputs": {"directory": self.outputs.directory,
                        "emit_rates": self.outputs.emit_rates,
                        "emit_witness": self.outputs.emit_witness,
                        "emit_svg": self.outputs.emit_svg},
        }

    def content_hash(self) -> str:
        canon = json.dumps(self.resolved(), sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _initial_to_json(init):
    if isinstance(init, complex):
        return {"re": init.real, "im": init.imag}
    if isinstance(init, (list, tuple)):
        return list(init)
    return init


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _get(section: dict, key: str, default, caster, where: str):
    if key not in section or section[key] is None:
        return default
    try:
        return caster(section[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {where}.{key}: {exc}") from exc


def _parse_beta(value) -> float:
    if value is None:
        return math.inf
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"invalid beta {value!r}; use a number or 'inf'")
    beta = float(value)
    if beta <= 0.0:
        raise ConfigError(f"beta must be positive, got {beta}")
    return beta


def _parse_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    if isinstance(value, dict):
        _reject_unknown(value, {"re", "im"}, "initial_state")
        return complex(value.get("re", 0.0), value.get("im", 0.0))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    raise ConfigError(f"cannot interpret {value!r} as a complex amplitude")


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw dict and apply defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    _reject_unknown(raw, {"system", "bath", "spectral", "protocol",
                          "numerics", "outputs"}, "config")

    sys_raw = raw.get("system", {}) or {}
    _reject_unknown(sys_raw, {"omega", "dim", "n"}, "system")
    system = SystemConfig(
        omega=_get(sys_raw, "omega", 1.0, float, "system"),
        dim=_get(sys_raw, "dim", 20, int, "system"),
        n=_get(sys_raw, "n", 1, int, "system"))
    if system.omega <= 0.0:
        raise ConfigError("system.omega must be positive")
    if system.n not in (1, 2):
        raise ConfigError(f"system.n must be 1 or 2, got {system.n}")

    bath_raw = raw.get("bath", {}) or {}
    _reject_unknown(bath_raw, {"kind", "m", "beta", "r0", "alpha_exp", "theta"},
                    "bath")
    kind = _get(bath_raw, "kind", THERMAL, str, "bath")
    m = _get(bath_raw, "m", 1, int, "bath")
    beta = _parse_beta(bath_raw.get("beta"))
    r0 = _get(bath_raw, "r0", 1.0, float, "bath")
    theta = _get(bath_raw, "theta", 0.0, float, "bath")
    alpha_raw = bath_raw.get("alpha_exp", 0.0)
    if isinstance(alpha_raw, (list, tuple)):
        alpha_exps = tuple(float(a) for a in alpha_raw)
        if not alpha_exps:
            raise ConfigError("bath.alpha_exp list cannot be empty")
    else:
        alpha_exps = (float(alpha_raw),)

    spec_raw = raw.get("spectral", {}) or {}
    _reject_unknown(spec_raw, {"coupling", "omega_ir", "omega_uv", "form"},
                    "spectral")
    try:
        spectral = SpectralDensity(
            coupling=_get(spec_raw, "coupling", 0.1, float, "spectral"),
            omega_ir=_get(spec_raw, "omega_ir", 0.5, float, "spectral"),
            omega_uv=_get(spec_raw, "omega_uv", 2.0, float, "spectral"),
            form=_get(spec_raw, "form", SOFT_DOUBLE_CUTOFF, str, "spectral"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    proto_raw = raw.get("protocol", {}) or {}
    _reject_unknown(proto_raw, {"basis", "grid", "initial_state", "tau_grid",
                                "schedule", "delta"}, "protocol")
    basis = _get(proto_raw, "basis", FOCK, str, "protocol")
    if basis not in (FOCK, COHERENT_GRID):
        raise ConfigError(f"protocol.basis must be '{FOCK}' or "
                          f"'{COHERENT_GRID}', got {basis!r}")
    grid_raw = proto_raw.get("grid", {}) or {}
    _reject_unknown(grid_raw, {"extent", "points"}, "protocol.grid")
    grid = GridConfig(extent=_get(grid_raw, "extent", 2.0, float, "grid"),
                      points=_get(grid_raw, "points", 5, int, "grid"))

    default_stop = 0.5 if basis == FOCK else 1.0
    tau_raw = proto_raw.get("tau_grid")
    tau_values = None
    tau_start, tau_stop, tau_points = 0.0025, default_stop, 200
    if isinstance(tau_raw, (list, tuple)):
        tau_values = tuple(float(t) for t in tau_raw)
        if any(t < 0 for t in tau_values):
            raise ConfigError("tau values must be nonnegative")
    elif isinstance(tau_raw, dict):
        _reject_unknown(tau_raw, {"start", "stop", "points"},
                        "protocol.tau_grid")
        tau_start = _get(tau_raw, "start", 0.0025, float, "tau_grid")
        tau_stop = _get(tau_raw, "stop", default_stop, float, "tau_grid")
        tau_points = _get(tau_raw, "points", 200, int, "tau_grid")
        if tau_start < 0 or tau_stop < tau_start or tau_points < 1:
            raise ConfigError("need 0 <= start <= stop and points >= 1 "
                              "in protocol.tau_grid")
    elif tau_raw is not None:
        raise ConfigError("protocol.tau_grid must be a list or mapping")

    schedule = proto_raw.get("schedule", "t2=2t1")
    if isinstance(schedule, dict):
        _reject_unknown(schedule, {"t2_over_t1", "pairs"}, "protocol.schedule")
        if "pairs" in schedule:
            schedule = [tuple(map(float, p)) for p in schedule["pairs"]]
        else:
            schedule = float(schedule["t2_over_t1"])
    elif not isinstance(schedule, str):
        raise ConfigError("protocol.schedule must be 't2=2t1' or a mapping")

    init_raw = proto_raw.get("initial_state", 5)
    if basis == FOCK:
        if isinstance(init_raw, (list, tuple)):
            initial = [int(i) for i in init_raw]
            if not initial:
                raise ConfigError("initial_state list cannot be empty")
        else:
            initial = int(init_raw)
        indices = initial if isinstance(initial, list) else [initial]
        if any(i < 0 for i in indices):
            raise ConfigError("fock indices must be nonnegative")
        min_dim = max(max(indices) + 10, 20)
    else:
        if isinstance(init_raw, (list, tuple)) and len(init_raw) != 2:
            raise ConfigError("coherent basis takes a single complex "
                              "initial_state")
        initial = _parse_complex(init_raw)
        min_dim = 20
    if system.dim < min_dim:
        raise ConfigError(
            f"system.dim={system.dim} too small; need at least {min_dim} "
            "(initial fock index + 10, floor 20)")

    protocol = ProtocolConfig(basis=basis, grid=grid, initial_state=initial,
                              tau_start=tau_start, tau_stop=tau_stop,
                              tau_points=tau_points, tau_values=tau_values,
                              schedule=schedule,
                              delta=bool(proto_raw.get("delta", False)))

    num_raw = raw.get("numerics", {}) or {}
    _reject_unknown(num_raw, {"quad_tol", "ode_rtol", "ode_atol",
                              "rate_grid_points", "t_max"}, "numerics")
    numerics = NumericsConfig(
        quad_tol=_get(num_raw, "quad_tol", 1e-9, float, "numerics"),
        ode_rtol=_get(num_raw, "ode_rtol", 1e-8, float, "numerics"),
        ode_atol=_get(num_raw, "ode_atol", 1e-10, float, "numerics"),
        rate_grid_points=_get(num_raw, "rate_grid_points", None, int,
                              "numerics"),
        t_max=_get(num_raw, "t_max", None, float, "numerics"))

    out_raw = raw.get("outputs", {}) or {}
    _reject_unknown(out_raw, {"directory", "emit_rates", "emit_witness",
                              "emit_svg"}, "outputs")
    outputs = OutputsConfig(
        directory=_get(out_raw, "directory", "out", str, "outputs"),
        emit_rates=bool(out_raw.get("emit_rates", True)),
        emit_witness=bool(out_raw.get("emit_witness", True)),
        emit_svg=bool(out_raw.get("emit_svg", True)))

    try:
        config = ExperimentConfig(system=system, bath_kind=kind, m=m,
                                  beta=beta, r0=r0, alpha_exps=alpha_exps,
                                  theta=theta, spectral=spectral,
                                  protocol=protocol, numerics=numerics,
                                  outputs=outputs)
        config.bath_specs()   # triggers BathSpec validation
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``--set dotted.key=value`` pairs onto the raw mapping."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path, _, text = item.partition("=")
        keys = path.strip().split(".")
        if not all(keys):
            raise ConfigError(f"override {item!r} has an empty key component")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {path!r} crosses a scalar")
        node[keys[-1]] = value
    return raw


def load_config(path, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read, override and validate a config file; empty files mean defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.strip():
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"parse error in {path} at line {exc.lineno}, column "
                f"{exc.colno}: {exc.msg}") from exc
    else:
        raw = {}
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config(raw)
