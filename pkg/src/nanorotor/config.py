"""Experiment configuration: dataclasses, JSON I/O, validation, estimates.

Configs are plain JSON with a fixed schema; CLI flags override file keys by
dotted path (``--pulse.phi 3.14159``).  ``validate`` performs static checks
and resource estimates only, it never runs physics.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

from . import pulse as pulse_mod
from . import rotor as rotor_mod
from .errors import ConfigError

SCENARIOS = ("evolve", "sweep_phi", "sweep_sigma", "sweep_asymmetry",
             "decohere", "fractional", "params")


@dataclass
class RotorConfig:
    semi_axes_nm: list[float] | None = None
    density_kg_m3: float | None = None
    inertia_ratio: float | None = None
    b_asym: float | None = None
    t_rev_s: float | None = None
    # params scenario: also report the asymmetry of a variant with this minor
    # semi-axis (nm), e.g. the nominally round rod after a fabrication deviation
    variant_minor_axis_nm: float | None = None


@dataclass
class StateConfig:
    mode: str = "gaussian_j"
    sigma_j_sq: float | None = None
    sigma_beta: float | None = None
    sigma_k: float = 0.0
    k0: int = 0
    jmax: int | None = None


@dataclass
class LaserConfig:
    power_w: float = 0.0
    waist_m: float = 0.0
    duration_s: float = 0.0
    delta_alpha: float = 0.0


@dataclass
class PulseConfig:
    phi: float | list[float] | None = None
    laser: LaserConfig | None = None
    schedule_t: list[float] = field(default_factory=lambda: [0.125])
    method: str = "semiclassical"


@dataclass
class GammaConfig:
    hz: float | None = None
    dimensionless: float | None = None


@dataclass
class TimesConfig:
    t_end: float = 1.05
    n_points: int = 512
    refine_factor: int = 8
    refine_halfwidth: float = 0.02


@dataclass
class EnsembleConfig:
    n: int = 1
    seed: int = 12345
    threads: int | None = None


@dataclass
class SweepConfig:
    phi: list[float] | None = None
    sigma_k: list[float] | None = None
    sigma_beta: list[float] | None = None
    b_log10_min: float = -6.0
    b_log10_max: float = -4.0
    b_points: int = 7
    b_include: list[float] = field(default_factory=list)


@dataclass
class SpectrumConfig:
    method: str = "symmetric"
    kmax: int | None = None


@dataclass
class OutputConfig:
    prefix: str = "run"
    format: str = "csv"


@dataclass
class ExperimentConfig:
    scenario: str = "evolve"
    rotor: RotorConfig = field(default_factory=RotorConfig)
    state: StateConfig = field(default_factory=StateConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    gamma: GammaConfig = field(default_factory=GammaConfig)
    times: TimesConfig = field(default_factory=TimesConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTION_TYPES = {
    "rotor": RotorConfig, "state": StateConfig, "pulse": PulseConfig,
    "gamma": GammaConfig, "times": TimesConfig, "ensemble": EnsembleConfig,
    "sweep": SweepConfig, "spectrum": SpectrumConfig, "output": OutputConfig,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from a JSON dict; accepts a run manifest ({"config": ...})."""
    if "config" in data and "scenario" not in data:
        data = data["config"]
    cfg = ExperimentConfig()
    for key, value in data.items():
        if key == "scenario":
            cfg.scenario = value
        elif key in _SECTION_TYPES:
            section = _SECTION_TYPES[key]()
            for sub, subval in value.items():
                if not hasattr(section, sub):
                    raise ConfigError(f"unknown key {key}.{sub}")
                if key == "pulse" and sub == "laser" and isinstance(subval, dict):
                    subval = LaserConfig(**subval)
                setattr(section, sub, subval)
            setattr(cfg, key, section)
        else:
            raise ConfigError(f"unknown key {key}")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, Any]) -> ExperimentConfig:
    """Apply dotted-path overrides (``pulse.phi`` -> cfg.pulse.phi)."""
    cfg = copy.deepcopy(cfg)
    for path, value in overrides.items():
        parts = path.split(".")
        target = cfg
        for part in parts[:-1]:
            if not hasattr(target, part):
                raise ConfigError(f"unknown key {path}")
            target = getattr(target, part)
        if not hasattr(target, parts[-1]):
            raise ConfigError(f"unknown key {path}")
        setattr(target, parts[-1], value)
    return cfg


def resolve_phi_list(cfg: ExperimentConfig) -> list[float]:
    p = cfg.pulse
    if p.phi is not None and p.laser is not None:
        raise ConfigError("pulse: give exactly one of phi or laser, not both")
    if p.laser is not None:
        ls = p.laser
        return [pulse_mod.phase_from_laser(ls.power_w, ls.waist_m,
                                           ls.duration_s, ls.delta_alpha)]
    if p.phi is None:
        return [0.0]
    if isinstance(p.phi, (int, float)):
        return [float(p.phi)]
    return [float(x) for x in p.phi]


def resolve_inertia(cfg: ExperimentConfig) -> rotor_mod.InertiaModel:
    r = cfg.rotor
    if r.semi_axes_nm is not None:
        axes = tuple(a * 1e-9 for a in r.semi_axes_nm)
        return rotor_mod.inertia_from_ellipsoid(axes, r.density_kg_m3)
    return rotor_mod.inertia_from_parameters(r.inertia_ratio, r.b_asym or 0.0,
                                             t_rev=r.t_rev_s)


def resolve_gamma(cfg: ExperimentConfig, t_rev: float | None) -> float:
    g = cfg.gamma
    if g.hz is not None and g.dimensionless is not None:
        raise ConfigError("gamma: give one of hz or dimensionless, not both")
    if g.dimensionless is not None:
        return float(g.dimensionless)
    if g.hz is not None:
        if not t_rev:
            raise ConfigError("gamma.hz needs a physical rotor (t_rev) to convert")
        return float(g.hz) * t_rev
    return 0.0


@dataclass
class ValidationReport:
    problems: list[str]
    jmax_estimate: int | None = None
    grid_order: int | None = None
    memory_bytes: int | None = None
    time_forecast_s: float | None = None

    @property
    def ok(self) -> bool:
        return not self.problems


def validate(cfg: ExperimentConfig) -> ValidationReport:
    """Static validation and resource forecast; runs no physics."""
    problems: list[str] = []
    if cfg.scenario not in SCENARIOS:
        problems.append(f"scenario: unknown value {cfg.scenario!r}")

    r = cfg.rotor
    geom = r.semi_axes_nm is not None or r.density_kg_m3 is not None
    direct = r.inertia_ratio is not None or r.b_asym is not None or r.t_rev_s is not None
    if geom and direct:
        problems.append("rotor: give either geometry (semi_axes_nm, density_kg_m3) "
                        "or direct parameters, not both")
    elif geom:
        if r.semi_axes_nm is None or len(r.semi_axes_nm) != 3 or min(r.semi_axes_nm) <= 0:
            problems.append("rotor.semi_axes_nm: need three positive values")
        if r.density_kg_m3 is None or r.density_kg_m3 <= 0:
            problems.append("rotor.density_kg_m3: must be positive")
    elif direct:
        if r.inertia_ratio is None or r.inertia_ratio <= 1:
            problems.append("rotor.inertia_ratio: must exceed 1 (prolate)")
    else:
        problems.append("rotor: missing specification")

    s = cfg.state
    if s.mode not in ("gaussian_j", "gaussian_beta"):
        problems.append(f"state.mode: unknown value {s.mode!r}")
    if s.mode == "gaussian_j":
        if s.sigma_j_sq is None or s.sigma_j_sq <= 0:
            problems.append("state.sigma_j_sq: must be positive")
    else:
        if s.sigma_beta is None or s.sigma_beta <= 0:
            problems.append("state.sigma_beta: must be positive (degenerate Gaussian rejected)")
    if s.sigma_k < 0:
        problems.append("state.sigma_k: must be >= 0")

    p = cfg.pulse
    if p.phi is not None and p.laser is not None:
        problems.append("pulse: exactly one of phi or laser")
    if p.laser is not None:
        ls = p.laser
        if min(ls.power_w, ls.waist_m, ls.duration_s, ls.delta_alpha) <= 0 \
                and ls.power_w != 0.0:
            problems.append("pulse.laser: parameters must be positive")
    for t in p.schedule_t:
        if not 0.0 <= t <= 8.0:
            problems.append(f"pulse.schedule_t: {t} outside [0, 8]")
    if p.method not in ("exact", "semiclassical"):
        problems.append(f"pulse.method: unknown value {p.method!r}")

    g = cfg.gamma
    if g.hz is not None and g.dimensionless is not None:
        problems.append("gamma: one of hz or dimensionless")
    for name, val in (("gamma.hz", g.hz), ("gamma.dimensionless", g.dimensionless)):
        if val is not None and val < 0:
            problems.append(f"{name}: must be >= 0")

    t = cfg.times
    if t.t_end <= 0:
        problems.append("times.t_end: must be positive")
    if t.n_points < 2:
        problems.append("times.n_points: must be >= 2")
    if cfg.ensemble.n < 1:
        problems.append("ensemble.n: must be >= 1")
    if cfg.spectrum.method not in ("symmetric", "asymmetric"):
        problems.append(f"spectrum.method: unknown value {cfg.spectrum.method!r}")

    report = ValidationReport(problems=problems)
    if problems:
        return report

    # resource estimates from the truncation rule plus pulse headroom
    try:
        if s.mode == "gaussian_j":
            base_jmax = rotor_mod.estimate_jmax("gaussian_j", s.sigma_j_sq, s.k0)
        else:
            kmax0 = int(math.ceil(4.0 * s.sigma_k)) if s.sigma_k > 0 else abs(s.k0)
            base_jmax = rotor_mod.estimate_jmax("gaussian_beta", s.sigma_beta, kmax0)
        phis = resolve_phi_list(cfg)
        margin = max((pulse_mod.pulse_margin(ph) for ph in phis), default=0)
        jmax = (s.jmax or base_jmax) + margin * len(p.schedule_t)
        report.jmax_estimate = base_jmax
        report.grid_order = 2 * jmax + 16
        nsec = (2 * int(math.ceil(4.0 * s.sigma_k)) + 1) if s.sigma_k > 0 else 1
        report.memory_bytes = int(nsec * (jmax + 1) * 16 * 4
                                  + report.grid_order * 16 * 6)
        n_eval = t.n_points * (1 + t.refine_factor * 0.2) * max(cfg.ensemble.n, 1) * nsec
        report.time_forecast_s = float(n_eval * jmax * 2e-8 + 0.5)
    except Exception as exc:  # estimation must never hard-fail validation
        problems.append(f"estimate: {exc}")
    return report
