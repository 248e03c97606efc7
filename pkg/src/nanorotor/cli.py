"""Experiment runner CLI.

``simulate <scenario|preset|config.json> [--key.path value ...] --out PREFIX``

Presets (fig1, fig2a, fig2b, fig2c, fig2d, params) ship as JSON configs in
``nanorotor/presets``.  Every run writes a JSON manifest with the fully
resolved config; re-running a manifest reproduces its outputs byte for byte.
Exit codes: 0 success, 2 config validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import os
import sys
import time as _time

import numpy as np

from . import __version__
from . import config as cfgmod
from . import decoherence, observables, pulse, rotor
from .angular import AngularGrid
from .errors import ConfigError, SimulationError

THREADS_ENV = "NANOROTOR_THREADS"
EIGHTH = 0.125


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def build_time_grid(times: cfgmod.TimesConfig) -> np.ndarray:
    """Uniform sampling plus dense refinement around multiples of 1/8.

    Multiples of 1/8 inside the range are always exact sample points, so
    revival values are read at the revival, not next to it.
    """
    base = np.linspace(0.0, times.t_end, times.n_points)
    parts = [base]
    n8 = int(math.floor(times.t_end / EIGHTH + 1e-9))
    centers = EIGHTH * np.arange(0, n8 + 1)
    spacing = times.t_end / max(times.n_points - 1, 1)
    for c in centers:
        lo = max(c - times.refine_halfwidth, 0.0)
        hi = min(c + times.refine_halfwidth, times.t_end)
        n = max(int(round((hi - lo) / spacing * times.refine_factor)), 2)
        parts.append(np.linspace(lo, hi, n))
    parts.append(centers[centers <= times.t_end])
    grid = np.unique(np.round(np.concatenate(parts), 12))
    return grid


def prepare_state(cfg: cfgmod.ExperimentConfig) -> rotor.RotorState:
    s = cfg.state
    if s.sigma_k > 0:
        return rotor.prepare_mixture(s.sigma_beta, s.sigma_k, jmax=s.jmax)
    if s.mode == "gaussian_j":
        return rotor.prepare_aligned_state("gaussian_j", s.sigma_j_sq, s.k0, jmax=s.jmax)
    return rotor.prepare_aligned_state("gaussian_beta", s.sigma_beta, s.k0, jmax=s.jmax)


def build_spectrum(cfg, model, jmax, kmax):
    kmax = max(kmax, cfg.spectrum.kmax or 0)
    return rotor.rotational_energies(jmax, kmax, model, cfg.spectrum.method)


def _phi_tag(phi: float) -> str:
    return f"{phi:.6g}".replace("-", "m").replace(".", "p")


class OutputWriter:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self.manifest_path = prefix + "_manifest.json"
        self.files: list[str] = []
        directory = os.path.dirname(prefix)
        if directory:
            os.makedirs(directory, exist_ok=True)

    def write_csv(self, suffix: str, header: list[str], columns: list[np.ndarray]) -> str:
        path = f"{self.prefix}{suffix}.csv"
        with open(path, "w") as fh:
            fh.write(f"# manifest: {os.path.basename(self.manifest_path)}\n")
            fh.write(",".join(header) + "\n")
            for row in zip(*columns):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
        self.files.append(path)
        return path

    def write_manifest(self, payload: dict) -> str:
        payload = dict(payload)
        payload["outputs"] = [os.path.basename(f) for f in self.files]
        with open(self.manifest_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return self.manifest_path


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _ensemble_series(state, spectrum, cfg, gamma, phi, tgrid, threads, diagnostics):
    spec = pulse.PulseSpec(phi=phi, schedule=tuple(cfg.pulse.schedule_t),
                           method=cfg.pulse.method)
    prepared = pulse.prepare_for_pulses(state, spec)
    if not spectrum.covers(prepared.jmax, max(abs(k) for k in prepared.sectors)):
        raise ConfigError("internal: spectrum does not cover pulse headroom")
    tc = decoherence.TrajectoryConfig(gamma=gamma, t_end=float(tgrid[-1]),
                                      observation_times=tuple(tgrid),
                                      seed=cfg.ensemble.seed, pulse=spec)
    res = decoherence.run_ensemble(prepared, spectrum, tc, cfg.ensemble.n,
                                   parallelism=threads)
    diagnostics.setdefault("jump_histograms", {})[_phi_tag(phi)] = \
        {str(k): v for k, v in sorted(res.jump_count_histogram.items())}
    return res


def _state_and_spectrum(cfg, model, phis, extra_kmax=0):
    state = prepare_state(cfg)
    margin = max((pulse.pulse_margin(p) for p in phis), default=0)
    jmax_total = state.jmax + margin * len(cfg.pulse.schedule_t)
    kmax = max((abs(k) for k in state.sectors), default=0)
    spectrum = build_spectrum(cfg, model, jmax_total, max(kmax, extra_kmax))
    return state, spectrum


def scenario_params(cfg, writer, diagnostics):
    model = cfgmod.resolve_inertia(cfg)
    report = cfgmod.validate(cfg)
    diagnostics.update({
        "mass_amu": model.mass_amu if model.mass else None,
        "t_rev_ms": model.t_rev * 1e3,
        "b_asym": abs(model.b_asym),
        "inertia_ratio": model.ratio,
        "inertia_kg_m2": model.inertia,
        "jmax_estimate": report.jmax_estimate,
        "grid_order": report.grid_order,
        "memory_bytes": report.memory_bytes,
    })
    if cfg.rotor.variant_minor_axis_nm is not None and cfg.rotor.semi_axes_nm:
        axes = sorted(cfg.rotor.semi_axes_nm, reverse=True)  # [long, minor, minor]
        vm = rotor.inertia_from_ellipsoid(
            (axes[1] * 1e-9, cfg.rotor.variant_minor_axis_nm * 1e-9, axes[0] * 1e-9),
            cfg.rotor.density_kg_m3)
        diagnostics["variant_b_asym"] = abs(vm.b_asym)
        diagnostics["variant_mass_amu"] = vm.mass_amu
    return 0


def scenario_evolve(cfg, writer, diagnostics, gamma, threads, per_trajectory=False):
    model = cfgmod.resolve_inertia(cfg)
    phis = cfgmod.resolve_phi_list(cfg)
    state, spectrum = _state_and_spectrum(cfg, model, phis)
    tgrid = build_time_grid(cfg.times)
    multi = len(phis) > 1
    for phi in phis:
        res = _ensemble_series(state, spectrum, cfg, gamma, phi, tgrid,
                               threads, diagnostics)
        suffix = f"_phi{_phi_tag(phi)}" if multi else ""
        cols = [res.times, res.mean_alignment]
        header = ["t_over_Trev", "value"]
        if gamma > 0 and cfg.ensemble.n > 1:
            cols.append(res.stderr)
            header.append("stderr")
        writer.write_csv(suffix, header, cols)
        if per_trajectory:
            spec = pulse.PulseSpec(phi=phi, schedule=tuple(cfg.pulse.schedule_t),
                                   method=cfg.pulse.method)
            prepared = pulse.prepare_for_pulses(state, spec)
            tc = decoherence.TrajectoryConfig(gamma=gamma, t_end=float(tgrid[-1]),
                                              observation_times=tuple(tgrid),
                                              seed=cfg.ensemble.seed, pulse=spec)
            for i in range(min(cfg.ensemble.n, 8)):
                series = decoherence.run_trajectory(prepared, spectrum, tc, i)
                writer.write_csv(f"{suffix}_traj{i}", ["t_over_Trev", "value"],
                                 [tgrid, series])
    return 0


def scenario_fractional(cfg, writer, diagnostics):
    model = cfgmod.resolve_inertia(cfg)
    state, spectrum = _state_and_spectrum(cfg, model, [])
    # window masses are sensitive to edge cells; use a well-converged grid
    grid = AngularGrid.gauss_legendre(max(2 * state.jmax + 16, 1201))
    fractions = (0.125, 0.25, 0.5)
    halfwidths = {0.125: math.pi / 16, 0.25: math.pi / 8, 0.5: math.pi / 4}
    window_rows = []
    for frac in fractions:
        evolved = rotor.free_propagate(state, frac, spectrum)
        prob = observables.beta_distribution(evolved, grid)
        writer.write_csv(f"_beta_t{_phi_tag(frac)}", ["beta", "prob"],
                         [grid.nodes, prob])
        centers = {0.125: [1, 3, 5, 7], 0.25: [2, 6], 0.5: [4]}[frac]
        hw = halfwidths[frac]
        for c in centers:
            center = c * math.pi / 8.0
            mass = grid.window_mass(prob / np.sin(grid.nodes),
                                    center - hw, center + hw)
            window_rows.append((frac, center, mass))
        diagnostics[f"alignment_t{frac}"] = observables.alignment(evolved)
    writer.write_csv("_windows", ["t_over_Trev", "window_center", "mass"],
                     [np.array([r[i] for r in window_rows]) for i in range(3)])
    return 0


def scenario_sweep_phi(cfg, writer, diagnostics, gamma, threads):
    model = cfgmod.resolve_inertia(cfg)
    phis = cfg.sweep.phi or [i * math.pi / 8 for i in range(17)]
    state, spectrum = _state_and_spectrum(cfg, model, phis)
    tgrid = np.array([0.0, 1.0])
    values, errors, vacuum = [], [], []
    for phi in phis:
        res = _ensemble_series(state, spectrum, cfg, gamma, phi, tgrid,
                               threads, diagnostics)
        values.append(res.mean_alignment[-1])
        errors.append(res.stderr[-1])
        if gamma > 0:
            res0 = _ensemble_series(state, spectrum, cfg, 0.0, phi, tgrid,
                                    threads, diagnostics)
            vacuum.append(res0.mean_alignment[-1])
    phis_arr = np.array(phis)
    cols = [phis_arr, np.array(values)]
    header = ["phi", "value"]
    if gamma > 0 and cfg.ensemble.n > 1:
        cols.append(np.array(errors))
        header.append("stderr")
    writer.write_csv("", header, cols)
    if vacuum:
        writer.write_csv("_vacuum", ["phi", "value"], [phis_arr, np.array(vacuum)])
    a, b, rms = observables.fit_interference_curve(phis_arr, np.array(values))
    diagnostics["interference_fit"] = {"amplitude": a, "offset": b, "rms_residual": rms}
    return 0


def scenario_sweep_sigma(cfg, writer, diagnostics, gamma, threads):
    model = cfgmod.resolve_inertia(cfg)
    phis = cfgmod.resolve_phi_list(cfg)
    phi = phis[0] if phis else math.pi
    sigma_betas = cfg.sweep.sigma_beta or [0.003, 0.03, 0.1]
    sigma_ks = cfg.sweep.sigma_k or [0.0, 1.0, 2.0, 4.0]
    tgrid = np.array([0.0, 1.0])
    for sb in sigma_betas:
        values = []
        for sk in sigma_ks:
            sub = cfgmod.apply_overrides(cfg, {
                "state.mode": "gaussian_beta",
                "state.sigma_beta": sb, "state.sigma_k": sk})
            state, spectrum = _state_and_spectrum(sub, model, [phi])
            res = _ensemble_series(state, spectrum, sub, gamma, phi, tgrid,
                                   threads, diagnostics)
            values.append(res.mean_alignment[-1])
        writer.write_csv(f"_sb{_phi_tag(sb)}", ["sigma_k", "value"],
                         [np.array(sigma_ks, dtype=float), np.array(values)])
    return 0


def scenario_sweep_asymmetry(cfg, writer, diagnostics, threads):
    model = cfgmod.resolve_inertia(cfg)
    sw = cfg.sweep
    bs = sorted(set(np.logspace(sw.b_log10_min, sw.b_log10_max, sw.b_points))
                | set(sw.b_include))
    phis = cfgmod.resolve_phi_list(cfg)
    base_state = prepare_state(cfg)
    margin = max((pulse.pulse_margin(p) for p in phis), default=0)
    jmax_total = base_state.jmax + margin * len(cfg.pulse.schedule_t)
    kmax = max(abs(k) for k in base_state.sectors)
    # dense sampling around the revival only
    tgrid = np.unique(np.concatenate([
        np.array([0.0]), np.round(np.linspace(0.95, 1.08, 521), 12)]))
    peak_rows = {phi: [] for phi in phis}
    tpeaks = []
    min_dominant = 1.0
    for b in bs:
        model_b = rotor.inertia_from_parameters(model.ratio, b, t_rev=model.t_rev)
        spectrum = rotor.rotational_energies(jmax_total, kmax, model_b, "asymmetric")
        min_dominant = min(min_dominant, float(spectrum.dominant_weight.min()))
        for phi in phis:
            res = _ensemble_series(base_state, spectrum, cfg, 0.0, phi, tgrid,
                                   threads, diagnostics)
            series = observables.TimeSeries(res.times, res.mean_alignment)
            t_peak, value = observables.find_revival_peak(series, 1.0 + 10 * b, 0.05 + 20 * b)
            peak_rows[phi].append(value)
            if phi == phis[0]:
                tpeaks.append(t_peak)
    bs_arr = np.array(bs)
    for phi in phis:
        writer.write_csv(f"_phi{_phi_tag(phi)}", ["b_asym", "value"],
                         [bs_arr, np.array(peak_rows[phi])])
    writer.write_csv("_tpeak", ["b_asym", "t_peak"], [bs_arr, np.array(tpeaks)])
    diagnostics["min_dominant_weight"] = min_dominant
    return 0


def run(cfg: cfgmod.ExperimentConfig) -> int:
    """Execute a validated config; returns the exit code."""
    report = cfgmod.validate(cfg)
    if not report.ok:
        for p in report.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    threads = cfg.ensemble.threads
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    t_start = _time.time()
    writer = OutputWriter(cfg.output.prefix)
    diagnostics: dict = {}
    try:
        model = cfgmod.resolve_inertia(cfg)
        gamma = cfgmod.resolve_gamma(cfg, model.t_rev if model.mass else cfg.rotor.t_rev_s)
        if cfg.scenario == "params":
            code = scenario_params(cfg, writer, diagnostics)
        elif cfg.scenario == "evolve":
            code = scenario_evolve(cfg, writer, diagnostics, gamma, threads)
        elif cfg.scenario == "decohere":
            code = scenario_evolve(cfg, writer, diagnostics, gamma, threads,
                                   per_trajectory=True)
        elif cfg.scenario == "fractional":
            code = scenario_fractional(cfg, writer, diagnostics)
        elif cfg.scenario == "sweep_phi":
            code = scenario_sweep_phi(cfg, writer, diagnostics, gamma, threads)
        elif cfg.scenario == "sweep_sigma":
            code = scenario_sweep_sigma(cfg, writer, diagnostics, gamma, threads)
        elif cfg.scenario == "sweep_asymmetry":
            code = scenario_sweep_asymmetry(cfg, writer, diagnostics, threads)
        else:
            print(f"config error: scenario {cfg.scenario}", file=sys.stderr)
            return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    writer.write_manifest({
        "config": cfg.to_dict(),
        "version": __version__,
        "seed": cfg.ensemble.seed,
        "threads": threads,
        "diagnostics": diagnostics,
        "wall_time_s": _time.time() - t_start,
    })
    return code


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _preset_path(name: str):
    res = importlib.resources.files("nanorotor").joinpath(f"presets/{name}.json")
    return res if res.is_file() else None


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Nanorotor alignment interferometry simulator")
    parser.add_argument("scenario", help="scenario name, preset name, config or manifest path")
    parser.add_argument("--out", help="output path prefix")
    parser.add_argument("--threads", type=int, help="worker processes for ensembles")
    parser.add_argument("--seed", type=int, help="master RNG seed")
    parser.add_argument("--validate-only", action="store_true",
                        help="validate and report estimates without running")
    args, rest = parser.parse_known_args(argv)
    overrides = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--") or i + 1 >= len(rest):
            raise ConfigError(f"expected --key.path value pairs, got {tok!r}")
        overrides[tok[2:]] = _coerce(rest[i + 1])
        i += 2
    return args, overrides


def main(argv=None) -> int:
    try:
        args, overrides = parse_args(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        preset = _preset_path(args.scenario)
        if preset is not None:
            cfg = cfgmod.config_from_dict(json.loads(preset.read_text()))
        elif os.path.exists(args.scenario):
            cfg = cfgmod.load_config(args.scenario)
        elif args.scenario in cfgmod.SCENARIOS:
            cfg = cfgmod.ExperimentConfig(scenario=args.scenario)
        else:
            print(f"config error: scenario: unknown scenario or preset "
                  f"{args.scenario!r}", file=sys.stderr)
            return 2
        if args.out:
            overrides["output.prefix"] = args.out
        if args.threads is not None:
            overrides["ensemble.threads"] = args.threads
        if args.seed is not None:
            overrides["ensemble.seed"] = args.seed
        cfg = cfgmod.apply_overrides(cfg, overrides)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = cfgmod.validate(cfg)
    if args.validate_only:
        if report.ok:
            print(json.dumps({
                "ok": True, "jmax_estimate": report.jmax_estimate,
                "grid_order": report.grid_order,
                "memory_bytes": report.memory_bytes,
                "time_forecast_s": report.time_forecast_s}, indent=2))
            return 0
        for p in report.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
