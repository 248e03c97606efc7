"""Collisional decoherence: quantum-jump Monte Carlo and a dense Lindblad oracle.

Gas collisions diffuse the rotor angular momentum through the three
direction-cosine operators c_x, c_y, c_z of the symmetry axis.  Because
``sum_l c_l^2 = 1`` the total jump rate is state independent, so the pure-jump
unraveling needs no non-Hermitian drift: jump times are a homogeneous Poisson
process, and between jumps the normalized state evolves freely.

Per-trajectory randomness comes from counter-based Philox streams keyed by
(seed, trajectory index), so ensembles are reproducible bit-for-bit at any
thread count.  The generator choice (numpy Philox via
``SeedSequence(seed, spawn_key=(index,))``) is part of the output contract and
fixed per release.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import angular, observables
from .errors import DomainError, TruncationError
from .pulse import PulseSpec, apply_pulse, prepare_for_pulses, pulse_margin
from .rotor import RotorState, SpectrumModel, free_propagate

__all__ = [
    "TrajectoryConfig",
    "EnsembleResult",
    "GAMMA_GAS_PRESET_HZ",
    "GAMMA_GAS_PRESET_PRESSURE_MBAR",
    "gamma_dimensionless",
    "sample_jump_times",
    "apply_jump",
    "run_trajectory",
    "run_ensemble",
    "lindblad_oracle",
]

# nitrogen gas at 5e-9 mbar, room temperature (named preset; the collision-rate
# formula itself lives outside this package)
GAMMA_GAS_PRESET_HZ = 20.7
GAMMA_GAS_PRESET_PRESSURE_MBAR = 5e-9

_BOUNDARY_TOL = 1e-6


def gamma_dimensionless(gamma_hz: float, t_rev: float) -> float:
    """Convert a collision rate in Hz to jumps per revival time."""
    return gamma_hz * t_rev


@dataclass(frozen=True)
class TrajectoryConfig:
    """Monte Carlo run description; gamma is the jump rate in units of 1/T_rev."""

    gamma: float
    t_end: float
    observation_times: tuple[float, ...]
    seed: int = 0
    pulse: PulseSpec | None = None

    def __post_init__(self):
        if self.gamma < 0:
            raise DomainError("gamma must be >= 0")
        times = np.asarray(self.observation_times)
        if times.size and (np.any(np.diff(times) < 0) or times[0] < 0
                           or times[-1] > self.t_end):
            raise DomainError("observation times must be sorted within [0, t_end]")


@dataclass(frozen=True)
class EnsembleResult:
    """Trajectory-averaged alignment with standard errors."""

    times: np.ndarray
    mean_alignment: np.ndarray
    stderr: np.ndarray
    n_trajectories: int
    jump_count_histogram: dict[int, int]


def _trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(index,))))


def sample_jump_times(gamma: float, t_end: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson process of rate gamma on [0, t_end].

    Valid because the no-jump weight is state independent (sum_l c_l^2 = 1):
    the normalized state between jumps is exactly the freely evolved one.
    """
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    n = rng.poisson(gamma * t_end)
    return np.sort(rng.random(n)) * t_end


_COSINE_CACHE: dict[tuple[int, int], tuple] = {}


def _cosine_ops(jmax: int, k0: int):
    key = (jmax, k0)
    ops = _COSINE_CACHE.get(key)
    if ops is None:
        ops = angular.direction_cosine_matrices(abs(k0), jmax, k0)
        if len(_COSINE_CACHE) > 64:
            _COSINE_CACHE.clear()
        _COSINE_CACHE[key] = ops
    return ops


def jump_probabilities(state: RotorState, k0: int) -> tuple[np.ndarray, list]:
    """Channel probabilities <c_l^2> for one k0 component, plus the applied vectors."""
    ops = _cosine_ops(state.jmax, k0)
    sectors = state.sectors[k0]
    probs = np.empty(3)
    applied = []
    for i, op in enumerate(ops):
        new = op.apply(sectors)
        probs[i] = sum(float(np.sum(np.abs(v) ** 2)) for v in new.values())
        applied.append(new)
    return probs, applied


def apply_jump(state: RotorState, rng: np.random.Generator) -> RotorState:
    """One collisional jump on a pure state: pick l with probability <c_l^2>,
    apply c_l and renormalize.  Conserves k0 exactly; m changes by at most 1.
    """
    if not state.is_pure:
        raise DomainError("jumps act on pure components")
    (k0,) = state.sectors.keys()
    band = 1  # c_l couple j to j +- 1
    for vec in state.sectors[k0].values():
        if float(np.sum(np.abs(vec[-band:]) ** 2)) > _BOUNDARY_TOL:
            raise TruncationError(
                "state weight at the j truncation boundary exceeds tolerance; "
                "raise jmax before sampling jumps")
    probs, applied = jump_probabilities(state, k0)
    pick = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum()))
    pick = min(pick, 2)
    new_sectors = applied[pick]
    norm = math.sqrt(sum(float(np.sum(np.abs(v) ** 2)) for v in new_sectors.values()))
    out = state.copy()
    out.sectors[k0] = {m: v / norm for m, v in new_sectors.items()
                       if float(np.sum(np.abs(v) ** 2)) > 1e-32 * norm ** 2}
    return out


def _run_single(initial: RotorState, spectrum: SpectrumModel,
                config: TrajectoryConfig, index: int) -> tuple[np.ndarray, int]:
    """One trajectory: interleave free flight, scheduled pulses and jumps.

    Event order at equal times: jumps, then pulses, then observations.
    Deterministic given (config.seed, index).
    """
    rng = _trajectory_rng(config.seed, index)
    k0s = list(initial.sectors)
    if len(k0s) > 1:
        # mixtures are sampled: the trajectory draws its k0 first
        w = np.array([initial.weights[k] for k in k0s])
        k0 = k0s[int(rng.choice(len(k0s), p=w / w.sum()))]
        state = RotorState(sectors={k0: {m: v.copy() for m, v in initial.sectors[k0].items()}},
                           weights={k0: 1.0}, jmax=initial.jmax, time=initial.time)
    else:
        state = initial.copy()

    jumps = sample_jump_times(config.gamma, config.t_end, rng)
    events = [(t, 0, None) for t in jumps]
    if config.pulse is not None and config.pulse.phi != 0.0:
        events += [(t, 1, config.pulse) for t in config.pulse.schedule]
    events += [(t, 2, i) for i, t in enumerate(config.observation_times)]
    events.sort(key=lambda e: (e[0], e[1]))

    out = np.empty(len(config.observation_times))
    for t, kind, payload in events:
        if t > state.time:
            state = free_propagate(state, t - state.time, spectrum)
        if kind == 0:
            state = apply_jump(state, rng)
        elif kind == 1:
            state = apply_pulse(state, payload)
        else:
            out[payload] = observables.alignment(state)
    return out, len(jumps)


def run_trajectory(initial: RotorState, spectrum: SpectrumModel,
                   config: TrajectoryConfig, index: int = 0) -> np.ndarray:
    """Alignment time series of a single stochastic trajectory."""
    series, _ = _run_single(initial, spectrum, config, index)
    return series


def _deterministic_mixture(initial: RotorState, spectrum: SpectrumModel,
                           config: TrajectoryConfig) -> np.ndarray:
    state = initial.copy()
    out = np.empty(len(config.observation_times))
    events = []
    if config.pulse is not None and config.pulse.phi != 0.0:
        events += [(t, 1, config.pulse) for t in config.pulse.schedule]
    events += [(t, 2, i) for i, t in enumerate(config.observation_times)]
    events.sort(key=lambda e: (e[0], e[1]))
    for t, kind, payload in events:
        if t > state.time:
            state = free_propagate(state, t - state.time, spectrum)
        if kind == 1:
            state = apply_pulse(state, payload)
        else:
            out[payload] = observables.alignment(state)
    return out


def _ensemble_worker(args):
    initial, spectrum, config, indices = args
    rows = []
    counts = []
    for i in indices:
        series, njump = _run_single(initial, spectrum, config, i)
        rows.append(series)
        counts.append(njump)
    return rows, counts


def run_ensemble(initial: RotorState, spectrum: SpectrumModel,
                 config: TrajectoryConfig, n: int,
                 parallelism: int = 1) -> EnsembleResult:
    """Average n trajectories (mixture weights included).

    With gamma = 0 the ensemble is deterministic and computed directly from
    the mixture, bit-identical to the jump-free pipeline for any n and thread
    count.  Aggregation is index-ordered, so results do not depend on the
    execution schedule.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    times = np.asarray(config.observation_times)
    if config.gamma == 0.0:
        series = _deterministic_mixture(initial, spectrum, config)
        return EnsembleResult(times=times, mean_alignment=series,
                              stderr=np.zeros_like(series), n_trajectories=n,
                              jump_count_histogram={0: n})
    all_rows: list[np.ndarray | None] = [None] * n
    all_counts = [0] * n
    if parallelism <= 1 or n < 4:
        rows, counts = _ensemble_worker((initial, spectrum, config, range(n)))
        all_rows, all_counts = rows, counts
    else:
        chunks = np.array_split(np.arange(n), parallelism * 4)
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [(chunk, pool.submit(_ensemble_worker,
                                           (initial, spectrum, config, list(chunk))))
                       for chunk in chunks if len(chunk)]
            for chunk, fut in futures:
                rows, counts = fut.result()
                for i, idx in enumerate(chunk):
                    all_rows[idx] = rows[i]
                    all_counts[idx] = counts[i]
    data = np.vstack(all_rows)
    mean = data.mean(axis=0)
    if n > 1:
        stderr = data.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        stderr = np.zeros_like(mean)
    hist: dict[int, int] = {}
    for c in all_counts:
        hist[c] = hist.get(c, 0) + 1
    return EnsembleResult(times=times, mean_alignment=mean, stderr=stderr,
                          n_trajectories=n, jump_count_histogram=hist)


# ---------------------------------------------------------------------------
# dense Lindblad oracle
# ---------------------------------------------------------------------------

def _dense_basis(jmax: int, k: int) -> list[tuple[int, int]]:
    return [(j, m) for j in range(abs(k), jmax + 1) for m in range(-j, j + 1)]


def dense_cosine_matrices(jmax: int, k: int) -> list[np.ndarray]:
    """Dense c_x, c_y, c_z over the (j, m) basis at fixed k (oracle use)."""
    basis = _dense_basis(jmax, k)
    index = {bm: i for i, bm in enumerate(basis)}
    ops = angular.direction_cosine_matrices(abs(k), jmax, k)
    mats = []
    for op in ops:
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for (j, m), col in index.items():
            targets = [(m,)] if op.axis == "z" else [(m + 1,), (m - 1,)]
            for (mp,) in targets:
                for jp in (j - 1, j, j + 1):
                    if abs(k) <= jp <= jmax and abs(mp) <= jp:
                        val = op.entry(jp, mp, j, m)
                        if val != 0.0:
                            mat[index[(jp, mp)], col] = val
        mats.append(mat)
    return mats


def state_to_dense(state: RotorState, k0: int, jmax: int) -> np.ndarray:
    basis = _dense_basis(jmax, k0)
    index = {bm: i for i, bm in enumerate(basis)}
    vec = np.zeros(len(basis), dtype=complex)
    for m, amps in state.sectors[k0].items():
        for j in range(max(abs(m), abs(k0)), min(state.jmax, jmax) + 1):
            vec[index[(j, m)]] = amps[j]
    return vec


def lindblad_oracle(initial: RotorState, spectrum: SpectrumModel, gamma: float,
                    t_end: float, observation_times,
                    rtol: float = 1e-7, atol: float = 1e-9):
    """Direct master-equation integration at small jmax (dense, k0 = 0 sector).

    d rho / dt = -i [H, rho] + gamma (sum_l c_l rho c_l - rho), integrated
    adaptively in the interaction picture of the diagonal H.  Returns
    (alignment series, trace series, min sampled eigenvalue).
    """
    if not initial.is_pure:
        raise DomainError("oracle takes a pure initial component")
    (k0,) = initial.sectors.keys()
    jmax = initial.jmax
    if jmax > 24:
        raise DomainError("dense oracle limited to jmax <= 24")
    basis = _dense_basis(jmax, k0)
    dim = len(basis)
    eps = np.array([spectrum.coeff(j, k0) for j, m in basis])
    cs = [np.asarray(c) for c in dense_cosine_matrices(jmax, k0)]
    cos2 = np.zeros((dim, dim), dtype=complex)
    index = {bm: i for i, bm in enumerate(basis)}
    for (j, m), col in index.items():
        mat = angular.cos2beta_matrix(max(abs(m), abs(k0)), jmax, m, k0)
        for jp in range(max(abs(m), abs(k0)), jmax + 1):
            val = mat.entry(jp, j)
            if val != 0.0:
                cos2[index[(jp, m)], col] = val

    psi0 = state_to_dense(initial, k0, jmax)
    rho0 = np.outer(psi0, psi0.conj())
    omega = math.pi * eps  # phases per unit t/T_rev

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        # interaction picture: c_l(t) = e^{iHt} c_l e^{-iHt} as phase masks;
        # sum_l c_l^2 = 1 reduces the anticommutator to -rho
        phase = np.exp(1j * omega * t)
        acc = -rho
        for c in cs:
            ct = (phase[:, None] * c) * phase.conj()[None, :]
            acc = acc + ct @ rho @ ct.conj().T
        return (gamma * acc).reshape(-1)

    sol = solve_ivp(rhs, (0.0, t_end), rho0.reshape(-1).astype(complex),
                    t_eval=np.asarray(observation_times), rtol=rtol, atol=atol,
                    method="DOP853")
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    align = np.empty(len(sol.t))
    trace = np.empty(len(sol.t))
    min_eig = np.inf
    for i, t in enumerate(sol.t):
        rho_int = sol.y[:, i].reshape(dim, dim)
        phase = np.exp(-1j * omega * t)
        rho = (phase[:, None] * rho_int) * phase.conj()[None, :]
        trace[i] = float(np.real(np.trace(rho)))
        align[i] = float(np.real(np.trace(cos2 @ rho)))
        if i % max(len(sol.t) // 8, 1) == 0:
            min_eig = min(min_eig, float(np.linalg.eigvalsh(rho).min()))
    return align, trace, min_eig
