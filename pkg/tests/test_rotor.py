import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nanorotor import angular, observables, rotor
from nanorotor.errors import CoverageError, DomainError, TruncationWarning


# ---------------------------------------------------------------------------
# inertia models
# ---------------------------------------------------------------------------

def test_silicon_nanorod_preset():
    m = rotor.inertia_from_ellipsoid(rotor.SILICON_NANOROD_SEMI_AXES,
                                     rotor.SILICON_DENSITY)
    assert m.mass_amu == pytest.approx(1.1e6, rel=0.02)
    assert m.t_rev == pytest.approx(14e-3, rel=0.02)
    assert m.b_asym == 0.0


def test_asymmetric_variant_b():
    m = rotor.inertia_from_ellipsoid((2.75e-9, 2.5e-9, 25e-9), rotor.SILICON_DENSITY)
    assert abs(m.b_asym) == pytest.approx(2.3e-5, rel=0.05)


def test_sphere_is_degenerate():
    m = rotor.inertia_from_ellipsoid((1e-9, 1e-9, 1e-9), 2000.0)
    assert m.b_asym == 0.0
    assert m.degenerate


def test_prolate_ordering_invariant():
    m = rotor.inertia_from_ellipsoid((2.0e-9, 3.0e-9, 30e-9), 1000.0)
    assert m.i_a >= m.i_b >= m.i_c > 0
    assert m.t_rev == pytest.approx(2 * math.pi * m.inertia / 1.054571817e-34, rel=1e-6)


def test_synthetic_model_round_trips():
    m = rotor.inertia_from_parameters(41.8, 2.3e-5, t_rev=14e-3)
    assert m.ratio == pytest.approx(41.8, rel=1e-12)
    assert abs(m.b_asym) == pytest.approx(2.3e-5, rel=1e-9)
    assert m.t_rev == pytest.approx(14e-3, rel=1e-12)


# ---------------------------------------------------------------------------
# rotational spectra
# ---------------------------------------------------------------------------

def test_symmetric_phases_closed_form():
    m = rotor.inertia_from_parameters(10.0, 0.0)
    sp = rotor.rotational_energies(20, 5, m, "symmetric")
    for j in range(21):
        for k in range(min(j, 5) + 1):
            assert sp.coeff(j, k) == j * (j + 1) + 9.0 * k * k


def test_asymmetric_reduces_to_symmetric():
    m = rotor.inertia_from_parameters(41.8, 0.0)
    sym = rotor.rotational_energies(40, 4, m, "symmetric")
    asym = rotor.rotational_energies(40, 4, m, "asymmetric")
    assert np.max(np.abs(sym.phase_coeffs - asym.phase_coeffs)) < 1e-12


def test_j1_levels_exact():
    m = rotor.inertia_from_parameters(41.8, 1e-3)
    sp = rotor.rotational_energies(1, 1, m, "asymmetric")
    I = m.inertia
    levels = sorted([I * (1 / m.i_a + 1 / m.i_b),
                     I * (1 / m.i_b + 1 / m.i_c),
                     I * (1 / m.i_a + 1 / m.i_c)])
    assert sp.coeff(1, 0) == pytest.approx(levels[0], rel=1e-12)
    assert sp.coeff(1, 1) == pytest.approx(0.5 * (levels[1] + levels[2]), rel=1e-12)


def test_k0_shift_is_second_order_in_b():
    shifts = []
    bs = np.logspace(-6, -4, 7)
    for b in bs:
        m = rotor.inertia_from_parameters(41.8, float(b))
        sp = rotor.rotational_energies(12, 0, m, "asymmetric")
        shifts.append(abs(sp.coeff(10, 0) - 110.0))
    slope = np.polyfit(np.log(bs), np.log(shifts), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_asymmetric_matches_dense_oracle():
    # block-tridiagonal eigenvalues against a dense full-k-space solve
    m = rotor.inertia_from_parameters(41.8, 2.3e-5)
    I = m.inertia
    half_is = 0.5 * I * (1 / m.i_a + 1 / m.i_b)
    quarter_id = 0.25 * I * (1 / m.i_a - 1 / m.i_b)
    for j in (10, 100):
        sp = rotor.rotational_energies(j, 2, m, "asymmetric")
        jj = j * (j + 1.0)
        ks = np.arange(-j, j + 1)
        H = np.zeros((2 * j + 1, 2 * j + 1))
        for i, k in enumerate(ks):
            H[i, i] = half_is * (jj - k * k) + m.ratio * k * k
            if i + 2 < 2 * j + 1:
                v = quarter_id * math.sqrt((jj - k * (k + 1)) * (jj - (k + 1) * (k + 2)))
                H[i, i + 2] = H[i + 2, i] = v
        vals = np.sort(np.linalg.eigh(H)[0])
        # the k = 0 label is the overall ground level for a prolate rotor
        assert sp.coeff(j, 0) == pytest.approx(vals[0], rel=1e-12)
        # k = 1 doublet mean: next two levels
        assert sp.coeff(j, 1) == pytest.approx(0.5 * (vals[1] + vals[2]), rel=1e-12)


def test_spectrum_rejects_bad_kmax():
    m = rotor.inertia_from_parameters(41.8, 0.0)
    with pytest.raises(DomainError):
        rotor.rotational_energies(5, 6, m)


# ---------------------------------------------------------------------------
# state preparation
# ---------------------------------------------------------------------------

def test_gaussian_j_state():
    st = rotor.prepare_aligned_state("gaussian_j", 800.0)
    assert st.component_norm(0) == pytest.approx(1.0, abs=1e-12)
    assert 120 <= st.jmax <= 160
    amps = st.sectors[0][0]
    assert abs(amps[10] / amps[0]) == pytest.approx(math.exp(-100.0 / 1600.0), rel=1e-10)
    # frozen evaluation of the initial alignment for this packet
    assert observables.alignment(st) == pytest.approx(0.98563, abs=2e-4)


def test_gaussian_beta_state_tail_capture():
    st = rotor.prepare_aligned_state("gaussian_beta", 0.003)
    amps = st.sectors[0][0]
    assert np.sum(np.abs(amps) ** 2) == pytest.approx(1.0, abs=1e-12)
    # truncation rule: cutting the guard band must cost less than 1e-10
    w = np.abs(amps) ** 2
    assert w[-8:].sum() < 1e-10


def test_gaussian_beta_isotropic_limit():
    st = rotor.prepare_aligned_state("gaussian_beta", 50.0, jmax=40)
    assert observables.alignment(st) == pytest.approx(1.0 / 3.0, abs=5e-3)


def test_prepare_warns_below_truncation_rule():
    with pytest.warns(TruncationWarning):
        rotor.prepare_aligned_state("gaussian_j", 800.0, jmax=60)


def test_mixture_weights():
    st = rotor.prepare_mixture(0.01, 3.0)
    assert len(st.weights) == 25
    assert sorted(st.weights) == list(range(-12, 13))
    assert sum(st.weights.values()) == pytest.approx(1.0, abs=1e-12)
    for k0 in st.weights:
        assert st.weights[k0] == pytest.approx(st.weights[-k0], rel=1e-12)
        assert st.component_norm(k0) == pytest.approx(1.0, abs=1e-10)


def test_mixture_sigma_k_zero():
    st = rotor.prepare_mixture(0.01, 0.0)
    assert list(st.weights) == [0]
    assert st.weights[0] == 1.0


# ---------------------------------------------------------------------------
# free propagation
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def fig1_state():
    return rotor.prepare_aligned_state("gaussian_j", 800.0)


@pytest.fixture(scope="module")
def sym_spectrum(fig1_state):
    m = rotor.inertia_from_parameters(41.8, 0.0)
    return rotor.rotational_energies(fig1_state.jmax, 12, m, "symmetric")


def test_zero_dt_is_identity(fig1_state, sym_spectrum):
    out = rotor.free_propagate(fig1_state, 0.0, sym_spectrum)
    assert np.array_equal(out.sectors[0][0], fig1_state.sectors[0][0])


@given(st.floats(-3.0, 3.0))
def test_unitarity(dt):
    state = rotor.prepare_aligned_state("gaussian_j", 100.0)
    m = rotor.inertia_from_parameters(41.8, 0.0)
    sp = rotor.rotational_energies(state.jmax, 0, m, "symmetric")
    out = rotor.free_propagate(state, dt, sp)
    assert out.component_norm(0) == pytest.approx(1.0, abs=1e-12)
    assert out.time == pytest.approx(dt)


@given(st.floats(0.0, 1.5), st.floats(0.0, 1.5))
def test_composition(dt1, dt2):
    state = rotor.prepare_aligned_state("gaussian_j", 60.0, jmax=64)
    m = rotor.inertia_from_parameters(41.8, 0.0)
    sp = rotor.rotational_energies(64, 0, m, "symmetric")
    once = rotor.free_propagate(state, dt1 + dt2, sp)
    twice = rotor.free_propagate(rotor.free_propagate(state, dt1, sp), dt2, sp)
    assert np.max(np.abs(once.sectors[0][0] - twice.sectors[0][0])) < 1e-12


def test_full_revival(fig1_state, sym_spectrum):
    out = rotor.free_propagate(fig1_state, 1.0, sym_spectrum)
    assert np.max(np.abs(out.sectors[0][0] - fig1_state.sectors[0][0])) < 1e-10


def test_mixture_revival_of_observables():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        st_mix = rotor.prepare_mixture(0.05, 2.0)
    m = rotor.inertia_from_parameters(41.8, 0.0)
    sp = rotor.rotational_energies(st_mix.jmax, 8, m, "symmetric")
    a0 = observables.alignment(st_mix)
    out = rotor.free_propagate(st_mix, 1.0, sp)
    assert observables.alignment(out) == pytest.approx(a0, abs=1e-10)


def test_half_revival_antialigned(fig1_state, sym_spectrum):
    out = rotor.free_propagate(fig1_state, 0.5, sym_spectrum)
    assert observables.alignment(out) <= 0.05


def test_fractional_revival_window_masses(fig1_state, sym_spectrum):
    grid = angular.AngularGrid.gauss_legendre(1501)
    st8 = rotor.free_propagate(fig1_state, 0.125, sym_spectrum)
    prob = observables.beta_distribution(st8, grid)
    dens = prob / np.sin(grid.nodes)
    for n in range(4):
        c = (2 * n + 1) * math.pi / 8
        mass = grid.window_mass(dens, c - math.pi / 16, c + math.pi / 16)
        assert mass == pytest.approx(0.25, abs=0.02)
    st4 = rotor.free_propagate(fig1_state, 0.25, sym_spectrum)
    dens4 = observables.beta_distribution(st4, grid) / np.sin(grid.nodes)
    for c in (math.pi / 4, 3 * math.pi / 4):
        mass = grid.window_mass(dens4, c - math.pi / 8, c + math.pi / 8)
        assert mass == pytest.approx(0.5, abs=0.02)


def test_asymmetry_delays_revival(fig1_state):
    peaks = []
    ts = np.linspace(0.995, 1.01, 301)
    for b in (1e-5, 3e-5, 1e-4):
        m = rotor.inertia_from_parameters(41.8, b)
        sp = rotor.rotational_energies(fig1_state.jmax, 0, m, "asymmetric")
        vals = [observables.alignment(rotor.free_propagate(fig1_state, float(t), sp))
                for t in ts]
        series = observables.TimeSeries(ts, np.array(vals))
        t_peak, _ = observables.find_revival_peak(series, 1.002, 0.007)
        peaks.append(t_peak)
    assert peaks[0] > 1.0
    assert peaks == sorted(peaks)


def test_spectrum_coverage_error(fig1_state):
    m = rotor.inertia_from_parameters(41.8, 0.0)
    small = rotor.rotational_energies(10, 0, m, "symmetric")
    with pytest.raises(CoverageError):
        rotor.free_propagate(fig1_state, 0.1, small)


def test_extend_state(fig1_state):
    out = rotor.extend_state(fig1_state, fig1_state.jmax + 20)
    assert out.jmax == fig1_state.jmax + 20
    assert out.component_norm(0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        rotor.extend_state(fig1_state, fig1_state.jmax - 1)
