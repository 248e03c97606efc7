"""Angular-momentum numerical kernel.

Wigner d-matrices (stable recurrence and large-j asymptotics), Clebsch-Gordan
coefficients, banded operator matrices over the j ladder, and transforms
between j-space amplitudes and polar-angle wavefunctions.

Conventions: basis states |jmk> with wavefunction
``<a,b,g|jmk> = sqrt(j+1/2) d^j_{mk}(b) exp(i m a + i k g) / 2 pi``,
Condon-Shortley phases throughout (``d^1_{10} = -sin(b)/sqrt(2)``).
All angular momenta are integers; half-integer spins are out of scope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResolutionError, SingularityError, TruncationWarning

__all__ = [
    "AngularGrid",
    "BandedHermitian",
    "DirectionCosineOperator",
    "wigner_d_exact",
    "wigner_d_semiclassical",
    "wigner_d_table",
    "clebsch_gordan",
    "cos2beta_matrix",
    "direction_cosine_matrices",
    "synthesize_beta",
    "project_beta",
]


# ---------------------------------------------------------------------------
# quadrature grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AngularGrid:
    """Gauss-Legendre grid in cos(beta) for integrals against sin(beta) d(beta).

    ``sum(weights * f(nodes))`` approximates ``int_0^pi f(b) sin(b) db`` and is
    exact for f polynomial in cos(b) up to degree ``2*order - 1``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @classmethod
    def gauss_legendre(cls, order: int) -> "AngularGrid":
        if order < 1:
            raise DomainError(f"grid order must be >= 1, got {order}")
        x, w = np.polynomial.legendre.leggauss(order)
        beta = np.arccos(x)[::-1].copy()
        return cls(nodes=beta, weights=w[::-1].copy(), order=order)

    @classmethod
    def for_jmax(cls, jmax: int) -> "AngularGrid":
        # order 2*jmax + 16: exact for the d*d*cos^2 integrands plus margin
        return cls.gauss_legendre(2 * jmax + 16)

    def window_mass(self, prob_density: np.ndarray, lo: float, hi: float) -> float:
        """Integrate a |psi|^2-type density (already per sin(b) db) over [lo, hi]."""
        mask = (self.nodes >= lo) & (self.nodes <= hi)
        return float(np.sum(self.weights[mask] * prob_density[mask]))


# ---------------------------------------------------------------------------
# Wigner d-functions
# ---------------------------------------------------------------------------

def _check_jmk(j: int, m: int, k: int) -> None:
    if j < 0:
        raise DomainError(f"j must be >= 0, got {j}")
    if abs(m) > j or abs(k) > j:
        raise DomainError(f"|m|,|k| must not exceed j: j={j}, m={m}, k={k}")


def _d_start_log(m: int, k: int, beta: float) -> tuple[float, float]:
    """Starting value of d^{j0}_{mk} at j0 = max(|m|,|k|) as (sign, log|value|)."""
    j0 = max(abs(m), abs(k))
    lc = math.log(math.cos(beta / 2.0))
    ls = math.log(math.sin(beta / 2.0))
    if abs(k) >= abs(m):
        if k >= 0:  # k = j0
            sign = 1.0
            lbin = 0.5 * (math.lgamma(2 * j0 + 1) - math.lgamma(j0 - m + 1) - math.lgamma(j0 + m + 1))
            logv = lbin + (j0 + m) * lc + (j0 - m) * ls
        else:  # k = -j0
            sign = -1.0 if (j0 + m) % 2 else 1.0
            lbin = 0.5 * (math.lgamma(2 * j0 + 1) - math.lgamma(j0 + m + 1) - math.lgamma(j0 - m + 1))
            logv = lbin + (j0 - m) * lc + (j0 + m) * ls
    else:
        if m >= 0:  # m = j0
            sign = -1.0 if (j0 - k) % 2 else 1.0
            lbin = 0.5 * (math.lgamma(2 * j0 + 1) - math.lgamma(j0 - k + 1) - math.lgamma(j0 + k + 1))
            logv = lbin + (j0 + k) * lc + (j0 - k) * ls
        else:  # m = -j0
            sign = 1.0
            lbin = 0.5 * (math.lgamma(2 * j0 + 1) - math.lgamma(j0 + k + 1) - math.lgamma(j0 - k + 1))
            logv = lbin + (j0 - k) * lc + (j0 + k) * ls
    return sign, logv


def _recurrence_r(j: int, m: int, k: int) -> float:
    return math.sqrt(float(j * j - m * m) * float(j * j - k * k))


def wigner_d_exact(j: int, m: int, k: int, beta: float) -> float:
    """d^j_{mk}(beta) by the three-term recurrence in j, upward from max(|m|,|k|).

    Stable to j of a few thousand; the running pair is renormalized every 64
    steps so starting values far below the floating-point floor (large |m|,|k|
    at extreme angles) are still propagated.  A result whose true magnitude
    underflows float64 is returned as 0.0.
    """
    _check_jmk(j, m, k)
    if beta == 0.0:
        return 1.0 if m == k else 0.0
    if beta == math.pi:
        if m == -k:
            return -1.0 if (j - k) % 2 else 1.0
        return 0.0
    if not 0.0 < beta < math.pi:
        raise DomainError(f"beta must lie in [0, pi], got {beta}")

    j0 = max(abs(m), abs(k))
    cosb = math.cos(beta)

    if j0 == 0:
        if j == 0:
            return 1.0
        prev, curr = 1.0, cosb  # d^0 and d^1 for m = k = 0
        scale = 0
        jc = 1
    else:
        sign, logv = _d_start_log(m, k, beta)
        scale = min(0, int(math.floor(logv / math.log(2.0))))
        start = sign * math.exp(logv - scale * math.log(2.0))
        if j == j0:
            return math.ldexp(start, scale) if scale > -1100 else 0.0
        num = (2 * j0 + 1) * (j0 * (j0 + 1) * cosb - m * k)
        nxt = num * start / (j0 * _recurrence_r(j0 + 1, m, k))
        prev, curr = start, nxt
        jc = j0 + 1

    steps = 0
    while jc < j:
        num = (2 * jc + 1) * (jc * (jc + 1) * cosb - m * k)
        new = (num * curr - (jc + 1) * _recurrence_r(jc, m, k) * prev) / (jc * _recurrence_r(jc + 1, m, k))
        prev, curr = curr, new
        jc += 1
        steps += 1
        if steps % 64 == 0 and scale < 0:
            mag = max(abs(prev), abs(curr))
            if mag > 1.0:
                e = min(int(math.floor(math.log2(mag))), -scale)
                prev = math.ldexp(prev, -e)
                curr = math.ldexp(curr, -e)
                scale += e
    if scale == 0:
        return curr
    if scale < -1100 and abs(curr) < 1.0:
        return 0.0
    return math.ldexp(curr, scale)


def wigner_d_semiclassical(j: int, m: int, k: int, beta: float) -> float:
    """Large-j asymptotic d^j_{mk}(beta), valid for |m|,|k| << j away from the poles."""
    if beta <= 0.0 or beta >= math.pi:
        raise SingularityError(f"asymptotic d-function diverges at beta={beta}")
    jh = j + 0.5
    phase = jh * beta + (m - k) * math.pi / 2.0 - math.pi / 4.0
    return math.cos(phase) / math.sqrt(math.pi / 2.0 * jh * math.sin(beta))


def _wigner_d_rows(m: int, k: int, betas: np.ndarray, jmax: int):
    """Yield (j, d^j_{mk}(betas)) for j = max(|m|,|k|) .. jmax, vectorized over beta.

    Plain float64; intended for the modest |m|, |k| carried by rotor sectors.
    """
    j0 = max(abs(m), abs(k))
    cosb = np.cos(betas)
    if j0 == 0:
        prev = np.ones_like(betas)
        yield 0, prev
        if jmax == 0:
            return
        curr = cosb.copy()
        yield 1, curr
        jc = 1
    else:
        lc = np.log(np.cos(betas / 2.0))
        ls = np.log(np.sin(betas / 2.0))
        sign, _ = _d_start_log(m, k, 1.0)  # sign is angle independent
        if abs(k) >= abs(m):
            p, q = (j0 + m, j0 - m) if k >= 0 else (j0 - m, j0 + m)
            lbin = 0.5 * (math.lgamma(2 * j0 + 1) - math.lgamma(p + 1) - math.lgamma(q + 1))
        else:
            p, q = (j0 + k, j0 - k) if m >= 0 else (j0 - k, j0 + k)
            lbin = 0.5 * (math.lgamma(2 * j0 + 1) - math.lgamma(p + 1) - math.lgamma(q + 1))
        prev = sign * np.exp(lbin + p * lc + q * ls)
        yield j0, prev
        if jmax == j0:
            return
        num = (2 * j0 + 1) * (j0 * (j0 + 1) * cosb - m * k)
        curr = num * prev / (j0 * _recurrence_r(j0 + 1, m, k))
        yield j0 + 1, curr
        jc = j0 + 1
    while jc < jmax:
        num = (2 * jc + 1) * (jc * (jc + 1) * cosb - m * k)
        new = (num * curr - (jc + 1) * _recurrence_r(jc, m, k) * prev) / (jc * _recurrence_r(jc + 1, m, k))
        prev, curr = curr, new
        jc += 1
        yield jc, curr


def wigner_d_table(m: int, k: int, betas: np.ndarray, jmax: int) -> np.ndarray:
    """Array of d^j_{mk}(betas) with rows j = max(|m|,|k|) .. jmax."""
    betas = np.asarray(betas, dtype=float)
    j0 = max(abs(m), abs(k))
    if jmax < j0:
        raise DomainError(f"jmax={jmax} below max(|m|,|k|)={j0}")
    out = np.empty((jmax - j0 + 1, betas.size))
    for j, row in _wigner_d_rows(m, k, betas, jmax):
        out[j - j0] = row
    return out


# ---------------------------------------------------------------------------
# Clebsch-Gordan coefficients
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _lf(n: int) -> float:
    return math.lgamma(n + 1)


def _cg_args_valid(j1, m1, j2, m2, J, M) -> bool:
    return (M == m1 + m2 and abs(j1 - j2) <= J <= j1 + j2
            and abs(m1) <= j1 and abs(m2) <= j2 and abs(M) <= J)


def _cg_lgamma(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> float:
    """Racah sum with log-factorial accumulation; relative error grows like an
    ulp of lgamma(2j), roughly 1e-11 at j ~ 2000."""
    pref = 0.5 * (
        math.log(2 * J + 1.0)
        + _lf(j1 + j2 - J) + _lf(j1 - j2 + J) + _lf(-j1 + j2 + J) - _lf(j1 + j2 + J + 1)
        + _lf(J + M) + _lf(J - M)
        + _lf(j1 - m1) + _lf(j1 + m1) + _lf(j2 - m2) + _lf(j2 + m2)
    )
    t_min = max(0, j2 - J - m1, j1 - J + m2)
    t_max = min(j1 + j2 - J, j1 - m1, j2 + m2)
    terms = []
    for t in range(t_min, t_max + 1):
        logden = (
            _lf(t) + _lf(j1 + j2 - J - t) + _lf(j1 - m1 - t)
            + _lf(j2 + m2 - t) + _lf(J - j2 + m1 + t) + _lf(J - j1 - m2 + t)
        )
        val = math.exp(pref - logden)
        terms.append(-val if t % 2 else val)
    return math.fsum(terms)


def _cg_exact_int(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> float:
    """Racah sum over exact integer factorials; one rounding at the end."""
    f = math.factorial
    pref_num = (2 * J + 1) * f(j1 + j2 - J) * f(j1 - j2 + J) * f(-j1 + j2 + J) \
        * f(J + M) * f(J - M) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
    pref_den = f(j1 + j2 + J + 1)
    t_min = max(0, j2 - J - m1, j1 - J + m2)
    t_max = min(j1 + j2 - J, j1 - m1, j2 + m2)
    dens = [f(t) * f(j1 + j2 - J - t) * f(j1 - m1 - t) * f(j2 + m2 - t)
            * f(J - j2 + m1 + t) * f(J - j1 - m2 + t)
            for t in range(t_min, t_max + 1)]
    s_den = 1
    for d in dens:
        s_den *= d
    s_num = 0
    for i, t in enumerate(range(t_min, t_max + 1)):
        prod = s_den // dens[i]
        s_num += -prod if t % 2 else prod
    if s_num == 0:
        return 0.0
    sign = 1.0 if s_num > 0 else -1.0
    vsq_num = pref_num * s_num * s_num
    vsq_den = pref_den * s_den * s_den
    shift = max(vsq_den.bit_length() - vsq_num.bit_length() + 64, 0)
    q = (vsq_num << shift) // vsq_den
    return sign * math.sqrt(math.ldexp(float(q), -shift))


def clebsch_gordan(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention.

    Closed Racah sum with O(1) memory: log-factorial accumulation where that
    is accurate to 1e-12, exact integer factorials beyond.  Triangle or
    projection violations return 0 rather than raising.
    """
    if not _cg_args_valid(j1, m1, j2, m2, J, M):
        return 0.0
    if j1 + j2 + J <= 400:
        return _cg_lgamma(j1, m1, j2, m2, J, M)
    return _cg_exact_int(j1, m1, j2, m2, J, M)


def _cg_fast(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> float:
    """Operator-assembly path: always log-factorial (ample for the 1e-8
    quadrature-oracle tolerance that is normative for assembled bands)."""
    if not _cg_args_valid(j1, m1, j2, m2, J, M):
        return 0.0
    return _cg_lgamma(j1, m1, j2, m2, J, M)


# ---------------------------------------------------------------------------
# banded operators over the j ladder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandedHermitian:
    """Hermitian operator over j = jmin..jmax at fixed (m, k), banded in j.

    ``diagonals[d]`` holds the entries <j m k| A |j+d m k> for offsets
    d = 0..bandwidth; lower triangle is implied by hermiticity.
    """

    jmin: int
    jmax: int
    bandwidth: int
    diagonals: tuple[np.ndarray, ...]
    m: int
    k: int

    def __post_init__(self):
        n = self.jmax - self.jmin + 1
        if len(self.diagonals) != self.bandwidth + 1:
            raise DomainError("need one diagonal per offset 0..bandwidth")
        for d, arr in enumerate(self.diagonals):
            if arr.shape != (max(n - d, 0),):
                raise DomainError(f"diagonal {d} has wrong length")

    @property
    def size(self) -> int:
        return self.jmax - self.jmin + 1

    def entry(self, j1: int, j2: int) -> complex:
        """Matrix element <j1 m k| A |j2 m k>; zero outside the band."""
        d = j2 - j1
        if abs(d) > self.bandwidth:
            return 0.0
        if d >= 0:
            return complex(self.diagonals[d][j1 - self.jmin])
        return complex(np.conj(self.diagonals[-d][j2 - self.jmin]))

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Matrix-vector product; ``vec`` is indexed j = jmin..jmax."""
        out = self.diagonals[0] * vec
        for d in range(1, self.bandwidth + 1):
            diag = self.diagonals[d]
            if diag.size == 0:
                continue
            out[:-d] += diag * vec[d:]
            out[d:] += np.conj(diag) * vec[:-d]
        return out

    def expectation(self, vec: np.ndarray) -> float:
        return float(np.real(np.vdot(vec, self.apply(vec))))

    def to_dense(self) -> np.ndarray:
        n = self.size
        dense = np.zeros((n, n), dtype=complex)
        for d in range(self.bandwidth + 1):
            idx = np.arange(n - d)
            dense[idx, idx + d] = self.diagonals[d]
            if d:
                dense[idx + d, idx] = np.conj(self.diagonals[d])
        return dense


def _rank_weight(j: int, jp: int) -> float:
    return math.sqrt((2 * j + 1.0) / (2 * jp + 1.0))


def cos2beta_matrix(jmin: int, jmax: int, m: int, k: int) -> BandedHermitian:
    """Banded matrix of cos^2(beta) over |j m k>, bandwidth 2.

    Rank-2 tensor algebra: cos^2 = 1/3 + (2/3) * (rank-2, M=K=0 component); each
    element is a product of two Clebsch-Gordan factors with a
    sqrt((2j+1)/(2j'+1)) weight.  Selection rules |dj| <= 2, dm = dk = 0.
    """
    if jmin < max(abs(m), abs(k)):
        raise DomainError(f"jmin={jmin} below max(|m|,|k|)={max(abs(m), abs(k))}")
    if jmax < jmin:
        raise DomainError("jmax < jmin")
    n = jmax - jmin + 1
    diags = [np.zeros(max(n - d, 0)) for d in range(3)]
    for j in range(jmin, jmax + 1):
        i = j - jmin
        for d in range(3):
            jp = j + d
            if jp > jmax:
                continue
            val = (2.0 / 3.0) * _rank_weight(j, jp) \
                * _cg_fast(j, m, 2, 0, jp, m) * _cg_fast(j, k, 2, 0, jp, k)
            if d == 0:
                val += 1.0 / 3.0
            diags[d][i] = val
    return BandedHermitian(jmin=jmin, jmax=jmax, bandwidth=2,
                           diagonals=tuple(diags), m=m, k=k)


def _cosine_element(axis: str, jp: int, mp: int, j: int, m: int, k: int) -> complex:
    """<j' m' k| c_axis |j m k> from rank-1 Clebsch-Gordan products."""
    if abs(m) > j or abs(k) > j or abs(mp) > jp or abs(k) > jp:
        return 0.0
    ck = _cg_fast(j, k, 1, 0, jp, k)
    if ck == 0.0:
        return 0.0
    w = _rank_weight(j, jp)
    if axis == "z":
        if mp != m:
            return 0.0
        return w * ck * _cg_fast(j, m, 1, 0, jp, m)
    dm = mp - m
    if dm not in (1, -1):
        return 0.0
    cm = _cg_fast(j, m, 1, dm, jp, mp)
    if axis == "x":
        coef = -1.0 / math.sqrt(2.0) if dm == 1 else 1.0 / math.sqrt(2.0)
        return coef * w * ck * cm
    if axis == "y":
        return (1j / math.sqrt(2.0)) * w * ck * cm
    raise DomainError(f"unknown axis {axis!r}")


class DirectionCosineOperator:
    """One component of the body-axis direction cosine at fixed k.

    Selection rules dj in {0, +-1}, dk = 0, dm = 0 (z) or +-1 (x, y).  Acts on
    a sector mapping m -> amplitude vector over j = 0..jmax (entries below
    max(|m|, |k|) must be zero).
    """

    def __init__(self, axis: str, jmin: int, jmax: int, k: int):
        if axis not in ("x", "y", "z"):
            raise DomainError(f"axis must be x, y or z, got {axis!r}")
        if jmin < abs(k):
            raise DomainError(f"jmin={jmin} below |k|={abs(k)}")
        self.axis = axis
        self.jmin = jmin
        self.jmax = jmax
        self.k = k
        self._blocks: dict[tuple[int, int], np.ndarray] = {}

    def entry(self, jp: int, mp: int, j: int, m: int) -> complex:
        if not (self.jmin <= j <= self.jmax and self.jmin <= jp <= self.jmax):
            return 0.0
        return _cosine_element(self.axis, jp, mp, j, m, self.k)

    def _block(self, m: int, dm: int) -> np.ndarray:
        """Dense (small-banded) block mapping sector m to sector m+dm."""
        key = (m, dm)
        blk = self._blocks.get(key)
        if blk is None:
            n = self.jmax + 1
            blk = np.zeros((n, n), dtype=complex)
            for j in range(self.jmax + 1):
                for jp in (j - 1, j, j + 1):
                    if 0 <= jp <= self.jmax:
                        blk[jp, j] = _cosine_element(self.axis, jp, m + dm, j, m, self.k)
            self._blocks[key] = blk
        return blk

    def apply(self, sectors: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
        """Apply the operator to {m: amplitudes over j=0..jmax}."""
        out: dict[int, np.ndarray] = {}
        steps = (0,) if self.axis == "z" else (1, -1)
        for m, vec in sectors.items():
            for dm in steps:
                contrib = self._block(m, dm) @ vec
                tgt = m + dm
                if tgt in out:
                    out[tgt] = out[tgt] + contrib
                else:
                    out[tgt] = contrib
        return out


def direction_cosine_matrices(jmin: int, jmax: int, k: int):
    """The three direction-cosine operators (c_x, c_y, c_z) at fixed k."""
    return tuple(DirectionCosineOperator(axis, jmin, jmax, k) for axis in ("x", "y", "z"))


# ---------------------------------------------------------------------------
# beta-grid transforms
# ---------------------------------------------------------------------------

def synthesize_beta(coeffs: np.ndarray, m: int, k: int, grid: AngularGrid):
    """Polar-angle wavefunction of a (m, k) sector.

    ``coeffs`` are amplitudes over j = max(|m|,|k|) .. jmax (jmax inferred from
    the length).  Returns ``(psi, prob)`` on the grid nodes with
    ``psi(b) = sum_j c_j sqrt(j+1/2) d^j_{mk}(b)`` and
    ``prob(b) = sin(b) |psi(b)|^2`` normalized so that int prob db = 1 for a
    normalized sector.
    """
    coeffs = np.asarray(coeffs)
    j0 = max(abs(m), abs(k))
    jmax = j0 + coeffs.size - 1
    if grid.order < 2 * jmax:
        raise ResolutionError(
            f"grid order {grid.order} cannot resolve j up to {jmax} (need >= {2 * jmax})")
    psi = np.zeros(grid.nodes.size, dtype=complex)
    for j, row in _wigner_d_rows(m, k, grid.nodes, jmax):
        c = coeffs[j - j0]
        if c != 0.0:
            psi += (c * math.sqrt(j + 0.5)) * row
    prob = np.sin(grid.nodes) * np.abs(psi) ** 2
    return psi, prob


def _project_general(psi: np.ndarray, m: int, k: int, jmax: int, grid: AngularGrid) -> np.ndarray:
    """Quadrature projection of psi(beta) onto sqrt(j+1/2) d^j_{mk}."""
    j0 = max(abs(m), abs(k))
    if jmax < j0:
        raise DomainError(f"jmax={jmax} below max(|m|,|k|)={j0}")
    wpsi = grid.weights * psi
    coeffs = np.empty(jmax - j0 + 1, dtype=complex)
    for j, row in _wigner_d_rows(m, k, grid.nodes, jmax):
        coeffs[j - j0] = math.sqrt(j + 0.5) * np.dot(row, wpsi)
    return coeffs


def project_beta(psi: np.ndarray, k0: int, jmax: int, grid: AngularGrid) -> np.ndarray:
    """Expand psi(beta) over |j k0 k0>, j = |k0| .. jmax.

    Issues a :class:`TruncationWarning` with the captured norm when the
    expansion misses more than 1e-10 of the wavefunction's norm.
    """
    psi = np.asarray(psi, dtype=complex)
    coeffs = _project_general(psi, k0, k0, jmax, grid)
    total = float(np.sum(grid.weights * np.abs(psi) ** 2))
    captured = float(np.sum(np.abs(coeffs) ** 2))
    if total > 0 and captured < total * (1.0 - 1e-10):
        warnings.warn(
            f"projection to jmax={jmax} captured {captured / total:.12f} of the norm",
            TruncationWarning, stacklevel=2)
    return coeffs
