"""Time-dependent decay rates of the weak-coupling master equation.

The three rates multiply the raising-operator dissipator (heating), the
lowering-operator dissipator (cooling) and the coherence-creating dissipator
pair (squeezing).  Each is a bath-frequency integral of the spectral density
times a second moment against a time-dependent kernel; the 1/2^n coupling
normalization is folded INTO the returned values, so the propagator applies
the rates as-is.

Kernels (x = n omega - m Omega):
  heating/cooling:  sin(x t) / x
  squeezing:        [sin((n omega + m Omega) t) - sin(2 m Omega t)] / x

The squeezing kernel is evaluated through the identity
  2 cos((2 n omega - 3x/2) t) sin(x t / 2) / x
which is exact and free of the cancellation at the resonance x = 0, where it
reduces to the limit t cos(2 n omega t).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .bath import (BathSpec, SpectralDensity, THERMAL, frequency_window,
                   ir_split_points, moments, spectral_density)
from .quadrature import integrate

logger = logging.getLogger(__name__)

DEFAULT_ABS_TOL = 1e-9
MIDPOINT_TOL = 1e-6
MIDPOINT_SEED = 0


class TabulationError(RuntimeError):
    """Tabulated rates fail the interpolation accuracy check."""


class RateTriple(NamedTuple):
    heating: float     # multiplies the a'^n dissipator
    cooling: float     # multiplies the a^n dissipator
    squeezing: float   # multiplies the coherence-creating pair


class TclCoefficients(NamedTuple):
    """Memory-kernel integrals of the correlator over [0, t].

    imag_cos / imag_sin: imaginary part of C against cos / sin of the system
    phase; real_cos / real_sin: same for the real part.
    """

    imag_cos: float
    imag_sin: float
    real_cos: float
    real_sin: float


def _sinc_kernel(x: np.ndarray, t: float) -> np.ndarray:
    """sin(x t)/x, continuous through x = 0."""
    return t * np.sinc(x * t / math.pi)


def _squeeze_kernel(x: np.ndarray, t: float, n: int, omega: float) -> np.ndarray:
    """[sin((2 n omega - x) t) - sin((2 n omega - 2x) t)] / x, cancellation-free."""
    return t * np.sinc(x * t / (2.0 * math.pi)) * np.cos((2.0 * n * omega - 1.5 * x) * t)


def _sinc_kernel_dt(x: np.ndarray, t: float) -> np.ndarray:
    """Time derivative of the sinc kernel: cos(x t)."""
    return np.cos(x * t)


def _squeeze_kernel_dt(x: np.ndarray, t: float, n: int, omega: float) -> np.ndarray:
    """Time derivative of the squeezing kernel (exact rewrite, singular-safe)."""
    two_n_omega = 2.0 * n * omega
    term = -two_n_omega * t * np.sinc(x * t / (2.0 * math.pi)) \
        * np.sin((two_n_omega - 1.5 * x) * t)
    return term - np.cos((two_n_omega - x) * t) + 2.0 * np.cos((two_n_omega - 2.0 * x) * t)


def _rate_integral(kernel, n: int, m: int, bath: BathSpec, J: SpectralDensity,
                   moment_index: int, abs_tol: float, osc_scale: float) -> float:
    omega = bath.omega_ref
    lo, hi = frequency_window(J)
    splits = list(ir_split_points(J)) + [n * omega / m, J.omega_uv]

    def f(w):
        x = n * omega - m * w
        return spectral_density(J, w) * moments(bath, w)[moment_index] * kernel(x)

    value, _ = integrate(f, lo, hi, abs_tol=abs_tol, osc_scale=osc_scale,
                         split_points=splits)
    return float(value) / 2.0 ** n


def decay_rates(n: int, m: int, bath: BathSpec, J: SpectralDensity, t: float,
                *, abs_tol: float = DEFAULT_ABS_TOL) -> RateTriple:
    """Heating, cooling and squeezing rates at elapsed time t.

    All three vanish at t = 0.  The squeezing rate is identically zero for
    thermal baths (vanishing anomalous moment) and is skipped outright.
    """
    if t < 0.0:
        raise ValueError("decay rates defined for t >= 0")
    if t == 0.0:
        return RateTriple(0.0, 0.0, 0.0)
    omega = bath.omega_ref
    heating = _rate_integral(lambda x: _sinc_kernel(x, t), n, m, bath, J,
                             1, abs_tol, m * t)
    cooling = _rate_integral(lambda x: _sinc_kernel(x, t), n, m, bath, J,
                             2, abs_tol, m * t)
    if bath.kind == THERMAL:
        squeezing = 0.0
    else:
        squeezing = _rate_integral(lambda x: _squeeze_kernel(x, t, n, omega),
                                   n, m, bath, J, 0, abs_tol, 2.0 * m * t)
    return RateTriple(heating, cooling, squeezing)


def rate_slopes(n: int, m: int, bath: BathSpec, J: SpectralDensity, t: float,
                *, abs_tol: float = DEFAULT_ABS_TOL) -> RateTriple:
    """Time derivatives of the three rates (used to clamp the interpolant)."""
    omega = bath.omega_ref
    heating = _rate_integral(lambda x: _sinc_kernel_dt(x, t), n, m, bath, J,
                             1, abs_tol, m * t)
    cooling = _rate_integral(lambda x: _sinc_kernel_dt(x, t), n, m, bath, J,
                             2, abs_tol, m * t)
    if bath.kind == THERMAL:
        squeezing = 0.0
    else:
        squeezing = _rate_integral(lambda x: _squeeze_kernel_dt(x, t, n, omega),
                                   n, m, bath, J, 0, abs_tol, 2.0 * m * t)
    return RateTriple(heating, cooling, squeezing)


@dataclass(frozen=True)
class MarkovianRates:
    """Long-time asymptotes; the squeezing rate always decays to zero."""

    heating: float
    cooling: float
    squeezing: float = 0.0

    def rates_at(self, t) -> np.ndarray:
        triple = np.array([self.heating, self.cooling, self.squeezing])
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            return triple
        return np.broadcast_to(triple, t_arr.shape + (3,)).copy()


def markovian_rates(n: int, m: int, bath: BathSpec, J: SpectralDensity) -> MarkovianRates:
    """Delta-function limit of the sinc kernel: sin(x t)/x -> pi delta(x).

    Evaluates at the resonance Omega = n omega / m; the 1/m Jacobian of the
    substitution and the 1/2^n normalization are included.
    """
    omega_star = n * bath.omega_ref / m
    scale = math.pi / (m * 2.0 ** n)
    mom = moments(bath, omega_star)
    Jv = spectral_density(J, omega_star)
    return MarkovianRates(heating=scale * Jv * mom.normal,
                          cooling=scale * Jv * mom.antinormal,
                          squeezing=0.0)


def tcl_coefficients(n: int, m: int, bath: BathSpec, J: SpectralDensity,
                     t: float, *, abs_tol: float = DEFAULT_ABS_TOL) -> TclCoefficients:
    """Correlator memory integrals over s in [0, t].

    The inner bath-frequency integral is the ``correlator`` operation; the
    outer s integral runs on the same panel engine.  These coefficients feed
    the position-coupling form of the master equation; they are computed but
    never propagated here.
    """
    from .bath import correlator

    if t < 0.0:
        raise ValueError("coefficients defined for t >= 0")
    if t == 0.0:
        return TclCoefficients(0.0, 0.0, 0.0, 0.0)
    omega = bath.omega_ref
    inner_tol = abs_tol / (10.0 * max(t, 1.0))
    # fastest s-dependence of the correlator under the exponentially cut
    # spectral envelope, plus the system phase
    osc = n * omega + 5.0 * m * J.omega_uv

    def corr_values(s_nodes: np.ndarray) -> np.ndarray:
        return np.array([correlator(bath, J, t, float(s), abs_tol=inner_tol)
                         for s in s_nodes])

    def f_cos(s):
        return corr_values(s) * np.cos(n * omega * (t - s))

    def f_sin(s):
        return corr_values(s) * np.sin(n * omega * (t - s))

    i_cos, _ = integrate(f_cos, 0.0, t, abs_tol=abs_tol, osc_scale=osc)
    i_sin, _ = integrate(f_sin, 0.0, t, abs_tol=abs_tol, osc_scale=osc)
    return TclCoefficients(imag_cos=float(np.imag(i_cos)),
                           imag_sin=float(np.imag(i_sin)),
                           real_cos=float(np.real(i_cos)),
                           real_sin=float(np.real(i_sin)))


@dataclass
class RateTable:
    """Rates tabulated on a uniform time grid with a clamped cubic interpolant."""

    n: int
    m: int
    time_grid: np.ndarray            # raw time, strictly increasing from 0
    heating: np.ndarray
    cooling: np.ndarray
    squeezing: np.ndarray
    omega: float = 1.0
    _spline: CubicSpline = field(repr=False, default=None)

    @property
    def t_max(self) -> float:
        return float(self.time_grid[-1])

    def rates_at(self, t) -> np.ndarray:
        """Interpolated (heating, cooling, squeezing); refuses extrapolation."""
        slack = 1e-9 * max(1.0, self.t_max)
        if np.ndim(t) == 0:
            # manual cubic evaluation; this sits inside the ODE hot loop
            tf = float(t)
            if tf < -slack or tf > self.t_max + slack:
                raise ValueError(
                    f"time {t} outside tabulated range [0, {self.t_max}]")
            tf = min(max(tf, 0.0), self.t_max)
            x, c = self._spline.x, self._spline.c
            i = min(max(int(np.searchsorted(x, tf)) - 1, 0), len(x) - 2)
            dt = tf - x[i]
            return ((c[0, i] * dt + c[1, i]) * dt + c[2, i]) * dt + c[3, i]
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < -slack) or np.any(t_arr > self.t_max + slack):
            raise ValueError(
                f"time {t} outside tabulated range [0, {self.t_max}]")
        return self._spline(np.clip(t_arr, 0.0, self.t_max))

    def squeezing_zero_crossings(self) -> np.ndarray:
        """Times where the squeezing rate switches sign (root-bracketed)."""
        sq = self.squeezing
        ts = self.time_grid
        roots = []
        spline = self._spline
        for i in range(1, len(ts) - 1):
            if sq[i] == 0.0 and sq[i - 1] != 0.0:
                roots.append(ts[i])
            elif sq[i] * sq[i + 1] < 0.0:
                roots.append(brentq(lambda t: spline(t)[2], ts[i], ts[i + 1],
                                    xtol=1e-12))
        return np.asarray(roots)

    def to_csv(self, path) -> None:
        """Columns t, gamma, Gamma, kappa with t in units of 2 pi / omega."""
        cycle = 2.0 * math.pi / self.omega
        lines = ["t,gamma,Gamma,kappa"]
        for t, h, c, s in zip(self.time_grid, self.heating, self.cooling,
                              self.squeezing):
            lines.append(f"{t / cycle:.17g},{h:.17g},{c:.17g},{s:.17g}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def suggested_grid_points(m: int, t_max: float, omega: float = 1.0) -> int:
    """Grid size keeping the cubic interpolant inside the midpoint budget.

    The fastest time oscillation of the rates scales with m times the
    effective spectral support, so the density grows linearly with m.
    """
    return max(64, int(math.ceil(t_max * 56.0 * m * omega)) + 1)


def tabulate_rates(n: int, m: int, bath: BathSpec, J: SpectralDensity,
                   t_max: float, grid_points: int,
                   *, abs_tol: float = DEFAULT_ABS_TOL,
                   validate: bool = True) -> RateTable:
    """Fill a RateTable on a uniform grid and verify the interpolant.

    Ten fixed-seed midpoints are re-evaluated by direct quadrature; any
    deviation beyond MIDPOINT_TOL raises TabulationError (grid too coarse).
    """
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    times = np.linspace(0.0, t_max, grid_points)
    rows = np.empty((grid_points, 3))
    rows[0] = (0.0, 0.0, 0.0)
    for i, t in enumerate(times[1:], start=1):
        rows[i] = decay_rates(n, m, bath, J, float(t), abs_tol=abs_tol)

    slope0 = np.asarray(rate_slopes(n, m, bath, J, 0.0, abs_tol=abs_tol))
    slope_end = np.asarray(rate_slopes(n, m, bath, J, t_max, abs_tol=abs_tol))
    spline = CubicSpline(times, rows, bc_type=((1, slope0), (1, slope_end)))

    table = RateTable(n=n, m=m, time_grid=times,
                      heating=rows[:, 0], cooling=rows[:, 1],
                      squeezing=rows[:, 2], omega=bath.omega_ref,
                      _spline=spline)

    if validate:
        rng = np.random.default_rng(MIDPOINT_SEED)
        probes = rng.uniform(0.0, t_max, size=10)
        worst = 0.0
        for t in probes:
            direct = np.asarray(decay_rates(n, m, bath, J, float(t),
                                            abs_tol=abs_tol))
            worst = max(worst, float(np.max(np.abs(spline(t) - direct))))
        if worst > MIDPOINT_TOL * bath.omega_ref:
            raise TabulationError(
                f"interpolation error {worst:.3e} exceeds "
                f"{MIDPOINT_TOL:.1e} * omega; increase grid_points")
        logger.debug("rate table midpoint check: worst deviation %.3e", worst)
    return table
