"""Reservoir description: spectral density, second moments, two-time correlators.

Units: hbar = 1 and frequencies are measured in the oscillator frequency
(omega = 1 by default), so inverse temperature beta carries units 1/omega.
``beta = math.inf`` selects the zero-temperature bath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .quadrature import integrate

SOFT_DOUBLE_CUTOFF = "soft_double_cutoff"
EXP_UV_ONLY = "exp_uv_only"

THERMAL = "thermal"
SQUEEZED_VACUUM = "squeezed_vacuum"


@dataclass(frozen=True)
class SpectralDensity:
    """Ohmic coupling density with soft exponential cutoffs.

    soft_double_cutoff: J(nu) = A nu exp(-omega_ir/nu - nu/omega_uv)
    exp_uv_only:        J(nu) = A nu exp(-nu/omega_uv)
    """

    coupling: float = 0.1          # dimensionless strength A
    omega_ir: float = 0.5
    omega_uv: float = 2.0
    form: str = SOFT_DOUBLE_CUTOFF

    def __post_init__(self):
        # A = 0 is admitted so a decoupled system stays expressible.
        if self.coupling < 0.0:
            raise ValueError(f"coupling must be nonnegative, got {self.coupling}")
        if self.form not in (SOFT_DOUBLE_CUTOFF, EXP_UV_ONLY):
            raise ValueError(f"unknown spectral form {self.form!r}")
        if self.omega_uv <= 0.0:
            raise ValueError(f"omega_uv must be positive, got {self.omega_uv}")
        if self.form == SOFT_DOUBLE_CUTOFF and not 0.0 < self.omega_ir < self.omega_uv:
            raise ValueError(
                f"need 0 < omega_ir < omega_uv, got {self.omega_ir}, {self.omega_uv}")


@dataclass(frozen=True)
class BathSpec:
    """Reservoir state and exchange order.

    kind 'thermal' uses ``beta``; kind 'squeezed_vacuum' uses the squeezing
    profile r(Omega) = r0 (Omega/omega_ref)^alpha_exp with fixed angle
    theta = 0 (nonzero angles would make the anomalous moment complex).
    """

    kind: str
    m: int = 1
    beta: float = math.inf
    r0: float = 1.0
    alpha_exp: float = 0.0
    theta: float = 0.0
    omega_ref: float = 1.0

    def __post_init__(self):
        if self.kind not in (THERMAL, SQUEEZED_VACUUM):
            raise ValueError(f"unknown bath kind {self.kind!r}")
        if self.m not in (1, 2):
            raise ValueError(f"exchange order m must be 1 or 2, got {self.m}")
        if self.theta != 0.0:
            raise ValueError("only theta = 0 is supported")
        if self.kind == THERMAL and not self.beta > 0.0:
            raise ValueError(f"inverse temperature must be positive, got {self.beta}")
        if self.omega_ref <= 0.0:
            raise ValueError(f"omega_ref must be positive, got {self.omega_ref}")


class BathMoments(NamedTuple):
    """Second moments of the bath coupling operators at one frequency."""

    anomalous: float      # <b^m b^m>-type (zero for thermal states)
    normal: float         # <b'^m b^m>-type
    antinormal: float     # <b^m b'^m>-type


def spectral_density(J: SpectralDensity, nu) -> np.ndarray | float:
    """J(nu); defined as 0 at nu = 0 by continuous extension."""
    nu_arr = np.asarray(nu, dtype=float)
    if np.any(nu_arr < 0.0):
        raise ValueError("spectral density defined for nu >= 0 only")
    with np.errstate(divide="ignore", invalid="ignore"):
        if J.form == SOFT_DOUBLE_CUTOFF:
            expo = -J.omega_ir / nu_arr - nu_arr / J.omega_uv
        else:
            expo = -nu_arr / J.omega_uv
        vals = np.where(nu_arr > 0.0, J.coupling * nu_arr * np.exp(expo), 0.0)
    if np.isscalar(nu) or nu_arr.ndim == 0:
        return float(vals)
    return vals


def squeeze_amplitude(bath: BathSpec, omega) -> np.ndarray | float:
    """Squeezing profile r(Omega) = r0 (Omega/omega_ref)^alpha_exp."""
    w = np.asarray(omega, dtype=float)
    r = bath.r0 * (w / bath.omega_ref) ** bath.alpha_exp
    return float(r) if np.isscalar(omega) else r


def mean_occupation(beta: float, omega) -> np.ndarray | float:
    """Bose-Einstein occupation 1/(e^{beta Omega} - 1); zero at beta = inf."""
    w = np.asarray(omega, dtype=float)
    if math.isinf(beta):
        n = np.zeros_like(w)
    else:
        n = 1.0 / np.expm1(beta * w)
    return float(n) if np.isscalar(omega) else n


def moments(bath: BathSpec, omega) -> BathMoments:
    """Anomalous/normal/antinormal second moments at frequency omega.

    Thermal: anomalous = 0; m=1 gives (nbar, nbar+1); m=2 gives
    (nbar(nbar-1)/2, (nbar(nbar+3)+2)/2).  Squeezed vacuum with theta=0:
    m=1 gives (-sinh(2r)/2, sinh^2 r, sinh^2 r + 1); m=2 gives
    (3 sinh^2(2r)/8, sinh^2 r (sinh^2 r - 1)/2, (sinh^2 r (sinh^2 r + 3) + 2)/2).
    Note the normal moment of the m=2 channel is negative for weak
    excitation (nbar < 1 or sinh^2 r < 1); values are returned as-is.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0.0):
        raise ValueError("moments defined for omega > 0 only")
    if bath.kind == THERMAL:
        n = mean_occupation(bath.beta, w)
        n = np.asarray(n, dtype=float)
        anomalous = np.zeros_like(n)
        if bath.m == 1:
            normal, antinormal = n, n + 1.0
        else:
            normal = 0.5 * n * (n - 1.0)
            antinormal = 0.5 * (n * (n + 3.0) + 2.0)
    else:
        r = np.asarray(squeeze_amplitude(bath, w), dtype=float)
        sh2 = np.sinh(r) ** 2
        if bath.m == 1:
            anomalous = -0.5 * np.sinh(2.0 * r)
            normal, antinormal = sh2, sh2 + 1.0
        else:
            anomalous = 0.375 * np.sinh(2.0 * r) ** 2
            normal = 0.5 * sh2 * (sh2 - 1.0)
            antinormal = 0.5 * (sh2 * (sh2 + 3.0) + 2.0)
    if np.isscalar(omega) or w.ndim == 0:
        return BathMoments(float(anomalous), float(normal), float(antinormal))
    return BathMoments(anomalous, normal, antinormal)


def _thermal_symmetric_coeff(beta: float, w: np.ndarray, m: int) -> np.ndarray:
    """Coefficient of the cos kernel in the thermal correlator.

    m=1: coth(beta w / 2); m=2: csch^2(beta w / 2)(2 cosh(beta w) - 1)/4.
    Evaluated through u = e^{-beta w} for stability at large beta w.
    """
    if math.isinf(beta):
        return np.ones_like(w)
    u = np.exp(-beta * w)
    if m == 1:
        return (1.0 + u) / (1.0 - u)
    return (1.0 - u + u * u) / (1.0 - u) ** 2


def _thermal_antisymmetric_coeff(beta: float, w: np.ndarray, m: int) -> np.ndarray:
    """Coefficient of the -i sin kernel: 1 for m=1, coth(beta w/2) for m=2."""
    if m == 1:
        return np.ones_like(w)
    return _thermal_symmetric_coeff(beta, w, 1)


def _correlator_integrand(bath: BathSpec, J: SpectralDensity,
                          t: float, tp: float):
    """Integrand of C_m(t, t') over bath frequency."""
    tau = t - tp
    tsum = t + tp
    m = bath.m

    if bath.kind == THERMAL:
        def f(w):
            Jw = spectral_density(J, w)
            sym = _thermal_symmetric_coeff(bath.beta, w, m)
            asym = _thermal_antisymmetric_coeff(bath.beta, w, m)
            return Jw * (sym * np.cos(m * w * tau) - 1j * asym * np.sin(m * w * tau))
        return f

    def f(w):
        Jw = spectral_density(J, w)
        r = squeeze_amplitude(bath, w)
        if m == 1:
            real = (np.cos(w * tau) * np.cosh(2.0 * r)
                    - np.cos(w * tsum - bath.theta) * np.sinh(2.0 * r))
            imag = -np.sin(w * tau)
        else:
            real = (0.125 * np.cos(2.0 * w * tau) * (7.0 + np.cosh(4.0 * r))
                    - 0.75 * np.cos(2.0 * w * tsum - 2.0 * bath.theta)
                    * np.sinh(2.0 * r) ** 2)
            imag = -np.sin(2.0 * w * tau) * np.cosh(2.0 * r)
        return Jw * (real + 1j * imag)
    return f


def frequency_window(J: SpectralDensity) -> tuple[float, float]:
    """Integration window for bath-frequency integrals.

    The lower edge sits two decades under the IR cutoff where the integrand
    is exponentially dead (this dominates any squeezing-profile growth for
    alpha_exp >= -1/2); the upper edge sits far into the UV tail.
    """
    if J.form == SOFT_DOUBLE_CUTOFF:
        lo = J.omega_ir / 100.0
    else:
        lo = J.omega_uv * 1e-6
    return lo, 20.0 * J.omega_uv


def ir_split_points(J: SpectralDensity) -> tuple[float, ...]:
    """Extra panel anchors resolving the sharp IR turn-on of the integrand."""
    if J.form != SOFT_DOUBLE_CUTOFF:
        return ()
    return (J.omega_ir / 30.0, J.omega_ir / 10.0, J.omega_ir / 3.0, J.omega_ir)


def correlator(bath: BathSpec, J: SpectralDensity, t: float, tp: float,
               *, abs_tol: float = 1e-9) -> complex:
    """Two-time correlator C_m(t, t') of the bath coupling operator.

    Thermal baths depend on t - t' only; the locally squeezed vacuum also
    carries a non-stationary t + t' component.
    """
    if t < 0.0 or tp < 0.0:
        raise ValueError("correlator defined for nonnegative times")
    lo, hi = frequency_window(J)
    # fastest kernel phase: m * max(|t-t'|, t+t') per unit frequency
    osc = bath.m * max(abs(t - tp), t + tp if bath.kind == SQUEEZED_VACUUM else 0.0)
    f = _correlator_integrand(bath, J, t, tp)
    value, _ = integrate(f, lo, hi, abs_tol=abs_tol, osc_scale=osc,
                         split_points=ir_split_points(J))
    return complex(value)
