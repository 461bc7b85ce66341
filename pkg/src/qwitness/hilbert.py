"""Truncated oscillator Hilbert space: states, ladder operators, dissipators.

Everything is dense complex numpy; at the default truncation (20 levels)
sparsity buys nothing.  Operators are built exactly on the truncated space,
so the top level leaks (a'a|d-1> = (d-1)|d-1>); callers monitor that through
the coherent-state tail diagnostics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

STATE_NORM_TOL = 1e-12
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
COHERENT_TAIL_TOL = 1e-6


class TruncationError(ValueError):
    """Coherent amplitude too large for the truncated space."""


@dataclass(frozen=True)
class FockSpace:
    """Oscillator Hilbert space truncated to levels |0> .. |dim-1>."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"need at least two levels, got dim={self.dim}")


def annihilation(space: FockSpace) -> np.ndarray:
    a = np.zeros((space.dim, space.dim), dtype=complex)
    idx = np.arange(space.dim - 1)
    a[idx, idx + 1] = np.sqrt(idx + 1.0)
    return a


def creation(space: FockSpace) -> np.ndarray:
    return annihilation(space).conj().T


def number_operator(space: FockSpace) -> np.ndarray:
    return np.diag(np.arange(space.dim, dtype=complex))


def fock_state(space: FockSpace, n: int) -> np.ndarray:
    if not 0 <= n < space.dim:
        raise ValueError(f"level {n} outside truncated space of dim {space.dim}")
    v = np.zeros(space.dim, dtype=complex)
    v[n] = 1.0
    return v


def coherent_state(space: FockSpace, alpha: complex, *,
                   tail_tol: float = COHERENT_TAIL_TOL,
                   on_tail: str = "raise") -> np.ndarray:
    """Truncated coherent state, renormalized to unit norm.

    Amplitudes are e^{-|alpha|^2/2} alpha^n / sqrt(n!).  The weight lost to
    the truncated tail is compared against ``tail_tol``; depending on
    ``on_tail`` an overweight tail raises TruncationError or logs a warning
    before renormalizing.
    """
    if on_tail not in ("raise", "warn"):
        raise ValueError(f"on_tail must be 'raise' or 'warn', got {on_tail!r}")
    n = np.arange(space.dim)
    # log-space avoids overflow of alpha^n / sqrt(n!) separately
    mag = abs(alpha)
    if mag == 0.0:
        return fock_state(space, 0)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, space.dim))]))
    log_mag = -0.5 * mag * mag + n * math.log(mag) - 0.5 * log_fact
    phase = np.exp(1j * n * np.angle(alpha))
    amps = np.exp(log_mag) * phase
    tail = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if tail > tail_tol:
        msg = (f"coherent state alpha={alpha} loses tail weight {tail:.3e} "
               f"at dim={space.dim} (tolerance {tail_tol:.1e})")
        if on_tail == "raise":
            raise TruncationError(msg)
        logger.warning(msg)
    amps /= np.linalg.norm(amps)
    return amps


def density_matrix(state: np.ndarray) -> np.ndarray:
    """Pure-state density matrix |psi><psi|, validating the unit norm."""
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > STATE_NORM_TOL:
        raise ValueError(f"state norm {nrm} deviates from 1 beyond {STATE_NORM_TOL}")
    return np.outer(state, state.conj())


def check_density_matrix(rho: np.ndarray, *,
                         herm_tol: float = HERMITICITY_TOL,
                         trace_tol: float = TRACE_TOL) -> None:
    """Validate Hermiticity and unit trace; raises ValueError on violation."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_tol:
        raise ValueError(f"Hermiticity violation {herm:.3e} exceeds {herm_tol:.1e}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr} deviates from 1 beyond {trace_tol:.1e}")


def _check_dims(L: np.ndarray, rho: np.ndarray) -> None:
    if L.shape != rho.shape or L.shape[0] != L.shape[1]:
        raise ValueError(f"dimension mismatch: operator {L.shape}, state {rho.shape}")


def standard_dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """2 L rho L' - L'L rho - rho L'L (traceless for any input)."""
    _check_dims(L, rho)
    Ld = L.conj().T
    LdL = Ld @ L
    return 2.0 * (L @ rho @ Ld) - LdL @ rho - rho @ LdL


def generalized_dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """2 L rho L - LL rho - rho LL (coherence-creating variant)."""
    _check_dims(L, rho)
    LL = L @ L
    return 2.0 * (L @ rho @ L) - LL @ rho - rho @ LL


def husimi_q(rho: np.ndarray, alpha: complex, *, on_tail: str = "warn") -> float:
    """Phase-space distribution <alpha|rho|alpha>/pi on the truncated space."""
    space = FockSpace(rho.shape[0])
    v = coherent_state(space, alpha, on_tail=on_tail)
    return float(np.real(v.conj() @ rho @ v)) / math.pi
