"""Master-equation propagation with time-dependent rates.

The generator is
    d rho/dt = -i[omega a'a, rho]
               + heating(t) D_{a'^n} rho
               + cooling(t) D_{a^n} rho
               + squeezing(t) (D'_{a^n} + D'_{a'^n}) rho
integrated in the Schrodinger picture (no rotating-frame transformation, so
measurement times keep their lab-frame meaning).  Rates come interpolated
from a RateTable or as Markovian constants.  Branch evolutions are batched:
the right-hand side acts on a stack of density matrices at once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .hilbert import FockSpace, annihilation, check_density_matrix
from .rates import MarkovianRates, RateTable

logger = logging.getLogger(__name__)

TRACE_DRIFT_CORRECT = 1e-10
TRACE_DRIFT_LIMIT = 1e-8
MIN_EIG_FLAG = -1e-6


class DriftStats(NamedTuple):
    """Raw integration drift measured before any correction."""

    trace: float
    hermiticity: float
    min_eigenvalue: float


@dataclass
class Propagator:
    """Binds the Hilbert space, exchange order and a rate source.

    Immutable after construction; evolve calls are reentrant, so branch
    evolutions can share one instance.
    """

    space: FockSpace
    n: int
    rate_source: RateTable | MarkovianRates
    omega: float = 1.0
    rtol: float = 1e-8
    atol: float = 1e-10
    _ops: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"system exchange order n must be 1 or 2, got {self.n}")
        if self.rtol > 1e-8 or self.atol > 1e-10:
            raise ValueError("integrator tolerances must satisfy "
                             "rtol <= 1e-8 and atol <= 1e-10")
        if isinstance(self.rate_source, RateTable) and self.rate_source.n != self.n:
            raise ValueError(
                f"rate table built for n={self.rate_source.n}, propagator n={self.n}")
        a = annihilation(self.space)
        lower = np.linalg.matrix_power(a, self.n)
        raise_ = lower.conj().T
        d = self.space.dim
        num = np.diag(np.arange(d, dtype=complex))

        # One sparse superoperator per generator term, row-major vec
        # convention vec(A rho B) = kron(A, B^T) vec(rho).  Each carries
        # O(d^2) nonzeros, so the RHS is a single tiny sparse matmul.
        def kron(A, B):
            return sp.kron(sp.csr_matrix(A), sp.csr_matrix(B), format="csr")

        def dissipator_super(o):
            od_o = o.conj().T @ o
            return (2.0 * kron(o, o.conj())
                    - kron(od_o, np.eye(d)) - kron(np.eye(d), od_o.T))

        def coherence_super(o):
            oo = o @ o
            return (2.0 * kron(o, o.T)
                    - kron(oo, np.eye(d)) - kron(np.eye(d), oo.T))

        commutator = -1j * self.omega * (kron(num, np.eye(d))
                                         - kron(np.eye(d), num.T))
        terms = [commutator,
                 dissipator_super(raise_),
                 dissipator_super(lower),
                 coherence_super(lower) + coherence_super(raise_)]

        pattern = sum(abs(T) for T in terms).tocsr()
        pattern.sort_indices()
        coo = pattern.tocoo()
        data = np.stack([np.asarray(T[coo.row, coo.col]).ravel().astype(complex)
                         for T in terms])
        self._ops = {
            "indices": pattern.indices.copy(),
            "indptr": pattern.indptr.copy(),
            "data": data,          # rows: commutator, heating, cooling, squeezing
        }

    def _liouvillian(self, buffer: np.ndarray) -> sp.csr_matrix:
        """CSR view over a caller-owned data buffer (keeps evolve reentrant)."""
        dd = self.space.dim ** 2
        ops = self._ops
        return sp.csr_matrix((buffer, ops["indices"], ops["indptr"]),
                             shape=(dd, dd))

    def _fill_rates(self, buffer: np.ndarray, t: float) -> None:
        heating, cooling, squeezing = self.rates_at(t)
        data = self._ops["data"]
        np.copyto(buffer, data[0])
        buffer += heating * data[1]
        buffer += cooling * data[2]
        if squeezing != 0.0:
            buffer += squeezing * data[3]

    def rates_at(self, t: float) -> np.ndarray:
        return np.asarray(self.rate_source.rates_at(t), dtype=float)


def _rhs_batch(prop: Propagator, rho: np.ndarray, t: float) -> np.ndarray:
    """Generator applied to a stack of matrices, shape (..., d, d)."""
    d = prop.space.dim
    buffer = np.empty_like(prop._ops["data"][0])
    prop._fill_rates(buffer, t)
    L = prop._liouvillian(buffer)
    flat = rho.reshape(-1, d * d).T
    return np.ascontiguousarray((L @ flat).T).reshape(rho.shape)


def liouvillian_apply(prop: Propagator, rho: np.ndarray, t: float) -> np.ndarray:
    """Right-hand side of the master equation at time t."""
    d = prop.space.dim
    if rho.shape != (d, d):
        raise ValueError(f"state shape {rho.shape} does not match dim {d}")
    return _rhs_batch(prop, rho, t)


def _drift_stats(mats: np.ndarray) -> DriftStats:
    trace = float(np.max(np.abs(np.einsum("...ii", mats) - 1.0)))
    herm = float(np.max(np.abs(mats - np.conj(np.swapaxes(mats, -1, -2)))))
    min_eig = float(np.min(np.linalg.eigvalsh(
        0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2))))))
    return DriftStats(trace, herm, min_eig)


def _correct(mats: np.ndarray, drift: DriftStats) -> np.ndarray:
    if drift.trace > TRACE_DRIFT_LIMIT:
        logger.warning("trace drift %.3e exceeds %.1e", drift.trace, TRACE_DRIFT_LIMIT)
    if drift.min_eigenvalue < MIN_EIG_FLAG:
        logger.warning("state eigenvalue %.3e below %.1e (transient positivity "
                       "violation)", drift.min_eigenvalue, MIN_EIG_FLAG)
    else:
        logger.debug("minimum state eigenvalue %.3e", drift.min_eigenvalue)
    if drift.hermiticity > TRACE_DRIFT_CORRECT:
        mats = 0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2)))
    if drift.trace > TRACE_DRIFT_CORRECT:
        traces = np.real(np.einsum("...ii", mats))
        mats = mats / traces[..., None, None]
    return mats


def evolve_batch(prop: Propagator, mats: np.ndarray, t0: float, t1: float,
                 *, t_eval=None, correct: bool = True):
    """Evolve a stack of matrices (B, d, d) from t0 to t1.

    With ``t_eval`` returns (states (T, B, d, d), DriftStats); otherwise
    (states (B, d, d), DriftStats).  Drift is measured before correction.
    """
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    d = prop.space.dim
    mats = np.asarray(mats, dtype=complex)
    squeeze_batch = mats.ndim == 2
    if squeeze_batch:
        mats = mats[None]
    if mats.shape[-2:] != (d, d):
        raise ValueError(f"state shape {mats.shape} does not match dim {d}")
    shape = mats.shape

    if t1 == t0:
        stats = _drift_stats(mats)
        if t_eval is not None:
            out = np.repeat(mats[None], len(np.atleast_1d(t_eval)), axis=0)
        else:
            out = mats
        if squeeze_batch:
            out = out[..., 0, :, :] if t_eval is not None else out[0]
        return out.copy(), stats

    batch = shape[0]
    dd = d * d
    # internal layout (d^2, batch): one sparse matmul per RHS call
    y0 = np.ascontiguousarray(mats.reshape(batch, dd).T).reshape(-1)
    buffer = np.empty_like(prop._ops["data"][0])
    L = prop._liouvillian(buffer)

    def rhs(t, y):
        prop._fill_rates(buffer, t)
        return (L @ y.reshape(dd, batch)).reshape(-1)

    first_step = min(0.01 / prop.omega, 0.5 * (t1 - t0))
    sol = solve_ivp(rhs, (t0, t1), y0, method="RK45",
                    rtol=prop.rtol, atol=prop.atol, t_eval=t_eval,
                    first_step=first_step, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")

    if t_eval is not None:
        states = sol.y.T.reshape(len(sol.t), dd, batch)
        states = np.ascontiguousarray(states.transpose(0, 2, 1)).reshape(
            (len(sol.t),) + shape)
    else:
        states = np.ascontiguousarray(sol.y[:, -1].reshape(dd, batch).T).reshape(shape)
    stats = _drift_stats(states)
    if correct:
        states = _correct(states, stats)
    if squeeze_batch:
        states = states[..., 0, :, :] if t_eval is not None else states[0]
    return states, stats


def evolve(prop: Propagator, rho0: np.ndarray, t0: float, t1: float,
           *, validate: bool = True) -> np.ndarray:
    """Propagate one density matrix from t0 to t1.

    The output is re-Hermitized and trace-renormalized only when the raw
    drift exceeds 1e-10; drift beyond 1e-8 is reported loudly.
    """
    if validate:
        check_density_matrix(rho0)
    state, _ = evolve_batch(prop, rho0, t0, t1)
    return state


def evolve_trajectory(prop: Propagator, rho0: np.ndarray, times: np.ndarray,
                      *, validate: bool = True) -> tuple[np.ndarray, DriftStats]:
    """States at the requested times (one integration), plus worst raw drift."""
    times = np.asarray(times, dtype=float)
    if validate:
        check_density_matrix(rho0)
    if len(times) == 0:
        return np.empty((0, prop.space.dim, prop.space.dim), complex), \
            DriftStats(0.0, 0.0, 0.0)
    states, stats = evolve_batch(prop, rho0, float(times[0]), float(times[-1]),
                                 t_eval=times)
    return states, stats


def trajectory_to_csv(prop: Propagator, rho0: np.ndarray, times: np.ndarray,
                      path) -> None:
    """Debug dump: columns t (cycles) and Re rho_ij over the upper triangle."""
    states, _ = evolve_trajectory(prop, rho0, times)
    d = prop.space.dim
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    header = "t," + ",".join(f"re_rho_{i}_{j}" for i, j in pairs)
    cycle = 2.0 * np.pi / prop.omega
    lines = [header]
    for t, st in zip(times, states):
        row = [f"{t / cycle:.17g}"]
        row.extend(f"{st[i, j].real:.17g}" for i, j in pairs)
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
