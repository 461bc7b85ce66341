"""Two-time measurement protocol and the nonclassicality measure.

The measure compares the outcome distribution of a late measurement with and
without an earlier projective measurement:

    W = sum_x2 | P_blind(x2) - sum_x1 P_joint(x2, x1) |

A classical (measurement-noninvasive) process satisfies the consistency
condition P_blind = sum_x1 P_joint, so W > 0 witnesses measurement
back-action on coherences built up by the dynamics.

Bases: the full Fock ladder of the truncated space, or a finite grid of
coherent states whose outcome weights cell_area/pi make the grid sum a
quadrature of the phase-space (heterodyne) form of the measure.  Grid
probabilities are deliberately NOT renormalized over the grid, so
probability leaking outside the covered phase-space region is visible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .dynamics import Propagator, evolve_batch
from .hilbert import FockSpace, coherent_state, density_matrix, fock_state

logger = logging.getLogger(__name__)

NEG_PROB_TOL = 1e-10
WITNESS_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class FockBasis:
    """Projective number measurement over levels 0 .. levels-1."""

    levels: int

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("need at least two outcomes")


@dataclass(frozen=True)
class CoherentGridBasis:
    """Granulated phase-space measurement on a grid of coherent states.

    cell_weight is the phase-space cell area divided by pi, making outcome
    probabilities cell_weight * <alpha|rho|alpha>.
    """

    centers: tuple[complex, ...]
    cell_weight: float

    def __post_init__(self):
        if len(self.centers) < 2:
            raise ValueError("need at least two grid points")
        if self.cell_weight <= 0.0:
            raise ValueError("cell_weight must be positive")


MeasurementBasis = FockBasis | CoherentGridBasis


def coherent_grid(extent: float = 2.0, points: int = 5) -> CoherentGridBasis:
    """Square grid of coherent states, default 5 x 5 from -2-2i to 2+2i."""
    xs = np.linspace(-extent, extent, points)
    spacing = xs[1] - xs[0]
    centers = tuple(complex(x, y) for y in xs for x in xs)
    return CoherentGridBasis(centers=centers, cell_weight=spacing ** 2 / math.pi)


class _BasisOps:
    """Outcome probabilities and post-measurement branch states."""

    def __init__(self, basis: MeasurementBasis, space: FockSpace):
        self.basis = basis
        self.space = space
        d = space.dim
        if isinstance(basis, FockBasis):
            if basis.levels > d:
                raise ValueError(
                    f"basis levels {basis.levels} exceed space dim {d}")
            self.n_outcomes = basis.levels
            self.states = None
            branch = np.zeros((basis.levels, d, d), dtype=complex)
            for k in range(basis.levels):
                branch[k, k, k] = 1.0
            self.branch_states = branch
        else:
            # grid corners at |alpha|^2 = 8 keep a small but tolerated tail
            # at the default truncation; warn instead of reject
            V = np.array([coherent_state(space, c, on_tail="warn")
                          for c in basis.centers])
            self.n_outcomes = len(basis.centers)
            self.states = V
            self.branch_states = np.einsum("ki,kj->kij", V, V.conj())

    def probabilities(self, mats: np.ndarray, context: str) -> np.ndarray:
        """Outcome probabilities for a stack of states, shape (..., K)."""
        if isinstance(self.basis, FockBasis):
            p = np.real(np.einsum("...ii->...i", mats))[..., :self.basis.levels]
        else:
            V = self.states
            p = self.basis.cell_weight * np.real(
                np.einsum("ki,...ij,kj->...k", V.conj(), mats, V))
        return _clip_probabilities(p, context)


def _clip_probabilities(p: np.ndarray, context: str) -> np.ndarray:
    worst = float(np.min(p, initial=0.0))
    if worst < -NEG_PROB_TOL:
        logger.warning("negative probability %.3e clipped to 0 (%s); "
                       "transient positivity violation", worst, context)
    return np.where(p < 0.0, 0.0, p)


@dataclass
class WitnessCurve:
    """Measure values over measurement times tau (units 2 pi / omega)."""

    tau_grid: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.tau_grid.shape != self.values.shape:
            raise ValueError("tau grid and values must align")
        if self.values.size and (np.min(self.values) < -2.0 - WITNESS_BOUND_TOL
                                 or np.max(self.values) > 2.0 + WITNESS_BOUND_TOL):
            raise ValueError("witness values outside the [-2, 2] budget")

    def to_csv(self, path) -> None:
        lines = []
        for key in ("n", "m", "bath", "alpha_exp", "r0", "basis", "initial"):
            if key in self.metadata:
                lines.append(f"# {key}={self.metadata[key]}")
        for key in sorted(self.metadata):
            if key not in ("n", "m", "bath", "alpha_exp", "r0", "basis", "initial"):
                lines.append(f"# {key}={self.metadata[key]}")
        lines.append("tau,value")
        for t, v in zip(self.tau_grid, self.values):
            lines.append(f"{t:.17g},{v:.17g}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def two_time_distribution(prop: Propagator, rho0: np.ndarray,
                          basis: MeasurementBasis, t1: float, t2: float
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Blind distribution P(x2) and joint matrix P(x2, x1) (raw times).

    The first measurement projects onto the basis element; each branch is
    the (pure) post-measurement state evolved from t1 to t2.
    """
    if not 0.0 <= t1 <= t2:
        raise ValueError("need 0 <= t1 <= t2")
    ops = _BasisOps(basis, prop.space)
    state_t1, _ = evolve_batch(prop, rho0, 0.0, t1)
    p1 = ops.probabilities(state_t1, "first measurement")
    stack = np.concatenate([ops.branch_states, state_t1[None]], axis=0)
    evolved, _ = evolve_batch(prop, stack, t1, t2)
    p2_cond = ops.probabilities(evolved[:-1], "branch measurement")   # (x1, x2)
    p_blind = ops.probabilities(evolved[-1], "blind measurement")
    p_joint = p2_cond.T * p1[None, :]                                 # (x2, x1)
    return p_blind, p_joint


def _witness_from_probs(p_blind: np.ndarray, p_joint: np.ndarray) -> float:
    # compensated summation keeps the result independent of branch order
    terms = [abs(p_blind[x2] - math.fsum(p_joint[x2])) for x2 in range(len(p_blind))]
    return math.fsum(terms)


def witness(prop: Propagator, rho0: np.ndarray, basis: MeasurementBasis,
            t1: float, t2: float) -> float:
    """Consistency-violation measure for one pair of measurement times."""
    p_blind, p_joint = two_time_distribution(prop, rho0, basis, t1, t2)
    return _witness_from_probs(p_blind, p_joint)


def delta_witness(prop_nm: Propagator, prop_m: Propagator, rho0: np.ndarray,
                  basis: MeasurementBasis, t1: float, t2: float) -> float:
    """Witness deviation from the matched Markovian reference evolution."""
    _check_matched(prop_nm, prop_m)
    return (witness(prop_nm, rho0, basis, t1, t2)
            - witness(prop_m, rho0, basis, t1, t2))


def _check_matched(prop_nm: Propagator, prop_m: Propagator) -> None:
    if (prop_nm.space.dim != prop_m.space.dim or prop_nm.n != prop_m.n
            or prop_nm.omega != prop_m.omega):
        raise ValueError("propagators must share space, exchange order and omega")


def _resolve_schedule(tau_cycles, schedule, omega: float
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Measurement time pairs (raw units) plus the tau axis in cycles."""
    cycle = 2.0 * math.pi / omega
    if isinstance(schedule, str):
        if schedule != "t2=2t1":
            raise ValueError(f"unknown schedule {schedule!r}")
        ratio = 2.0
    elif isinstance(schedule, (int, float)):
        ratio = float(schedule)
        if ratio < 1.0:
            raise ValueError("t2/t1 ratio must be >= 1")
    else:
        pairs = np.asarray(list(schedule), dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("explicit schedule must be (t1, t2) pairs")
        if np.any(pairs[:, 1] < pairs[:, 0]):
            raise ValueError("explicit schedule needs t2 >= t1")
        return pairs[:, 0], pairs[:, 0] * cycle, pairs[:, 1] * cycle
    taus = np.asarray(tau_cycles, dtype=float)
    return taus, taus * cycle, ratio * taus * cycle


def _sweep_values(prop: Propagator, rho0s: Sequence[np.ndarray],
                  basis: MeasurementBasis, t1s: np.ndarray, t2s: np.ndarray,
                  threads: int = 1) -> np.ndarray:
    """Witness values, shape (len(rho0s), len(t1s)).

    Branch evolutions are shared across initial states: the post-measurement
    branches do not depend on the state before the first measurement.
    """
    ops = _BasisOps(basis, prop.space)
    n_states, n_tau = len(rho0s), len(t1s)
    if n_tau == 0:
        return np.zeros((n_states, 0))
    if np.any(t1s < 0.0) or np.any(t2s < t1s):
        raise ValueError("need 0 <= t1 <= t2 across the sweep")

    order = np.argsort(t1s, kind="stable")
    unique_t1 = np.unique(t1s[order])
    stack0 = np.asarray(rho0s, dtype=complex)
    states_t1, _ = evolve_batch(prop, stack0, 0.0, float(unique_t1[-1]),
                                t_eval=unique_t1)
    t1_index = {t: i for i, t in enumerate(unique_t1)}

    values = np.empty((n_states, n_tau))

    def run_one(i: int) -> None:
        t1, t2 = float(t1s[i]), float(t2s[i])
        at_t1 = states_t1[t1_index[t1]]                     # (R, d, d)
        p1 = ops.probabilities(at_t1, f"first measurement (t1={t1:.4g})")
        stack = np.concatenate([ops.branch_states, at_t1], axis=0)
        evolved, _ = evolve_batch(prop, stack, t1, t2)
        cond = ops.probabilities(evolved[:ops.n_outcomes],
                                 f"branch measurement (t1={t1:.4g})")
        blind = ops.probabilities(evolved[ops.n_outcomes:],
                                  f"blind measurement (t1={t1:.4g})")
        for r in range(n_states):
            joint = cond.T * p1[r][None, :]
            values[r, i] = _witness_from_probs(blind[r], joint)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_one, range(n_tau)))
    else:
        for i in range(n_tau):
            run_one(i)
    return values


def witness_sweep_multi(prop: Propagator, rho0s: Sequence[np.ndarray],
                        basis: MeasurementBasis, tau_cycles,
                        *, schedule="t2=2t1", markov_prop: Propagator | None = None,
                        threads: int = 1,
                        metadata: dict | None = None) -> list[WitnessCurve]:
    """Witness (or deviation-from-Markovian) curves for several initial states."""
    taus, t1s, t2s = _resolve_schedule(tau_cycles, schedule, prop.omega)
    values = _sweep_values(prop, rho0s, basis, t1s, t2s, threads)
    if markov_prop is not None:
        _check_matched(prop, markov_prop)
        values = values - _sweep_values(markov_prop, rho0s, basis, t1s, t2s,
                                        threads)
    base = dict(metadata or {})
    curves = []
    for r in range(len(rho0s)):
        meta = dict(base)
        meta.setdefault("initial_index", r)
        curves.append(WitnessCurve(tau_grid=taus.copy(), values=values[r],
                                   metadata=meta))
    return curves


def witness_sweep(prop: Propagator, rho0: np.ndarray, basis: MeasurementBasis,
                  tau_cycles, *, schedule="t2=2t1",
                  markov_prop: Propagator | None = None, threads: int = 1,
                  metadata: dict | None = None) -> WitnessCurve:
    """Witness over a grid of first-measurement times (cycles of 2 pi/omega).

    With ``markov_prop`` the curve holds the deviation W - W_markov computed
    under identical integrator settings.
    """
    return witness_sweep_multi(prop, [rho0], basis, tau_cycles,
                               schedule=schedule, markov_prop=markov_prop,
                               threads=threads, metadata=metadata)[0]


def fock_initial_state(space: FockSpace, index: int) -> np.ndarray:
    return density_matrix(fock_state(space, index))


def coherent_initial_state(space: FockSpace, alpha: complex) -> np.ndarray:
    return density_matrix(coherent_state(space, alpha, on_tail="warn"))
