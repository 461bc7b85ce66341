"""Deterministic adaptive panel quadrature for oscillatory integrands.

The frequency integrals behind the decay rates and bath correlators mix a
smooth spectral envelope with kernels oscillating at a rate proportional to
the elapsed time.  scipy's QUADPACK copes poorly once thousands of
oscillation periods fall inside the window, and its subdivision pattern is
not something we want to depend on for bitwise-reproducible output.  This
module therefore implements a fixed-order Gauss-Legendre panel scheme:

* the initial panel grid honours caller-supplied split points and places at
  least ``PANELS_PER_PERIOD`` panels per oscillation period of the fastest
  kernel frequency,
* panels whose bisection estimate disagrees with the whole-panel estimate
  beyond their share of the error budget are split, children re-using the
  half-panel values already computed,
* accepted panel contributions are summed with ``math.fsum`` in left-to-right
  order, so the result is independent of the refinement schedule.

Integrands receive a numpy array of nodes and must return an array of the
same length (real or complex).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

# resolution floor: no panel wider than 1/8 of an oscillation period
PANELS_PER_PERIOD = 8
GAUSS_ORDER = 8
MAX_ROUNDS = 24
MAX_PANELS = 2_000_000

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)


class QuadratureError(RuntimeError):
    """Requested tolerance not reached; carries the achieved error estimate."""

    def __init__(self, message: str, value: complex, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.value = value
        self.error_estimate = error_estimate


def _initial_edges(a: float, b: float, osc_scale: float,
                   split_points: Sequence[float], min_panels: int) -> np.ndarray:
    """Panel edges over [a, b] with splits and oscillation-density refinement."""
    anchors = [a, b]
    for s in split_points:
        if a < s < b:
            anchors.append(float(s))
    anchors = sorted(set(anchors))

    max_width = np.inf
    if osc_scale > 0.0:
        max_width = (2.0 * math.pi / osc_scale) / PANELS_PER_PERIOD

    edges = [anchors[0]]
    for lo, hi in zip(anchors[:-1], anchors[1:]):
        width = hi - lo
        n = max(min_panels, int(math.ceil(width / max_width)) if np.isfinite(max_width) else min_panels)
        if len(edges) + n > MAX_PANELS:
            raise QuadratureError("initial panel grid exceeds panel budget", 0.0, math.inf)
        step = width / n
        edges.extend(lo + step * k for k in range(1, n))
        edges.append(hi)
    return np.asarray(edges)


def _gauss_batch(f: Callable[[np.ndarray], np.ndarray],
                 lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Gauss-Legendre estimates for a batch of panels [lo_i, hi_i]."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    # nodes shape (panels, order)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = f(x.ravel())
    y = np.asarray(y).reshape(x.shape)
    return half * (y @ _WEIGHTS)


def integrate(f: Callable[[np.ndarray], np.ndarray],
              a: float,
              b: float,
              *,
              abs_tol: float = 1e-9,
              osc_scale: float = 0.0,
              split_points: Sequence[float] = (),
              min_panels: int = 8) -> tuple[complex, float]:
    """Integrate f over [a, b]; returns (value, error_estimate).

    ``osc_scale`` is the fastest angular rate of the integrand with respect
    to the integration variable; it fixes the panel density floor.  Raises
    QuadratureError when the error budget cannot be met.
    """
    if b <= a:
        return 0.0, 0.0

    edges = _initial_edges(a, b, osc_scale, split_points, min_panels)
    lo, hi = edges[:-1], edges[1:]
    whole = _gauss_batch(f, lo, hi)

    total_width = b - a
    accepted: list[tuple[float, complex, float]] = []
    err_floor = abs_tol * 1e-3 / max(len(lo), 1)

    for round_no in range(MAX_ROUNDS):
        mid = 0.5 * (lo + hi)
        left = _gauss_batch(f, lo, mid)
        right = _gauss_batch(f, mid, hi)
        refined = left + right
        err = np.abs(refined - whole)
        budget = abs_tol * (hi - lo) / total_width
        ok = (err <= np.maximum(budget, err_floor))

        for i in np.nonzero(ok)[0]:
            accepted.append((lo[i], refined[i], err[i]))

        bad = np.nonzero(~ok)[0]
        if bad.size == 0:
            break
        if 2 * bad.size + len(accepted) > MAX_PANELS or round_no == MAX_ROUNDS - 1:
            # give up: keep best estimates for the unresolved panels
            for i in bad:
                accepted.append((lo[i], refined[i], err[i]))
            accepted.sort(key=lambda p: p[0])
            value = _ordered_sum(v for _, v, _ in accepted)
            estimate = math.fsum(e for _, _, e in accepted)
            raise QuadratureError("quadrature did not converge", value, estimate)

        new_lo = np.concatenate([lo[bad], mid[bad]])
        new_hi = np.concatenate([mid[bad], hi[bad]])
        new_whole = np.concatenate([left[bad], right[bad]])
        lo, hi, whole = new_lo, new_hi, new_whole

    accepted.sort(key=lambda p: p[0])
    value = _ordered_sum(v for _, v, _ in accepted)
    estimate = math.fsum(e for _, _, e in accepted)
    return value, estimate


def _ordered_sum(values) -> complex:
    vals = list(values)
    if any(isinstance(v, complex) or np.iscomplexobj(v) for v in vals):
        re = math.fsum(float(np.real(v)) for v in vals)
        im = math.fsum(float(np.imag(v)) for v in vals)
        return complex(re, im)
    return math.fsum(float(v) for v in vals)
