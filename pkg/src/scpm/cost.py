"""Cost function C(q) = min_t t - u(te - q), state prices, and order charges.

The scalar minimization runs on the nondecreasing derivative
g(t) = 1 - e' grad(u)(te - q):

* utilities whose gradient sums to 1 identically (LMSR, MinSCPM,
  QuadraticScore) make the objective flat in t; the canonical
  t = max_i q_i is returned with flat_objective set;
* ExponentialSCPM and QuadSCPM expose exact closed-form withdrawal
  levels, checked against the |g| <= tolerance certificate;
* everything else (LogSCPM) is bracketed and bisected.

Tolerances are fixed so that traces and acceptance values are bit-stable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

GRAD_TOL = 1e-10
WIDTH_TOL = 1e-12
MAX_ITER = 200
MAX_EXPAND = 128
FLAT_TOL = 1e-12
FLOOR_PAD = 1e-9

# |sum(prices) - 1| below PRICE_SUM_OK is accepted as-is, up to
# PRICE_SUM_FIX is renormalized, beyond that the solve has failed.
PRICE_SUM_OK = 1e-10
PRICE_SUM_FIX = 1e-8


class SolverError(RuntimeError):
    """The scalar cost solve failed (bracket expansion or simplex check)."""


@dataclass
class CostSolveResult:
    t_star: float
    cost: float
    prices: np.ndarray
    flat_objective: bool
    iterations: int


def _bisect_t(u, q, floor, qmax):
    def g(t):
        return 1.0 - u.grad_sum(t - q)

    lo = qmax - 1.0
    hi = qmax + 1.0
    if math.isfinite(floor):
        lo = max(lo, floor + FLOOR_PAD)
        if hi <= lo:
            hi = lo + 1.0
    glo = g(lo)
    ghi = g(hi)
    if abs(glo) <= FLAT_TOL and abs(ghi) <= FLAT_TOL:
        return qmax, True, 0

    step = 1.0
    expansions = 0
    while glo > 0.0:
        if expansions >= MAX_EXPAND:
            raise SolverError("bracket expansion failed (derivative has no sign change)")
        new_lo = lo - step
        if math.isfinite(floor):
            new_lo = max(new_lo, floor + FLOOR_PAD)
            if new_lo == lo:
                raise SolverError("derivative positive down to the domain floor")
        lo = new_lo
        glo = g(lo)
        step *= 2.0
        expansions += 1
    step = 1.0
    while ghi < 0.0:
        if expansions >= MAX_EXPAND:
            raise SolverError("bracket expansion failed (derivative has no sign change)")
        hi += step
        ghi = g(hi)
        step *= 2.0
        expansions += 1

    iterations = 0
    t = 0.5 * (lo + hi)
    while iterations < MAX_ITER and hi - lo > WIDTH_TOL:
        t = 0.5 * (lo + hi)
        gt = g(t)
        iterations += 1
        if abs(gt) <= GRAD_TOL:
            return t, False, iterations
        if gt < 0.0:
            lo = t
        else:
            hi = t
    return 0.5 * (lo + hi), False, iterations


def solve_t(u, q, method="auto"):
    """Minimize t - u(te - q); returns level, cost, prices and diagnostics.

    method="bisect" forces the generic bracketing path (used by tests to
    cross-check the closed-form fast paths).
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (u.n,):
        raise ValueError(f"q must have shape ({u.n},), got {q.shape}")
    floor = u.domain_floor(q)
    qmax = float(q.max())

    flat = False
    iterations = 0
    if method == "auto" and u.price_level_invariant:
        t = qmax
        flat = True
    else:
        t = u.solve_withdrawal(q) if method == "auto" else None
        if t is not None:
            if abs(1.0 - u.grad_sum(t - q)) > 1e-8:
                raise SolverError(f"closed-form withdrawal failed certificate for {u.kind}")
        else:
            t, flat, iterations = _bisect_t(u, q, floor, qmax)

    s = t - q
    c = t - u.value(s)
    p = np.asarray(u.grad(s), dtype=float)
    gap = abs(p.sum() - 1.0)
    if gap > PRICE_SUM_FIX:
        raise SolverError(f"price vector off the simplex by {gap:.3e}")
    if gap > PRICE_SUM_OK:
        p = p / p.sum()
    if u.monotone:
        if np.any(p < -1e-10):
            raise SolverError("negative price from a non-decreasing utility")
        p = np.clip(p, 0.0, None)
    elif np.any(p < 0):
        warnings.warn(f"{u.kind} produced negative prices", stacklevel=2)
    return CostSolveResult(float(t), float(c), p, flat, iterations)


def cost(u, q, method="auto"):
    """C(q), the money collected when the outstanding shares are q."""
    return solve_t(u, q, method=method).cost


def prices(u, q, method="auto"):
    """State price vector p(q) = grad C(q); sums to 1."""
    return solve_t(u, q, method=method).prices


def charge(u, q, a, x):
    """Integral charge C(q + a x) - C(q) for filling x units of bundle a."""
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    if x < 0:
        raise ValueError(f"fill quantity must be nonnegative, got {x}")
    if a.shape != (u.n,) or np.any(a < 0) or not np.any(a > 0):
        raise ValueError("bundle must be nonnegative, nonzero, of market length")
    if x == 0:
        return 0.0
    return cost(u, q + a * x) - cost(u, q)
