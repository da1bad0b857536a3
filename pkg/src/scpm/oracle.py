"""Deliberately dumb cross-check oracles: dense scans, central differences,
trapezoid quadrature, and step-scan fills.

These share no solver code with cost.py/market.py, so agreement between
the two routes is evidence rather than tautology.  They are slow by
design and used from tests and the `verify` CLI command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cost import prices as compute_prices


@dataclass(frozen=True)
class OracleConfig:
    grid_points: int = 100_000
    fd_step: float = 1e-6
    quad_panels: int = 10_000

    def __post_init__(self):
        if self.grid_points <= 0 or self.fd_step <= 0 or self.quad_panels <= 0:
            raise ValueError("oracle parameters must be positive")


def default_bracket(u, q):
    q = np.asarray(q, dtype=float)
    width = 50.0 * (1.0 + u.b)
    hi = float(q.max()) + width
    floor = u.domain_floor(q)
    lo = floor + 1e-9 * max(1.0, abs(floor)) if math.isfinite(floor) else float(q.max()) - width
    return lo, hi


def grid_min_t(u, q, bracket=None, grid_points=100_000):
    """Dense scan of t - u(te - q) over the bracket, refined once."""
    q = np.asarray(q, dtype=float)
    if bracket is None:
        bracket = default_bracket(u, q)
    lo, hi = bracket
    if not lo < hi:
        raise ValueError(f"empty bracket ({lo}, {hi})")

    def scan(a, b):
        t = np.linspace(a, b, grid_points)
        phi = t - u.value(t[:, None] - q[None, :])
        k = int(np.argmin(phi))
        return t, phi, k

    t, phi, k = scan(lo, hi)
    spacing = (hi - lo) / (grid_points - 1)
    a = max(lo, t[k] - 2.0 * spacing)
    b = min(hi, t[k] + 2.0 * spacing)
    t, phi, k = scan(a, b)
    return float(t[k]), float(phi[k])


def finite_diff_gradient(f, x, h=1e-6):
    """Central differences; shrinks h near domain boundaries, down to 1e-10."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        step = h
        while True:
            try:
                xp = x.copy()
                xm = x.copy()
                xp[i] += step
                xm[i] -= step
                g[i] = (f(xp) - f(xm)) / (2.0 * step)
                break
            except Exception:
                step /= 10.0
                if step < 1e-10:
                    raise
    return g


def quadrature_charge(u, q, a, x_bar, panels=10_000):
    """Trapezoid rule for the integral of the instantaneous bundle price."""
    if x_bar < 0:
        raise ValueError("x_bar must be nonnegative")
    if x_bar == 0:
        return 0.0
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    eps = np.linspace(0.0, x_bar, panels + 1)
    vals = np.array([compute_prices(u, q + a * e) @ a for e in eps])
    return float(np.trapezoid(vals, eps))


def brute_force_fill(state, order, step=1e-4):
    """Scan eps = 0, step, 2*step, ... while the bundle price stays <= pi."""
    if step <= 0:
        raise ValueError("step must be positive")
    u = state.config.utility
    q = state.q
    a = order.bundle
    if float(compute_prices(u, q) @ a) >= order.pi:
        return 0.0
    eps = 0.0
    while True:
        nxt = eps + step
        if nxt > order.limit:
            return float(order.limit)
        if float(compute_prices(u, q + a * nxt) @ a) > order.pi:
            return eps
        eps = nxt


def simplex_grid(n, resolution):
    """All lattice simplex points with components k/resolution (n <= 3);
    seeded Dirichlet samples for larger n."""
    if n < 2 or resolution < 2:
        raise ValueError("need n >= 2 and resolution >= 2")
    if n == 2:
        k = np.arange(resolution + 1)
        p0 = k / resolution
        return np.column_stack([p0, 1.0 - p0])
    if n == 3:
        pts = []
        for k1 in range(resolution + 1):
            k2 = np.arange(resolution - k1 + 1)
            block = np.empty((k2.size, 3))
            block[:, 0] = k1 / resolution
            block[:, 1] = k2 / resolution
            block[:, 2] = 1.0 - block[:, 0] - block[:, 1]
            pts.append(block)
        return np.clip(np.vstack(pts), 0.0, 1.0)
    rng = np.random.default_rng(0)
    return rng.dirichlet(np.ones(n), size=100_000)
