"""Market state, limit-order fills, charging, and settlement.

fill() is pure: it computes the accepted quantity and charge without
touching the state; apply() commits a fill.  Two charging modes exist:

* "integral" -- the truthful scheme, charge = C(q + a x) - C(q), equal to
  the integral of instantaneous bundle prices over the fill;
* "final" -- charge x * p(x)'a at the final price (not truthful; kept so
  the difference is demonstrable).

Order streams are CSV (trader_id,pi,limit,bundle with the bundle as
semicolon-separated reals, limit accepts "inf"); traces are JSON lines.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cost import charge as compute_charge, prices as compute_prices

CHARGING_MODES = ("integral", "final")

# Relative tolerance of the fill-quantity bisection.
FILL_RTOL = 1e-9
# Doubling cap when searching for an upper fill bracket with limit = inf.
MAX_BRACKET = 2.0 ** 60


class UnboundedFillError(RuntimeError):
    """Order with infinite limit that would fill without bound."""


class StaleFillError(ValueError):
    """Fill was produced from a different market state."""


@dataclass(frozen=True)
class MarketConfig:
    utility: object
    charging_mode: str = "integral"
    initial_q: np.ndarray | None = None

    def __post_init__(self):
        if self.charging_mode not in CHARGING_MODES:
            raise ValueError(
                f"charging_mode must be one of {CHARGING_MODES}, got {self.charging_mode!r}"
            )
        q = np.zeros(self.n_outcomes) if self.initial_q is None \
            else np.asarray(self.initial_q, dtype=float)
        if q.shape != (self.n_outcomes,):
            raise ValueError(f"initial_q must have length {self.n_outcomes}")
        if np.any(q < 0):
            raise ValueError("initial_q must be nonnegative")
        q.setflags(write=False)
        object.__setattr__(self, "initial_q", q)

    @property
    def n_outcomes(self):
        return self.utility.n


@dataclass(frozen=True)
class Order:
    trader_id: str
    pi: float
    limit: float
    bundle: np.ndarray

    def __post_init__(self):
        if not self.pi >= 0:
            raise ValueError(f"limit price must be >= 0, got {self.pi}")
        if not self.limit > 0:
            raise ValueError(f"limit quantity must be positive, got {self.limit}")
        a = np.asarray(self.bundle, dtype=float)
        if a.ndim != 1 or not np.all(np.isfinite(a)) or np.any(a < 0) or not np.any(a > 0):
            raise ValueError("bundle must be finite, nonnegative and nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "bundle", a)


@dataclass
class FillResult:
    x_bar: float
    charge: float
    prices_before: np.ndarray
    prices_after: np.ndarray
    mode: str
    order: Order
    q_before: np.ndarray


@dataclass
class SettlementReport:
    outcome: int
    payout: float
    collected: float
    profit: float
    loss_bound: float
    bound_ok: bool


@dataclass
class MarketState:
    config: MarketConfig
    q: np.ndarray
    collected: float = 0.0
    journal: list = field(default_factory=list)


def new_market(config):
    return MarketState(config=config, q=config.initial_q.copy())


def quote(state, bundle):
    """Instantaneous price of a bundle: p(q)'a."""
    a = np.asarray(bundle, dtype=float)
    return float(compute_prices(state.config.utility, state.q) @ a)


def fill(state, order):
    """Largest x in [0, limit] with p(q + a x)'a <= pi, plus the charge.

    Does not mutate the state.  A rejected order (x=0, charge 0) is a
    normal result.
    """
    u = state.config.utility
    q = state.q
    a = order.bundle
    if a.shape != (u.n,):
        raise ValueError(f"bundle must have length {u.n}")

    def bundle_price(x):
        return float(compute_prices(u, q + a * x) @ a)

    p_before = compute_prices(u, q)
    x_bar = 0.0
    if float(p_before @ a) < order.pi:
        if math.isfinite(order.limit):
            lo, hi = 0.0, order.limit
            if bundle_price(order.limit) <= order.pi:
                lo = order.limit
            tol = FILL_RTOL * max(1.0, order.limit)
        else:
            # Prices concentrate on max-weight states as x grows, so the
            # achievable bundle price is bounded by max(a).
            if order.pi >= float(a.max()):
                raise UnboundedFillError(
                    f"limit price {order.pi} can never be reached; order would fill without bound"
                )
            lo, hi = 0.0, 1.0
            while bundle_price(hi) <= order.pi:
                lo = hi
                hi *= 2.0
                if hi > MAX_BRACKET:
                    raise UnboundedFillError("fill bracket exceeded the growth cap")
            tol = FILL_RTOL * max(1.0, hi)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if bundle_price(mid) <= order.pi:
                lo = mid
            else:
                hi = mid
        x_bar = lo

    if x_bar == 0.0:
        p_after = p_before
        paid = 0.0
    else:
        p_after = compute_prices(u, q + a * x_bar)
        if state.config.charging_mode == "integral":
            paid = compute_charge(u, q, a, x_bar)
        else:
            paid = x_bar * float(p_after @ a)
    return FillResult(
        x_bar=float(x_bar),
        charge=float(paid),
        prices_before=p_before,
        prices_after=p_after,
        mode=state.config.charging_mode,
        order=order,
        q_before=q.copy(),
    )


def apply(state, fill_result):
    """Commit a fill: update shares, money collected, and the journal."""
    if not np.array_equal(fill_result.q_before, state.q):
        raise StaleFillError("fill was computed against different outstanding shares")
    state.q = state.q + fill_result.order.bundle * fill_result.x_bar
    state.collected += fill_result.charge
    state.journal.append(fill_result)
    return state


def settle(state, outcome):
    """Pay $1 per outstanding share on the realized outcome."""
    n = state.config.n_outcomes
    if not 0 <= outcome < n:
        raise ValueError(f"outcome index must be in [0, {n}), got {outcome}")
    u = state.config.utility
    b_term, c0 = u.loss_bound_terms()
    bound = b_term + c0
    payout = float(state.q[outcome])
    profit = state.collected - payout
    ok = True if math.isinf(bound) else profit >= -bound - 1e-6
    return SettlementReport(
        outcome=outcome,
        payout=payout,
        collected=state.collected,
        profit=profit,
        loss_bound=bound,
        bound_ok=ok,
    )


# -- order stream / trace formats ------------------------------------------


def parse_bundle(text, n):
    parts = text.split(";")
    if len(parts) != n:
        raise ValueError(f"bundle must have {n} components, got {len(parts)}")
    return np.array([float(p) for p in parts])


def parse_limit(text):
    text = text.strip().lower()
    return math.inf if text == "inf" else float(text)


def read_orders_csv(path, n):
    """Parse an order-stream CSV; raises ValueError with the line number on
    a malformed row."""
    orders = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["trader_id", "pi", "limit", "bundle"]:
            raise ValueError(f"{path}: expected header trader_id,pi,limit,bundle")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if len(row) != 4:
                    raise ValueError(f"expected 4 fields, got {len(row)}")
                orders.append(Order(
                    trader_id=row[0],
                    pi=float(row[1]),
                    limit=parse_limit(row[2]),
                    bundle=parse_bundle(row[3], n),
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad order row: {exc}") from exc
    return orders


def trace_record(fill_result, collected_after):
    """One JSONL trace line per fill; float repr keeps replays byte-identical."""
    o = fill_result.order
    rec = {
        "order": {
            "trader_id": o.trader_id,
            "pi": o.pi,
            "limit": "inf" if math.isinf(o.limit) else o.limit,
            "bundle": list(o.bundle),
        },
        "x_bar": fill_result.x_bar,
        "charge": fill_result.charge,
        "prices_before": list(fill_result.prices_before),
        "prices_after": list(fill_result.prices_after),
        "collected_after": collected_after,
    }
    return json.dumps(rec, sort_keys=True)


def run_orders(state, orders, trace=None):
    """Fill and apply a sequence of orders; optionally collect trace lines."""
    for order in orders:
        f = fill(state, order)
        apply(state, f)
        if trace is not None:
            trace.append(trace_record(f, state.collected))
    return state
