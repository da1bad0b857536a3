"""Walk through one market session end to end.

Opens an LMSR market on three outcomes, processes a handful of limit
orders under truthful (integral) charging, then settles every outcome and
checks the organizer's loss against the analytic bound.

Run:  python3 demos/market_session.py
"""

import numpy as np

from scpm import (
    MarketConfig,
    Order,
    apply_fill,
    fill,
    make_utility,
    new_market,
    quote,
    settle,
)

u = make_utility("LMSR", b=1.0, n_outcomes=3)
state = new_market(MarketConfig(utility=u, charging_mode="integral"))

print("Opening prices:", np.round(fill(state, Order('probe', 0.0, 1.0, np.eye(3)[0])).prices_before, 4))

orders = [
    Order("alice", pi=0.55, limit=2.0, bundle=np.array([1.0, 0.0, 0.0])),
    Order("bob",   pi=0.40, limit=1.0, bundle=np.array([0.0, 1.0, 0.0])),
    Order("carol", pi=0.70, limit=0.5, bundle=np.array([1.0, 0.0, 1.0])),
    Order("dave",  pi=0.20, limit=3.0, bundle=np.array([0.0, 0.0, 1.0])),
]

for order in orders:
    f = fill(state, order)
    apply_fill(state, f)
    status = "filled" if f.x_bar > 0 else "rejected (already at the limit price)"
    print(f"{order.trader_id:>5}: bid {order.pi:.2f} on {order.bundle.astype(int)} "
          f"-> {status}, x = {f.x_bar:.4f}, paid {f.charge:.4f}")

print("\nFinal state:")
print("  outstanding shares:", np.round(state.q, 4))
print("  quote for outcome 0:", round(quote(state, np.eye(3)[0]), 4))
print("  collected:", round(state.collected, 4))

print("\nSettlement per outcome (bound = B + C(0) = log 3 ≈ 1.0986):")
for i in range(3):
    rep = settle(state, i)
    print(f"  outcome {i}: pay out {rep.payout:.4f}, organizer P&L {rep.profit:+.4f}, "
          f"within bound: {rep.bound_ok}")
