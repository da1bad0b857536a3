"""Compare the six catalog mechanisms side by side.

For each utility: worst-case loss (analytic and the independent numeric
search), properness verdict, whether the risk-measure view applies, and
the identified conjugate-penalty family.

Run:  python3 demos/mechanism_comparison.py
"""

import math

from scpm import (
    check_properness,
    identify_penalty_family,
    make_utility,
    worst_case_loss,
)
from scpm.utilities import KINDS

B, N = 1.0, 2

print(f"Mechanism comparison at b = {B}, N = {N}\n")
header = f"{'mechanism':<16} {'loss':>10} {'loss (search)':>14}  {'properness':<16} {'penalty family'}"
print(header)
print("-" * len(header))

for kind in KINDS:
    u = make_utility(kind, b=B, n_outcomes=N)
    ana = worst_case_loss(u).total
    num = worst_case_loss(u, method="numeric").total
    loss = "unbounded" if math.isinf(ana) else f"{ana:.6f}"
    loss_num = "unbounded" if math.isinf(num) else f"{num:.6f}"
    rep = check_properness(u, n_samples=50)
    properness = ("strictly proper" if rep.strictly_proper
                  else "proper" if rep.proper else "improper")
    if u.monotone:
        family, dev = identify_penalty_family(u)
        penalty = f"{family}  (fit dev {dev:.1e})"
    else:
        penalty = "- (not monotone)"
    print(f"{kind:<16} {loss:>10} {loss_num:>14}  {properness:<16} {penalty}")

print("""
Notes:
* LMSR and ExponentialSCPM both risk b log N; their penalties coincide
  for a uniform prior.
* MinSCPM risks nothing but is only weakly proper: many beliefs map to
  the same prices, so prices need not converge to a trader's belief.
* LogSCPM elicits beliefs exactly (log score) at the price of an
  unbounded worst-case loss.
* QuadraticScore is not monotone, so it has no risk-measure reading and
  its prices can leave [0, 1].
""")
