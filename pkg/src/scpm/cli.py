"""Command-line harness: quote, trade, simulate, converge, table1, verify.

Every number printed here comes from a library operation; the CLI only
loads files and formats output.  Exit codes: 0 success, 1 verification
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, market as market_mod, oracle
from .cost import charge as compute_charge, cost as compute_cost, prices as compute_prices
from .utilities import KINDS, make_utility, utility_from_dict


class ConfigError(Exception):
    pass


def load_market_config(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    try:
        utility = utility_from_dict(doc.get("utility"))
        return market_mod.MarketConfig(
            utility=utility,
            charging_mode=doc.get("charging_mode", "integral"),
            initial_q=doc.get("initial_q"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad market config {path}: {exc}")


def _replay(state, orders_path):
    orders = market_mod.read_orders_csv(orders_path, state.config.n_outcomes)
    return market_mod.run_orders(state, orders)


def _parse_vector(text, n, what):
    try:
        return market_mod.parse_bundle(text, n)
    except ValueError as exc:
        raise ConfigError(f"bad {what}: {exc}")


def _fmt(x):
    return f"{x:.6f}"


def cmd_quote(args):
    config = load_market_config(args.config)
    state = market_mod.new_market(config)
    if args.orders:
        _replay(state, args.orders)
    bundle = _parse_vector(args.bundle, config.n_outcomes, "bundle")
    p = compute_prices(config.utility, state.q)
    print(_fmt(float(p @ bundle)))
    print("prices: " + " ".join(_fmt(x) for x in p))
    return 0


def cmd_trade(args):
    config = load_market_config(args.config)
    state = market_mod.new_market(config)
    if args.orders:
        _replay(state, args.orders)
    order = market_mod.Order(
        trader_id="cli",
        pi=args.pi,
        limit=math.inf if args.limit is None else args.limit,
        bundle=_parse_vector(args.bundle, config.n_outcomes, "bundle"),
    )
    f = market_mod.fill(state, order)
    market_mod.apply(state, f)
    print(f"x_bar: {_fmt(f.x_bar)}")
    print(f"charge: {_fmt(f.charge)}")
    print("prices: " + " ".join(_fmt(x) for x in f.prices_after))
    return 0


def cmd_simulate(args):
    config = load_market_config(args.config)
    state = market_mod.new_market(config)
    orders = market_mod.read_orders_csv(args.orders, config.n_outcomes)
    trace = []
    market_mod.run_orders(state, orders, trace=trace)
    with open(args.out, "w") as f:
        for line in trace:
            f.write(line + "\n")
    p = compute_prices(config.utility, state.q)
    print(f"orders: {len(orders)}")
    print("final prices: " + " ".join(_fmt(x) for x in p))
    print(f"collected: {_fmt(state.collected)}")
    bound_ok = True
    for i in range(config.n_outcomes):
        report = market_mod.settle(state, i)
        bound_ok = bound_ok and report.bound_ok
        print(f"pnl[{i}]: {_fmt(report.profit)}")
    bound = sum(config.utility.loss_bound_terms())
    bound_text = "inf" if math.isinf(bound) else _fmt(bound)
    print(f"loss bound: {bound_text} respected: {'yes' if bound_ok else 'NO'}")
    return 0


def cmd_converge(args):
    config = load_market_config(args.config)
    if config.utility.kind == "MinSCPM":
        print(
            "warning: MinSCPM is proper but not strictly proper; "
            "price convergence to the belief is not guaranteed",
            file=sys.stderr,
        )
    belief = _parse_vector(args.belief, config.n_outcomes, "belief")
    if abs(belief.sum() - 1.0) > 1e-10 or np.any(belief < 0):
        raise ConfigError("belief must lie on the probability simplex")
    state = market_mod.new_market(config)
    sweeps_used = 0
    for _ in range(args.rounds):
        p = compute_prices(config.utility, state.q)
        traded = False
        for i in range(config.n_outcomes):
            if belief[i] > p[i]:
                order = market_mod.Order(
                    trader_id="agent",
                    pi=float(belief[i]),
                    limit=args.cap,
                    bundle=np.eye(config.n_outcomes)[i],
                )
                f = market_mod.fill(state, order)
                if f.x_bar > 0:
                    market_mod.apply(state, f)
                    traded = True
        sweeps_used += 1
        if not traded:
            break
    p = compute_prices(config.utility, state.q)
    gap = float(np.max(np.abs(p - belief)))
    print(f"sweeps: {sweeps_used}")
    print("final prices: " + " ".join(_fmt(x) for x in p))
    print(f"belief gap: {gap:.6e}")
    return 0


def cmd_table1(args):
    theta = None
    if args.theta:
        theta = [float(x) for x in args.theta.split(";")]
    header = (
        f"{'mechanism':<16} {'loss':>12} {'loss(num)':>12} "
        f"{'properness':<16} {'risk':<5} {'penalty (fit dev)':<34}"
    )
    print(header)
    print("-" * len(header))
    for kind in KINDS:
        use_theta = theta if kind in ("LMSR", "LogSCPM", "QuadSCPM") else None
        u = make_utility(kind, b=args.b, n_outcomes=args.n, theta=use_theta)
        analytic = analysis.worst_case_loss(u)
        numeric = analysis.worst_case_loss(u, method="numeric")
        loss = "inf" if math.isinf(analytic.total) else _fmt(analytic.total)
        loss_num = "inf" if math.isinf(numeric.total) else _fmt(numeric.total)
        if math.isinf(analytic.total):
            loss_num = "unbounded"
        rep = analysis.check_properness(u, n_samples=50)
        if rep.strictly_proper:
            properness = "strictly proper"
        elif rep.proper:
            properness = "proper"
        else:
            properness = "improper"
        if u.monotone:
            label, dev = analysis.identify_penalty_family(u)
            penalty = f"{label} ({dev:.2e})"
            risk = "yes"
        else:
            penalty = "-"
            risk = "no"
        print(f"{kind:<16} {loss:>12} {loss_num:>12} {properness:<16} {risk:<5} {penalty:<34}")
    return 0


# -- verify ------------------------------------------------------------------


def _verify_cost(checks, rng):
    for kind in KINDS:
        u = make_utility(kind, b=1.0, n_outcomes=3)
        for _ in range(8):
            q = rng.uniform(0.0, 4.0, size=3)
            _, oracle_val = oracle.grid_min_t(u, q)
            engine_val = compute_cost(u, q)
            checks.append(
                (f"cost {kind} grid-vs-engine", abs(oracle_val - engine_val) <= 1e-6,
                 f"q={q} oracle={oracle_val} engine={engine_val}")
            )


def _verify_charge(checks, rng):
    for kind in KINDS:
        u = make_utility(kind, b=1.0, n_outcomes=3)
        q = rng.uniform(0.0, 2.0, size=3)
        a = np.array([1.0, 0.0, 1.0])
        x = 1.5
        quad = oracle.quadrature_charge(u, q, a, x)
        direct = compute_charge(u, q, a, x)
        tol = 1e-3 if kind == "MinSCPM" else 1e-4
        checks.append(
            (f"charge {kind} quadrature-vs-engine", abs(quad - direct) <= tol,
             f"quad={quad} engine={direct}")
        )


def _verify_fill(checks, rng):
    step = 1e-4
    for kind in KINDS:
        if kind == "QuadraticScore":
            continue  # prices can exceed the simplex box; fills still match
        u = make_utility(kind, b=1.0, n_outcomes=3)
        state = market_mod.new_market(market_mod.MarketConfig(utility=u))
        order = market_mod.Order(
            trader_id="v", pi=0.6, limit=2.0, bundle=np.array([1.0, 0.0, 0.0])
        )
        scan = oracle.brute_force_fill(state, order, step=step)
        engine = market_mod.fill(state, order).x_bar
        checks.append(
            (f"fill {kind} scan-vs-engine", abs(scan - engine) <= 2.0 * step,
             f"scan={scan} engine={engine}")
        )


def cmd_verify(args):
    rng = np.random.default_rng(7)
    checks = []
    if args.scope in ("cost", "all"):
        _verify_cost(checks, rng)
    if args.scope in ("charge", "all"):
        _verify_charge(checks, rng)
    if args.scope in ("fill", "all"):
        _verify_fill(checks, rng)
    failures = 0
    for name, ok, detail in checks:
        if ok:
            print(f"ok   {name}")
        else:
            failures += 1
            print(f"FAIL {name}: {detail}")
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scpm", description="Convex pari-mutuel market maker harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quote", help="price a bundle against a market config")
    p.add_argument("--config", required=True)
    p.add_argument("--orders", help="order CSV to replay before quoting")
    p.add_argument("--bundle", required=True, help="semicolon-separated bundle")
    p.set_defaults(func=cmd_quote)

    p = sub.add_parser("trade", help="submit a single limit order")
    p.add_argument("--config", required=True)
    p.add_argument("--orders", help="order CSV to replay first")
    p.add_argument("--pi", type=float, required=True)
    p.add_argument("--limit", type=float)
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_trade)

    p = sub.add_parser("simulate", help="run an order stream and write a JSONL trace")
    p.add_argument("--config", required=True)
    p.add_argument("--orders", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("converge", help="run a truthful agent until prices meet its belief")
    p.add_argument("--config", required=True)
    p.add_argument("--belief", required=True, help="semicolon-separated simplex vector")
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--cap", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("table1", help="mechanism comparison table")
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--theta", help="semicolon-separated prior weights")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("verify", help="run oracle-vs-engine cross checks")
    p.add_argument("--scope", choices=["cost", "charge", "fill", "all"], default="all")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
