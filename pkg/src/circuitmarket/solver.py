"""Desk-scale equilibrium search and the executable gadget-lemma suite.

Three complementary oracles:

* ``tatonnement`` — best-effort multiplicative price adjustment; convergence
  is recorded, never guaranteed.
* ``pinned_bisection`` — finds the clearing price of a single free good with
  all other prices pinned.  Aggregate demand for the free good is piecewise
  of the form C + M/p between greedy tie prices, so the search enumerates
  the tie candidates (where the optimal-bundle set is set-valued and demand
  jumps) and solves the hyperbolic pieces exactly; results are exact
  rationals whenever an exact clearing exists in the bracket.
* ``grid_search`` — exhaustive lexicographic scan over a small price grid.

On top of these sit the gadget fixtures (NOT / NAND / PURIFY truth-table
sweeps on compiled markets) and ``lemma_suite``, which re-checks every
construction-level lemma on a verified equilibrium.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .market import (
    Buyer,
    FisherMarket,
    MarketError,
    SplcUtility,
    _greedy_bundle,
    verify_fisher,
)
from .rationals import format_rational
from .reduction import (
    REF_GOOD,
    NotGadget,
    ReducedMarket,
    ReductionParams,
    compile_circuit,
    decode,
)
from .purecircuit import GateType, parse_circuit

F = Fraction
ZERO = F(0)
ONE = F(1)


class BracketError(ValueError):
    """The bisection bracket does not straddle a clearing price."""


class SuitePreconditionError(ValueError):
    """lemma_suite was handed something that is not an ε-equilibrium."""


# ---------------------------------------------------------------------------
# canonical demand


@dataclass(frozen=True)
class DemandProfile:
    aggregate: dict[str, Fraction]
    bundles: dict[str, dict[str, Fraction]]


def canonical_demand(market: FisherMarket, prices: dict[str, Fraction]) -> DemandProfile:
    """Aggregate of the canonical (greedy) optimal bundles at `prices`.

    Propagates UnboundedDemand if any buyer faces a free desired good.
    """
    for good in market.goods:
        if prices[good] <= 0:
            raise MarketError(f"price of {good!r} must be positive")
    aggregate = {g: ZERO for g in market.goods}
    bundles: dict[str, dict[str, Fraction]] = {}
    for buyer in market.buyers:
        result = _greedy_bundle(buyer.id, buyer.utilities, buyer.budget, prices)
        bundles[buyer.id] = result.bundle
        for good, amount in result.bundle.items():
            aggregate[good] += amount
    return DemandProfile(aggregate, bundles)


# ---------------------------------------------------------------------------
# tatonnement


@dataclass(frozen=True)
class SolverConfig:
    lam: Fraction = F(1, 2)
    max_iters: int = 200
    epsilon: Fraction = F(1, 12)
    floor: Fraction = F(1, 10**9)
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise MarketError("step factor must be positive")
        if self.floor <= 0:
            raise MarketError("price floor must be positive")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    max_abs_slack: Fraction
    goods_violating: int


@dataclass(frozen=True)
class TatonnementResult:
    prices: dict[str, Fraction]
    converged: bool
    trace: tuple[TraceRow, ...]


# prices are re-rounded every step so numerators/denominators stay bounded
_PRICE_DENOMINATOR_LIMIT = 2**40


def tatonnement(market: FisherMarket, config: SolverConfig) -> TatonnementResult:
    """Multiplicative price adjustment p <- p * (1 + lam * (demand - 1)).

    Starts from all-ones prices.  Converged means verify_fisher passes at
    config.epsilon with the canonical allocation; the best-seen prices are
    returned either way.
    """
    if not market.satisfies_sufficient_condition():
        raise MarketError("tatonnement requires every buyer to be unsatiated")
    prices = {g: ONE for g in market.goods}
    trace: list[TraceRow] = []
    best_prices, best_slack = dict(prices), None
    converged = False
    for iteration in range(config.max_iters + 1):
        profile = canonical_demand(market, prices)
        slacks = {g: profile.aggregate[g] - 1 for g in market.goods}
        max_abs = max(abs(s) for s in slacks.values())
        violating = sum(1 for s in slacks.values() if abs(s) > config.epsilon)
        trace.append(TraceRow(iteration, max_abs, violating))
        if best_slack is None or max_abs < best_slack:
            best_prices, best_slack = dict(prices), max_abs
        if violating == 0:
            report = verify_fisher(market, prices, profile.bundles, config.epsilon)
            if report.passed:
                best_prices = dict(prices)
                converged = True
                break
        prices = {
            g: max(
                config.floor,
                (p * (1 + config.lam * slacks[g])).limit_denominator(
                    _PRICE_DENOMINATOR_LIMIT
                ),
            )
            for g, p in prices.items()
        }
    return TatonnementResult(best_prices, converged, tuple(trace))


def trace_to_csv(trace: tuple[TraceRow, ...]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["iteration", "max_abs_slack", "goods_violating"])
    for row in trace:
        writer.writerow(
            [row.iteration, format_rational(row.max_abs_slack), row.goods_violating]
        )
    return out.getvalue()


# ---------------------------------------------------------------------------
# pinned-price bisection


def _interested_buyers(market: FisherMarket, good: str) -> list[Buyer]:
    out = []
    for buyer in market.buyers:
        util = buyer.utilities.get(good)
        if util is not None and any(seg.slope > 0 for seg in util.segments):
            out.append(buyer)
    return out


def _demand_interval(
    buyers: list[Buyer], good: str, prices: dict[str, Fraction], p: Fraction
) -> tuple[Fraction, Fraction]:
    """[min, max] demand for `good` at price p over all optimal bundles.

    Extremes are reached by breaking greedy ties against/towards the good.
    """
    pr = dict(prices)
    pr[good] = p
    lo = hi = ZERO
    for buyer in buyers:
        last = _greedy_bundle(
            buyer.id, buyer.utilities, buyer.budget, pr,
            tie_pref=lambda g: 1 if g == good else 0,
        )
        first = _greedy_bundle(
            buyer.id, buyer.utilities, buyer.budget, pr,
            tie_pref=lambda g: -1 if g == good else 0,
        )
        lo += last.bundle.get(good, ZERO)
        hi += first.bundle.get(good, ZERO)
    return lo, hi


def _local_model(
    buyers: list[Buyer], good: str, prices: dict[str, Fraction], p: Fraction
) -> tuple[Fraction, Fraction, Fraction]:
    """(demand, C, M) with demand = C + M/p locally around a tie-free p.

    C collects cap-limited purchases of the free good (constant in p), M the
    money spent on budget-limited purchases (demand scales as M/p).
    """
    pr = dict(prices)
    pr[good] = p
    demand = const = money = ZERO
    for buyer in buyers:
        items = []
        for g, util in sorted(buyer.utilities.items()):
            price = pr[g]
            for seg_idx, seg in enumerate(util.segments):
                if seg.slope == 0:
                    continue
                items.append((-(seg.slope / price), g, seg_idx, seg))
        items.sort(key=lambda it: it[:3])
        remaining = buyer.budget
        for _, g, _, seg in items:
            if remaining == 0:
                break
            price = pr[g]
            affordable = remaining / price
            if seg.unbounded or affordable <= seg.length:
                amount, capped = affordable, False
            else:
                amount, capped = seg.length, True
            if amount > 0:
                remaining -= amount * price
                if g == good:
                    demand += amount
                    if capped:
                        const += amount
                    else:
                        money += amount * price
    return demand, const, money


def _tie_candidates(
    buyers: list[Buyer], good: str, prices: dict[str, Fraction],
    lo: Fraction, hi: Fraction,
) -> list[Fraction]:
    """Prices in (lo, hi) where some buyer's bang-per-buck on the free good
    ties with one of their other goods (demand is set-valued there)."""
    out = set()
    for buyer in buyers:
        free_slopes = {
            seg.slope for seg in buyer.utilities[good].segments if seg.slope > 0
        }
        for other, util in buyer.utilities.items():
            if other == good:
                continue
            p_other = prices[other]
            if p_other <= 0:
                continue
            for seg in util.segments:
                if seg.slope <= 0:
                    continue
                for sf in free_slopes:
                    cand = sf * p_other / seg.slope
                    if lo < cand < hi:
                        out.add(cand)
    return sorted(out)


@dataclass(frozen=True)
class BisectionResult:
    price: Fraction
    demand_low: Fraction
    demand_high: Fraction
    exact: bool


def _region_crossing(
    buyers, good, prices, x: Fraction, y: Fraction, epsilon: Fraction,
    max_iters: int,
):
    """Search the tie-free open region (x, y) for a demand-1 crossing.

    Bisection accelerated by solving the local C + M/p model; returns
    (exact price or None, best within-epsilon fallback or None).
    """
    lo, hi = x, y
    best = None
    for _ in range(max_iters):
        p = (lo + hi) / 2
        demand, const, money = _local_model(buyers, good, prices, p)
        if demand == 1:
            return p, best
        if abs(demand - 1) <= epsilon and best is None:
            best = (p, demand)
        if money > 0 and const < 1:
            cand = money / (1 - const)
            if x < cand < y:
                d_cand, _, _ = _local_model(buyers, good, prices, cand)
                if d_cand == 1:
                    return cand, best
        if demand > 1:
            lo = p
        else:
            hi = p
    return None, best


def pinned_bisection(
    market: FisherMarket,
    pinned: dict[str, Fraction],
    free_good: str,
    bracket: tuple[Fraction, Fraction],
    epsilon: Fraction,
    max_iters: int = 60,
) -> BisectionResult:
    """Clearing price of `free_good` with every other price pinned.

    Scans the bracket in increasing price order: tie-free regions are solved
    through their local hyperbolic demand model, and at each greedy tie price
    the set-valued demand interval [min, max] is checked for containing 1
    (an exact clearing, realizable by splitting the indifferent buyers).
    Falls back to any point whose demand is within epsilon of 1.
    """
    lo, hi = F(bracket[0]), F(bracket[1])
    if not 0 < lo < hi:
        raise BracketError(f"bad bracket [{lo}, {hi}]")
    missing = [g for g in market.goods if g != free_good and g not in pinned]
    if missing:
        raise BracketError(f"pinned prices missing goods {missing}")
    buyers = _interested_buyers(market, free_good)
    if not buyers:
        raise BracketError(f"no buyer is interested in {free_good!r}")

    d_lo = _demand_interval(buyers, free_good, pinned, lo)
    d_hi = _demand_interval(buyers, free_good, pinned, hi)
    if d_lo[1] < 1 - epsilon:
        raise BracketError(
            f"demand at the low end is {d_lo[1]}, below 1 - epsilon"
        )
    if d_hi[0] > 1 + epsilon:
        raise BracketError(
            f"demand at the high end is {d_hi[0]}, above 1 + epsilon"
        )

    points = [lo] + _tie_candidates(buyers, free_good, pinned, lo, hi) + [hi]
    approx: Optional[tuple[Fraction, Fraction, Fraction]] = None

    def note_approx(price, dmin, dmax):
        nonlocal approx
        if approx is None and dmin <= 1 + epsilon and dmax >= 1 - epsilon:
            approx = (price, dmin, dmax)

    for idx, point in enumerate(points):
        dmin, dmax = _demand_interval(buyers, free_good, pinned, point)
        if dmin <= 1 <= dmax:
            return BisectionResult(point, dmin, dmax, True)
        note_approx(point, dmin, dmax)
        if idx + 1 < len(points):
            exact, fallback = _region_crossing(
                buyers, free_good, pinned, point, points[idx + 1], epsilon,
                max_iters,
            )
            if exact is not None:
                return BisectionResult(exact, ONE, ONE, True)
            if fallback is not None:
                note_approx(fallback[0], fallback[1], fallback[1])

    if approx is not None:
        return BisectionResult(approx[0], approx[1], approx[2], False)
    raise BracketError(
        f"no clearing price for {free_good!r} in [{lo}, {hi}] at epsilon={epsilon}"
    )


# ---------------------------------------------------------------------------
# grid search


@dataclass(frozen=True)
class GridResult:
    prices: dict[str, Fraction]
    allocation: dict[str, dict[str, Fraction]]


def grid_search(
    market: FisherMarket,
    epsilon: Fraction,
    free_goods: list[str],
    grid: list[Fraction],
    pinned: Optional[dict[str, Fraction]] = None,
) -> Optional[GridResult]:
    """First grid point (lexicographic over free_goods) whose canonical
    demand clears every free good to within epsilon; None if no point does.
    """
    if len(free_goods) > 3:
        raise MarketError("grid search is capped at 3 free goods")
    pinned = dict(pinned or {})
    import itertools

    for combo in itertools.product(grid, repeat=len(free_goods)):
        prices = dict(pinned)
        prices.update(zip(free_goods, combo))
        profile = canonical_demand(market, prices)
        if all(abs(profile.aggregate[g] - 1) <= epsilon for g in free_goods):
            return GridResult(prices, profile.bundles)
    return None


# ---------------------------------------------------------------------------
# chain bounds


@dataclass(frozen=True)
class ChainBounds:
    chain: int
    a: Fraction
    a_prime: Fraction
    b: Fraction
    b_prime: Fraction
    r_l: Fraction
    r_u: Fraction


def chain_bounds(
    params: ReductionParams, chain: int, p_ref: Fraction = ONE
) -> ChainBounds:
    """Input-price thresholds of one PURIFY chain of d NOT gadgets.

    Inputs below r_l force the chain output <= L; inputs above r_u force it
    >= H.  Uses the first pair's auxiliary amounts (r, r') — later pairs
    repeat the same alternating pattern.
    """
    eps, t = params.epsilon, params.t
    t_bar = t - F(5, params.k)
    r_of = params.r_chain1 if chain == 1 else params.r_chain2
    r, r_prime = r_of(1), r_of(2)
    a = (1 - 2 * t - r - eps) / t
    a_prime = (1 - 2 * t - r_prime - eps) / t
    b = (1 - 2 * t_bar - r + eps) / t
    b_prime = (1 - 2 * t_bar - r_prime + eps) / t

    h = params.s * p_ref
    low = params.s * h / params.a
    h_low, _ = params.copy_intervals[params.copy_for(h)]
    half = params.d // 2

    base_l = h_low * (1 - b) / (1 - a_prime * b)
    r_l = base_l + (a_prime * b) ** half * (low - base_l)
    base_u = h_low * (1 - a) / (1 - a * b_prime)
    r_u = base_u + (a * b_prime) ** half * (h - base_u)
    return ChainBounds(chain, a, a_prime, b, b_prime, r_l, r_u)


def chain_threshold_ordering(
    params: ReductionParams, p_ref: Fraction = ONE
) -> tuple[ChainBounds, ChainBounds, bool]:
    """The two chains' bounds plus the ordering R_U(1) <= R_L(2) that makes
    the PURIFY trichotomy go through."""
    one = chain_bounds(params, 1, p_ref)
    two = chain_bounds(params, 2, p_ref)
    return one, two, one.r_u <= two.r_l


# ---------------------------------------------------------------------------
# gadget fixtures


@dataclass(frozen=True)
class GadgetFixture:
    """A compiled market with all prices pinned, ready for single-good
    clearing experiments on one copy.

    The reference price is pinned so that H equals the copy's H_high, and
    every other good starts at H_high (so downstream inverters prefer their
    input good, mimicking their in-equilibrium behavior).
    """

    reduced: ReducedMarket
    copy: int
    prices: dict[str, Fraction] = field(repr=False)
    h: Fraction
    l: Fraction
    h_low: Fraction
    h_high: Fraction

    def gadget(self, gadget_id: str) -> NotGadget:
        for g in self.reduced.gadgets_by_copy[self.copy]:
            if g.gadget_id == gadget_id:
                return g
        raise KeyError(gadget_id)


def build_fixture(reduced: ReducedMarket, copy: Optional[int] = None) -> GadgetFixture:
    params = reduced.params
    if copy is None:
        copy = params.k - 1
    h_low, h_high = params.copy_intervals[copy]
    p_ref = h_high / params.s
    prices = {g: h_high for g in reduced.market.goods}
    prices[REF_GOOD] = p_ref
    low = params.s * h_high / params.a
    return GadgetFixture(reduced, copy, prices, h_high, low, h_low, h_high)


def clear_gate_output(
    fixture: GadgetFixture,
    gadget_id: str,
    input_prices: dict[str, Fraction],
    epsilon: Fraction,
) -> Fraction:
    """Clearing price of a gadget's output good with its inputs pinned."""
    gadget = fixture.gadget(gadget_id)
    prices = dict(fixture.prices)
    prices.update(input_prices)
    params = fixture.reduced.params
    bracket = (fixture.l * params.s / (8 * params.a), 3 * fixture.h)
    result = pinned_bisection(
        fixture.reduced.market, prices, gadget.output, bracket, epsilon
    )
    return result.price


def clear_chain(
    fixture: GadgetFixture,
    gate_index: int,
    chain: int,
    p_in: Fraction,
    epsilon: Fraction,
) -> dict[str, Fraction]:
    """Clear a PURIFY chain link by link; returns the cleared prices in
    gadget order (the final entry is the chain output good)."""
    prefix = f"g{gate_index}.{chain}."
    links = [
        g
        for g in fixture.reduced.gadgets_by_copy[fixture.copy]
        if g.gadget_id.startswith(prefix)
    ]
    links.sort(key=lambda g: int(g.gadget_id.rsplit(".", 1)[1]))
    if not links:
        raise KeyError(f"no chain {chain} for gate {gate_index}")
    prices = dict(fixture.prices)
    prices[links[0].inputs[0]] = F(p_in)
    cleared: dict[str, Fraction] = {}
    params = fixture.reduced.params
    bracket = (fixture.l * params.s / (8 * params.a), 3 * fixture.h)
    for link in links:
        result = pinned_bisection(
            fixture.reduced.market, prices, link.output, bracket, epsilon
        )
        prices[link.output] = result.price
        cleared[link.output] = result.price
    return cleared


@dataclass(frozen=True)
class SweepPoint:
    p_in: Fraction
    out1: Fraction
    out2: Fraction

    def outside(self, low: Fraction, h: Fraction) -> bool:
        """At least one output outside the open bot band (L, H)."""
        return not (low < self.out1 < h) or not (low < self.out2 < h)


def purify_sweep(
    fixture: GadgetFixture,
    gate_index: int,
    epsilon: Fraction,
    mesh: int = 64,
) -> list[SweepPoint]:
    """Sweep the PURIFY input price over a `mesh`-point grid of [L, H] and
    clear both chains sequentially at each point."""
    if mesh < 2:
        raise ValueError("mesh needs at least the two endpoints")
    low, h = fixture.l, fixture.h
    points = []
    for i in range(mesh):
        p_in = low + (h - low) * F(i, mesh - 1)
        outs = []
        for chain in (1, 2):
            cleared = clear_chain(fixture, gate_index, chain, p_in, epsilon)
            outs.append(list(cleared.values())[-1])
        points.append(SweepPoint(p_in, outs[0], outs[1]))
    return points


# --- canned fixture circuits (used by gadget-lab and the test suite) -------
#
# The gadget under test must not share goods between its pinned inputs and
# the outputs of the downstream consumers of its output: pinning an input
# low would otherwise also cheapen a downstream inverter's outside option
# and distort its demand for the good being cleared.  Hence the 3-cycle
# (not the minimal 2-cycle) and the 5-node NAND circuit.

NOT_CYCLE = "nodes 2\nNOT 0 1\nNOT 1 0\n"
NOT_FIXTURE = "nodes 3\nNOT 0 1\nNOT 1 2\nNOT 2 0\n"
NAND_FIXTURE = "nodes 5\nNAND 0 1 2\nNOT 2 3\nNOT 2 4\nNOT 3 0\nNOT 4 1\n"
PURIFY_FIXTURE = "nodes 3\nPURIFY 0 1 2\nNOT 1 0\n"

GADGET_LAB_OVERRIDE = {"k": 48, "d": 2}


def gadget_lab_report(
    epsilon: Fraction,
    mesh: int = 64,
    override: Optional[dict] = None,
) -> dict:
    """Run the NOT / NAND truth tables and the PURIFY sweep on override-scale
    compiled fixtures; returns a JSON-ready summary."""
    override = dict(GADGET_LAB_OVERRIDE if override is None else override)

    summary: dict = {"epsilon": format_rational(epsilon), "checks": []}
    ok_all = True

    def record(name, expected, got, ok):
        nonlocal ok_all
        ok_all = ok_all and ok
        summary["checks"].append(
            {"name": name, "expected": expected, "price": format_rational(got), "pass": ok}
        )

    not_fix = build_fixture(compile_circuit(parse_circuit(NOT_FIXTURE), ZERO, override))
    g = not_fix.gadget("g0")
    p = clear_gate_output(not_fix, "g0", {g.inputs[0]: not_fix.h}, epsilon)
    record("not high->low", "<= L", p, p <= not_fix.l)
    p = clear_gate_output(not_fix, "g0", {g.inputs[0]: not_fix.l / 2}, epsilon)
    record("not low->high", ">= H", p, p >= not_fix.h)

    nand_fix = build_fixture(compile_circuit(parse_circuit(NAND_FIXTURE), ZERO, override))
    g = nand_fix.gadget("g0")
    cases = [
        ("nand high,high->low", (nand_fix.h, nand_fix.h), "<= L"),
        ("nand low,high->high", (nand_fix.l / 2, nand_fix.h), ">= H"),
        ("nand high,low->high", (nand_fix.h, nand_fix.l / 2), ">= H"),
        ("nand low,low->high", (nand_fix.l / 2, nand_fix.l / 2), ">= H"),
    ]
    for name, (p_u, p_v), expected in cases:
        p = clear_gate_output(
            nand_fix, "g0", {g.inputs[0]: p_u, g.inputs[1]: p_v}, epsilon
        )
        ok = p <= nand_fix.l if expected == "<= L" else p >= nand_fix.h
        record(name, expected, p, ok)

    pure_fix = build_fixture(
        compile_circuit(parse_circuit(PURIFY_FIXTURE), ZERO, override)
    )
    sweep = purify_sweep(pure_fix, 0, epsilon, mesh=mesh)
    bad = [pt for pt in sweep if not pt.outside(pure_fix.l, pure_fix.h)]
    first, last = sweep[0], sweep[-1]
    endpoints_ok = (
        first.out1 <= pure_fix.l
        and first.out2 <= pure_fix.l
        and last.out1 >= pure_fix.h
        and last.out2 >= pure_fix.h
    )
    ok_all = ok_all and not bad and endpoints_ok
    summary["purify_sweep"] = {
        "mesh": mesh,
        "violations": [format_rational(pt.p_in) for pt in bad],
        "endpoints_pass": endpoints_ok,
        "pass": not bad and endpoints_ok,
    }
    summary["pass"] = ok_all
    return summary


# ---------------------------------------------------------------------------
# lemma suite


@dataclass(frozen=True)
class LemmaRecord:
    check_id: str
    scope: str  # "global" or a gadget/good id
    passed: bool
    witness: dict[str, Fraction]

    def to_json_dict(self) -> dict:
        return {
            "check": self.check_id,
            "scope": self.scope,
            "pass": self.passed,
            "witness": {k: format_rational(v) for k, v in sorted(self.witness.items())},
        }


@dataclass(frozen=True)
class LemmaReport:
    copy: int
    records: tuple[LemmaRecord, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_json_dict(self) -> dict:
        return {
            "copy": self.copy,
            "pass": self.passed,
            "records": [r.to_json_dict() for r in self.records],
        }


def _alloc_of(allocation, buyer_id, good) -> Fraction:
    return allocation.get(buyer_id, {}).get(good, ZERO)


def lemma_suite(
    reduced: ReducedMarket,
    prices: dict[str, Fraction],
    allocation: dict[str, dict[str, Fraction]],
    epsilon: Fraction,
) -> LemmaReport:
    """Re-check every construction-level guarantee on a verified equilibrium.

    Aborts (SuitePreconditionError) unless (prices, allocation) passes
    verify_fisher at epsilon — every check presumes an ε-equilibrium.
    Checks run on the copy selected by decode; the other copies are
    structurally identical.
    """
    report = verify_fisher(reduced.market, prices, allocation, epsilon)
    if not report.passed:
        raise SuitePreconditionError(
            "not an epsilon-equilibrium; the lemma suite has nothing to say"
        )
    params = reduced.params
    decoded = decode(reduced, prices)
    c, h, low = decoded.copy, decoded.h, decoded.l
    t, k = params.t, params.k
    t_bar = t - F(5, k)
    records: list[LemmaRecord] = []

    p_ref = prices[REF_GOOD]
    records.append(
        LemmaRecord(
            "ref-price-band", "global",
            F(1, 2) <= p_ref <= 2, {"p_ref": p_ref},
        )
    )

    for good, role in reduced.good_roles.items():
        if role.kind == "reference" or role.copy != c:
            continue
        p = prices[good]
        records.append(
            LemmaRecord("price-band", good, 0 < p <= h, {"price": p, "H": h})
        )

    gadgets = reduced.gadgets_by_copy[c]
    for gadget in gadgets:
        inv_id = f"c{c}/inv/{gadget.gadget_id}"
        aux_id = f"c{c}/aux/{gadget.gadget_id}"
        scope = gadget.gadget_id
        out = gadget.output

        if gadget.r > 0:
            got = _alloc_of(allocation, aux_id, out)
            records.append(
                LemmaRecord(
                    "aux-exact", scope, got == gadget.r,
                    {"allocated": got, "r": gadget.r},
                )
            )

        x_out = _alloc_of(allocation, inv_id, out)
        records.append(
            LemmaRecord(
                "inverter-output-positive", scope, x_out > 0, {"allocated": x_out}
            )
        )

        slack = F(3, k) if len(gadget.inputs) == 1 else F(5, k)
        for good in gadget.inputs:
            x_in = _alloc_of(allocation, inv_id, good)
            records.append(
                LemmaRecord(
                    "anti-endowment-window", scope,
                    t - slack <= x_in <= t,
                    {"allocated": x_in, "low": t - slack, "high": t},
                )
            )

        member_ids = {inv_id, aux_id}
        outside = sum(
            (
                row.get(out, ZERO)
                for bid, row in allocation.items()
                if bid not in member_ids
            ),
            ZERO,
        )
        records.append(
            LemmaRecord(
                "outside-gate-band", scope,
                2 * t_bar <= outside <= 2 * t,
                {"outside": outside, "low": 2 * t_bar, "high": 2 * t},
            )
        )
        records.append(
            LemmaRecord(
                "external-demand-cap", scope,
                outside + _alloc_of(allocation, aux_id, out) <= 2 * t + gadget.r,
                {"external": outside + _alloc_of(allocation, aux_id, out),
                 "cap": 2 * t + gadget.r},
            )
        )

        p_out = prices[out]
        if len(gadget.inputs) == 1:
            p_in = prices[gadget.inputs[0]]
            ok = True
            if p_in >= h:
                ok = p_out <= low
            elif p_in <= low:
                ok = p_out >= h
            records.append(
                LemmaRecord(
                    "not-truth", scope, ok,
                    {"p_in": p_in, "p_out": p_out, "L": low, "H": h},
                )
            )
        else:
            p_u, p_v = (prices[g] for g in gadget.inputs)
            witness = {"p_u": p_u, "p_v": p_v, "p_out": p_out, "L": low, "H": h}
            records.append(
                LemmaRecord(
                    "nand-one", scope,
                    not (p_u >= h and p_v >= h) or p_out <= low, witness,
                )
            )
            records.append(
                LemmaRecord(
                    "nand-two", scope,
                    not (p_u <= low or p_v <= low) or p_out >= h, witness,
                )
            )

    has_purify = any(
        g.gate_type is GateType.PURIFY for g in reduced.circuit.gates
    )
    if has_purify:
        one, two, ordered = chain_threshold_ordering(params, p_ref)
        records.append(
            LemmaRecord(
                "chain-threshold-order", "global", ordered,
                {"r_u_chain1": one.r_u, "r_l_chain2": two.r_l},
            )
        )
        for gi, gate in enumerate(reduced.circuit.gates):
            if gate.gate_type is not GateType.PURIFY:
                continue
            p_in = prices[reduced.variable_good(c, gate.u)]
            out1 = prices[reduced.variable_good(c, gate.v)]
            out2 = prices[reduced.variable_good(c, gate.w)]
            if p_in >= h:
                ok = out1 >= h and out2 >= h
            elif p_in <= low:
                ok = out1 <= low and out2 <= low
            else:
                ok = not (low < out1 < h) or not (low < out2 < h)
            records.append(
                LemmaRecord(
                    "purify-trichotomy", f"g{gi}", ok,
                    {"p_in": p_in, "p_out1": out1, "p_out2": out2, "L": low, "H": h},
                )
            )

    return LemmaReport(c, tuple(records))
