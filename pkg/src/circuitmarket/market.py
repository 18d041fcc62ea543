"""Exact-rational SPLC Fisher/exchange markets and equilibrium verification.

Buyers have separable piecewise-linear concave utilities: per good, an
ordered list of segments with non-increasing slopes, where only the final
segment may be unbounded.  Supply of every good is one unit.  The optimal
bundle at given prices is computed by the classic bang-per-buck greedy,
which is exact for SPLC utilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .rationals import format_rational, parse_rational

ZERO = Fraction(0)
ONE = Fraction(1)


class MarketError(ValueError):
    """Structural or format error in market data."""


class UnboundedDemand(Exception):
    """A buyer's optimal-bundle set is empty: some good with remaining
    positive marginal utility has price zero."""

    def __init__(self, buyer_id: str, good: str):
        super().__init__(f"buyer {buyer_id!r} has unbounded demand for {good!r}")
        self.buyer_id = buyer_id
        self.good = good


@dataclass(frozen=True)
class SplcSegment:
    """One linear piece: `length` units at marginal utility `slope`.

    length is None for the (single, final) unbounded segment.
    """

    length: Optional[Fraction]
    slope: Fraction

    def __post_init__(self):
        if self.length is not None:
            object.__setattr__(self, "length", Fraction(self.length))
            if self.length <= 0:
                raise MarketError("segment length must be positive")
        object.__setattr__(self, "slope", Fraction(self.slope))
        if self.slope < 0:
            raise MarketError("segment slope must be non-negative")

    @property
    def unbounded(self) -> bool:
        return self.length is None


@dataclass(frozen=True)
class SplcUtility:
    """Per-good piecewise-linear concave utility with u(0) = 0."""

    segments: tuple[SplcSegment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for i, seg in enumerate(self.segments):
            if seg.unbounded and i != len(self.segments) - 1:
                raise MarketError("only the final segment may be unbounded")
            if i > 0 and seg.slope > self.segments[i - 1].slope:
                raise MarketError("slopes must be non-increasing (concavity)")

    def value(self, amount: Fraction) -> Fraction:
        amount = Fraction(amount)
        if amount < 0:
            raise MarketError("amount must be non-negative")
        total = ZERO
        remaining = amount
        for seg in self.segments:
            if remaining == 0:
                break
            taken = remaining if seg.unbounded else min(remaining, seg.length)
            total += seg.slope * taken
            remaining -= taken
        return total

    @property
    def strictly_increasing(self) -> bool:
        """True iff unsatiable: final segment unbounded with positive slope."""
        return (
            bool(self.segments)
            and self.segments[-1].unbounded
            and self.segments[-1].slope > 0
        )


def utility_value(u: SplcUtility, amount: Fraction) -> Fraction:
    """Exact piecewise-linear evaluation of u at `amount`."""
    return u.value(amount)


@dataclass(frozen=True)
class Buyer:
    id: str
    budget: Fraction
    utilities: dict[str, SplcUtility] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "budget", Fraction(self.budget))
        if self.budget <= 0:
            raise MarketError(f"buyer {self.id!r} budget must be positive")


@dataclass(frozen=True)
class FisherMarket:
    goods: tuple[str, ...]
    buyers: tuple[Buyer, ...]

    def __post_init__(self):
        object.__setattr__(self, "goods", tuple(self.goods))
        object.__setattr__(self, "buyers", tuple(self.buyers))
        known = set(self.goods)
        if len(known) != len(self.goods):
            raise MarketError("duplicate good ids")
        ids = set()
        for buyer in self.buyers:
            if buyer.id in ids:
                raise MarketError(f"duplicate buyer id {buyer.id!r}")
            ids.add(buyer.id)
            for good in buyer.utilities:
                if good not in known:
                    raise MarketError(
                        f"buyer {buyer.id!r} references unknown good {good!r}"
                    )

    def satisfies_sufficient_condition(self) -> bool:
        """Every buyer is unsatiated with at least one good."""
        return all(
            any(u.strictly_increasing for u in b.utilities.values())
            for b in self.buyers
        )


@dataclass(frozen=True)
class Trader:
    id: str
    endowments: dict[str, Fraction]
    utilities: dict[str, SplcUtility] = field(default_factory=dict)


@dataclass(frozen=True)
class ExchangeMarket:
    goods: tuple[str, ...]
    traders: tuple[Trader, ...]

    def __post_init__(self):
        object.__setattr__(self, "goods", tuple(self.goods))
        object.__setattr__(self, "traders", tuple(self.traders))
        for good in self.goods:
            total = sum((t.endowments.get(good, ZERO) for t in self.traders), ZERO)
            if total != 1:
                raise MarketError(f"endowments of good {good!r} sum to {total}, not 1")


@dataclass(frozen=True)
class BundleResult:
    max_utility: Fraction
    bundle: dict[str, Fraction]
    spend: Fraction


def _greedy_bundle(
    buyer_id: str,
    utilities: dict[str, SplcUtility],
    budget: Fraction,
    prices: dict[str, Fraction],
    tie_pref: Optional[Callable[[str], int]] = None,
) -> BundleResult:
    """Bang-per-buck greedy.  Ties break by (tie_pref, good id, segment index);
    the default (no tie_pref) is the canonical bundle.
    """
    items = []
    for good, util in sorted(utilities.items()):
        price = prices[good]
        for seg_idx, seg in enumerate(util.segments):
            if seg.slope == 0:
                continue
            if price == 0:
                raise UnboundedDemand(buyer_id, good)
            bang = seg.slope / price
            pref = tie_pref(good) if tie_pref is not None else 0
            items.append((-bang, pref, good, seg_idx, seg))
    items.sort(key=lambda it: it[:4])

    remaining = Fraction(budget)
    bought: dict[str, Fraction] = {}
    for _, _, good, _, seg in items:
        if remaining == 0:
            break
        price = prices[good]
        if seg.unbounded:
            amount = remaining / price
        else:
            amount = min(seg.length, remaining / price)
        if amount > 0:
            bought[good] = bought.get(good, ZERO) + amount
            remaining -= amount * price

    max_utility = sum(
        (utilities[g].value(amt) for g, amt in bought.items()), ZERO
    )
    return BundleResult(max_utility, bought, Fraction(budget) - remaining)


def optimal_bundle(buyer: Buyer, prices: dict[str, Fraction]) -> BundleResult:
    """Canonical optimal bundle of `buyer` at `prices` (greedy by bang-per-buck).

    Raises UnboundedDemand if a good with positive remaining marginal
    utility has price zero (the optimal-bundle set is empty or degenerate).
    """
    for good, price in prices.items():
        if price < 0:
            raise MarketError(f"negative price for good {good!r}")
    return _greedy_bundle(buyer.id, buyer.utilities, buyer.budget, prices)


def _bundle_utility(
    utilities: dict[str, SplcUtility], x_row: dict[str, Fraction]
) -> Fraction:
    total = ZERO
    for good, amount in x_row.items():
        if amount < 0:
            raise MarketError(f"negative allocation for good {good!r}")
        util = utilities.get(good)
        if util is not None:
            total += util.value(amount)
    return total


def is_optimal(
    buyer: Buyer, prices: dict[str, Fraction], x_row: dict[str, Fraction]
) -> bool:
    """True iff x_row is affordable and attains the optimal utility value.

    Membership in the optimal-bundle set is by value: tied greedy orders
    admit many maximizers beyond the canonical one.
    """
    spend = sum((prices[g] * amt for g, amt in x_row.items()), ZERO)
    if spend > buyer.budget:
        return False
    return _bundle_utility(buyer.utilities, x_row) == optimal_bundle(buyer, prices).max_utility


@dataclass(frozen=True)
class BuyerVerdict:
    status: str  # "optimal" | "suboptimal" | "unbounded-demand"
    achieved: Optional[Fraction] = None
    maximum: Optional[Fraction] = None


@dataclass(frozen=True)
class EquilibriumReport:
    slacks: dict[str, Fraction]
    buyer_verdicts: dict[str, BuyerVerdict]
    epsilon: Fraction
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "epsilon": format_rational(self.epsilon),
            "passed": self.passed,
            "slacks": {g: format_rational(s) for g, s in sorted(self.slacks.items())},
            "buyers": {
                b: {
                    "status": v.status,
                    **(
                        {
                            "achieved": format_rational(v.achieved),
                            "maximum": format_rational(v.maximum),
                        }
                        if v.status == "suboptimal"
                        else {}
                    ),
                }
                for b, v in sorted(self.buyer_verdicts.items())
            },
        }


def _verify(
    goods: tuple[str, ...],
    entries: list[tuple[str, dict[str, SplcUtility], Fraction]],
    prices: dict[str, Fraction],
    allocation: dict[str, dict[str, Fraction]],
    epsilon: Fraction,
) -> EquilibriumReport:
    epsilon = Fraction(epsilon)
    if epsilon < 0:
        raise MarketError("epsilon must be non-negative")
    missing = [g for g in goods if g not in prices]
    if missing:
        raise MarketError(f"price map is not total; missing {missing}")
    known_buyers = {bid for bid, _, _ in entries}
    for bid, row in allocation.items():
        if bid not in known_buyers:
            raise MarketError(f"allocation references unknown buyer {bid!r}")
        for good in row:
            if good not in prices:
                raise MarketError(f"allocation references unknown good {good!r}")

    slacks: dict[str, Fraction] = {}
    for good in goods:
        total = sum(
            (allocation.get(bid, {}).get(good, ZERO) for bid, _, _ in entries), ZERO
        )
        slacks[good] = total - 1

    verdicts: dict[str, BuyerVerdict] = {}
    for bid, utilities, budget in entries:
        row = allocation.get(bid, {})
        try:
            best = _greedy_bundle(bid, utilities, budget, prices)
        except UnboundedDemand:
            verdicts[bid] = BuyerVerdict("unbounded-demand")
            continue
        spend = sum((prices[g] * amt for g, amt in row.items()), ZERO)
        achieved = _bundle_utility(utilities, row)
        if spend <= budget and achieved == best.max_utility:
            verdicts[bid] = BuyerVerdict("optimal")
        else:
            verdicts[bid] = BuyerVerdict("suboptimal", achieved, best.max_utility)

    passed = all(v.status == "optimal" for v in verdicts.values()) and all(
        abs(s) <= epsilon for s in slacks.values()
    )
    return EquilibriumReport(slacks, verdicts, epsilon, passed)


def verify_fisher(
    market: FisherMarket,
    prices: dict[str, Fraction],
    allocation: dict[str, dict[str, Fraction]],
    epsilon: Fraction,
) -> EquilibriumReport:
    """Check the two equilibrium conditions exactly: every buyer optimal,
    every good's demand within epsilon of its unit supply."""
    entries = [(b.id, b.utilities, b.budget) for b in market.buyers]
    return _verify(market.goods, entries, prices, allocation, epsilon)


def verify_exchange(
    exchange: ExchangeMarket,
    prices: dict[str, Fraction],
    allocation: dict[str, dict[str, Fraction]],
    epsilon: Fraction,
) -> EquilibriumReport:
    """As verify_fisher, with each budget the value of the trader's endowment.

    Prices are used as given; scaling invariance is a testable property,
    not an internal normalization.
    """
    missing = [g for g in exchange.goods if g not in prices]
    if missing:
        raise MarketError(f"price map is not total; missing {missing}")
    entries = []
    for trader in exchange.traders:
        budget = sum(
            (prices[g] * w for g, w in trader.endowments.items()), ZERO
        )
        entries.append((trader.id, trader.utilities, budget))
    return _verify(exchange.goods, entries, prices, allocation, epsilon)


def to_exchange(fisher: FisherMarket) -> ExchangeMarket:
    """Fisher -> exchange transform: trader i owns e_i / sum(e) of every good."""
    total = sum((b.budget for b in fisher.buyers), ZERO)
    traders = tuple(
        Trader(
            b.id,
            {g: b.budget / total for g in fisher.goods},
            dict(b.utilities),
        )
        for b in fisher.buyers
    )
    return ExchangeMarket(fisher.goods, traders)


def scale_prices(
    prices: dict[str, Fraction], target_sum: Fraction
) -> dict[str, Fraction]:
    """Rescale prices so they sum to `target_sum` (budget-sum normalization)."""
    current = sum(prices.values(), ZERO)
    if current <= 0:
        raise MarketError("cannot rescale an all-zero price vector")
    factor = Fraction(target_sum) / current
    return {g: p * factor for g, p in prices.items()}


# ---------------------------------------------------------------------------
# JSON document format


def _segment_to_json(seg: SplcSegment) -> dict:
    return {
        "length": "inf" if seg.unbounded else format_rational(seg.length),
        "slope": format_rational(seg.slope),
    }


def _segment_from_json(obj: dict) -> SplcSegment:
    length = None if obj["length"] == "inf" else parse_rational(obj["length"])
    return SplcSegment(length, parse_rational(obj["slope"]))


def _utilities_to_json(utilities: dict[str, SplcUtility]) -> dict:
    return {
        good: [_segment_to_json(s) for s in util.segments]
        for good, util in sorted(utilities.items())
    }


def _utilities_from_json(obj: dict) -> dict[str, SplcUtility]:
    return {
        good: SplcUtility(tuple(_segment_from_json(s) for s in segs))
        for good, segs in obj.items()
    }


def market_to_json(market: FisherMarket) -> str:
    doc = {
        "goods": list(market.goods),
        "buyers": [
            {
                "id": b.id,
                "budget": format_rational(b.budget),
                "utilities": _utilities_to_json(b.utilities),
            }
            for b in market.buyers
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def market_from_json(text: str) -> FisherMarket:
    try:
        doc = json.loads(text)
        buyers = tuple(
            Buyer(
                b["id"],
                parse_rational(b["budget"]),
                _utilities_from_json(b.get("utilities", {})),
            )
            for b in doc["buyers"]
        )
        return FisherMarket(tuple(doc["goods"]), buyers)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise MarketError(f"bad market document: {exc}") from exc


def exchange_to_json(exchange: ExchangeMarket) -> str:
    doc = {
        "goods": list(exchange.goods),
        "buyers": [
            {
                "id": t.id,
                "endowments": {
                    g: format_rational(w) for g, w in sorted(t.endowments.items())
                },
                "utilities": _utilities_to_json(t.utilities),
            }
            for t in exchange.traders
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def exchange_from_json(text: str) -> ExchangeMarket:
    try:
        doc = json.loads(text)
        traders = tuple(
            Trader(
                t["id"],
                {g: parse_rational(w) for g, w in t["endowments"].items()},
                _utilities_from_json(t.get("utilities", {})),
            )
            for t in doc["buyers"]
        )
        return ExchangeMarket(tuple(doc["goods"]), traders)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise MarketError(f"bad exchange document: {exc}") from exc


def prices_to_json(prices: dict[str, Fraction]) -> str:
    doc = {g: format_rational(p) for g, p in sorted(prices.items())}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def prices_from_json(text: str) -> dict[str, Fraction]:
    doc = json.loads(text)
    return {g: parse_rational(p) for g, p in doc.items()}


def allocation_to_json(allocation: dict[str, dict[str, Fraction]]) -> str:
    doc = {
        b: {g: format_rational(a) for g, a in sorted(row.items())}
        for b, row in sorted(allocation.items())
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def allocation_from_json(text: str) -> dict[str, dict[str, Fraction]]:
    doc = json.loads(text)
    return {
        b: {g: parse_rational(a) for g, a in row.items()} for b, row in doc.items()
    }
