from fractions import Fraction

import pytest

from circuitmarket import (
    ReductionError,
    census,
    compile_circuit,
    compute_params,
    decode,
    describe,
    expanded_node_count,
    metadata_to_json,
    parse_circuit,
    structural_violations,
    thresholds,
    Value,
)

F = Fraction

NOT_CYCLE = parse_circuit("nodes 2\nNOT 0 1\nNOT 1 0\n")
PURIFY_LOOP = parse_circuit("nodes 3\nPURIFY 0 1 2\nNOT 1 0\n")


def test_param_table_exact_epsilon_zero():
    params = compute_params(F(0), 2)
    assert params.delta == F(1, 4)
    assert params.d == 8
    assert params.k == 440
    assert params.t == F(4, 11)
    assert params.r_not == F(2, 11) and params.r_nand == F(2, 11)
    assert params.s == F(1, 20 * 440 * 8 * 2)
    assert params.a == 2  # 4s/delta is tiny, the floor of 2 binds
    assert (params.h_min, params.h_max) == (params.s / 2, 2 * params.s)
    assert len(params.copy_intervals) == 440
    assert not params.guarantees_void


def test_param_table_exact_epsilon_one_twelfth():
    params = compute_params(F(1, 12), 2)
    assert params.delta == F(1, 48)
    assert params.d == 16
    assert params.k == 5280


def test_param_k_uses_ceiling():
    # delta = 11/4 * (1/11 - 1/22) = 1/8 -> 110/delta = 880 exactly,
    # while a non-dividing delta must round up
    assert compute_params(F(1, 22), 1).k == 880
    # eps = 1/1000 -> delta = 989/4000 -> 110/delta = 440000/989 ~ 444.9
    assert compute_params(F(1, 1000), 1).k == 445


@pytest.mark.parametrize(
    "eps", [F(1, 11), F(1, 2), F(-1, 12), F(1)]
)
def test_epsilon_domain(eps):
    with pytest.raises(ReductionError):
        compute_params(eps, 2)


def test_override_validation():
    params = compute_params(F(0), 2, {"k": 3, "d": 2})
    assert (params.k, params.d) == (3, 2)
    assert params.guarantees_void
    with pytest.raises(ReductionError, match="exactly"):
        compute_params(F(0), 2, {"k": 3})
    with pytest.raises(ReductionError, match="even"):
        compute_params(F(0), 2, {"k": 3, "d": 3})
    with pytest.raises(ReductionError, match="even"):
        compute_params(F(0), 2, {"k": 0, "d": 2})


def test_chain_r_patterns_alternate():
    params = compute_params(F(0), 2)
    assert [params.r_chain1(j) for j in (1, 2, 3, 4)] == [0, F(2, 11), 0, F(2, 11)]
    assert [params.r_chain2(j) for j in (1, 2, 3, 4)] == [F(2, 11), 0, F(2, 11), 0]


def test_copy_for_picks_containing_interval():
    params = compute_params(F(0), 2, {"k": 4, "d": 2})
    lo, hi = params.copy_intervals[2]
    assert params.copy_for((lo + hi) / 2) == 2
    assert params.copy_for(params.h_min) == 0
    assert params.copy_for(params.h_max) == 3
    with pytest.raises(ReductionError, match="outside"):
        params.copy_for(params.h_max * 2)


def test_expanded_node_count():
    assert expanded_node_count(NOT_CYCLE, 8) == 2
    assert expanded_node_count(PURIFY_LOOP, 8) == 3 + 2 * 7
    assert expanded_node_count(PURIFY_LOOP, 2) == 3 + 2 * 1


def test_not_cycle_compile_census():
    reduced = compile_circuit(NOT_CYCLE, F(0))
    info = census(reduced)
    # 2 variable goods per copy over 440 copies, plus the reference good
    assert info["goods_total"] == 881
    # per copy: 2 inverters + 2 gate auxiliaries + 2 top-ups
    assert info["buyers_total"] == 2641
    assert info["goods_by_role"] == {"reference": 1, "variable": 880}
    assert info["buyers_by_role"] == {
        "reference": 1,
        "inverter": 880,
        "gate_aux": 880,
        "top_up": 880,
    }
    assert "copies: 440" in describe(reduced)


def test_out_degree_over_two_is_rejected():
    circuit = parse_circuit("nodes 4\nNOT 0 1\nNOT 0 2\nNOT 0 3\nNOT 1 0\n")
    with pytest.raises(ReductionError, match="out-degree"):
        compile_circuit(circuit, F(0))


def test_s_accounts_for_chain_intermediate_goods():
    reduced = compile_circuit(PURIFY_LOOP, F(0), {"k": 2, "d": 4})
    n_exp = 3 + 2 * 3
    assert reduced.params.n_expanded == n_exp
    assert reduced.params.s == F(1, 20 * 2 * 4 * n_exp)


def test_purify_expands_to_two_chains():
    reduced = compile_circuit(PURIFY_LOOP, F(0), {"k": 1, "d": 4})
    ids = [g.gadget_id for g in reduced.gadgets_by_copy[0]]
    assert ids == [
        "g0.1.1", "g0.1.2", "g0.1.3", "g0.1.4",
        "g0.2.1", "g0.2.2", "g0.2.3", "g0.2.4",
        "g1",
    ]
    by_id = {g.gadget_id: g for g in reduced.gadgets_by_copy[0]}
    # both chains start at the PURIFY input and end at the respective outputs
    assert by_id["g0.1.1"].inputs == ("c0/v0",)
    assert by_id["g0.1.4"].output == "c0/v1"
    assert by_id["g0.2.4"].output == "c0/v2"
    # alternating aux amounts, chain 2 offset by one
    assert [by_id[f"g0.1.{j}"].r for j in (1, 2, 3, 4)] == [0, F(2, 11), 0, F(2, 11)]
    assert [by_id[f"g0.2.{j}"].r for j in (1, 2, 3, 4)] == [F(2, 11), 0, F(2, 11), 0]


def test_top_ups_pad_every_good_to_two_consumers():
    reduced = compile_circuit(NOT_CYCLE, F(0), {"k": 1, "d": 2})
    consumers = {g: 0 for g in reduced.market.goods}
    for gadget in reduced.gadgets_by_copy[0]:
        for good in gadget.inputs:
            consumers[good] += 1
    for b, role in reduced.buyer_roles.items():
        if role.kind == "top_up":
            consumers[role.good] += 1
    assert all(consumers[g] == 2 for g in reduced.market.goods if g != "ref")


def test_compiled_markets_have_no_structural_violations():
    corpus = [
        ("nodes 2\nNOT 0 1\nNOT 1 0\n", {"k": 3, "d": 2}),
        ("nodes 3\nNAND 0 1 2\nNOT 2 0\nNOT 2 1\n", {"k": 2, "d": 2}),
        ("nodes 3\nPURIFY 0 1 2\nNOT 1 0\n", {"k": 2, "d": 4}),
        ("nodes 4\nPURIFY 0 1 2\nNAND 1 2 3\nNOT 3 0\n", {"k": 1, "d": 2}),
    ]
    for text, override in corpus:
        reduced = compile_circuit(parse_circuit(text), F(1, 12), override)
        assert structural_violations(reduced) == []


def test_decode_thresholds_and_boundaries():
    reduced = compile_circuit(NOT_CYCLE, F(0), {"k": 1, "d": 2})
    params = reduced.params
    assert params.s == F(1, 80) and params.a == 2
    p_ref = F(1)
    h, low = thresholds(params, p_ref)
    assert h == params.s
    assert low == params.s * h / params.a
    prices = {"ref": p_ref, "c0/v0": h, "c0/v1": low}
    result = decode(reduced, prices)
    # boundary prices decode inclusively
    assert result.assignment.values == {0: Value.ONE, 1: Value.ZERO}
    prices["c0/v0"] = (h + low) / 2
    assert decode(reduced, prices).assignment.values[0] == Value.BOT
    with pytest.raises(ReductionError, match="positive"):
        decode(reduced, {**prices, "ref": F(0)})


def test_decode_selects_copy_from_reference_price():
    reduced = compile_circuit(NOT_CYCLE, F(0), {"k": 4, "d": 2})
    params = reduced.params
    lo, hi = params.copy_intervals[1]
    p_ref = (lo + hi) / 2 / params.s  # H lands mid-interval of copy 1
    prices = {g: F(1, 10 ** 6) for g in reduced.market.goods}
    prices["ref"] = p_ref
    result = decode(reduced, prices)
    assert result.copy == 1
    assert result.h == params.s * p_ref


def test_metadata_json_is_deterministic_and_complete():
    reduced = compile_circuit(PURIFY_LOOP, F(1, 12), {"k": 1, "d": 2})
    text = metadata_to_json(reduced)
    assert text == metadata_to_json(reduced)
    import json

    doc = json.loads(text)
    assert doc["params"]["epsilon"] == "1/12"
    assert doc["params"]["guarantees_void"] is True
    assert doc["circuit"]["n"] == 3
    assert doc["circuit"]["gates"][0] == {"type": "PURIFY", "nodes": [0, 1, 2]}
    assert doc["good_roles"]["ref"] == {"kind": "reference"}
    assert doc["buyer_roles"]["c0/inv/g1"]["kind"] == "inverter"
