"""Pure-Circuit to SPLC Fisher-market compiler and verification toolkit."""

from .market import (
    Buyer,
    BundleResult,
    BuyerVerdict,
    EquilibriumReport,
    ExchangeMarket,
    FisherMarket,
    MarketError,
    SplcSegment,
    SplcUtility,
    Trader,
    UnboundedDemand,
    allocation_from_json,
    allocation_to_json,
    exchange_from_json,
    exchange_to_json,
    is_optimal,
    market_from_json,
    market_to_json,
    optimal_bundle,
    prices_from_json,
    prices_to_json,
    scale_prices,
    to_exchange,
    utility_value,
    verify_exchange,
    verify_fisher,
)
from .purecircuit import (
    Assignment,
    CircuitError,
    CircuitInstance,
    Gate,
    GateType,
    GateVerdict,
    ParseError,
    Value,
    brute_force_solve,
    check_assignment,
    parse_circuit,
    serialize_circuit,
    validate,
)
from .rationals import RationalFormatError, format_rational, parse_rational
from .reduction import (
    BuyerRole,
    DecodeResult,
    GoodRole,
    ReducedMarket,
    ReductionError,
    ReductionParams,
    census,
    compile_circuit,
    compute_params,
    decode,
    describe,
    expanded_node_count,
    metadata_to_json,
    structural_violations,
    thresholds,
)
from .solver import (
    BisectionResult,
    BracketError,
    ChainBounds,
    DemandProfile,
    GadgetFixture,
    GridResult,
    LemmaRecord,
    LemmaReport,
    SolverConfig,
    SuitePreconditionError,
    TatonnementResult,
    build_fixture,
    canonical_demand,
    chain_bounds,
    chain_threshold_ordering,
    clear_chain,
    clear_gate_output,
    gadget_lab_report,
    grid_search,
    lemma_suite,
    pinned_bisection,
    purify_sweep,
    tatonnement,
    trace_to_csv,
)

__version__ = "0.1.0"
