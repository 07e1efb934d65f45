"""Explicit-state model checking and memoryless strategy synthesis for
Strategic Timed CTL over networks of (timed) agents."""
from .formula import (Fragment, FormulaSyntaxError, Interval, classify_fragment, desugar,
                      max_constant, parse_formula, to_text)
from .model import (ClockConstraint, ModelError, SystemSpec, delay, eval_constraint, load_model,
                    parse_model, reset, validate)
from .composition import GlobalModel, compose, compose_async, compose_sync, reachable_restrict
from .regions import build_region_graph, region_of, region_satisfies, reset_region, time_successor
from .discrete import build_dts, interval_member
from .engine import check_atl_perfect, check_ctl, check_tctl_discrete, check_tctl_region
from .strategy import (Strategy, Verdict, check_strategic, enumerate_strategies, prune, synth_all,
                       verify_witness)
from .oracle import oracle_check, random_system
from .fixtures import gen_expressivity, gen_voting

__all__ = [
    "Fragment", "FormulaSyntaxError", "Interval", "classify_fragment", "desugar", "max_constant",
    "parse_formula", "to_text", "ClockConstraint", "ModelError", "SystemSpec", "delay",
    "eval_constraint", "load_model", "parse_model", "reset", "validate", "GlobalModel", "compose",
    "compose_async", "compose_sync", "reachable_restrict", "build_region_graph", "region_of",
    "region_satisfies", "reset_region", "time_successor", "build_dts", "interval_member",
    "check_atl_perfect", "check_ctl", "check_tctl_discrete", "check_tctl_region", "Strategy",
    "Verdict", "check_strategic", "enumerate_strategies", "prune", "synth_all", "verify_witness",
    "oracle_check", "random_system", "gen_expressivity", "gen_voting",
]
__version__ = "0.1.0"
