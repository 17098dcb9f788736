"""Decision-tree representations of permissive controller strategies."""

from .bdd import Bdd, BitEncoding, bdd_size, build_strategy_bdd, encode_pair, sift_reorder
from .codegen import export_code, interpret
from .cruise import CruiseModel, CruiseState, flow, min_gap_over_period, optimize, synthesize_safe
from .errors import (
    NoPureActionError,
    SafetreeError,
    SchemaMismatchError,
    StrategyFormatError,
    UnsatisfiableError,
)
from .harness import estimate_expected_cost, report_table1, simulate, sweep, top_path
from .pruning import pure_actions, safe_prune
from .strategy import Feature, FeatureSchema, StrategyTable, load_strategy, restrict, save_strategy
from .tree import DecisionTree, choose_split, learn, multilabel_entropy, size
from .view import determinize, lookup, to_table

__all__ = [
    "Bdd", "BitEncoding", "bdd_size", "build_strategy_bdd", "encode_pair", "sift_reorder",
    "export_code", "interpret",
    "CruiseModel", "CruiseState", "flow", "min_gap_over_period", "optimize", "synthesize_safe",
    "NoPureActionError", "SafetreeError", "SchemaMismatchError", "StrategyFormatError",
    "UnsatisfiableError",
    "estimate_expected_cost", "report_table1", "simulate", "sweep", "top_path",
    "pure_actions", "safe_prune",
    "Feature", "FeatureSchema", "StrategyTable", "load_strategy", "restrict", "save_strategy",
    "DecisionTree", "choose_split", "learn", "multilabel_entropy", "size",
    "determinize", "lookup", "to_table",
]
