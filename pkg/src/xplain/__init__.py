"""Feature necessity and relevancy queries for formal classifier explanations.

Supported classifier families: decomposable NNF circuits (including FBDDs,
which additionally support in-place negation) and black-box monotonic
classifiers.  Relevancy is decided by a single SAT call on a two-replica
selector/indicator encoding for circuits, and by an abstraction-refinement
loop over candidate feature sets for monotonic classifiers; both return a
machine-checkable witness explanation when the answer is yes.
"""

__version__ = "0.1.0"

from .circuit import (
    Circuit,
    Instance,
    NegationUnavailable,
    condition,
    evaluate,
    is_consistent,
    negate,
    parse_circuit,
    parse_fbdd,
    parse_nnf,
    validate,
)
from .cnfsat import CnfFormula, SatSolver, SatStatus, read_dimacs, solve, write_dimacs
from .xpcore import (
    CircuitOracle,
    Explanation,
    extract_axp,
    is_axp,
    is_necessary,
    is_weak_axp,
)
from .frp_ddnnf import decide_relevancy
from .frp_mono import (
    LinearThresholdModel,
    MonotoneModel,
    decide_relevancy_mono,
    is_necessary_mono,
    load_model,
)
from .testgen import enumerate_axps, gen_fbdd_from_cnf, gen_mono_from_cnf

__all__ = [
    "Circuit",
    "CircuitOracle",
    "CnfFormula",
    "Explanation",
    "Instance",
    "LinearThresholdModel",
    "MonotoneModel",
    "NegationUnavailable",
    "SatSolver",
    "SatStatus",
    "condition",
    "decide_relevancy",
    "decide_relevancy_mono",
    "enumerate_axps",
    "evaluate",
    "extract_axp",
    "gen_fbdd_from_cnf",
    "gen_mono_from_cnf",
    "is_axp",
    "is_consistent",
    "is_necessary",
    "is_necessary_mono",
    "is_weak_axp",
    "load_model",
    "negate",
    "parse_circuit",
    "parse_fbdd",
    "parse_nnf",
    "read_dimacs",
    "solve",
    "validate",
    "write_dimacs",
]
