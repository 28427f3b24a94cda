"""Quantum contextuality of qutrit mixed states under KCBS and KK inequalities."""

from __future__ import annotations

__version__ = "0.1.0"

from qutrit_contextuality.graphs import (
    ExclusivityGraph,
    independence_number,
    load_graph,
    make_kcbs_graph,
    make_kk_graph,
)
from qutrit_contextuality.measurements import (
    MeasurementSet,
    OverallMatrix,
    align_to_state,
    contextuality_value,
    overall_matrix,
    table_1a,
    table_1b,
    table_2,
)
from qutrit_contextuality.optimizer import (
    OptimizationResult,
    OptimizerConfig,
    mcms_lower,
    mcms_upper,
    optimize_measurements,
    pure_state_optimum,
)
from qutrit_contextuality.states import ArcId, DiagonalState, QutritSpectrum, arc_cq, arc_state, linear_entropy

__all__ = [
    "ArcId",
    "DiagonalState",
    "ExclusivityGraph",
    "MeasurementSet",
    "OptimizationResult",
    "OptimizerConfig",
    "OverallMatrix",
    "QutritSpectrum",
    "align_to_state",
    "arc_cq",
    "arc_state",
    "contextuality_value",
    "independence_number",
    "linear_entropy",
    "load_graph",
    "make_kcbs_graph",
    "make_kk_graph",
    "mcms_lower",
    "mcms_upper",
    "optimize_measurements",
    "overall_matrix",
    "pure_state_optimum",
    "table_1a",
    "table_1b",
    "table_2",
]
