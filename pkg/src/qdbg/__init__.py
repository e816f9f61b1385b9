"""Assertion-driven debugging for OpenQASM 2 programs on a statevector simulator."""

from qdbg.diagnosis import (
    ConeOfInfluence,
    Diagnostic,
    DiagnosticKind,
    InteractionGraph,
    cone_of_influence,
    diagnose,
    interaction_graph,
)
from qdbg.engine import AssertionOutcome, ExecutionTrace, run
from qdbg.errors import FrontendError, NumericalError, QdbgError, ResourceLimitError
from qdbg.frontend import FlatProgram, Program, flatten, parse
from qdbg.mutation import ExperimentReport, MutationKind, MutationSpec, run_experiment
from qdbg.report import DiagnosticsReport, build_report, render_json, render_text

__version__ = "0.1.0"

__all__ = [
    "AssertionOutcome",
    "ConeOfInfluence",
    "Diagnostic",
    "DiagnosticKind",
    "DiagnosticsReport",
    "ExecutionTrace",
    "ExperimentReport",
    "FlatProgram",
    "FrontendError",
    "InteractionGraph",
    "MutationKind",
    "MutationSpec",
    "NumericalError",
    "Program",
    "QdbgError",
    "ResourceLimitError",
    "build_report",
    "cone_of_influence",
    "diagnose",
    "flatten",
    "interaction_graph",
    "parse",
    "render_json",
    "render_text",
    "run",
    "run_experiment",
]
