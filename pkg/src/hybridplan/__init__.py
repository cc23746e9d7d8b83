"""Optimal planning for linear hybrid automata with inputs through MILP encodings.

Top-level names are imported lazily so that ``hybridplan.validator`` and
``hybridplan.model`` can be loaded without touching the MILP side.
"""
import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "EncodeOptions": "encoder", "encode": "encoder", "extract_input": "encoder", "extract_run": "encoder",
    "HybridAutomaton": "model", "InputSignal": "model", "ModelError": "model", "Run": "model",
    "load_automaton": "model", "load_file": "model",
    "InternalConsistencyError": "planner", "PlanRequest": "planner", "PlanResult": "planner", "plan": "planner",
    "compile_qsp": "qsp", "extract_schedule": "qsp", "load_qsp": "qsp",
    "ValidationReport": "validator", "validate": "validator",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
