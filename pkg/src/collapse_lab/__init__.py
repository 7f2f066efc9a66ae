"""Stochastic wavefunction collapse, master equations and collapse timescales."""

__version__ = "0.1.0"

from .errors import CollapseLabError  # noqa: E402
from .hilbert import CompositeSpace, expectation, partial_trace, purity  # noqa: E402
from .noise import RngStream, make_stream  # noqa: E402
from .qsd import CollapseModel, QsdConfig, run_trajectory  # noqa: E402
from .lindblad import MasterEquationModel, propagate  # noqa: E402
from .cq import CqToyConfig, HybridState, ClassicalState, run_cq_trajectory  # noqa: E402
from .ensemble import EnsembleConfig, run_ensemble  # noqa: E402

__all__ = [
    "CollapseLabError", "CompositeSpace", "expectation", "partial_trace", "purity",
    "RngStream", "make_stream", "CollapseModel", "QsdConfig", "run_trajectory",
    "MasterEquationModel", "propagate", "CqToyConfig", "HybridState", "ClassicalState",
    "run_cq_trajectory", "EnsembleConfig", "run_ensemble",
]
