"""Monte Carlo estimates of the positive-partial-transpose time of random GKSL generators."""

__version__ = "0.1.0"

from .ensembles import KossakowskiMatrix, RngStream, sample_gue_hamiltonian, sample_kossakowski
from .generator import GkslGenerator, embed_local_dissipators, LocalNoiseLayout
from .propagators import Method, PropagatorConfig
from .pptt import PpttResult, pptt_search, pptt_search_batch
from .scenarios import Correlation, ScenarioSpec, run_ensemble

__all__ = [
    "__version__",
    "KossakowskiMatrix",
    "RngStream",
    "sample_gue_hamiltonian",
    "sample_kossakowski",
    "GkslGenerator",
    "LocalNoiseLayout",
    "embed_local_dissipators",
    "Method",
    "PropagatorConfig",
    "PpttResult",
    "pptt_search",
    "pptt_search_batch",
    "Correlation",
    "ScenarioSpec",
    "run_ensemble",
]
