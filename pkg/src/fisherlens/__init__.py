"""Fisher information for resolving two unbalanced, partially coherent
Gaussian point sources measured together with an entangled partner."""

__version__ = "0.1.0"

from .model import AnalyzerBasis, BranchDecomposition, SourceModel  # noqa: E402
from .fisher import (  # noqa: E402
    characteristic_residual,
    f_balanced,
    f_eta,
    f_tot,
    f_tot_limit0,
    f_unentangled,
    s_least_analytic,
    s_least_numeric,
)
from .estimator import SeparationMLE, crb_experiment  # noqa: E402

__all__ = [
    "__version__",
    "SourceModel",
    "AnalyzerBasis",
    "BranchDecomposition",
    "f_tot",
    "f_tot_limit0",
    "f_unentangled",
    "f_balanced",
    "f_eta",
    "characteristic_residual",
    "s_least_analytic",
    "s_least_numeric",
    "SeparationMLE",
    "crb_experiment",
]
