"""Online covering with request predictions.

Layered charging engine over any online covering algorithm, with weighted
set cover and weighted path augmentation instantiations and a benchmark
harness for the prediction-error sweep.
"""

from .core import (
    AdapterContractViolation,
    CheapestItemAdapter,
    ConfigurationError,
    CoveringInstance,
    IceOptions,
    IceTrace,
    InfeasibleInstanceError,
    InstanceParseError,
    NodeBudgetExceeded,
    OnlineAdapter,
    OracleContractViolation,
    PartialSolution,
    SizeLimitError,
    ice_run,
    prediction_error,
)
from .decomp import (
    Decomposition,
    OracleSpec,
    approx_min_cover,
    build_decomposition,
    g_value,
    verify_properties,
)

__all__ = [
    "AdapterContractViolation",
    "CheapestItemAdapter",
    "ConfigurationError",
    "CoveringInstance",
    "Decomposition",
    "IceOptions",
    "IceTrace",
    "InfeasibleInstanceError",
    "InstanceParseError",
    "NodeBudgetExceeded",
    "OnlineAdapter",
    "OracleContractViolation",
    "OracleSpec",
    "PartialSolution",
    "SizeLimitError",
    "approx_min_cover",
    "build_decomposition",
    "g_value",
    "ice_run",
    "prediction_error",
    "verify_properties",
]

__version__ = "0.1.0"
