"""First-detection statistics of repeatedly monitored quantum systems.

Submodules
----------
model    : system builders, spectral reduction, resolvent generating functions
strobo   : stroboscopic detection amplitudes, renewal series, pole expansions
nhh      : absorbing non-Hermitian evolution and its pole statistics
electro  : electrostatic picture of the generating functions, Zeno reduction
zeno     : frequent-detection limit densities, moments and correction maps
infline  : translation-invariant chain in first quantization, closed forms
csvio    : deterministic delimited output with block structure
config   : run-configuration parsing and validation
cli      : command-line entry points
"""
from .core import (
    CollapseReport,
    ConfigError,
    CorrectionInvalidError,
    DetectionSeries,
    EmptySpectrumError,
    FdtlabError,
    FirstDetectionStats,
    InfiniteZenoTimeError,
    InsufficientDataError,
    InvalidModelError,
    NhhEvolution,
    PoleSearchError,
    PoleSet,
    QuadratureError,
    QuantumModel,
    RegimeWarning,
    ResonanceError,
    SingularEvaluationError,
    SpectralChargeData,
    StabilityWarning,
    UndefinedMomentsError,
    ZenoData,
    ZenoPdf,
)

__version__ = "0.1.0"

__all__ = [
    "CollapseReport",
    "ConfigError",
    "CorrectionInvalidError",
    "DetectionSeries",
    "EmptySpectrumError",
    "FdtlabError",
    "FirstDetectionStats",
    "InfiniteZenoTimeError",
    "InsufficientDataError",
    "InvalidModelError",
    "NhhEvolution",
    "PoleSearchError",
    "PoleSet",
    "QuadratureError",
    "QuantumModel",
    "RegimeWarning",
    "ResonanceError",
    "SingularEvaluationError",
    "SpectralChargeData",
    "StabilityWarning",
    "UndefinedMomentsError",
    "ZenoData",
    "ZenoPdf",
    "__version__",
]
