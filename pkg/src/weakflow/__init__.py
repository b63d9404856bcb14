"""Weak values of pre/post-selected qubits, Dyson and weak-evolution series,
a pointer model of weak measurement, and validity maps of the weak regime."""

from .errors import (
    ConfigError,
    DegeneratePhase,
    DimensionMismatch,
    DomainError,
    NotHermitian,
    NotNormalized,
    NullWeakValue,
    NumericalFailure,
    OrthogonalSelection,
    PostselectionStarved,
    TailTruncation,
    WeakflowError,
)
from .kernels import BACKEND
from .linalg import PAULI, SIGMA_X, SIGMA_Y, SIGMA_Z, Operator, StateVec
from .weak_values import (
    PrePostPair,
    WeakValueResult,
    theta_pair,
    transition_probability_direct,
    transition_probability_ratio,
    weak_conditioned_projector,
    weak_value,
)
from .dyson import (
    MeasurementSetup,
    PulseProfile,
    SeriesResult,
    TimeGrid,
    dyson_series_exact,
    ensemble_amplitude_exact,
    ensemble_amplitude_weak,
    exact_amplitude,
    weak_evolution_series,
    weak_exponential,
)
from .aav import AAVRecord, PointerGrid, SpinSelection, weak_readout
from .limits import RegimeReport, SweepConfig, Thresholds, STANDARD_SWEEP, sweep, verify_eq19

__version__ = "0.1.0"
