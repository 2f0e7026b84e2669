"""Spectral toolkit for bilinear pseudodifferential operators on periodic grids."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    AliasingRisk,
    BadCutoffSpec,
    BilinopError,
    CoverageGap,
    GridMismatch,
    GridTooSmall,
    IndexOutOfRange,
    InvalidExponent,
    NotMultiplier,
    NyquistViolation,
    PreconditionError,
    StrategyMismatch,
    TruncationTooAggressive,
)
from .frames import (  # noqa: E402
    BumpProfile,
    LPFrame,
    ThetaProfile,
    band_project,
    build_lp_frame,
    build_theta,
)
from .grid import (  # noqa: E402
    GridSpec,
    SampledFunction,
    SpectralCoefficients,
    analyze,
    lebesgue_norm,
    pairing,
    pointwise_product,
    synthesize,
)
from .operators import (  # noqa: E402
    EvalStrategy,
    ExponentTriple,
    SobolevParams,
    apply_bilinear,
    apply_bilinear_spectral,
    apply_diagonal_convolution,
    classical_paraproduct,
    defect_symbol,
    improved_paraproduct,
    improved_symbol,
    multiplication_defect,
    sobolev_norm,
)
from .symbols import (  # noqa: E402
    ClassReport,
    DiagonalKernel,
    ElementaryDecomposition,
    ElementarySum,
    General,
    ModulationInvariant,
    Multiplier,
    SamplePlan,
    SeparableSymbol,
    Symbol,
    SymbolClassParams,
    check_class_estimate,
    decompose_elementary,
    make_counterexample_symbol,
    make_reduced_symbol,
    transpose_symbol,
)
