"""Generalized renewal processes: hazard calculus with atoms, grid
distribution arithmetic, Lorden-type overshoot bounds, and reproducible
Monte Carlo verification."""

from .assumptions import AssumptionReport, ConditionVerdict, check_assumptions
from .errors import (
    AssumptionFailure,
    DistributionError,
    DivergentMomentError,
    EventCapExceeded,
    GridError,
    IntensityError,
    RenewalBoundsError,
    ScenarioFormatError,
)
from .gridcalc import (
    BoundReport,
    DominanceVerdict,
    GridDistribution,
    OrderingResult,
    RenewalFunction,
    backward_tail_bound,
    convolution_power,
    convolve,
    discretize,
    generalized_bound,
    lorden_classical_bound,
    ordering_check,
    renewal_function,
)
from .hazard import (
    ATOM_INF,
    CallableCdf,
    GeneralizedIntensity,
    IntensityCdf,
    MixedCdf,
    add_intensities,
    cdf_from_intensity,
    deterministic,
    exponential,
    from_cumulative_hazard,
    from_segments,
    intensity_from_cdf,
    moment,
    sample,
    uniform,
    weibull,
    zero,
)
from .scenario import (
    ConstantRate,
    CycledIntensities,
    LinearCappedRate,
    MuRule,
    RepeatLastIntensities,
    ScenarioConfig,
)
from .simulate import (
    EstimateTable,
    RenewalPath,
    estimate,
    generate_interval,
    path_stream,
    simulate_path,
    verify_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ATOM_INF",
    "AssumptionFailure",
    "AssumptionReport",
    "BoundReport",
    "CallableCdf",
    "ConditionVerdict",
    "ConstantRate",
    "CycledIntensities",
    "DistributionError",
    "DivergentMomentError",
    "DominanceVerdict",
    "EstimateTable",
    "EventCapExceeded",
    "GeneralizedIntensity",
    "GridDistribution",
    "GridError",
    "IntensityCdf",
    "IntensityError",
    "LinearCappedRate",
    "MixedCdf",
    "MuRule",
    "OrderingResult",
    "RenewalBoundsError",
    "RenewalFunction",
    "RenewalPath",
    "RepeatLastIntensities",
    "ScenarioConfig",
    "ScenarioFormatError",
    "add_intensities",
    "backward_tail_bound",
    "cdf_from_intensity",
    "check_assumptions",
    "convolution_power",
    "convolve",
    "deterministic",
    "discretize",
    "estimate",
    "exponential",
    "from_cumulative_hazard",
    "from_segments",
    "generalized_bound",
    "generate_interval",
    "intensity_from_cdf",
    "lorden_classical_bound",
    "moment",
    "ordering_check",
    "path_stream",
    "renewal_function",
    "sample",
    "simulate_path",
    "uniform",
    "verify_bound",
    "weibull",
    "zero",
]
