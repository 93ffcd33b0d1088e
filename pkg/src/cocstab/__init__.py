"""Stability diagnostics for linear cocycles over maps and semi-flows."""

__version__ = "0.1.0"

from .base import (  # noqa: E402
    CirclePoint,
    CircleRotation,
    DoublingMap,
    FlowPoint,
    FullShift,
    MeasurableSet,
    SubshiftOfFiniteType,
    Suspension,
    SymbolicPoint,
    enumerate_periodic_orbits,
    flow_step,
    membership,
    sample_point,
    step,
    step_n,
)
from .cocycle import (  # noqa: E402
    CocycleHandle,
    Generator,
    apply_to_vector,
    evaluate_product,
    evaluate_propagator,
    fit_exponential_bound,
    verify_cocycle_law,
)
from .config import ExperimentConfig, load_config, parse_config  # noqa: E402
from .datko import (  # noqa: E402
    DatkoReport,
    check_discretization_bound,
    datko_field_experiment,
    datko_integral,
    datko_sum,
)
from .induced import (  # noqa: E402
    ContractionCertificate,
    InducedOrbitRecord,
    adapted_norm,
    build_contraction_certificate,
    build_induced_orbit,
    exponent_transfer_check,
    induced_contraction_check,
    one_step_contraction_check,
    return_times,
)
from .lyapunov import (  # noqa: E402
    LyapunovEstimate,
    closed_form_exponent,
    estimate_exponent,
    estimate_exponent_flow,
)
from .registry import registry_list, template_config  # noqa: E402
from .runner import RunRecord, run_experiment  # noqa: E402
from .scaled import ScaledMatrix  # noqa: E402
from .tempering import (  # noqa: E402
    build_tempered_envelope,
    compute_envelope,
    drift_check,
    envelope_along_orbit,
)
from .uniform import (  # noqa: E402
    StabilityCertificate,
    decide_uniform_stability,
    decide_uniform_stability_flow,
    fekete_upper_bounds,
    max_growth,
    periodic_lower_bounds,
)
