"""Intrinsically Lipschitz sections of linear quotients on sampled metric measure spaces."""

__version__ = "0.1.0"

from .cheeger import (  # noqa: E402
    AdmissibleClass,
    RelaxationParams,
    RelaxationResult,
    RelaxedSlopeCertificate,
    cheeger_energy,
    constant_certificate,
    lattice_min,
    minimal_relaxed_slope,
    relax_energy,
    representation_check,
    verify_certificate,
)
from .functionals import (  # noqa: E402
    ScaleSchedule,
    SlopeField,
    TheoremReport,
    c_min,
    envelope_at_scale,
    global_ils,
    product_constants,
    slope_field,
)
from .lq import WeightedField, lq_distance, lq_norm, sequence_convergence  # noqa: E402
from .quotient import (  # noqa: E402
    QuotientMap,
    SampledBase,
    build_quotient,
    fiber_distance,
    fiber_gap,
    project_to_fiber,
)
from .sections import (  # noqa: E402
    PlainField,
    Section,
    combine_sections,
    convex_combination,
    hadamard_product,
    lift_section,
    scale_section,
    validate_section,
)
