"""Conditional stochastic processes and their quantum (Hilbert-space) dictionary."""

from .csp import (
    Csp,
    Distribution,
    Kernel,
    Measure,
    Truncation,
    sinkhorn_balance,
    standalone_distribution,
    truncate_countable,
    validate_csp,
    validate_kernel,
    validate_measure,
)
from .dictionary import (
    ForwardTranslation,
    HilbertRep,
    InitialDensity,
    UnitaryFamily,
    backward_translate,
    config_basis,
    extract_phases,
    forward_translate,
    initial_density,
    pvm_check,
    standalone_via_trace,
    trace_probability,
    transition_probabilities,
)
from .dynamics import (
    DynamicMap,
    FitConfig,
    FitResult,
    PhaseField,
    canonical_gauge,
    evolve_vector,
    fit_phases,
    general_dynamic_map,
    sqrt_dynamic_map,
    unistochastic_certificate_3x3,
    unitarity_residual,
)
from .observables import (
    Observable,
    average_value,
    evolved_average,
    hamiltonian_unitary,
    operator_to_rv,
    rv_to_operator,
)
from .validation import DEFAULT_TOL, ValidationReport, Violation

__version__ = "0.1.0"
