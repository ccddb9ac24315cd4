"""Recovery of planted node signs from censored edge observations on sparse graphs."""

from .eigen import (
    EigenResult,
    NoRealLeader,
    SolverConfig,
    Spectrum,
    dense_spectrum,
    power_leading,
    second_eigenvalue_bound,
    smallest_symmetric,
    spectrum_to_csv,
    spectrum_to_svg,
)
from .inference import (
    BpConfig,
    BpState,
    DetectionOutcome,
    PopDynConfig,
    algorithm1,
    algorithm2,
    bp_fixed_point,
    bp_run,
    detect,
    population_dynamics,
)
from .model import (
    CbmInstance,
    CbmParams,
    InstanceFormatError,
    Labeling,
    alpha_detect,
    alpha_exact,
    beta0,
    empirical_alpha,
    generate,
    overlap,
    read_instance,
    sign_pm1,
    write_instance,
)
from .operators import (
    DirectedEdgeIndex,
    OperatorBundle,
    SparseMatrix,
    bprime_eigvec_relations_check,
    build_b,
    build_bethe_hessian,
    build_bprime,
    build_bundle,
    matvec,
)

__all__ = [
    "BpConfig",
    "BpState",
    "CbmInstance",
    "CbmParams",
    "DetectionOutcome",
    "DirectedEdgeIndex",
    "EigenResult",
    "InstanceFormatError",
    "Labeling",
    "NoRealLeader",
    "OperatorBundle",
    "PopDynConfig",
    "SolverConfig",
    "SparseMatrix",
    "Spectrum",
    "algorithm1",
    "algorithm2",
    "alpha_detect",
    "alpha_exact",
    "beta0",
    "bp_fixed_point",
    "bp_run",
    "bprime_eigvec_relations_check",
    "build_b",
    "build_bethe_hessian",
    "build_bprime",
    "build_bundle",
    "dense_spectrum",
    "detect",
    "empirical_alpha",
    "generate",
    "matvec",
    "overlap",
    "population_dynamics",
    "power_leading",
    "read_instance",
    "second_eigenvalue_bound",
    "sign_pm1",
    "smallest_symmetric",
    "spectrum_to_csv",
    "spectrum_to_svg",
    "write_instance",
]
