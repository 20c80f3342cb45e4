"""Qutrit gate-set tomography: superoperators, Cliffords, GST, and RB."""

__version__ = "0.1.0"

from .clifford import (
    CliffordElement,
    CliffordGroup,
    CompilationError,
    NotAGroupError,
    compile_clifford,
    generate_clifford_group,
    native_clifford_group,
)
from .design import (
    DesignError,
    ExperimentDesign,
    FiducialSet,
    GstCircuit,
    build_design,
    default_germs,
    load_design,
    save_design,
    select_fiducials,
)
from .errorgen import (
    BranchError,
    DegenerateError,
    ErrorGenerator,
    ErrorGeneratorDecomposition,
    average_gate_infidelity,
    elementary_generators,
    error_generator,
    hamiltonian_power,
    project_error_generator,
)
from .estimation import (
    EstimationError,
    GaugeError,
    GstDataset,
    GstEstimate,
    gauge_optimize,
    lgst,
    load_estimate,
    mle_refine,
    save_estimate,
)
from .gates import (
    GateChannel,
    GateSetModel,
    ModelError,
    build_native_gateset,
    gateset_from_unitaries,
    load_gateset,
    native_unitary,
    save_gateset,
)
from .noise import (
    CountRecord,
    NoiseError,
    NoiseSpec,
    apply_noise,
    circuit_probabilities,
    load_counts,
    sample_counts,
    save_counts,
)
from .pipeline import run_pipeline
from .rb import FitError, RbConfig, RbResult, rb_sequences, run_rb
from .superop import (
    CptpReport,
    OperatorBasis,
    build_basis,
    check_cptp,
    choi_from_ptm,
    compose,
    ptm_from_choi,
    ptm_from_kraus,
    ptm_from_unitary,
    vectorize,
)

__all__ = [
    "__version__",
    "BranchError",
    "CliffordElement",
    "CliffordGroup",
    "CompilationError",
    "CountRecord",
    "CptpReport",
    "DegenerateError",
    "DesignError",
    "ErrorGenerator",
    "ErrorGeneratorDecomposition",
    "EstimationError",
    "ExperimentDesign",
    "FiducialSet",
    "FitError",
    "GateChannel",
    "GateSetModel",
    "GaugeError",
    "GstCircuit",
    "GstDataset",
    "GstEstimate",
    "ModelError",
    "NoiseError",
    "NoiseSpec",
    "NotAGroupError",
    "OperatorBasis",
    "RbConfig",
    "RbResult",
    "apply_noise",
    "average_gate_infidelity",
    "build_basis",
    "build_design",
    "build_native_gateset",
    "check_cptp",
    "choi_from_ptm",
    "circuit_probabilities",
    "compile_clifford",
    "compose",
    "default_germs",
    "elementary_generators",
    "error_generator",
    "gateset_from_unitaries",
    "gauge_optimize",
    "generate_clifford_group",
    "hamiltonian_power",
    "lgst",
    "load_counts",
    "load_design",
    "load_estimate",
    "load_gateset",
    "mle_refine",
    "native_clifford_group",
    "native_unitary",
    "project_error_generator",
    "ptm_from_choi",
    "ptm_from_kraus",
    "ptm_from_unitary",
    "rb_sequences",
    "run_pipeline",
    "run_rb",
    "sample_counts",
    "save_counts",
    "save_design",
    "save_estimate",
    "save_gateset",
    "select_fiducials",
    "vectorize",
]
