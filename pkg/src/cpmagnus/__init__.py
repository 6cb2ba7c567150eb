"""Completely positive effective generators for periodically driven Lindblad dynamics."""

from .linalg import (
    SuperOp,
    commutator_super,
    devec,
    dissipator_super,
    hermitian_eig,
    hs_norm,
    kron,
    left_right_super,
    matrix_exp,
    vec,
)
from .models import (
    DissipatorSpec,
    FourierOperator,
    PeriodicLindbladGenerator,
    build_liouvillian,
    liouvillian_fourier,
    oscillator_model,
    two_level_model,
)
from .magnus import (
    OmegaScalar,
    OmegaSeries,
    TrigPolyMatrix,
    effective_series,
    magnus_terms,
    tp_integrate,
)
from .projection import (
    BasisInsufficientError,
    LindbladDecomposition,
    assemble_lindblad,
    project_series,
    project_to_lindblad,
)
from .correction import (
    CorrectedCoefficient,
    CorrectedGenerator,
    CorrectionImpossible,
    EigSeries,
    corrected_coefficient,
    corrected_generator,
    perturbative_eig,
    square_complete,
)
from .bench import (
    PropagatorSet,
    SubspaceProjector,
    choi_min_eig,
    deviation,
    exact_propagator,
    generator_propagator,
    population_trace,
)

__version__ = "0.1.0"

__all__ = [
    "SuperOp", "commutator_super", "devec", "dissipator_super", "hermitian_eig",
    "hs_norm", "kron", "left_right_super", "matrix_exp", "vec",
    "DissipatorSpec", "FourierOperator", "PeriodicLindbladGenerator",
    "build_liouvillian", "liouvillian_fourier", "oscillator_model", "two_level_model",
    "OmegaScalar", "OmegaSeries", "TrigPolyMatrix", "effective_series",
    "magnus_terms", "tp_integrate",
    "BasisInsufficientError", "LindbladDecomposition", "assemble_lindblad",
    "project_series", "project_to_lindblad",
    "CorrectedCoefficient", "CorrectedGenerator", "CorrectionImpossible",
    "EigSeries", "corrected_coefficient", "corrected_generator",
    "perturbative_eig", "square_complete",
    "PropagatorSet", "SubspaceProjector", "choi_min_eig", "deviation",
    "exact_propagator", "generator_propagator", "population_trace",
    "__version__",
]
