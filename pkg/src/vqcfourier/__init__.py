"""Exact Fourier spectra of Clifford+Pauli-rotation circuits and data-driven
architecture ranking.

Typical use::

    from vqcfourier import load_circuit, circuit_spectrum
    circuit, obs = load_circuit("model.json")
    report = circuit_spectrum(circuit, obs)
    report.spectrum        # frequencies with a nonzero coefficient
"""

from .circuit import (
    FEATURE,
    VARIATIONAL,
    Circuit,
    CircuitError,
    NormalForm,
    Observable,
    ParamRef,
    PauliRotation,
    dumps_circuit,
    encoding_counts,
    load_circuit,
    loads_circuit,
    random_circuit,
    to_normal_forms,
    validate,
)
from .data import (
    ConditioningError,
    DataSpectrum,
    FeatureMap,
    FrequencyGrid,
    build_grid,
    damping_factors,
    inverse_nfft,
    load_dataset,
    nfft_matrix,
    r_nfft,
    save_dataset,
)
from .exact import GaussianRational
from .pauli import CliffordGate, SignedPauli, clifford_conjugate, commutes, multiply
from .ranking import ArchitectureScore, RankReport, r_corr, r_omega, r_punish, score_and_rank
from .simulator import (
    Dataset,
    SimulationError,
    TrainConfig,
    TrainResult,
    expectation,
    finite_difference_gradient,
    friedman_dataset,
    grid_dft_coefficients,
    parameter_shift_gradient,
    train,
)
from .spectrum import (
    CoefficientPolynomial,
    SpectrumReport,
    circuit_spectrum,
    coefficient_covariance,
    coefficient_mean,
    combinatorial_weight,
    evaluate_coefficient,
    exact_spectrum,
    moment_matrices,
    naive_spectrum,
)
from .tree import DEFAULT_LEAF_CAP, LeafCapExceeded, LeafTerm, build_leaves, circuit_leaves, evaluate_reconstruction

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FEATURE",
    "VARIATIONAL",
    "Circuit",
    "CircuitError",
    "NormalForm",
    "Observable",
    "ParamRef",
    "PauliRotation",
    "dumps_circuit",
    "encoding_counts",
    "load_circuit",
    "loads_circuit",
    "random_circuit",
    "to_normal_forms",
    "validate",
    "ConditioningError",
    "DataSpectrum",
    "FeatureMap",
    "FrequencyGrid",
    "build_grid",
    "damping_factors",
    "inverse_nfft",
    "load_dataset",
    "nfft_matrix",
    "r_nfft",
    "save_dataset",
    "GaussianRational",
    "CliffordGate",
    "SignedPauli",
    "clifford_conjugate",
    "commutes",
    "multiply",
    "ArchitectureScore",
    "RankReport",
    "r_corr",
    "r_omega",
    "r_punish",
    "score_and_rank",
    "Dataset",
    "SimulationError",
    "TrainConfig",
    "TrainResult",
    "expectation",
    "finite_difference_gradient",
    "friedman_dataset",
    "grid_dft_coefficients",
    "parameter_shift_gradient",
    "train",
    "CoefficientPolynomial",
    "SpectrumReport",
    "circuit_spectrum",
    "coefficient_covariance",
    "coefficient_mean",
    "combinatorial_weight",
    "evaluate_coefficient",
    "exact_spectrum",
    "moment_matrices",
    "naive_spectrum",
    "DEFAULT_LEAF_CAP",
    "LeafCapExceeded",
    "LeafTerm",
    "build_leaves",
    "circuit_leaves",
    "evaluate_reconstruction",
]
