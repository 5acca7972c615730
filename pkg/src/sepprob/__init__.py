"""Monte Carlo laboratory for separability/PPT probabilities of random
bipartite quantum states over Bloch radii and Casimir invariants."""

from .matrix_core import (hermitian_eigenvalues, is_ppt, partial_trace,
                          partial_transpose, purity)
from .random_states import (MeasureSpec, SampleStream, hilbert_schmidt,
                            induced, sample_ginibre, sample_state)
from .invariants import (coherence_vector, cubic_casimir, d_tensor,
                         fano_correlation_invariant, record, su_basis)
from .stats import (Axis, HistogramPair, JointHistogram, RatioEstimate,
                    fit_scale, flatness_test, ratio_with_ci)
from .formula import f_term, p_alpha, q_poly
from .runner import ExperimentConfig, export, run_experiment

__version__ = "0.1.0"

__all__ = [
    "hermitian_eigenvalues", "is_ppt", "partial_trace", "partial_transpose",
    "purity", "MeasureSpec", "SampleStream", "hilbert_schmidt", "induced",
    "sample_ginibre", "sample_state", "coherence_vector", "cubic_casimir",
    "d_tensor", "fano_correlation_invariant", "record", "su_basis", "Axis",
    "HistogramPair", "JointHistogram", "RatioEstimate", "fit_scale",
    "flatness_test", "ratio_with_ci", "f_term", "p_alpha", "q_poly",
    "ExperimentConfig", "export", "run_experiment",
]
