"""Online pairwise least-squares learning in an RKHS.

Thin python layer over the C++ core: kernels, kernel expansions, synthetic
measures, the online learners, the spectral verification backend, and the
numeric verification suites.
"""

from ._opera import (  # noqa: F401
    ConfigError,
    DiscreteMeasure,
    InputError,
    Measure,
    PairwiseExpansion,
    PairwiseKernel,
    SamplerMeasure,
    SpectralModel,
    StateError,
    UnivariateExpansion,
    UnivariateKernel,
    constants,
    construct_regular_target,
    gram_pairwise,
    gram_univariate,
    isometry_check,
    k_functional,
    kappa_box,
    kappa_points,
    pairwise_expansion_from_json,
    preset_discrete_measure,
    preset_spectral_measure,
    run,
    run_experiment_text,
    theorem1_bound,
    theorem1_s,
    univariate_expansion_from_json,
    verify_equivalence,
    verify_isometry,
    verify_lemmas,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
