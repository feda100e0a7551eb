"""Goodness of Gaussian covariance selection measured by KL divergence and AUC."""

from .covsel import IpfConfig, ipf_select, maximal_cliques
from .detect import (
    AucResult,
    Cam,
    LlrtWeights,
    RocCurve,
    asymptotic_kl_bound,
    auc_monte_carlo,
    auc_quadrature,
    auc_upper_bound,
    cam,
    kl_closed_form,
    kl_divergence,
    llrt_weights,
    reverse_kl,
    roc_points,
    sample_l_delta,
)
from .errors import (
    ConvergenceFailure,
    CovselError,
    InvalidKappa,
    InvalidOrder,
    InvalidRho,
    NoConvergence,
    NotPositiveDefinite,
    QuadratureFailure,
)
from .models import (
    Family,
    ModelSpec,
    ToeplitzSpec,
    chain_model,
    model_edges,
    star_model,
    toeplitz_source,
)

__version__ = "0.1.0"
