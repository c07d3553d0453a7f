"""Bounded-length selective confidence intervals from the randomized
conditional law X | X+U in T.

The library builds equal-tailed (or general two-quantile) confidence
intervals whose length is strictly below (sigma/rho)(z_q2 - z_q1),
covers the data-carving and randomized-response designs that reduce to
this law, and includes a Lasso-with-randomized-response pipeline and a
reproducible simulation harness.
"""

from .designs import (
    CarvingDesign,
    RandResponseDesign,
    carving_bound,
    carving_family,
    carving_spec,
    randresp_bound,
    randresp_family,
    randresp_spec,
    splitting_interval_carving,
    splitting_interval_randresp,
)
from .distribution import (
    CondNormalFamily,
    CondNormalSpec,
    b_gap,
    cdf,
    cond_given_sum,
    dpdf_dmu,
    dpdf_dx,
    g_cdf,
    log_cdf,
    log_selection_prob,
    log_sf,
    owen_integral,
    pdf,
    sample,
    selection_prob,
    sf,
)
from .intervals import (
    ConfidenceInterval,
    NonconvergenceError,
    QuantilePair,
    interval,
    interval_batch,
    mu_q,
    mu_q_batch,
    sharpness_curve,
    theorem_bound,
)
from .lasso import (
    LassoSelection,
    NoSelectionError,
    RegressionProblem,
    lasso_fit,
    selection_event,
    selective_interval,
    truncation_interval,
    truncation_union,
)
from .normals import bvn_cdf, cdf_interval_mass, std_cdf, std_pdf, std_quantile
from .rng import stream
from .truncation import TruncationSet, make_truncation_set, parse_truncation_set

__version__ = "0.1.0"
