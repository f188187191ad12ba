"""Cell-area moments and void probabilities for K-tier Poisson-Voronoi networks.

Base stations of tier k form a PPP of density ``lambda_k``; a user at ``x``
joins the station maximising ``w |r - x|^-alpha`` with an independent weight
``w`` per (user, station) pair. Deterministic weights give the average-power
rule, exponential weights the instantaneous (Rayleigh-faded) rule.
"""

from .analytic import (
    GammaApprox,
    gamma_moment,
    gamma_zeta,
    mean_cell_area,
    second_moment_mirpa_phi_integral,
    second_moment_mirpa_series,
    void_prob_approx,
)
from .errors import (
    DimensionError,
    DomainError,
    InsufficientMoments,
    MomentDiverges,
    NoConvergence,
    PVAreaError,
    WindowTooSmall,
)
from .model import (
    Deterministic,
    Exponential,
    MCConfig,
    Method,
    MomentResult,
    NetworkModel,
    PathLoss,
    QuadConfig,
    TierSpec,
    UserDefined,
    WeightDistribution,
    require_valid,
    validate,
)
from .montecarlo import estimate_moment, estimate_void_prob
from .quadrature import moment, moment_general, moment_marpa, moment_mirpa_alpha2
from .voidprob import laplace_from_pdf, void_prob_series

__version__ = "0.1.0"
