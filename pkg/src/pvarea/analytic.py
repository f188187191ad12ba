"""Closed forms and series for Voronoi cell-area moments.

Covers the exact first moment for any tier and dimension, the single-tier
second moment under exponential-fading max-power association at alpha = 2
(as a Beta-function series and as an independent sum of 1-D angular
integrals), and the Gamma-law baseline with its shape parameter zeta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, MomentDiverges, NoConvergence
from .model import (
    Deterministic,
    Exponential,
    Method,
    MomentResult,
    NetworkModel,
    QuadConfig,
    WeightDistribution,
)

__all__ = [
    "fractional_weight_moment",
    "mean_cell_area",
    "beta_same",
    "mirpa_series_term",
    "second_moment_mirpa_series",
    "mirpa_phi_integrand",
    "second_moment_mirpa_phi_integral",
    "gamma_zeta",
    "GammaApprox",
    "approx_area_pdf",
    "gamma_moment",
    "void_prob_approx",
]

_MAX_SERIES_TERMS = 100_000
_MAX_PHI_TERMS = 10_000


def fractional_weight_moment(dist: WeightDistribution, e: float) -> float:
    """``E[W**e]`` for a tier's weight law."""
    if e == 0:
        raise ValueError("exponent must be nonzero")
    return dist.fractional_moment(e)


def mean_cell_area(model: NetworkModel, k: int) -> MomentResult:
    """Exact mean area of a typical tier-``k`` cell, in any dimension ``d``.

    ``E_k[W^(d/a)] / sum_q lambda_q E_q[W^(d/a)]``.
    """
    e = model.dimension / model.alpha
    tier = model.tier(k)
    num = fractional_weight_moment(tier.weights, e)
    # ratios to the tier-k moment keep the single-tier case exactly 1/lambda
    den = math.fsum(
        t.density * (1.0 if t is tier else fractional_weight_moment(t.weights, e) / num) for t in model.tiers
    )
    return MomentResult(
        value=1.0 / den,
        error=0.0,
        order=1,
        tier=k,
        method=Method.CLOSED_FORM,
        evaluations=0,
        converged=True,
        diagnostics={"dimension": model.dimension, "exponent": e},
    )


def beta_same(m):
    """``B(m, m)`` through log-gamma so large ``m`` does not underflow early."""
    m = np.asarray(m, dtype=float)
    return np.exp(2.0 * special.gammaln(m) - special.gammaln(2.0 * m))


def mirpa_series_term(k: int) -> float:
    """k-th summand of the single-tier alpha = 2 second moment (unit density)."""
    return float(beta_same(k + 1) / (k + 1) + 2.0 * k * k * beta_same(k + 2) / (k + 1) ** 2)


def second_moment_mirpa_series(density: float, tol: float = 1e-12) -> MomentResult:
    """Second moment of the single-tier cell area, exponential weights, alpha = 2.

    Terms are summed until one falls below ``tol`` times the running sum
    (never fewer than three). The error is the geometric tail bound from the
    ratio of the last two terms.
    """
    if not density > 0:
        raise DomainError("density must be > 0")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    terms = []
    for k in range(_MAX_SERIES_TERMS):
        terms.append(mirpa_series_term(k))
        total = math.fsum(terms)
        if k >= 2 and terms[-1] < tol * total:
            break
    else:
        raise NoConvergence("Beta series did not meet tolerance", partial=math.fsum(terms))
    ratio = terms[-1] / terms[-2]
    tail = terms[-1] * ratio / (1.0 - ratio) if ratio < 1 else terms[-1]
    scale = density ** -2
    return MomentResult(
        value=total * scale,
        error=tail * scale,
        order=2,
        tier=1,
        method=Method.SERIES,
        evaluations=len(terms),
        converged=True,
        diagnostics={"terms": len(terms), "last_term": terms[-1]},
    )


def mirpa_phi_integrand(phi, k: int):
    """Angular integrand of the k-th term after summing the inner power series.

    ``(k+1) (sc)^(2k+1) / ((1+k c^2)^2 (1+k s^2)^2) * (1+x)/(1-x)^3`` with
    ``s = sin(phi)``, ``c = cos(phi)`` and
    ``x = k^2 s^2 c^2 / ((1+k c^2)(1+k s^2))``.
    """
    phi = np.asarray(phi, dtype=float)
    s, c = np.sin(phi), np.cos(phi)
    a, b = 1.0 + k * c * c, 1.0 + k * s * s
    den = a * b
    x = (k * s * c) ** 2 / den
    one_minus_x = (1.0 + k) / den  # (1 + k c^2)(1 + k s^2) - k^2 s^2 c^2 = 1 + k
    return (k + 1) * (s * c) ** (2 * k + 1) / den**2 * (1.0 + x) / one_minus_x**3


def second_moment_mirpa_phi_integral(density: float, cfg: QuadConfig | None = None) -> MomentResult:
    """Same second moment as :func:`second_moment_mirpa_series`, via angular integrals.

    Each k-term is an adaptive 1-D integral over ``[0, pi/2]``; the k-sum is
    stopped once the ratio-based geometric tail bound drops below
    ``rel_tol`` times the running total.
    """
    if not density > 0:
        raise DomainError("density must be > 0")
    cfg = cfg or QuadConfig()
    terms, errs = [], []
    evals = 0
    for k in range(_MAX_PHI_TERMS):
        val, err, info = integrate.quad(
            mirpa_phi_integrand,
            0.0,
            math.pi / 2,
            args=(k,),
            points=[math.pi / 4],
            epsabs=0.0,
            epsrel=min(cfg.rel_tol * 1e-2, 1e-8),
            limit=200,
            full_output=True,
        )
        evals += info["neval"]
        terms.append(2.0 * val)
        errs.append(2.0 * err)
        if k >= 2:
            ratio = terms[-1] / terms[-2]
            if ratio < 1:
                tail = terms[-1] * ratio / (1.0 - ratio)
                if tail < cfg.rel_tol * 1e-2 * math.fsum(terms):
                    break
    else:
        raise NoConvergence("angular k-sum did not meet its tail bound", partial=math.fsum(terms))
    scale = density ** -2
    return MomentResult(
        value=math.fsum(terms) * scale,
        error=(math.fsum(errs) + tail) * scale,
        order=2,
        tier=1,
        method=Method.QUADRATURE,
        evaluations=evals,
        converged=True,
        diagnostics={"terms": len(terms), "tail_bound": tail},
    )


def gamma_zeta(dist: WeightDistribution, alpha: float) -> float:
    """Shape of the Gamma baseline: ``7/2 * E[W^(2/a)] * E[W^(-2/a)]``."""
    if not alpha > 0:
        raise DomainError("alpha must be > 0")
    e = 2.0 / alpha
    if isinstance(dist, Deterministic):
        if alpha <= 2:
            raise DomainError("alpha must exceed 2")
        return 3.5
    if isinstance(dist, Exponential):
        if e >= 1:
            raise MomentDiverges(f"E[W^-{e:g}] is infinite for exponential weights at alpha={alpha}")
        return 3.5 * math.gamma(1.0 + e) * math.gamma(1.0 - e)
    zeta = 3.5 * fractional_weight_moment(dist, e) * fractional_weight_moment(dist, -e)
    if alpha <= 2:
        raise DomainError("alpha must exceed 2")
    return zeta


@dataclass(frozen=True)
class GammaApprox:
    """Gamma law for the cell area with shape ``zeta`` and mean ``1/density``."""

    zeta: float
    density: float

    def __post_init__(self):
        if not (self.zeta > 0 and self.density > 0):
            raise ValueError("zeta and density must be > 0")

    def pdf(self, a):
        return approx_area_pdf(a, self)

    def moment(self, p: int) -> float:
        return gamma_moment(p, self.zeta, self.density)

    def void_prob(self, user_density: float) -> float:
        return void_prob_approx(user_density, self.density, self.zeta)


def approx_area_pdf(a, approx: GammaApprox):
    """``(z l)^z A^(z-1) exp(-z l A) / Gamma(z)``, evaluated in log space."""
    a = np.asarray(a, dtype=float)
    z, lam = approx.zeta, approx.density
    with np.errstate(divide="ignore"):
        log_pdf = z * math.log(z * lam) + (z - 1.0) * np.log(a) - z * lam * a - special.gammaln(z)
    out = np.where(a > 0, np.exp(log_pdf), 0.0)
    return out if out.ndim else float(out)


def gamma_moment(p: int, zeta: float, density: float) -> float:
    """p-th moment of the Gamma baseline; ``zeta = inf`` gives the degenerate ``density**-p``."""
    if math.isinf(zeta):
        return density ** -p
    return math.prod((zeta + i) / zeta for i in range(p)) * density ** -p


def void_prob_approx(user_density: float, bs_density: float, zeta: float) -> float:
    """``(1 + lambda_0 / (zeta lambda))^(-zeta)``."""
    if user_density < 0 or not bs_density > 0 or not zeta > 0:
        raise DomainError("need user_density >= 0, bs_density > 0, zeta > 0")
    if math.isinf(zeta):
        return math.exp(-user_density / bs_density)
    return math.exp(-zeta * math.log1p(user_density / (zeta * bs_density)))
