"""Void probability of a typical BS from cell-area moments or a cell-area pdf."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import InsufficientMoments, NoConvergence
from .model import QuadConfig

__all__ = ["VoidProbSeries", "void_prob_series", "laplace_from_pdf"]

# panel edges for integrating a pdf of unknown scale over (0, inf)
_EDGES = np.concatenate([[0.0], 2.0 ** np.arange(-40, 41)])


@dataclass(frozen=True)
class VoidProbSeries:
    value: float
    bound: float
    terms_used: int
    clamped: bool = False
    raw_value: float = float("nan")
    provenance: dict = field(default_factory=dict, compare=False)


def void_prob_series(
    moments: Sequence[float],
    user_density: float,
    tol: float | None = None,
    provenance: dict | None = None,
) -> VoidProbSeries:
    """Truncated ``sum_p (-lambda_0)^p E[V^p] / p!`` over the supplied moments.

    ``moments[0]`` must be 1. ``bound`` is the magnitude of the last included
    term, a truncation indicator rather than a guarantee. The reported value
    is clamped to ``[0, 1]`` (``clamped`` records it). With ``tol`` given, a
    bound above it raises :class:`InsufficientMoments`.
    """
    m = [float(v) for v in moments]
    if not m or abs(m[0] - 1.0) > 1e-12:
        raise ValueError("moments[0] must equal 1")
    if user_density < 0:
        raise ValueError("user_density must be >= 0")
    terms = [(-user_density) ** p * mp / math.factorial(p) for p, mp in enumerate(m)]
    raw = math.fsum(terms)
    bound = abs(terms[-1]) if len(terms) > 1 else 0.0
    if tol is not None and bound > tol:
        raise InsufficientMoments(
            f"last included term {bound:.3g} exceeds tolerance {tol:.3g}; supply more moments"
        )
    value = min(max(raw, 0.0), 1.0)
    return VoidProbSeries(
        value=value,
        bound=bound,
        terms_used=len(terms),
        clamped=value != raw,
        raw_value=raw,
        provenance=dict(provenance or {}),
    )


def _panel_integral(f: Callable, cfg: QuadConfig) -> tuple[float, float]:
    total, err = [], 0.0
    edges = list(_EDGES) + [math.inf]
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, a, b, epsabs=cfg.abs_tol * 1e-2, epsrel=cfg.rel_tol, limit=200)
        total.append(val)
        err += e
    return math.fsum(total), err


def laplace_from_pdf(pdf: Callable[[float], float], user_density: float, cfg: QuadConfig | None = None) -> float:
    """``int_0^inf exp(-lambda_0 A) pdf(A) dA`` by panelled adaptive quadrature."""
    cfg = cfg or QuadConfig()
    if user_density < 0:
        raise ValueError("user_density must be >= 0")

    def g(a):
        return float(pdf(a))

    norm, _ = _panel_integral(g, cfg)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"pdf integrates to {norm:.9g}, not 1")
    if user_density == 0:
        return 1.0
    val, err = _panel_integral(lambda a: math.exp(-user_density * a) * g(a), cfg)
    if err > max(cfg.abs_tol, cfg.rel_tol * abs(val)) * 1e3:
        raise NoConvergence(f"Laplace transform quadrature error {err:.3g}", partial=val)
    return val
