"""Simulation oracle for cell-area moments and the base-station void probability.

A realisation is the Palm version of the K-tier network: a tier-k BS at the
origin plus independent PPPs for every tier on a disk of radius
``window + guard``. Test points (or users) are dropped uniformly in the
window disk and each one draws a fresh weight for every BS before the
``argmax w |r - x|^-alpha`` association, so the "cell" is the random set whose
p-point inclusion probabilities the moment integrals are built from.

Each realisation owns a counter-based Philox stream keyed by
``(seed, realisation index)``; per-realisation results are collected in index
order, so serial and parallel runs give bit-identical estimates.
"""

from __future__ import annotations

import math
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import WindowTooSmall
from .model import MCConfig, NetworkModel

__all__ = [
    "Realization",
    "MCEstimate",
    "realization_rng",
    "sample_ppp",
    "sample_realization",
    "associate",
    "origin_hits",
    "u_statistic",
    "estimate_moment",
    "estimate_void_prob",
]

# an associated point beyond this fraction of the window radius is "near the edge"
_EDGE_FRACTION = 0.95
_EDGE_TOLERANCE = 0.01
_CHUNK = 256


@dataclass(frozen=True)
class Realization:
    """BS locations ``xy`` (M x 2) and 1-based tiers; row 0 is the origin BS."""

    xy: np.ndarray
    tier: np.ndarray

    @property
    def size(self) -> int:
        return int(self.tier.size)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    realizations: int
    seed: int
    points_per_realization: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)


def realization_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def sample_ppp(density: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the disk of the given radius centred at the origin."""
    if not (density > 0 and radius > 0):
        raise ValueError("density and radius must be > 0")
    n = rng.poisson(density * math.pi * radius * radius)
    r = radius * np.sqrt(rng.random(n))
    t = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def _uniform_disk(n: int, radius: float, rng) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    t = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def sample_realization(model: NetworkModel, k: int, radius: float, rng) -> Realization:
    model.tier(k)
    xy = [np.zeros((1, 2))]
    tiers = [np.array([k])]
    for q, t in enumerate(model.tiers, start=1):
        pts = sample_ppp(t.density, radius, rng)
        xy.append(pts)
        tiers.append(np.full(len(pts), q))
    return Realization(np.concatenate(xy), np.concatenate(tiers))


def _log_weights(model: NetworkModel, real: Realization, n_points: int, rng) -> np.ndarray:
    """Fresh ``log w`` for every (point, BS) pair, shape ``(n_points, M)``."""
    out = np.empty((n_points, real.size))
    for q, t in enumerate(model.tiers, start=1):
        cols = np.flatnonzero(real.tier == q)
        if cols.size:
            out[:, cols] = np.log(t.weights.sample(rng, (n_points, cols.size)))
    return out


def _winners(points: np.ndarray, real: Realization, model: NetworkModel, rng) -> np.ndarray:
    dx = points[:, None, 0] - real.xy[None, :, 0]
    dy = points[:, None, 1] - real.xy[None, :, 1]
    d2 = np.maximum(dx * dx + dy * dy, np.finfo(float).tiny)
    score = _log_weights(model, real, len(points), rng) - 0.5 * model.alpha * np.log(d2)
    return np.argmax(score, axis=1)


def associate(x, realization: Realization, model: NetworkModel, rng) -> int:
    """Index (row of ``realization.xy``) of the BS serving a user at ``x``."""
    x = np.asarray(x, dtype=float).reshape(1, 2)
    if realization.size == 0:
        raise ValueError("empty realisation")
    while np.any(np.all(realization.xy == x, axis=1)):
        x = x + np.finfo(float).eps * max(1.0, float(np.abs(x).max()))
    return int(_winners(x, realization, model, rng)[0])


def origin_hits(points: np.ndarray, realization: Realization, model: NetworkModel, rng) -> np.ndarray:
    """Boolean mask of points that associate with the origin BS."""
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    return _winners(points, realization, model, rng) == 0


def u_statistic(hits: int, n: int, p: int, area: float) -> float:
    """Unbiased estimate of ``V^p`` from ``hits`` of ``n`` uniform points in ``area``.

    ``area^p * hits(hits-1)...(hits-p+1) / (n(n-1)...(n-p+1))``: the fraction
    of ordered p-tuples of distinct points that all land in the cell.
    """
    if n < p:
        raise ValueError("need at least p points")
    num = math.prod(hits - i for i in range(p)) if hits >= p else 0
    den = math.prod(n - i for i in range(p))
    return area**p * num / den


def _workers() -> int:
    env = os.environ.get("PVAREA_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _moment_chunk(args):
    model, k, p, seed, n_pts, window, outer, start, stop = args
    area = math.pi * window * window
    vals = np.empty(stop - start)
    edge = np.zeros(stop - start, dtype=bool)
    for i in range(start, stop):
        rng = realization_rng(seed, i)
        real = sample_realization(model, k, outer, rng)
        pts = _uniform_disk(n_pts, window, rng)
        hit = origin_hits(pts, real, model, rng)
        vals[i - start] = u_statistic(int(hit.sum()), n_pts, p, area)
        if hit.any():
            edge[i - start] = np.hypot(pts[hit, 0], pts[hit, 1]).max() > _EDGE_FRACTION * window
    return vals, edge


def _void_chunk(args):
    model, k, user_density, seed, window, outer, start, stop = args
    vals = np.empty(stop - start)
    edge = np.zeros(stop - start, dtype=bool)
    for i in range(start, stop):
        rng = realization_rng(seed, i)
        real = sample_realization(model, k, outer, rng)
        users = sample_ppp(user_density, window, rng)
        hit = origin_hits(users, real, model, rng)
        vals[i - start] = 0.0 if hit.any() else 1.0
        if hit.any():
            edge[i - start] = np.hypot(users[hit, 0], users[hit, 1]).max() > _EDGE_FRACTION * window
    return vals, edge


def _run(fn, head, n, workers):
    chunks = [(*head, s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    parallel = workers > 1 and len(chunks) > 1
    if parallel:
        try:
            pickle.dumps(head)
        except Exception:
            parallel = False
    if parallel:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return np.concatenate([v for v, _ in parts]), np.concatenate([e for _, e in parts])


def _summarise(vals, edge, cfg: MCConfig, n_pts: int, what: str, **diag) -> MCEstimate:
    frac = float(edge.mean())
    if frac > _EDGE_TOLERANCE:
        raise WindowTooSmall(
            f"{what}: {100 * frac:.2f}% of realisations had associated points within "
            f"{100 * (1 - _EDGE_FRACTION):.0f}% of the window boundary"
        )
    n = vals.size
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return MCEstimate(
        value=float(np.mean(vals)),
        std_error=se,
        realizations=n,
        seed=int(cfg.seed),
        points_per_realization=n_pts,
        diagnostics={"edge_fraction": frac, **diag},
    )


def estimate_moment(model: NetworkModel, k: int, p: int, cfg: MCConfig, workers: int | None = None) -> MCEstimate:
    """Unbiased simulation estimate of ``E[V_k^p]``."""
    model.require_planar("estimate_moment")
    model.tier(k)
    if p < 1:
        raise ValueError("p must be >= 1")
    n_pts = cfg.points_per_realization
    if n_pts < p + 1:
        raise ValueError("points_per_realization must be >= p + 1")
    window, guard = cfg.resolve(model)
    head = (model, k, p, int(cfg.seed), n_pts, window, window + guard)
    vals, edge = _run(_moment_chunk, head, cfg.realizations, workers or _workers())
    return _summarise(vals, edge, cfg, n_pts, "estimate_moment", window_radius=window, guard_radius=guard)


def estimate_void_prob(
    model: NetworkModel, user_density: float, cfg: MCConfig, k: int = 1, workers: int | None = None
) -> MCEstimate:
    """Probability that the typical tier-k BS serves no user of a density-``user_density`` PPP."""
    model.require_planar("estimate_void_prob")
    model.tier(k)
    if not user_density > 0:
        raise ValueError("user_density must be > 0")
    window, guard = cfg.resolve(model)
    head = (model, k, float(user_density), int(cfg.seed), window, window + guard)
    vals, edge = _run(_void_chunk, head, cfg.realizations, workers or _workers())
    return _summarise(vals, edge, cfg, 0, "estimate_void_prob", window_radius=window, guard_radius=guard)
