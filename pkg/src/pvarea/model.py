"""System-model types: path loss, per-tier weight laws, tiers and network.

All types are frozen dataclasses so one model can be shared freely between
quadrature workers and simulation processes. Constructors do not enforce the
invariants; call :func:`validate` (or :func:`require_valid`) instead, so that
malformed configurations can be reported as a list rather than a traceback.
"""

from __future__ import annotations

import enum
import functools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import linalg, special

from .errors import DimensionError, MomentDiverges

__all__ = [
    "PathLoss",
    "WeightDistribution",
    "Deterministic",
    "Exponential",
    "UserDefined",
    "TierSpec",
    "NetworkModel",
    "Method",
    "MomentResult",
    "QuadConfig",
    "MCConfig",
    "Violation",
    "validate",
    "require_valid",
]


@dataclass(frozen=True)
class PathLoss:
    alpha: float


class WeightDistribution(ABC):
    """Law of the association weights attached to one tier's base stations."""

    @property
    @abstractmethod
    def scale(self) -> float:
        """Characteristic size of W, used for grids and default brackets."""

    @abstractmethod
    def cdf(self, w):
        """Vectorised CDF ``G(w)``."""

    @abstractmethod
    def fractional_moment(self, e: float) -> float:
        """``E[W**e]``; raises :class:`MomentDiverges` when not finite."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        ...

    @abstractmethod
    def expectation_rule(self, n: int, exponent: float = 1.0, trunc_eps: float = 1e-9):
        """Nodes ``v_i`` and probabilities ``p_i`` with ``E[f(W**exponent)] ~ sum p_i f(v_i)``.

        ``n`` is the rule order; deterministic laws ignore it.
        """

    @abstractmethod
    def quantile(self, u, trunc_eps: float = 1e-9):
        """Generalised inverse CDF."""

    @abstractmethod
    def scaled(self, c: float) -> "WeightDistribution":
        """Same law for ``c * W``."""

    def validation_errors(self) -> list[str]:
        return []


_DISCRETE_NODES = 1500


def gauss_rule_from_discrete(x, w, n: int):
    """n-point Gauss rule for the discrete measure ``sum w_i delta(x_i)``.

    Stieltjes procedure for the three-term recurrence, then Golub-Welsch.
    Intended for ``n`` well below ``len(x)``; weights are normalised to 1.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    w = w / w.sum()
    n = min(int(n), x.size)
    a = np.empty(n)
    b = np.zeros(n)
    p_prev, p = np.zeros_like(x), np.ones_like(x)
    for k in range(n):
        a[k] = np.sum(w * x * p * p)
        q = (x - a[k]) * p - (math.sqrt(b[k]) * p_prev if k else 0.0)
        if k + 1 < n:
            b[k + 1] = np.sum(w * q * q)
            p_prev, p = p, q / math.sqrt(b[k + 1])
    if n == 1:
        return a.copy(), np.ones(1)
    nodes, vec = linalg.eigh_tridiagonal(a, np.sqrt(b[1:]))
    return nodes, vec[0] ** 2


@functools.lru_cache(maxsize=64)
def _exponential_power_rule(n: int, g: float, trunc_eps: float):
    """Gauss rule for ``t = h**g`` with ``h ~ Exp(1)``.

    ``t`` has density ``(1/g) t^(1/g - 1) exp(-t^(1/g))``, discretised on
    ``[0, t_max]`` with ``t = t_max s^2`` (which removes the endpoint
    singularity for ``g <= 2``). ``t_max`` leaves a tail mass and first
    moment, ``(h + 1) exp(-h)``, well below ``trunc_eps``.
    """
    log_eps = -math.log(trunc_eps)
    t_max = (log_eps + 3.0 * math.log1p(log_eps)) ** g
    s, ws = special.roots_legendre(_DISCRETE_NODES)
    s = 0.5 * (s + 1.0)
    t = t_max * s * s
    dens = (1.0 / g) * t ** (1.0 / g - 1.0) * np.exp(-(t ** (1.0 / g))) * t_max * s * ws
    nodes, probs = gauss_rule_from_discrete(t, dens, n)
    nodes.flags.writeable = False
    probs.flags.writeable = False
    return nodes, probs


@dataclass(frozen=True)
class Deterministic(WeightDistribution):
    """Fixed weight ``W = power`` (max average received power association)."""

    power: float = 1.0

    @property
    def scale(self) -> float:
        return self.power

    def cdf(self, w):
        return (np.asarray(w, dtype=float) >= self.power).astype(float)

    def fractional_moment(self, e: float) -> float:
        return float(self.power) ** e

    def sample(self, rng, size):
        return np.full(size, float(self.power))

    def quantile(self, u, trunc_eps=1e-9):
        return np.full_like(np.asarray(u, dtype=float), float(self.power))

    def expectation_rule(self, n=1, exponent=1.0, trunc_eps=1e-9):
        return np.array([float(self.power) ** exponent]), np.array([1.0])

    def scaled(self, c):
        return Deterministic(self.power * c)

    def validation_errors(self):
        if not (math.isfinite(self.power) and self.power > 0):
            return ["power must be finite and > 0"]
        return []


@dataclass(frozen=True)
class Exponential(WeightDistribution):
    """``W = power * h`` with ``h ~ Exp(rate)``; ``G(w) = 1 - exp(-rate*w/power)``."""

    rate: float = 1.0
    power: float = 1.0

    @property
    def scale(self) -> float:
        return self.power / self.rate

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w > 0, -np.expm1(-self.rate * np.maximum(w, 0.0) / self.power), 0.0)

    def fractional_moment(self, e: float) -> float:
        if e <= -1:
            raise MomentDiverges(f"E[W^{e}] is infinite for exponential weights (needs e > -1)")
        return self.scale ** e * math.gamma(1.0 + e)

    def sample(self, rng, size):
        return self.scale * rng.standard_exponential(size)

    def quantile(self, u, trunc_eps=1e-9):
        return -self.scale * np.log1p(-np.asarray(u, dtype=float))

    def expectation_rule(self, n=16, exponent=1.0, trunc_eps=1e-9):
        if exponent == 1.0:
            x, wts = special.roots_laguerre(n)
            return self.scale * x, wts
        t, p = _exponential_power_rule(n, float(exponent), float(trunc_eps))
        return self.scale ** exponent * t, p

    def scaled(self, c):
        return Exponential(self.rate, self.power * c)

    def validation_errors(self):
        errs = []
        if not (math.isfinite(self.rate) and self.rate > 0):
            errs.append("rate must be finite and > 0")
        if not (math.isfinite(self.power) and self.power > 0):
            errs.append("power must be finite and > 0")
        return errs


@dataclass(frozen=True)
class UserDefined(WeightDistribution):
    """Arbitrary weight law given by callables.

    ``cdf`` should accept numpy arrays (it is wrapped with ``np.vectorize``
    otherwise), ``fractional_moment(e)`` returns ``E[W**e]`` and
    ``sampler(rng, size)`` returns an array of draws. Higher moments needed
    by the p-point integrals are assumed finite, not checked.
    """

    cdf_fn: Callable
    fractional_moment_fn: Callable[[float], float]
    sampler: Callable
    typical_scale: float = 1.0
    name: str = "user"

    @property
    def scale(self) -> float:
        return self.typical_scale

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        try:
            out = np.asarray(self.cdf_fn(w), dtype=float)
            if out.shape != w.shape:
                raise ValueError
        except (TypeError, ValueError):
            out = np.vectorize(self.cdf_fn, otypes=[float])(w)
        return np.where(w > 0, out, 0.0)

    def fractional_moment(self, e: float) -> float:
        try:
            v = float(self.fractional_moment_fn(e))
        except (OverflowError, ZeroDivisionError, ValueError) as exc:
            raise MomentDiverges(f"user-defined E[W^{e}] failed: {exc}") from exc
        if not math.isfinite(v):
            raise MomentDiverges(f"user-defined E[W^{e}] is not finite ({v})")
        return v

    def sample(self, rng, size):
        return np.asarray(self.sampler(rng, size), dtype=float)

    def quantile(self, u, trunc_eps: float = 1e-9) -> np.ndarray:
        """Generalised inverse of the CDF by vectorised bisection."""
        u = np.minimum(np.asarray(u, dtype=float), 1.0 - trunc_eps)
        hi = float(self.typical_scale)
        while self.cdf(np.array([hi]))[0] < 1.0 - trunc_eps:
            hi *= 2.0
            if hi > 1e300:
                raise MomentDiverges("user-defined CDF never approaches 1")
        lo = np.zeros_like(u)
        up = np.full_like(u, hi)
        for _ in range(200):
            mid = 0.5 * (lo + up)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            up = np.where(below, up, mid)
            if np.all(up - lo <= 1e-15 * np.maximum(up, 1e-300)):
                break
        return up

    def expectation_rule(self, n=16, exponent=1.0, trunc_eps=1e-9):
        # fine discretisation in u, then reduced to an n-point Gauss rule
        s, ws = special.roots_legendre(max(_DISCRETE_NODES // 3, 4 * n))
        u = 0.5 * (s + 1.0) * (1.0 - trunc_eps)
        v = self.quantile(u, trunc_eps) ** exponent
        return gauss_rule_from_discrete(v, 0.5 * ws, n)

    def scaled(self, c):
        base = self

        def cdf(w):
            return base.cdf(np.asarray(w, dtype=float) / c)

        def fm(e):
            return c ** e * base.fractional_moment(e)

        def smp(rng, size):
            return c * base.sample(rng, size)

        return UserDefined(cdf, fm, smp, base.typical_scale * c, f"{base.name}*{c:g}")

    def validation_errors(self):
        if not (math.isfinite(self.typical_scale) and self.typical_scale > 0):
            return ["typical_scale must be finite and > 0"]
        return []


@dataclass(frozen=True)
class TierSpec:
    density: float
    weights: WeightDistribution


@dataclass(frozen=True)
class NetworkModel:
    tiers: tuple[TierSpec, ...]
    pathloss: PathLoss
    dimension: int = 2

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))

    @classmethod
    def single_tier(cls, density=1.0, weights=None, alpha=4.0, dimension=2):
        return cls((TierSpec(density, weights or Deterministic(1.0)),), PathLoss(alpha), dimension)

    @property
    def alpha(self) -> float:
        return self.pathloss.alpha

    @property
    def K(self) -> int:
        return len(self.tiers)

    @property
    def densities(self) -> np.ndarray:
        return np.array([t.density for t in self.tiers], dtype=float)

    @property
    def total_density(self) -> float:
        return float(self.densities.sum())

    def tier(self, k: int) -> TierSpec:
        """1-based tier accessor."""
        if not 1 <= k <= self.K:
            raise IndexError(f"tier {k} outside 1..{self.K}")
        return self.tiers[k - 1]

    def all_deterministic(self) -> bool:
        return all(isinstance(t.weights, Deterministic) for t in self.tiers)

    def all_exponential(self) -> bool:
        return all(isinstance(t.weights, Exponential) for t in self.tiers)

    def with_densities(self, densities: Sequence[float]) -> "NetworkModel":
        tiers = [TierSpec(float(d), t.weights) for d, t in zip(densities, self.tiers)]
        return NetworkModel(tiers, self.pathloss, self.dimension)

    def with_power_scale(self, c: float) -> "NetworkModel":
        tiers = [TierSpec(t.density, t.weights.scaled(c)) for t in self.tiers]
        return NetworkModel(tiers, self.pathloss, self.dimension)

    def require_planar(self, what: str) -> None:
        if self.dimension != 2:
            raise DimensionError(f"{what} is only implemented for dimension 2 (got {self.dimension})")


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    SERIES = "series"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class MomentResult:
    value: float
    error: float
    order: int
    tier: int
    method: Method
    evaluations: int = 0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    trunc_eps: float = 1e-9
    max_evals: int = 10**8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "trunc_eps", "max_evals"):
            if not getattr(self, name) > 0:
                raise ValueError(f"QuadConfig.{name} must be > 0")


@dataclass(frozen=True)
class MCConfig:
    """Simulation settings. ``None`` radii resolve against the model.

    The default window is ``6 / sqrt(pi * lambda_total)`` (36 mean cells) and
    the default guard band equals the window radius.
    """

    seed: int = 0
    realizations: int = 10_000
    points_per_realization: int = 200
    window_radius: float | None = None
    guard_radius: float | None = None

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.points_per_realization < 2:
            raise ValueError("points_per_realization must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.window_radius is not None and not self.window_radius > 0:
            raise ValueError("window_radius must be > 0")
        if self.guard_radius is not None:
            if not self.guard_radius > 0:
                raise ValueError("guard_radius must be > 0")
            if self.window_radius is not None and self.guard_radius < self.window_radius:
                raise ValueError("guard_radius must be >= window_radius")

    def resolve(self, model: NetworkModel) -> tuple[float, float]:
        window = self.window_radius
        if window is None:
            window = 6.0 / math.sqrt(math.pi * model.total_density)
        guard = self.guard_radius if self.guard_radius is not None else window
        if guard < window:
            raise ValueError("guard_radius must be >= window_radius")
        return window, guard


class Violation(NamedTuple):
    code: str
    detail: str


def validate(model: NetworkModel) -> list[Violation]:
    """Return every violated model invariant; empty list means valid."""
    out: list[Violation] = []
    if len(model.tiers) == 0:
        out.append(Violation("no_tiers", "at least one tier is required"))
    alpha = model.pathloss.alpha
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha)):
        out.append(Violation("alpha_out_of_range", f"alpha={alpha!r} is not a finite number"))
    elif alpha < 2 or (alpha == 2 and not (model.tiers and model.all_exponential())):
        out.append(
            Violation(
                "alpha_out_of_range",
                f"alpha={alpha} must exceed 2 (alpha == 2 only with exponential weights)",
            )
        )
    if not (isinstance(model.dimension, (int, np.integer)) and model.dimension >= 2):
        out.append(Violation("dimension_invalid", f"dimension={model.dimension!r} must be an integer >= 2"))
    for i, t in enumerate(model.tiers, start=1):
        if not (math.isfinite(t.density) and t.density > 0):
            out.append(Violation("density_invalid", f"tier {i}: density={t.density} must be finite and > 0"))
        if not isinstance(t.weights, WeightDistribution):
            out.append(Violation("weights_invalid", f"tier {i}: weights is not a WeightDistribution"))
            continue
        for msg in t.weights.validation_errors():
            out.append(Violation("weights_invalid", f"tier {i}: {msg}"))
    return out


def require_valid(model: NetworkModel) -> None:
    bad = validate(model)
    if bad:
        raise ValueError("invalid model: " + "; ".join(f"{v.code} ({v.detail})" for v in bad))
