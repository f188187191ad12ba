"""Numerical evaluation of the p-point moment integrals.

Every path uses the same reduction. The exponent ``E(x_1..x_p)`` in
``E[V^p] = E_w int exp(-E(x)) dx^p`` is homogeneous of degree two in the
joint point configuration, so writing ``x = t * omega`` with ``omega`` on the
unit sphere of ``(R^2)^p`` gives ``int t^(2p-1) exp(-t^2 E(omega)) dt =
Gamma(p) / (2 E(omega)^p)``. The angle of ``x_1`` is fixed by rotation
invariance (factor ``2 pi``) and for ``p >= 2`` the angle of ``x_2`` is
restricted to ``[0, pi]`` by reflection (factor 2). What remains is an
angular integral of dimension ``2p - 2``, handled by adaptive cubature, plus
a tensor rule over the origin BS weights where they are random.

Densities are normalised to a total of one before integration and the result
rescaled by ``lambda_total ** -p``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NoConvergence
from .geometry import lens_area_arrays, union_area_arrays
from .model import (
    Deterministic,
    Exponential,
    Method,
    MomentResult,
    NetworkModel,
    QuadConfig,
)

__all__ = [
    "HTermInput",
    "h_term",
    "moment_mirpa_alpha2",
    "moment_marpa",
    "moment_general",
    "moment",
]

# elements per vectorised integrand block (points x weight nodes)
_BLOCK = 1 << 21
_MAX_WEIGHT_ORDER = {1: 256, 2: 64, 3: 16}


@dataclass(frozen=True)
class HTermInput:
    """One ``H_J^q`` evaluation.

    ``weights`` and ``points`` are the origin-BS weights and locations for
    all ``p`` points; ``subset`` holds the 1-based indices forming ``J``.
    """

    subset: tuple[int, ...]
    weights: tuple[float, ...]
    points: tuple[tuple[float, float], ...]
    mu_q: float

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(j) for j in self.subset))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in self.points))


def _h_arrays(ws, xs, ys, mu):
    """Closed-form ``H_J`` at alpha = 2 for the points listed (vectorised).

    ``pi / (mu sum b) * exp(-mu sum w + mu |sum b x|^2 / sum b)`` with
    ``b_j = w_j / |x_j|^2``.
    """
    betas = [w / (x * x + y * y) for w, x, y in zip(ws, xs, ys)]
    sb = sum(betas)
    sw = sum(ws)
    mx = sum(b * x for b, x in zip(betas, xs))
    my = sum(b * y for b, y in zip(betas, ys))
    return math.pi / (mu * sb) * np.exp(mu * ((mx * mx + my * my) / sb - sw))


def h_term(inp: HTermInput) -> float:
    """``int_{R^2} exp(-mu sum_{j in J} w_j |r - x_j|^2 / |x_j|^2) dr`` in closed form."""
    if not inp.subset:
        raise DomainError("subset J must be nonempty")
    if not inp.mu_q > 0:
        raise DomainError("mu_q must be > 0")
    ws, xs, ys = [], [], []
    for j in inp.subset:
        w = inp.weights[j - 1]
        x, y = inp.points[j - 1]
        if x == 0.0 and y == 0.0:
            raise DomainError(f"point x_{j} is at the origin")
        if not w > 0:
            raise DomainError(f"weight w_{j} must be > 0")
        ws.append(w)
        xs.append(x)
        ys.append(y)
    return float(_h_arrays(ws, xs, ys, inp.mu_q))


# -- angular parametrisation -------------------------------------------------


def _angular_domain(p: int):
    if p == 2:
        return [0.0, 0.0], [math.pi / 2, math.pi]
    if p == 3:
        return [0.0, 0.0, 0.0, 0.0], [math.pi / 2, math.pi / 2, math.pi, 2 * math.pi]
    raise ValueError(p)


def _angular_points(p: int, pts: np.ndarray):
    """Map angular coordinates to planar points and the surface Jacobian."""
    if p == 2:
        phi, th = pts[:, 0], pts[:, 1]
        r1, r2 = np.cos(phi), np.sin(phi)
        xs = [r1, r2 * np.cos(th)]
        ys = [np.zeros_like(r1), r2 * np.sin(th)]
        return xs, ys, r1 * r2
    a, b, t2, t3 = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    sa = np.sin(a)
    r1, r2, r3 = sa * np.cos(b), sa * np.sin(b), np.cos(a)
    xs = [r1, r2 * np.cos(t2), r3 * np.cos(t3)]
    ys = [np.zeros_like(r1), r2 * np.sin(t2), r3 * np.sin(t3)]
    return xs, ys, r1 * r2 * r3 * sa


def _prefactor(p: int) -> float:
    # 2 pi (angle of x_1) * reflection factor * Gamma(p) / 2
    return math.pi if p == 1 else 4.0 * math.pi * math.gamma(p) / 2.0


def _check_order(p: int, allowed: Sequence[int]) -> None:
    if p not in allowed:
        raise ValueError(f"order p={p} not supported here (allowed: {list(allowed)})")


def _integrate_angular(p, exponent, probs, cfg, label, width=None):
    """Integrate ``prefactor * sum_m probs_m * jac / E_m^p`` over the angular domain.

    ``exponent(xs, ys)`` returns an ``(N, M)`` array of normalised exponents,
    one column per weight node. Returns ``(value, error, evaluations)``.
    """
    probs = np.asarray(probs, dtype=float)
    m = probs.size
    width = width or m
    pref = _prefactor(p)
    if p == 1:
        xs, ys = [np.array([1.0])], [np.array([0.0])]
        e = exponent(xs, ys)
        return float(pref * (e[0] ** -1.0 @ probs)), 0.0, m

    counter = [0]

    def f(pts):
        n = pts.shape[0]
        out = np.empty(n)
        step = max(1, _BLOCK // width)
        for s in range(0, n, step):
            xs, ys, jac = _angular_points(p, pts[s : s + step])
            e = exponent(xs, ys)
            out[s : s + step] = jac * (e ** (-float(p)) @ probs)
        counter[0] += n * m
        return pref * out

    a, b = _angular_domain(p)
    rule = "gk21" if p == 2 else "genz-malik"
    per_region = 441 if p == 2 else 2 ** len(a) + 2 * len(a) ** 2 + 2 * len(a) + 1
    max_sub = max(8, int(cfg.max_evals // (per_region * max(m, 1))))
    res = integrate.cubature(
        f,
        a,
        b,
        rule=rule,
        rtol=0.5 * cfg.rel_tol,
        atol=cfg.abs_tol,
        max_subdivisions=max_sub,
        workers=1,
    )
    value, err = float(res.estimate), float(res.error)
    if res.status != "converged":
        raise NoConvergence(
            f"{label}: cubature stopped after {res.subdivisions} subdivisions "
            f"(estimate {value:.10g} +- {err:.3g})",
            partial=value,
        )
    return value, err, counter[0]


def _weight_refined(compute: Callable[[int], tuple], n0: int, nmax: int, cfg: QuadConfig, label: str):
    """Double the weight-rule order until successive estimates agree."""
    v_prev, e_prev, evals = compute(n0)
    n = 2 * n0
    while True:
        v, e, ev = compute(n)
        evals += ev
        diff = abs(v - v_prev)
        if diff <= max(cfg.abs_tol, cfg.rel_tol * abs(v)):
            return v, e + diff, evals, n
        if n >= nmax:
            raise NoConvergence(
                f"{label}: weight rule unstable at order {n} (change {diff:.3g})", partial=v
            )
        v_prev, n = v, 2 * n


def _normalised(model: NetworkModel):
    lam = model.densities
    tot = lam.sum()
    return lam / tot, float(tot)


def _result(value, err, p, k, evals, lam_tot, **diag):
    scale = lam_tot ** -p
    return MomentResult(
        value=value * scale,
        error=err * scale,
        order=p,
        tier=k,
        method=Method.QUADRATURE,
        evaluations=int(evals),
        converged=True,
        diagnostics=diag,
    )


# -- max average received power (deterministic weights) ---------------------


def moment_marpa(model: NetworkModel, k: int, p: int, cfg: QuadConfig | None = None) -> MomentResult:
    """p-th moment of the tier-k cell area with deterministic weights (p <= 3).

    The exponent is ``sum_q lambda_q |U_j C(x_j, (P_q/P_k)^(1/a) |x_j|)|``.
    """
    cfg = cfg or QuadConfig()
    _check_order(p, (1, 2, 3))
    model.require_planar("moment_marpa")
    if not model.all_deterministic():
        raise DomainError("moment_marpa needs deterministic weights on every tier")
    if not model.alpha > 2:
        raise DomainError("moment_marpa needs alpha > 2")
    lam, lam_tot = _normalised(model)
    pk = model.tier(k).weights.power
    ratios = np.array([(t.weights.power / pk) ** (1.0 / model.alpha) for t in model.tiers])

    def exponent(xs, ys):
        norms = [np.hypot(x, y) for x, y in zip(xs, ys)]
        tot = 0.0
        for lq, sq in zip(lam, ratios):
            tot = tot + lq * union_area_arrays(xs, ys, [sq * r for r in norms])
        return np.asarray(tot)[:, None]

    v, e, ev = _integrate_angular(p, exponent, [1.0], cfg, "moment_marpa")
    return _result(v, e, p, k, ev, lam_tot, path="marpa")


# -- max instantaneous received power, exponential weights, alpha = 2 -------


def _exp_nodes(p: int, n: int, scale: float, exponent: float = 1.0, trunc_eps: float = 1e-9):
    """Tensor rule for ``p`` i.i.d. exponential weights with mean ``scale``."""
    vals, probs = Exponential(1.0, scale).expectation_rule(n, exponent, trunc_eps)
    grids = np.meshgrid(*([vals] * p), indexing="ij")
    pgrid = np.ones([n] * p)
    for axis in range(p):
        shape = [1] * p
        shape[axis] = n
        pgrid = pgrid * probs.reshape(shape)
    return [g.ravel() for g in grids], pgrid.ravel()


def moment_mirpa_alpha2(model: NetworkModel, k: int, p: int, cfg: QuadConfig | None = None) -> MomentResult:
    """p-th moment with exponential weights at alpha = 2 from the ``H_J`` terms (p <= 3).

    The exponent is ``sum_q lambda_q sum_{J} (-1)^(|J|+1) H_J^q`` with
    ``mu_q = rate_q / power_q``; the tier-k origin weights are integrated with
    a Gauss-Laguerre tensor rule whose order is doubled until stable.
    """
    cfg = cfg or QuadConfig()
    _check_order(p, (1, 2, 3))
    model.require_planar("moment_mirpa_alpha2")
    if not model.all_exponential():
        raise DomainError("moment_mirpa_alpha2 needs exponential weights on every tier")
    if model.alpha != 2:
        raise DomainError("moment_mirpa_alpha2 is the alpha = 2 kernel")
    lam, lam_tot = _normalised(model)
    mus = [t.weights.rate / t.weights.power for t in model.tiers]
    wk = model.tier(k).weights
    subsets = [
        (s, c) for s in range(1, p + 1) for c in itertools.combinations(range(p), s)
    ]

    def compute(n):
        nodes, probs = _exp_nodes(p, n, wk.scale)

        def exponent(xs, ys):
            w = [nd[None, :] for nd in nodes]
            x = [a[:, None] for a in xs]
            y = [a[:, None] for a in ys]
            tot = 0.0
            for lq, mq in zip(lam, mus):
                for s, js in subsets:
                    h = _h_arrays([w[j] for j in js], [x[j] for j in js], [y[j] for j in js], mq)
                    tot = tot + (lq if s % 2 else -lq) * h
            return tot

        return _integrate_angular(p, exponent, probs, cfg, "moment_mirpa_alpha2")

    if p == 1:
        # integrand is w^(2/alpha) = w at alpha = 2: one Laguerre node pair is exact
        v, e, ev, n = (*compute(4), 4)
    else:
        v, e, ev, n = _weight_refined(compute, 4, _MAX_WEIGHT_ORDER[p], cfg, "moment_mirpa_alpha2")
    return _result(v, e, p, k, ev, lam_tot, path="mirpa_alpha2", weight_order=n)


# -- general association rule -------------------------------------------------


def _cross_polar(dist, lq, x1, y1, x2, y2, o1, o2, alpha, n, eps):
    """``lq * int S_1(|r-x_1|) S_2(|r-x_2|) dr`` for a continuous weight law.

    ``S_j(rho) = 1 - G_q((v_j rho / |x_j|)^alpha)``. Polar rule centred on
    ``x_1``: Gauss-Legendre in the radius, truncated where ``S_1`` or the
    reach of ``S_2`` falls below ``eps``, and the periodic trapezoid rule in
    the angle. Shapes: points ``(N, 1)``, outer nodes ``(1, M)``.
    """
    n1 = np.hypot(x1, y1)
    n2 = np.hypot(x2, y2)
    reach = float(dist.quantile(np.array([1.0 - eps]), eps)[0]) ** (1.0 / alpha)
    rmax = n1 * reach / o1
    t, wt = special.roots_legendre(n)
    rho = 0.5 * rmax[..., None] * (t + 1.0)
    wr = 0.5 * rmax[..., None] * wt * rho
    s1 = 1.0 - dist.cdf((o1[..., None] * rho / n1[..., None]) ** alpha)
    dx0, dy0 = (x1 - x2)[..., None], (y1 - y2)[..., None]
    c2 = (o2 / n2)[..., None] ** alpha
    acc = 0.0
    for psi in 2.0 * math.pi * np.arange(n) / n:
        dx = dx0 + rho * math.cos(psi)
        dy = dy0 + rho * math.sin(psi)
        s2 = 1.0 - dist.cdf(c2 * (dx * dx + dy * dy) ** (0.5 * alpha))
        acc = acc + (wr * s1 * s2).sum(axis=-1)
    return lq * acc * (2.0 * math.pi / n)


def moment_general(
    model: NetworkModel,
    k: int,
    p: int,
    cfg: QuadConfig | None = None,
    *,
    dispatch: bool = True,
) -> MomentResult:
    """p-th moment (p <= 2) for arbitrary weight laws.

    For each tier the area integral ``int [1 - prod_j G_q(w_j |r-x_j|^a/|x_j|^a)] dr``
    is split by inclusion-exclusion. Single-point terms equal
    ``pi |x_j|^2 w_j^(-2/a) E_q[W^(2/a)]``. The two-point term
    ``int (1-G_q(.))(1-G_q(.)) dr`` is the lens area of
    ``C(x_j, |x_j| (P_q / w_j)^(1/a))`` for a deterministic tier and a
    truncated polar tensor rule on the CDF otherwise (see :func:`_cross_polar`).
    The origin weights use the tier-k law's rule in ``v = w^(1/a)``; all
    rule orders (polar order twice the weight order) are doubled together
    until the result is stable.

    With ``dispatch`` (default) an all-exponential model at alpha = 2 is
    routed to :func:`moment_mirpa_alpha2`; ``dispatch=False`` evaluates this
    path anyway, which is how the two are cross-checked.
    """
    cfg = cfg or QuadConfig()
    _check_order(p, (1, 2))
    model.require_planar("moment_general")
    alpha = model.alpha
    if dispatch and alpha == 2 and model.all_exponential():
        return moment_mirpa_alpha2(model, k, p, cfg)
    if alpha < 2 or (alpha == 2 and dispatch):
        raise DomainError("moment_general needs alpha > 2")
    lam, lam_tot = _normalised(model)
    # raises MomentDiverges for laws whose tail makes the area integral infinite
    fm = np.array([t.weights.fractional_moment(2.0 / alpha) for t in model.tiers])
    wk = model.tier(k).weights
    inv_a = 1.0 / alpha
    single = float(math.pi * (lam * fm).sum())
    laws = [t.weights for t in model.tiers]

    def compute(n):
        v1, pv = wk.expectation_rule(n, inv_a, cfg.trunc_eps)
        if p == 1:
            outer, probs = [v1], pv
        else:
            g1, g2 = np.meshgrid(v1, v1, indexing="ij")
            outer = [g1.ravel(), g2.ravel()]
            probs = np.outer(pv, pv).ravel()

        def exponent(xs, ys):
            rsq = [(x * x + y * y)[:, None] for x, y in zip(xs, ys)]
            tot = single * sum(r2 / (v[None, :] ** 2) for r2, v in zip(rsq, outer))
            if p == 1:
                return tot
            x1, y1, x2, y2 = (a[:, None] for a in (xs[0], ys[0], xs[1], ys[1]))
            o1, o2 = outer[0][None, :], outer[1][None, :]
            for lq, law in zip(lam, laws):
                if isinstance(law, Deterministic):
                    u = law.power ** inv_a
                    lens = lens_area_arrays(
                        x1, y1, np.sqrt(rsq[0]) * u / o1, x2, y2, np.sqrt(rsq[1]) * u / o2
                    )
                    tot = tot - lq * lens
                else:
                    tot = tot - _cross_polar(law, lq, x1, y1, x2, y2, o1, o2, alpha, 2 * n, cfg.trunc_eps)
            return tot

        width = probs.size * (1 if p == 1 else n * 8)
        return _integrate_angular(p, exponent, probs, cfg, "moment_general", width)

    if all(isinstance(w, Deterministic) for w in laws):
        v, e, ev = compute(1)
        n = 1
    else:
        v, e, ev, n = _weight_refined(compute, 4, 128 if p == 1 else 32, cfg, "moment_general")
    return _result(
        v, e, p, k, ev, lam_tot, path="general", weight_order=n, trunc_eps=cfg.trunc_eps
    )


def moment(model: NetworkModel, k: int, p: int, cfg: QuadConfig | None = None) -> MomentResult:
    """Pick the most specific quadrature path for the model."""
    if model.all_deterministic() and p <= 3:
        return moment_marpa(model, k, p, cfg)
    if model.all_exponential() and model.alpha == 2 and p <= 3:
        return moment_mirpa_alpha2(model, k, p, cfg)
    return moment_general(model, k, p, cfg)
