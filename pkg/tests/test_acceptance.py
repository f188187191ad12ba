"""Acceptance suite: one test per criterion, each reporting a single pass/fail line.

The lines are printed in the "acceptance criteria" section of the pytest
terminal summary (see conftest.py).
"""

import math
import time

import numpy as np

from pvarea.analytic import GammaApprox, mean_cell_area, second_moment_mirpa_phi_integral, second_moment_mirpa_series
from pvarea.cli import RunConfig, execute
from pvarea.model import Deterministic, Exponential, MCConfig, NetworkModel, PathLoss, QuadConfig, TierSpec
from pvarea.montecarlo import estimate_moment, estimate_void_prob, origin_hits, sample_ppp, sample_realization
from pvarea.quadrature import moment_marpa, moment_mirpa_alpha2
from pvarea.voidprob import laplace_from_pdf, void_prob_series

REFERENCE_MIRPA_P2 = 1.122
# derived from the simulation oracle (criterion 5) and frozen
MARPA_P2_GOLDEN = 1.2801760


class Checks:
    def __init__(self):
        self.items = []

    def __call__(self, ok, text):
        self.items.append((bool(ok), text))

    @property
    def ok(self):
        return all(ok for ok, _ in self.items)

    def detail(self):
        return "; ".join(("" if ok else "FAILED ") + text for ok, text in self.items)

    def finish(self, report, number, name):
        report(number, name, self.ok, f"({self.detail()})")
        print(f"criterion {number} {'PASS' if self.ok else 'FAIL'}: {name} ({self.detail()})")
        assert self.ok, self.detail()


def single(law, alpha, density=1.0):
    return NetworkModel.single_tier(density, law, alpha)


def test_criterion_1_mirpa_series(report):
    c = Checks()
    t = time.perf_counter()
    s = second_moment_mirpa_series(1.0)
    dt = time.perf_counter() - t
    c(abs(s.value - REFERENCE_MIRPA_P2) <= 1e-3, f"series={s.value:.7f}")
    c(dt < 1.0, f"runtime={dt:.3f}s")
    phi = second_moment_mirpa_phi_integral(1.0)
    rel = abs(phi.value - s.value) / s.value
    c(rel <= 1e-4, f"phi-form rel diff={rel:.1e}")
    c.finish(report, 1, "second-moment series equals 1.122")


def test_criterion_2_mirpa_quadrature(report):
    c = Checks()
    vals = []
    for mu in (0.5, 1.0, 5.0):
        t = time.perf_counter()
        r = moment_mirpa_alpha2(single(Exponential(mu, 1.0), 2.0), 1, 2, QuadConfig())
        dt = time.perf_counter() - t
        vals.append(r)
        c(abs(r.value - REFERENCE_MIRPA_P2) / REFERENCE_MIRPA_P2 <= 0.01, f"mu={mu}: {r.value:.7f} in {dt:.2f}s")
        c(dt < 60.0, f"mu={mu} runtime")
    spread = max(r.value for r in vals) - min(r.value for r in vals)
    tol = 2 * max(r.error for r in vals) + 1e-9
    c(spread <= tol, f"mu spread={spread:.1e} (tol {tol:.1e})")
    c.finish(report, 2, "alpha=2 quadrature matches 1.122 and is free of mu")


def test_criterion_3_mean_closed_forms(report):
    c = Checks()
    exact = all(mean_cell_area(single(law, a, lam), 1).value == 1.0 / lam
                for lam in (0.3, 1.0, 7.0) for law in (Deterministic(2.0), Exponential(3.0, 0.5)) for a in (2.5, 4.0))
    c(exact, "K=1 mean is exactly 1/lambda")
    rng = np.random.default_rng(2024)
    worst = 0.0
    formula_worst = 0.0
    for _ in range(100):
        K = int(rng.integers(1, 5))
        alpha = float(rng.uniform(2.1, 6.0))
        lam = rng.uniform(0.01, 10.0, K)
        P = rng.uniform(0.1, 50.0, K)
        mixed = NetworkModel(
            tuple(TierSpec(l, Deterministic(p) if rng.random() < 0.5 else Exponential(rng.uniform(0.5, 2), p))
                  for l, p in zip(lam, P)),
            PathLoss(alpha),
        )
        total = math.fsum(l * mean_cell_area(mixed, k + 1).value for k, l in enumerate(lam))
        worst = max(worst, abs(total - 1.0))
        # all-MARPA and all-MIRPA (common rate): P_k^(2/a) / sum_q lambda_q P_q^(2/a)
        ref = P ** (2 / alpha) / np.sum(lam * P ** (2 / alpha))
        for laws in ([Deterministic(p) for p in P], [Exponential(1.7, p) for p in P]):
            m = NetworkModel(tuple(TierSpec(l, w) for l, w in zip(lam, laws)), PathLoss(alpha))
            got = np.array([mean_cell_area(m, k + 1).value for k in range(K)])
            formula_worst = max(formula_worst, float(np.max(np.abs(got / ref - 1.0))))
    c(worst <= 1e-12, f"max |sum lambda_k E[V_k] - 1| = {worst:.1e}")
    c(formula_worst <= 1e-12, f"power formula max rel diff = {formula_worst:.1e}")
    c.finish(report, 3, "mean-area closed forms")


def test_criterion_4_monte_carlo_oracle(report):
    c = Checks()
    cfg = MCConfig(seed=20240601, realizations=10_000)
    m1 = estimate_moment(single(Deterministic(1.0), 4.0), 1, 1, cfg)
    z1 = abs(m1.value - 1.0) / m1.std_error
    c(z1 <= 3.0, f"p=1: {m1.value:.4f} +/- {m1.std_error:.4f} (z={z1:.2f})")
    m2 = estimate_moment(single(Exponential(1.0, 1.0), 2.0), 1, 2, cfg)
    z2 = abs(m2.value - REFERENCE_MIRPA_P2) / m2.std_error
    c(z2 <= 3.0, f"alpha=2 p=2: {m2.value:.4f} +/- {m2.std_error:.4f} (z={z2:.2f})")
    c.finish(report, 4, "simulation reproduces the mean and 1.122")


def test_criterion_5_marpa_second_moment(report):
    c = Checks()
    model = single(Deterministic(1.0), 4.0)
    q = moment_marpa(model, 1, 2)
    mc = estimate_moment(model, 1, 2, MCConfig(seed=7, realizations=20_000))
    combined = math.hypot(q.error, mc.std_error)
    diff = abs(q.value - mc.value)
    c(diff <= 3 * combined, f"quadrature {q.value:.7f} vs simulation {mc.value:.4f} +/- {mc.std_error:.4f}")
    c(abs(q.value - MARPA_P2_GOLDEN) <= max(3 * q.error, 1e-6), f"frozen golden {MARPA_P2_GOLDEN}")
    c.finish(report, 5, "nearest-BS second moment agrees with simulation")


def test_criterion_6_twelve_percent(report):
    c = Checks()
    cfg = RunConfig(model=single(Exponential(1.0, 1.0), 2.0), command="approx-compare", order=2)
    rows = {r["method"]: r for r in execute(cfg)}
    exact = rows["exact:series"]["value"]
    approx = rows["approx:gamma_limit"]["value"]
    rel_exact = rows["rel_error_vs_exact"]["value"]
    rel_approx = rows["rel_error_vs_approx"]["value"]
    c(abs(exact - REFERENCE_MIRPA_P2) <= 1e-3, f"exact={exact:.4f}")
    c(approx == 1.0, f"approx limit={approx:.4f}")
    c(any(0.10 <= v <= 0.13 for v in (rel_exact, rel_approx)),
      f"rel error vs exact={rel_exact:.4f}, vs approx={rel_approx:.4f}")
    c.finish(report, 6, "Gamma approximation is about 12% off at alpha=2")


def test_criterion_7_void_probability(report):
    c = Checks()
    model = single(Deterministic(1.0), 4.0)
    loose = QuadConfig(rel_tol=1e-3)
    moments = [1.0] + [moment_marpa(model, 1, p, QuadConfig() if p < 3 else loose).value for p in (1, 2, 3)]
    for lam0 in (0.1, 0.25):
        s = void_prob_series(moments, lam0, provenance={"moments": "quadrature"})
        mc = estimate_void_prob(model, lam0, MCConfig(seed=99, realizations=10_000))
        z = abs(s.value - mc.value) / mc.std_error
        c(z <= 3.0, f"lambda0={lam0}: series {s.value:.5f} vs simulation {mc.value:.4f} +/- {mc.std_error:.4f}")
    worst = 0.0
    for zeta, lam in ((3.5, 1.0), (1.5, 2.0), (8.0, 0.5)):
        g = GammaApprox(zeta, lam)
        for lam0 in np.linspace(0.0, 4.0, 9):
            worst = max(worst, abs(laplace_from_pdf(g.pdf, lam0, QuadConfig(rel_tol=1e-10, abs_tol=1e-12)) - g.void_prob(lam0)))
    c(worst <= 1e-8, f"Laplace of Gamma pdf max err={worst:.1e}")
    c.finish(report, 7, "void probability series vs simulation, Laplace transform")


def test_criterion_8_properties(report):
    c = Checks()
    marpa = single(Deterministic(1.0), 4.0)
    mirpa = single(Exponential(1.0, 1.0), 2.0)
    for name, model, fn in (("marpa", marpa, moment_marpa), ("mirpa", mirpa, moment_mirpa_alpha2)):
        base = fn(model, 1, 2).value
        worst = max(abs(fn(model.with_densities([s]), 1, 2).value * s**2 / base - 1.0) for s in (0.5, 2.0, 4.0))
        c(worst <= 1e-5, f"{name} density scaling rel dev={worst:.1e}")
        c(base >= fn(model, 1, 1).value ** 2, f"{name} Jensen")

    same = True
    for law in (Deterministic(2.0), Exponential(1.0, 1.0)):
        model = single(law, 3.5)
        real = sample_realization(model, 1, 5.0, np.random.default_rng(3))
        pts = np.random.default_rng(4).uniform(-2.5, 2.5, size=(2000, 2))
        ref = origin_hits(pts, real, model, np.random.default_rng(5))
        for cscale in (0.01, 3.0, 1e3):
            same &= bool(np.array_equal(ref, origin_hits(pts, real, model.with_power_scale(cscale), np.random.default_rng(5))))
    c(same, "winners unchanged under common weight scaling")

    rng = np.random.default_rng(77)
    left, right = np.empty(10_000), np.empty(10_000)
    for i in range(10_000):
        pts = sample_ppp(1.0, 10.0, rng)
        left[i] = np.count_nonzero(pts[:, 0] < 0)
        right[i] = pts.shape[0] - left[i]
    n = left + right
    mean = 100.0 * math.pi
    c(abs(n.mean() - mean) <= 3 * math.sqrt(mean / n.size), f"PPP mean={n.mean():.2f}")
    fano = n.var(ddof=1) / n.mean()
    c(0.95 <= fano <= 1.05, f"Fano={fano:.3f}")
    rho = np.corrcoef(left, right)[0, 1]
    c(abs(rho) < 0.03, f"half-disk corr={rho:.3f}")
    c.finish(report, 8, "property suites")
