"""Command-line front end: JSON model config in, CSV or JSON result table out.

Example config::

    {
      "alpha": 2.0,
      "dimension": 2,
      "tiers": [{"density": 1.0, "weights": {"type": "exponential", "rate": 1.0}}],
      "quad": {"rel_tol": 1e-6},
      "mc": {"seed": 7, "realizations": 10000},
      "voidprob": {"user_density": [0.1, 0.25], "max_order": 3}
    }

Command-line flags override the matching config entries. Exit codes: 0 ok,
2 invalid model or request, 3 a requested path failed to converge, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

from . import analytic, montecarlo, quadrature, voidprob
from .errors import (
    DimensionError,
    DomainError,
    InsufficientMoments,
    MomentDiverges,
    NoConvergence,
    WindowTooSmall,
)
from .model import (
    Deterministic,
    Exponential,
    MCConfig,
    NetworkModel,
    PathLoss,
    QuadConfig,
    TierSpec,
    validate,
)

__all__ = ["COLUMNS", "RunConfig", "ConfigError", "model_from_dict", "load_config", "run", "main"]

COLUMNS = ("tier", "order", "method", "value", "error", "evals", "converged", "seed")
COMMANDS = ("mean", "moment", "voidprob", "approx-compare", "validate")
METHODS = ("closed", "series", "quadrature", "mc", "all")

EXIT_OK, EXIT_INVALID, EXIT_NOCONV, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    """Malformed config or a request that does not apply to the model."""


@dataclass
class RunConfig:
    model: NetworkModel
    command: str = "moment"
    order: int = 2
    tier: int = 1
    method: str = "all"
    quad: QuadConfig = field(default_factory=QuadConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    output: str = "csv"
    output_path: str | None = None
    user_densities: tuple[float, ...] = (0.1,)
    max_order: int = 3


def _weights_from_dict(d: dict):
    kind = str(d.get("type", "")).lower()
    if kind in ("deterministic", "marpa"):
        return Deterministic(float(d.get("power", 1.0)))
    if kind in ("exponential", "mirpa"):
        return Exponential(float(d.get("rate", 1.0)), float(d.get("power", 1.0)))
    raise ConfigError(f"unknown weight type {d.get('type')!r}")


def model_from_dict(d: dict) -> NetworkModel:
    try:
        tiers = tuple(TierSpec(float(t["density"]), _weights_from_dict(t.get("weights", {}))) for t in d["tiers"])
        return NetworkModel(tiers, PathLoss(float(d["alpha"])), int(d.get("dimension", 2)))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad model config: missing or malformed {exc}") from exc


def load_config(data: dict, args: argparse.Namespace | None = None) -> RunConfig:
    """Merge a parsed JSON config with command-line overrides."""
    get = (lambda name: getattr(args, name, None)) if args is not None else (lambda name: None)
    try:
        quad = QuadConfig(**data.get("quad", {}))
        mc_kw = dict(data.get("mc", {}))
        if get("seed") is not None:
            mc_kw["seed"] = get("seed")
        mc = MCConfig(**mc_kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    vp = data.get("voidprob", {})
    dens = get("user_density") if get("user_density") is not None else vp.get("user_density", 0.1)
    dens = tuple(float(x) for x in (dens if isinstance(dens, (list, tuple)) else [dens]))

    def pick(name, key, default):
        v = get(name)
        return v if v is not None else data.get(key, default)

    cfg = RunConfig(
        model=model_from_dict(data),
        command=pick("command", "command", "moment"),
        order=int(pick("order", "order", 2)),
        tier=int(pick("tier", "tier", 1)),
        method=pick("method", "method", "all"),
        quad=quad,
        mc=mc,
        output=pick("format", "format", "csv"),
        output_path=pick("out", "out", None),
        user_densities=dens,
        max_order=int(vp.get("max_order", 3)),
    )
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.method not in METHODS:
        raise ConfigError(f"unknown method {cfg.method!r}")
    if cfg.output not in ("csv", "json"):
        raise ConfigError(f"unknown format {cfg.output!r}")
    if cfg.order < 1:
        raise ConfigError("order must be >= 1")
    return cfg


def _row(tier, order, method, value, error, evals, converged=True, seed=""):
    return {
        "tier": tier,
        "order": order,
        "method": method,
        "value": float(value),
        "error": float(error),
        "evals": int(evals),
        "converged": bool(converged),
        "seed": seed,
    }


def _moment_row(r, method):
    return _row(r.tier, r.order, method, r.value, r.error, r.evaluations, r.converged)


def _mc_row(est, tier, order, method="mc"):
    return _row(tier, order, method, est.value, est.std_error, est.realizations, True, est.seed)


class _Failure(Exception):
    """Carries the rows produced so far when a path fails to converge."""

    def __init__(self, rows, message):
        super().__init__(message)
        self.rows = rows


def _series_applicable(model: NetworkModel, p: int) -> bool:
    return model.K == 1 and model.alpha == 2 and model.all_exponential() and p == 2


def _exact_moment(cfg: RunConfig, p: int):
    """Most accurate deterministic moment available, with its method tag."""
    m, k = cfg.model, cfg.tier
    if p == 1:
        return analytic.mean_cell_area(m, k), "closed"
    if _series_applicable(m, p):
        return analytic.second_moment_mirpa_series(m.densities[0]), "series"
    return quadrature.moment(m, k, p, cfg.quad), "quadrature"


def _methods(cfg: RunConfig, applicable: Sequence[str]) -> list[str]:
    if cfg.method == "all":
        return list(applicable)
    if cfg.method not in applicable:
        raise ConfigError(f"method {cfg.method!r} does not apply to {cfg.command} here; try one of {list(applicable)}")
    return [cfg.method]


def _cmd_moment(cfg: RunConfig, p: int) -> list[dict]:
    m, k = cfg.model, cfg.tier
    applicable = []
    if p == 1:
        applicable.append("closed")
    if _series_applicable(m, p):
        applicable.append("series")
    applicable += ["quadrature", "mc"]
    rows = []
    for meth in _methods(cfg, applicable):
        try:
            if meth == "closed":
                rows.append(_moment_row(analytic.mean_cell_area(m, k), meth))
            elif meth == "series":
                rows.append(_moment_row(analytic.second_moment_mirpa_series(m.densities[0]), meth))
            elif meth == "quadrature":
                rows.append(_moment_row(quadrature.moment(m, k, p, cfg.quad), meth))
            else:
                rows.append(_mc_row(montecarlo.estimate_moment(m, k, p, cfg.mc), k, p))
        except NoConvergence as exc:
            partial = exc.partial if exc.partial is not None else math.nan
            rows.append(_row(k, p, meth, partial, math.nan, 0, False))
            raise _Failure(rows, str(exc)) from exc
        except WindowTooSmall as exc:
            raise _Failure(rows, str(exc)) from exc
    return rows


def _cmd_voidprob(cfg: RunConfig) -> list[dict]:
    m, k, P = cfg.model, cfg.tier, cfg.max_order
    rows = []
    need_series = cfg.method in ("all", "series", "quadrature")
    if need_series:
        moments, err = [1.0], 0.0
        for p in range(1, P + 1):
            try:
                r, _ = _exact_moment(cfg, p)
            except NoConvergence as exc:
                raise _Failure(rows, str(exc)) from exc
            moments.append(r.value)
            err = max(err, r.error)
    zeta = None
    if cfg.method in ("all", "closed"):
        try:
            zeta = analytic.gamma_zeta(m.tier(k).weights, m.alpha)
        except MomentDiverges:
            zeta = math.inf
    for lam0 in cfg.user_densities:
        if need_series:
            s = voidprob.void_prob_series(moments, lam0)
            # moment errors enter through the largest coefficient lambda_0^p / p!
            coef = max(lam0**p / math.factorial(p) for p in range(1, P + 1))
            rows.append(_row(k, P, f"series@{lam0:g}", s.value, s.bound + coef * err, s.terms_used, not s.clamped))
        if zeta is not None:
            bs = 1.0 / analytic.mean_cell_area(m, k).value
            rows.append(_row(k, 0, f"gamma_approx@{lam0:g}", analytic.void_prob_approx(lam0, bs, zeta), math.nan, 0))
        if cfg.method in ("all", "mc"):
            try:
                est = montecarlo.estimate_void_prob(m, lam0, cfg.mc, k=k)
            except WindowTooSmall as exc:
                raise _Failure(rows, str(exc)) from exc
            rows.append(_mc_row(est, k, 0, f"mc@{lam0:g}"))
    return rows


def _cmd_approx_compare(cfg: RunConfig, p: int) -> list[dict]:
    m, k = cfg.model, cfg.tier
    try:
        exact, tag = _exact_moment(cfg, p)
    except NoConvergence as exc:
        raise _Failure([], str(exc)) from exc
    try:
        zeta = analytic.gamma_zeta(m.tier(k).weights, m.alpha)
    except MomentDiverges:
        # the Gamma shape grows without bound as alpha -> 2 for exponential weights
        zeta = math.inf
    bs = 1.0 / analytic.mean_cell_area(m, k).value
    approx = analytic.gamma_moment(p, zeta, bs)
    diff = exact.value - approx
    return [
        _row(k, p, f"exact:{tag}", exact.value, exact.error, exact.evaluations, exact.converged),
        _row(k, p, "approx:gamma" if math.isfinite(zeta) else "approx:gamma_limit", approx, 0.0, 0),
        _row(k, p, "rel_error_vs_exact", diff / exact.value, abs(approx) * exact.error / exact.value**2, 0),
        _row(k, p, "rel_error_vs_approx", diff / approx, exact.error / approx, 0),
    ]


def execute(cfg: RunConfig) -> list[dict]:
    """Rows for the configured command; raises on invalid requests."""
    if cfg.command == "mean":
        return _cmd_moment(cfg, 1)
    if cfg.command == "moment":
        return _cmd_moment(cfg, cfg.order)
    if cfg.command == "voidprob":
        return _cmd_voidprob(cfg)
    if cfg.command == "approx-compare":
        return _cmd_approx_compare(cfg, cfg.order)
    return []


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def render(rows: Sequence[dict], fmt: str = "csv") -> str:
    if fmt == "json":
        body = [{c: (_fmt(r[c]) if isinstance(r[c], float) and not math.isfinite(r[c]) else r[c]) for c in COLUMNS} for r in rows]
        return json.dumps({"columns": list(COLUMNS), "rows": body}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def _emit(text: str, path: str | None, stdout) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute ``cfg``, write the table, and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    violations = validate(cfg.model)
    if violations:
        for v in violations:
            print(f"{v.code}: {v.detail}", file=stderr)
        return EXIT_INVALID
    if cfg.command == "validate":
        print("valid", file=stderr)
        return EXIT_OK
    code = EXIT_OK
    try:
        rows = execute(cfg)
    except _Failure as exc:
        print(f"error: {exc}", file=stderr)
        rows, code = exc.rows, EXIT_NOCONV
    except InsufficientMoments as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_NOCONV
    except (ConfigError, DomainError, DimensionError, MomentDiverges, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    try:
        _emit(render(rows, cfg.output), cfg.output_path, stdout)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=stderr)
        return EXIT_IO
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvarea", description="Cell-area moments and void probabilities for K-tier networks.")
    ap.add_argument("command_pos", nargs="?", choices=COMMANDS, metavar="COMMAND", help=f"one of {', '.join(COMMANDS)}")
    ap.add_argument("--config", required=True, help="JSON model/run config")
    ap.add_argument("--command", choices=COMMANDS)
    ap.add_argument("--order", type=int)
    ap.add_argument("--tier", type=int)
    ap.add_argument("--method", choices=METHODS)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--user-density", type=float, nargs="+", help="user densities for voidprob")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command_pos and args.command and args.command_pos != args.command:
        print("error: conflicting commands", file=sys.stderr)
        return EXIT_INVALID
    args.command = args.command or args.command_pos
    try:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(data, args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
