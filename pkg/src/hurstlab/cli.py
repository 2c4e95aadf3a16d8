"""Command-line front end.

Every subcommand writes its outputs and a ``manifest.json`` into
``--out-dir``. Passing a manifest back through ``--config`` replays the run.
Exit codes: 0 success, 1 configuration or validation error, 2 numerical
error, 3 failed verification verdict.
"""
from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as _rng
from .errors import (BudgetError, ConfigurationError, DomainError, ModelError, NumericalError,
                     ValidationError)
from .estimator import EstimatorConfig, estimate_hurst, parse_grid, simulate_observations
from .field import CovarianceModel, ProjectionSampler, sample_field_exact
from .fou import StationaryFouSampler, covariance_decay_profile
from .io import dumps, grid_rows, read_series, write_csv, write_json
from .sde import drift_from_name, euler_scheme, solve_reference
from .wick import centered_square_product_expansion, mixed_product_expansion
from . import regcheck

SEED_RULE = "Philox-4x64 stream keyed by seed + (task << 64); task = replicate index"
OBSERVATION_TASK = 2**32
CHECKS = ("holder-time", "hurst-direction", "rectangular", "sup-h", "pathwise", "sde-h", "ergodic-h", "v-decay")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in parse_grid(str(text))]


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=0, help="master seed")
    g.add_argument("--out-dir", default=".", help="output directory")
    g.add_argument("--threads", type=int, default=None, help="worker threads (fallback: HURSTLAB_THREADS)")
    g.add_argument("--strict", action="store_true", help="escalate warnings to errors")
    g.add_argument("--config", default=None, help="INI file or JSON run manifest")
    return p


def _drift_args(p):
    p.add_argument("--drift", default="linear", choices=["linear", "sine", "zero"])
    p.add_argument("--rate", type=float, default=1.0, help="linear rate, or kappa for the sine drift")
    p.add_argument("--c", type=float, default=0.5, help="sine amplitude")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="hurstlab", description="fBm field simulation and verification toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("sample-fbm", parents=[common], help="sample the (t, H) field")
    p.add_argument("--H", default="0.3,0.5,0.7", help="Hurst grid: list or start:step:end")
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1 / 64)
    p.add_argument("--out-step", type=float, default=None)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--mode", default="unit", choices=["unit", "raw"])
    p.add_argument("--sampler", default="projection", choices=["projection", "exact"])
    p.add_argument("--t-grid", default=None, help="times for the exact sampler")
    p.add_argument("--tol", type=float, default=1e-8, help="tail-variance budget")

    p = sub.add_parser("sample-fou", parents=[common], help="sample stationary fOU paths")
    p.add_argument("--H", default="0.3,0.7")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1 / 64)
    p.add_argument("--out-step", type=float, default=None)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("fou-cov", parents=[common], help="symmetrized fOU covariance profile")
    p.add_argument("--H", type=float, default=0.3)
    p.add_argument("--K", type=float, default=0.7)
    p.add_argument("--s-grid", default="0:1:20")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("simulate-sde", parents=[common], help="reference solution of the SDE")
    p.add_argument("--H", default="0.5,0.7")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--delta", type=float, default=1 / 64)
    p.add_argument("--out-step", type=float, default=None)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=1)
    _drift_args(p)

    p = sub.add_parser("euler", parents=[common], help="coarse Euler scheme")
    p.add_argument("--H", default="0.5,0.7")
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--m0", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=1)
    _drift_args(p)

    p = sub.add_parser("estimate-hurst", parents=[common], help="Wasserstein grid-argmin estimator")
    p.add_argument("--grid", default="0.30:0.05:0.95")
    p.add_argument("--p", type=int, default=2, choices=[1, 2])
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--N", type=int, default=20000)
    p.add_argument("--crn", default="on", choices=["on", "off"])
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--observed", default=None, help="CSV of observations (column 'value')")
    p.add_argument("--H-true", type=float, default=0.7, help="simulate observations when --observed is absent")
    _drift_args(p)

    p = sub.add_parser("verify", parents=[common], help="run a bound check")
    p.add_argument("--check", required=True, choices=CHECKS)
    p.add_argument("--H", type=float, default=0.5)
    p.add_argument("--K", type=float, default=0.6)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--lags", default="0.01,0.03,0.1,0.3,1,3")
    p.add_argument("--t-grid", default=None)
    p.add_argument("--dts", default=None)
    p.add_argument("--h-grid", default=None)
    p.add_argument("--deltas", default="0.2,0.1,0.05")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--mode", default="continuous", choices=["continuous", "discrete"])
    p.add_argument("--increment", default="simple", choices=["simple", "rectangular"])
    p.add_argument("--t-max", type=float, default=32.0)
    p.add_argument("--factor", type=float, default=10.0, help="allowed multiple of the reference ratio")
    _drift_args(p)

    p = sub.add_parser("wick", parents=[common], help="pair-partition expansion")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--kind", default="centered", choices=["centered", "mixed"])

    p = sub.add_parser("covariance", parents=[common], help="E B_u^H B_v^K by quadrature")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--mode", default="unit", choices=["unit", "raw"])
    p.add_argument("--tol", type=float, default=1e-8)
    return parser


# ---------------------------------------------------------------------------
# configuration files


def load_config(path: str) -> tuple[str | None, dict]:
    """Return ``(subcommand or None, {section: {key: value}})``.

    JSON manifests carry one resolved section; INI files may hold ``[global]``
    plus one section per subcommand.
    """
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"--config: file {path} not found")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"--config: malformed JSON ({exc})") from exc
        if "subcommand" in data and "config" in data:
            return data["subcommand"], {data["subcommand"]: data["config"]}
        return None, {"global": data}
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"--config: malformed file ({exc})") from exc
    return None, {s: dict(cp.items(s)) for s in cp.sections()}


def _coerce(action, value):
    if isinstance(action, argparse._StoreTrueAction):
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")
    if value is None or action.type is None or not isinstance(value, str):
        return value
    return action.type(value)


def _apply_config(subparser, sections: dict, subcommand: str):
    actions = {a.dest: a for a in subparser._actions}
    merged = {}
    for name in ("global", subcommand):
        merged.update(sections.get(name, {}))
    defaults = {}
    for key, value in merged.items():
        dest = key.replace("-", "_")
        if dest in ("config", "subcommand"):
            continue
        if dest not in actions:
            raise ConfigurationError(f"--config: unknown key {key!r} for {subcommand}")
        action = actions[dest]
        try:
            defaults[dest] = _coerce(action, value)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"--config: bad value for {key!r}: {value!r}") from exc
        if action.choices is not None and defaults[dest] not in action.choices:
            raise ConfigurationError(f"--config: {key!r} must be one of {list(action.choices)}")
        action.required = False
    subparser.set_defaults(**defaults)


# ---------------------------------------------------------------------------
# handlers


class Context:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out_dir)
        self.outputs: list[str] = []
        self.threads = _rng.resolve_threads(args.threads)
        self.extra: dict = {}

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.outputs.append(name)

    def json(self, name, obj):
        write_json(self.out / name, obj)
        self.outputs.append(name)


def _times(t_max, step):
    n = int(round(t_max / step))
    return np.arange(n + 1) * step


def _stride(fine, coarse):
    k = round(coarse / fine)
    if k < 1 or abs(coarse / fine - k) > 1e-9 * k:
        raise ConfigurationError(f"--out-step {coarse} is not a multiple of the step {fine}")
    return k


def cmd_sample_fbm(a, ctx):
    h = _floats(a.H)
    if a.sampler == "exact":
        t = _floats(a.t_grid) if a.t_grid else _times(a.t_max, a.out_step or a.step).tolist()
        f = sample_field_exact(t, h, a.dim, a.seed, a.mode)
        meta = {"tolerances": {"quadrature": 1e-8}, "step": None, "L": None}
    else:
        s = ProjectionSampler(h, a.t_max, a.step, dim=a.dim, mode=a.mode, tol=a.tol)
        out = _times(a.t_max, a.out_step or a.step)
        _stride(a.step, a.out_step or a.step)
        f = s.sample(a.seed, 0, out)
        meta = {"step": a.step, "L": s.geometry.L, "tolerances": {"tail_variance": a.tol,
                "achieved_tail_variance": s.tail_bound}, "noise": s.geometry.describe()}
    ctx.csv("field.csv", ["t", "H", "component", "value"], grid_rows(f.t_grid, f.h_grid, f.values))
    md = f.metadata()
    md.update(meta)
    md["sampler"] = f.sampler
    ctx.json("field.json", md)
    return 0


def cmd_sample_fou(a, ctx):
    h = _floats(a.H)
    s = StationaryFouSampler(h, a.t_max, a.step, dim=a.dim, tol=a.tol)
    path = s.sample(a.seed)
    k = _stride(a.step, a.out_step or a.step)
    keep = slice(None, None, k)
    ctx.csv("fou.csv", ["t", "H", "component", "value"],
            grid_rows(path.t_grid[keep], path.h_grid, path.values[keep]))
    ctx.json("fou.json", path.metadata())
    return 0


def cmd_fou_cov(a, ctx):
    prof = covariance_decay_profile(a.H, a.K, _floats(a.s_grid), a.tol)
    ctx.csv("fou_cov.csv", ["s", "r", "envelope"], prof.rows())
    ctx.json("fou_cov.json", {"H": a.H, "K": a.K, "h_max": prof.h_max, "c_hat": prof.c_hat,
                              "tol": a.tol, "tail_weight": 1e-10,
                              "r": "absolute symmetrized covariance |E(U_0^H U_s^K + U_s^H U_0^K)|"})
    return 0


def _drift(a):
    return drift_from_name(a.drift, a.rate, a.c)


def cmd_simulate_sde(a, ctx):
    spec = _drift(a)
    h = _floats(a.H)
    s = ProjectionSampler(h, a.t_max, a.delta, dim=a.dim)
    path = solve_reference(s.sample(a.seed), spec, a.y0, a.delta, a.out_step or a.delta, strict=a.strict)
    ctx.csv("sde.csv", ["t", "H", "component", "value"], grid_rows(path.t_grid, path.h_grid, path.values))
    ctx.json("sde.json", {"drift": spec.describe(), "delta": a.delta, "L": s.geometry.L,
                          "tail_bound": s.tail_bound, "seed": a.seed, "h_grid": h})
    return 0


def cmd_euler(a, ctx):
    spec = _drift(a)
    h = _floats(a.H)
    s = ProjectionSampler(h, a.N * a.gamma, a.gamma, dim=a.dim)
    path = euler_scheme(s.sample(a.seed), spec, a.m0, a.gamma, a.N)
    ctx.csv("euler.csv", ["t", "H", "component", "value"], grid_rows(path.t_grid, path.h_grid, path.values))
    ctx.json("euler.json", {"drift": spec.describe(), "gamma": a.gamma, "gamma0": spec.gamma0(),
                            "N": a.N, "L": s.geometry.L, "seed": a.seed, "h_grid": h})
    return 0


def cmd_estimate(a, ctx):
    spec = _drift(a)
    cfg = EstimatorConfig(grid=parse_grid(a.grid), p=a.p, n=a.n, N=a.N, gamma=a.gamma, h=a.h,
                          crn=a.crn == "on", burn_in=a.burn_in)
    if a.observed:
        obs = read_series(Path(a.observed))
        source = {"observed_file": a.observed}
    else:
        obs = simulate_observations(a.H_true, spec, cfg, a.seed, OBSERVATION_TASK)
        source = {"H_true": a.H_true, "observation_task": OBSERVATION_TASK}
    res = estimate_hurst(obs, spec, cfg, a.seed)
    out = res.to_dict()
    out.update(config=cfg.to_dict(), drift=spec.describe(), source=source, burn_in_used=cfg.burn(spec))
    ctx.json("estimate.json", out)
    ctx.csv("profile.csv", ["K", "d"], [(r["K"], r["d"]) for r in res.profile()])
    print(format(res.h_hat, ".12g"))
    return 0


def cmd_verify(a, ctx):
    spec = _drift(a)
    c = a.check
    th = ctx.threads
    if c == "holder-time":
        fit = regcheck.holder_time_exponent(a.H, _floats(a.lags), a.paths, a.seed, threads=th)
        fit.threshold = None
        margin = max(0.05, 3 * fit.slope_se)
        fit.rule = f"|slope - 2H| <= max(0.05, 3 SE) = {margin:.4f}"
        fit.passed = bool(abs(fit.slope - 2 * a.H) <= margin)
        ctx.json("report.json", fit.to_dict())
        ctx.csv("ratios.csv", ["lag", "moment", "se"], zip(fit.lags, fit.moments, fit.moment_se))
        print(f"slope {fit.slope:.4f} (expected {2 * a.H:.4f})")
        return 0 if fit.passed else 3
    if c == "v-decay":
        fit = regcheck.v_moment_decay(a.H, a.K, a.p, _floats(a.t_grid) if a.t_grid else None,
                                      a.seeds or 1000, a.step or 1 / 128, a.seed, threads=th)
        ctx.json("report.json", fit.to_dict())
        ctx.csv("ratios.csv", ["t", "moment", "se"],
                zip(fit.lags, fit.moments, fit.moment_se or [0.0] * len(fit.lags)))
        print(f"slope {fit.slope:.4f} threshold {fit.threshold}")
        return 0 if fit.passed else 3
    if c == "hurst-direction":
        t = _floats(a.t_grid or "0.1,0.5,1,2,5,10")
        rep = regcheck.hurst_direction_bound(t, [(a.H, a.K)], factor=a.factor)
    elif c == "rectangular":
        dts = _floats(a.dts or "0.1,0.5,1,2,5")
        rep = regcheck.rectangular_bound([(1.0, 1.0 + d) for d in dts], [(a.H, a.K)], factor=a.factor)
    elif c == "sup-h":
        rep = regcheck.sup_h_moment(_floats(a.dts) if a.dts else (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0),
                                    a.q, _floats(a.h_grid) if a.h_grid else None, a.paths, a.seed,
                                    step=a.step, factor=a.factor, threads=th)
    elif c == "pathwise":
        h = _floats(a.h_grid) if a.h_grid else np.linspace(0.3, 0.7, 8).tolist()
        step = a.step or 1.0
        s = ProjectionSampler(h, a.t_max, step)
        draws = _rng.replicate(lambda k: s.sample(a.seed, k), a.seeds or 100, th)
        res = regcheck.pathwise_holder_constant(draws, s.geometry.times(), h, a.eps, a.increment)
        rep = res.report
        rep.extra["quantiles"] = res.quantiles
    elif c == "sde-h":
        rep = regcheck.sde_h_regularity(spec, a.H, _floats(a.deltas), _floats(a.t_grid or "1,5,20"),
                                        a.seeds or 200, a.eps, a.step or 1 / 64, seed=a.seed, threads=th)
    elif c == "ergodic-h":
        rep = regcheck.ergodic_h_regularity(spec, a.H, _floats(a.deltas), a.horizon, a.gamma, a.seeds or 20,
                                            a.mode, a.step or 1 / 32, seed=a.seed, threads=th)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigurationError(f"unknown check {c}")
    ctx.json("report.json", rep.to_dict())
    rows = rep.ratio_rows()
    header = list(rows[0].keys()) if rows else ["ratio"]
    ctx.csv("ratios.csv", header, [[r[k] for k in header] for r in rows])
    print(f"{rep.bound_id}: verdict {'pass' if rep.verdict else 'fail'}")
    return 0 if rep.verdict else 3


def cmd_wick(a, ctx):
    fn = centered_square_product_expansion if a.kind == "centered" else mixed_product_expansion
    exp = fn(a.n)
    terms = exp.to_json()
    payload = {"n": a.n, "kind": a.kind, "n_terms": len(terms), "terms": terms}
    ctx.json("wick.json", payload)
    sys.stdout.write(dumps(payload))
    return 0


def cmd_covariance(a, ctx):
    model = CovarianceModel(a.tol)
    value = model.cov(a.u, a.H, a.v, a.K, a.mode)
    ctx.json("covariance.json", {"u": a.u, "v": a.v, "H": a.H, "K": a.K, "mode": a.mode,
                                 "tol": a.tol, "value": value})
    print(format(value, ".10g"))
    return 0


HANDLERS = {
    "sample-fbm": cmd_sample_fbm, "sample-fou": cmd_sample_fou, "fou-cov": cmd_fou_cov,
    "simulate-sde": cmd_simulate_sde, "euler": cmd_euler, "estimate-hurst": cmd_estimate,
    "verify": cmd_verify, "wick": cmd_wick, "covariance": cmd_covariance,
}


_VALUED = {"--seed", "--out-dir", "--threads", "--config"}


def _hoist_globals(argv):
    """Move global flags given before the subcommand to just after it."""
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in HANDLERS:
            return [tok] + argv[:i] + argv[i + 1:], tok
        i += 2 if tok in _VALUED else 1
    return argv, None


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "subcommand")}


def run(argv=None) -> int:
    """Execute one subcommand; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.time()
    try:
        parser = build_parser()
        pre = _Parser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        sections, cfg_sub = {}, None
        if known.config:
            cfg_sub, sections = load_config(known.config)
        argv, sub = _hoist_globals(argv)
        if sub is None and cfg_sub:
            argv = [cfg_sub] + argv
            sub = cfg_sub
        if sub is None:
            parser.print_usage(sys.stderr)
            print("hurstlab: a subcommand is required", file=sys.stderr)
            return 1
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        if sections:
            _apply_config(subparsers.choices[sub], sections, sub)
        args = parser.parse_args(argv)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        ctx = Context(args)
        code = HANDLERS[args.subcommand](args, ctx)
    except (ConfigurationError, ValidationError, DomainError, BudgetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ModelError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "toolkit_version": __version__,
        "subcommand": args.subcommand,
        "config": _resolved(args),
        "seed": args.seed,
        "seed_rule": SEED_RULE,
        "outputs": ctx.outputs,
        "wall_clock": {"started": _dt.datetime.fromtimestamp(started, _dt.timezone.utc).isoformat(),
                       "elapsed_seconds": round(time.time() - started, 6)},
        "exit_code": code,
    }
    write_json(ctx.out / "manifest.json", manifest)
    return code


def main():  # pragma: no cover - thin wrapper
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
