"""Monte Carlo and quadrature checks of the regularity and moment bounds.

Every check returns a self-contained report: the evaluated points, the
statistic, the bound expression, their ratio, standard errors where the
statistic is a Monte Carlo mean, and a declared rule. The verdict is a pure
function of those stored numbers (see :func:`apply_rule`).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import rng as _rng
from .errors import ConfigurationError, ValidationError
from .field.covariance import CovarianceModel, default_model
from .field.kernels import HurstRange, resolve_mode
from .field.samplers import ExactFieldSampler, ProjectionSampler
from .fou import StationaryFouSampler, stationary_sq_diff
from .sde import DriftSpec, ergodic_mean_sq_diff, euler_scheme, solve_reference

BETA = 0.9
SAFETY = 2.0
SE_MULT = 3.0


def _ratio(stat, bound):
    stat = np.asarray(stat, dtype=float)
    bound = np.asarray(bound, dtype=float)
    out = np.zeros(np.broadcast(stat, bound).shape)
    nz = bound != 0
    out[nz] = (stat * np.ones_like(out))[nz] / (bound * np.ones_like(out))[nz]
    return out  # 0/0 is reported as 0 (degenerate point, statistic vanishes too)


@dataclass
class BoundCheckReport:
    """Evidence for one bound: ratios statistic / bound plus a declared rule."""

    bound_id: str
    points: list
    statistics: list
    bounds: list
    ratios: list
    std_errors: list
    rule: dict
    reference: int | None
    c_hat: float
    verdict: bool
    extra: dict = field(default_factory=dict)

    def recompute(self) -> bool:
        return apply_rule(self.rule, self.ratios, self.std_errors, self.reference, self.points)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def ratio_rows(self) -> list[dict]:
        rows = []
        for p, s, b, r, e in zip(self.points, self.statistics, self.bounds, self.ratios, self.std_errors):
            row = dict(p)
            row.update(statistic=s, bound=b, ratio=r, se=e)
            rows.append(row)
        return rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def apply_rule(rule: dict, ratios, std_errors, reference, points) -> bool:
    """Verdict of a declared rule on stored ratios (pure function)."""
    r = np.asarray(ratios, dtype=float)
    se = np.asarray(std_errors, dtype=float)
    name = rule["name"]
    if name == "bounded-relative":
        k = rule.get("se_mult", SE_MULT)
        ref = r[reference] + k * se[reference]
        return bool(np.max(r - k * se) <= rule["factor"] * ref)
    if name == "halving-fraction":
        seeds = np.asarray([p["seed"] for p in points])
        ok_seed = [bool(np.all(r[seeds == s] <= rule["threshold"])) for s in np.unique(seeds)]
        return bool(np.mean(ok_seed) >= rule["min_fraction"])
    if name == "quantile-stability":
        q_half, q_full = r
        if q_half == 0.0:
            return bool(q_full == 0.0)
        return bool(abs(q_full / q_half - 1.0) < rule["max_change"])
    if name == "h-stability":
        k = rule.get("se_mult", SE_MULT)
        f = rule["factor"]
        ts = sorted({p["t"] for p in points})
        deltas = sorted({p["delta"] for p in points}, reverse=True)
        idx = {(p["t"], p["delta"]): i for i, p in enumerate(points)}
        for t in ts:
            for d1, d2 in zip(deltas[:-1], deltas[1:]):
                i, j = idx[(t, d1)], idx[(t, d2)]
                lo = (r[j] - k * se[j]) / (r[i] + k * se[i])
                hi = (r[j] + k * se[j]) / max(r[i] - k * se[i], 1e-300)
                if lo > f or hi < 1.0 / f:
                    return False
        late = [t for t in ts if t >= rule["t_mix"]]
        for d in deltas:
            base = idx[(late[0], d)]
            for t in late[1:]:
                i = idx[(t, d)]
                if r[i] - k * se[i] > f * (r[base] + k * se[base]):
                    return False
        return True
    raise ValidationError(f"unknown rule {name!r}")


def _bounded_report(bound_id, points, stat, bound, se, reference, factor=10.0, extra=None):
    ratios = _ratio(stat, bound)
    se_r = _ratio(se, bound)
    rule = {"name": "bounded-relative", "factor": factor, "se_mult": SE_MULT,
            "statement": f"max(ratio - {SE_MULT:g} SE) <= {factor:g} * (reference ratio + {SE_MULT:g} SE)"}
    verdict = apply_rule(rule, ratios, se_r, reference, points)
    return BoundCheckReport(bound_id, points, list(map(float, stat)), list(map(float, bound)),
                            ratios.tolist(), se_r.tolist(), rule, reference, float(ratios[reference]),
                            verdict, extra or {})


def _nearest(values, target):
    return int(np.argmin(np.abs(np.asarray(values, dtype=float) - target)))


# ---------------------------------------------------------------------------
# regressions


@dataclass
class HolderRegression:
    """OLS of log moment against log lag."""

    lags: list
    moments: list
    slope: float
    slope_se: float
    intercept: float
    residuals: list
    moment_se: list | None = None
    threshold: float | None = None
    rule: str | None = None
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    def recompute(self) -> bool | None:
        fit = holder_regression(self.lags, self.moments)
        if self.threshold is None:
            return None
        return bool(fit.slope <= self.threshold)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def holder_regression(lags, moments, moment_se=None) -> HolderRegression:
    """Least squares fit of ``log moment = intercept + slope * log lag``."""
    x = np.log(np.asarray(lags, dtype=float))
    m = np.asarray(moments, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise ValidationError("regression needs at least two distinct lags")
    if np.any(m <= 0):
        raise ValidationError("moments must be positive for a log-log fit")
    y = np.log(m)
    fit = stats.linregress(x, y)
    resid = y - (fit.intercept + fit.slope * x)
    se = float(fit.stderr) if x.size > 2 else 0.0
    return HolderRegression(np.asarray(lags, dtype=float).tolist(), m.tolist(), float(fit.slope), se, float(fit.intercept),
                            resid.tolist(), None if moment_se is None else list(map(float, moment_se)))


def holder_time_exponent(H: float, lags: Sequence[float] | None = None, paths: int = 2000, seed: int = 0,
                         mode: str = "unit", model: CovarianceModel | None = None,
                         base_times: Sequence[float] = (0.0, 1.0), threads: int | None = None) -> HolderRegression:
    """Slope of ``log E(B_{t+l} - B_t)^2`` against ``log l`` from exact draws.

    Increments are pooled over ``base_times``; the expected slope is ``2H``.
    """
    lags = np.asarray([0.01, 0.03, 0.1, 0.3, 1.0, 3.0] if lags is None else lags, dtype=float)
    if len(lags) < 4 or np.log10(lags.max() / lags.min()) < 1.0:
        raise ValidationError("need >= 4 lags spanning at least one decade")
    if paths < 1000:
        raise ValidationError("need at least 1000 paths")
    times = sorted({round(b + l, 12) for b in base_times for l in lags} | {float(b) for b in base_times})
    sampler = ExactFieldSampler(times, [H], 1, mode, model)
    tix = {t: i for i, t in enumerate(times)}
    pairs = [[(tix[round(b + l, 12)], tix[float(b)]) for b in base_times] for l in lags]

    def one(k):
        v = sampler.draw_values(seed, k)[:, 0, 0]
        return [np.mean([(v[i] - v[j]) ** 2 for i, j in row]) for row in pairs]

    sq = np.array(_rng.replicate(one, paths, threads))
    mean, se = _rng.mean_and_se(sq)
    fit = holder_regression(lags, mean, se)
    fit.extra = {"H": H, "expected_slope": 2 * H, "paths": paths, "seed": seed, "base_times": list(base_times)}
    return fit


# ---------------------------------------------------------------------------
# quadrature bounds


def hurst_direction_bound(t_grid, h_pairs, mode: str = "unit", model: CovarianceModel | None = None,
                          factor: float = 10.0) -> BoundCheckReport:
    """Ratios ``E(B_t^H - B_t^H')^2 / [(t^{2H} v t^{2H'})(log^2 t + 1)|H-H'|^2]``.

    The reference point is the grid time closest to 1 with the first pair,
    where the bound reduces to ``|H-H'|^2``.
    """
    model = model or default_model()
    points, stat, bound = [], [], []
    for H, H2 in h_pairs:
        for t in t_grid:
            points.append({"t": float(t), "H": float(H), "H2": float(H2)})
            stat.append(model.increment_second_moment(t, H, t, H2, mode) if H != H2 else 0.0)
            tt = float(t)
            lg = math.log(tt) ** 2 + 1 if tt > 0 else math.inf
            b = max(tt ** (2 * H), tt ** (2 * H2)) * lg * (H - H2) ** 2 if tt > 0 else 0.0
            bound.append(b)
    ref = _nearest([p["t"] for p in points[: len(t_grid)]], 1.0)
    return _bounded_report("hurst-direction", points, stat, bound, [0.0] * len(stat), ref, factor,
                           {"mode": resolve_mode(mode), "quadrature_tol": model.tol})


def rectangular_bound(t_pairs, h_pairs, mode: str = "unit", model: CovarianceModel | None = None,
                      factor: float = 10.0) -> BoundCheckReport:
    """Ratios of the rectangular second moment to the product bound."""
    model = model or default_model()
    points, stat, bound = [], [], []
    for H, H2 in h_pairs:
        for t, t2 in t_pairs:
            dt = abs(t2 - t)
            points.append({"t": float(t), "t2": float(t2), "H": float(H), "H2": float(H2)})
            stat.append(model.rectangular_increment_second_moment(t, t2, H, H2, mode))
            b = max(dt ** (2 * H), dt ** (2 * H2)) * (math.log(dt) ** 2 + 1) * (H - H2) ** 2 if dt > 0 else 0.0
            bound.append(b)
    ref = _nearest([abs(p["t2"] - p["t"]) for p in points[: len(t_pairs)]], 1.0)
    return _bounded_report("rectangular", points, stat, bound, [0.0] * len(stat), ref, factor,
                           {"mode": resolve_mode(mode), "quadrature_tol": model.tol})


# ---------------------------------------------------------------------------
# Monte Carlo bounds


def sup_h_moment(dts=(0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0), q: float = 2.0,
                 h_grid=None, paths: int = 1000, seed: int = 0, t0: float = 0.0, step: float | None = None,
                 mode: str = "unit", factor: float = 10.0, threads: int | None = None) -> BoundCheckReport:
    """``E max_H |B_{t0+dt}^H - B_{t0}^H|^q`` against ``(dt^{q h_min} v dt^{q h_max})(|log dt|^q + 1)``."""
    h_grid = np.linspace(0.3, 0.7, 16) if h_grid is None else np.asarray(h_grid, dtype=float)
    dts = np.asarray(dts, dtype=float)
    if paths < 1000:
        raise ValidationError("need at least 1000 paths")
    pos = dts[dts > 0]
    step = float(pos.min()) if step is None and pos.size else (step or 1.0)
    hr = HurstRange.of(h_grid)
    sampler = ProjectionSampler(h_grid, t0 + max(dts.max(), step), step, mode=mode)
    i0 = round(t0 / step)
    idx = np.array([round((t0 + d) / step) for d in dts])
    def one(k):
        v = sampler.sample(seed, k).values[:, :, 0]
        return np.max(np.abs(v[idx] - v[i0][None, :]) ** q, axis=1)

    samples = np.array(_rng.replicate(one, paths, threads))
    mean, se = _rng.mean_and_se(samples)
    bound = np.array([max(d ** (q * hr.h_min), d ** (q * hr.h_max)) * (abs(math.log(d)) ** q + 1) if d > 0 else 0.0
                      for d in dts])
    points = [{"dt": float(d)} for d in dts]
    ref = _nearest(dts, 1.0)
    return _bounded_report("sup-h-moment", points, mean, bound, se, ref, factor,
                           {"q": q, "h_grid": h_grid.tolist(), "paths": paths, "seed": seed, "t0": t0,
                            "step": step, "tail_bound": sampler.tail_bound})


@dataclass
class PathwiseConstant:
    """Per-seed random constants and their quantile-stability report."""

    constants: np.ndarray
    constants_half: np.ndarray
    quantiles: dict
    report: BoundCheckReport


def _pair_constant(vals, t, h, eps, mode, hr):
    """Max normalized increment of one draw, ``vals[time, hurst]``."""
    expo = 2 * eps * hr.h_min + hr.h_max
    if mode == "simple":
        tt = np.repeat(t, len(h))
        hh = np.tile(h, len(t))
        v = vals.reshape(-1)
        i, j = np.triu_indices(len(v), k=1)
        tp = np.maximum(tt[i], tt[j])
        base = np.minimum(1.0, np.abs(tt[i] - tt[j]) ** hr.h_min) + np.abs(hh[i] - hh[j])
        ratio = np.abs(v[i] - v[j]) / ((1 + tp) ** expo * base ** (1 - eps))
        return float(ratio.max()) if ratio.size else 0.0
    if mode == "rectangular":
        a, b = np.triu_indices(len(t), k=1)
        c, d = np.triu_indices(len(h), k=1)
        box = (vals[b][:, d] - vals[a][:, d] - vals[b][:, c] + vals[a][:, c])  # (time pairs, hurst pairs)
        dt = np.minimum(1.0, (t[b] - t[a]) ** hr.h_min)
        dh = h[d] - h[c]
        denom = (1 + t[b])[:, None] ** expo * (dh[None, :] * dt[:, None]) ** (1 - eps)
        ratio = np.abs(box) / denom
        return float(ratio.max()) if ratio.size else 0.0
    raise ValidationError(f"unknown increment mode {mode!r}")


def pathwise_holder_constant(draws, t_grid, h_grid, eps: float = 0.1, mode: str = "simple",
                             quantile: float = 0.9, max_change: float = 0.25) -> PathwiseConstant:
    """Distribution over seeds of the grid-maximal normalized increment.

    ``draws`` has shape ``(seeds, n_t, n_h)`` (or a list of :class:`FbmField`).
    The quantile-stability rule compares the ``quantile`` of the constants on
    ``[0, T/2]`` and on ``[0, T]`` computed from the same draws.
    """
    if isinstance(draws, (list, tuple)) and draws and hasattr(draws[0], "values"):
        draws = np.stack([f.values[..., 0] for f in draws])
    draws = np.asarray(draws, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    h = np.asarray(h_grid, dtype=float)
    if draws.shape[1:] != (len(t), len(h)):
        raise ValidationError("draws must have shape (seeds, len(t_grid), len(h_grid))")
    hr = HurstRange.of(h)
    half = t <= 0.5 * t[-1] + 1e-12
    full_c = np.array([_pair_constant(d, t, h, eps, mode, hr) for d in draws])
    half_c = np.array([_pair_constant(d[half], t[half], h, eps, mode, hr) for d in draws])
    q_half, q_full = float(np.quantile(half_c, quantile)), float(np.quantile(full_c, quantile))
    rule = {"name": "quantile-stability", "quantile": quantile, "max_change": max_change,
            "statement": f"{quantile:g}-quantile changes by < {max_change:.0%} when the horizon doubles"}
    points = [{"horizon": float(t[half][-1])}, {"horizon": float(t[-1])}]
    ratios = [q_half, q_full]
    verdict = apply_rule(rule, ratios, [0.0, 0.0], None, points)
    report = BoundCheckReport(f"pathwise-{mode}", points, ratios, [1.0, 1.0], ratios, [0.0, 0.0], rule, None,
                              q_full, verdict, {"eps": eps, "seeds": len(draws), "n_t": len(t), "n_h": len(h)})
    qs = {f"q{int(p * 100)}": float(np.quantile(full_c, p)) for p in (0.5, 0.9, 0.99)}
    return PathwiseConstant(full_c, half_c, qs, report)


def _shared_h_grid(H, deltas):
    deltas = [float(d) for d in deltas]
    if any(d <= 0 for d in deltas):
        raise ValidationError("deltas must be positive (delta = 0 is degenerate)")
    if any(a <= b for a, b in zip(deltas[:-1], deltas[1:])):
        raise ValidationError("deltas must be strictly descending")
    grid = sorted({round(H, 12)} | {round(H + d, 12) for d in deltas})
    if grid[-1] >= 1.0:
        raise ValidationError("H + delta must stay below 1")
    return deltas, grid


def sde_h_regularity(spec: DriftSpec, H: float, deltas=(0.2, 0.1, 0.05), t_grid=(1.0, 5.0, 20.0),
                     seeds: int = 200, eps: float = 0.1, step: float = 1 / 64, y0=0.0, seed: int = 0,
                     mode: str = "unit", threads: int | None = None) -> BoundCheckReport:
    """Second-moment ratios ``E|Y_t^H - Y_t^{H+d}|^2 / d^2`` on a (t, delta) grid."""
    deltas, grid = _shared_h_grid(H, deltas)
    t_grid = [float(t) for t in t_grid]
    sampler = ProjectionSampler(grid, max(t_grid), step, mode=mode)
    tix = [round(t / step) for t in t_grid]
    def one(s):
        Y = solve_reference(sampler.sample(seed, s), spec, y0, step).values[:, :, 0]
        base = Y[:, grid.index(round(H, 12))]
        sq = np.empty((len(t_grid), len(deltas)))
        pw = np.empty_like(sq)
        for j, d in enumerate(deltas):
            diff = np.abs(base - Y[:, grid.index(round(H + d, 12))])[tix]
            sq[:, j] = diff**2 / d**2
            pw[:, j] = diff / d ** (1 - eps)
        return sq, pw

    out = _rng.replicate(one, seeds, threads)
    sq = np.stack([o[0] for o in out])
    pathwise = np.stack([o[1] for o in out])
    mean, se = _rng.mean_and_se(sq)
    points = [{"t": t, "delta": d} for t in t_grid for d in deltas]
    t_mix = min(t for t in t_grid if t >= min(t_grid[-1], 2.0 / max(spec.kappa, 1e-12)))
    rule = {"name": "h-stability", "factor": SAFETY, "se_mult": SE_MULT, "t_mix": t_mix,
            "statement": "ratios stay within a factor 2 as delta halves and do not grow beyond "
                         "a factor 2 after the mixing time (3 SE margins)"}
    ratios = mean.reshape(-1)
    ses = se.reshape(-1)
    verdict = apply_rule(rule, ratios, ses, None, points)
    q = np.quantile(pathwise, 0.9, axis=0)
    return BoundCheckReport("sde-h-regularity", points, ratios.tolist(), [1.0] * len(points), ratios.tolist(),
                            ses.tolist(), rule, None, float(ratios.max()), verdict,
                            {"pathwise_q90": q.reshape(-1).tolist(), "eps": eps, "seeds": seeds, "H": H,
                             "drift": spec.describe(), "step": step})


def ergodic_h_regularity(spec: DriftSpec, H: float, deltas=(0.2, 0.1, 0.05), horizon: float = 100.0,
                         gamma: float = 0.05, seeds: int = 20, mode: str = "continuous", step: float = 1 / 32,
                         y0=0.0, seed: int = 0, beta: float = BETA, min_fraction: float = 0.9,
                         field_mode: str = "unit", threads: int | None = None) -> BoundCheckReport:
    """Per-seed ratios ``R(delta_{i+1}) / R(delta_i)`` of ergodic mean square differences.

    ``continuous`` uses the reference solver (spacing ``step``) and the
    trapezoid mean over ``[0, horizon]``; ``discrete`` uses the scheme with
    step ``gamma`` and the mean over ``k = 1..N``. The threshold for a
    halving is ``2^{-beta} * 2``.
    """
    deltas, grid = _shared_h_grid(H, deltas)
    if mode == "discrete":
        if not gamma < spec.gamma0():
            raise ConfigurationError(f"gamma={gamma} must be < gamma0={spec.gamma0():.6g}")
        step_used = gamma
    elif mode == "continuous":
        step_used = step
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    sampler = ProjectionSampler(grid, horizon, step_used, mode=field_mode)
    ih = grid.index(round(H, 12))
    def one(s):
        fbm = sampler.sample(seed, s)
        if mode == "discrete":
            path = euler_scheme(fbm, spec, y0, gamma)
        else:
            path = solve_reference(fbm, spec, y0, step)
        R = []
        for d in deltas:
            series = ergodic_mean_sq_diff(path.values[:, ih], path.values[:, grid.index(round(H + d, 12))],
                                          path.t_grid, mode)
            R.append(float(series.values[-1]))
        return R

    R_all = _rng.replicate(one, seeds, threads)
    points, ratios, thresholds = [], [], []
    for s, R in enumerate(R_all):
        for i in range(len(deltas) - 1):
            shrink = deltas[i + 1] / deltas[i]
            points.append({"seed": s, "delta": deltas[i], "delta_next": deltas[i + 1]})
            ratios.append(R[i + 1] / R[i] if R[i] > 0 else 0.0)
            thresholds.append(shrink**beta * SAFETY)
    threshold = max(thresholds)
    if any(abs(th - threshold) > 1e-12 for th in thresholds):
        raise ValidationError("deltas must shrink by a constant factor")
    rule = {"name": "halving-fraction", "threshold": threshold, "min_fraction": min_fraction,
            "statement": f"per seed, every R(next)/R(delta) <= (next/delta)^{beta} * {SAFETY:g}; "
                         f"pass if >= {min_fraction:.0%} of seeds comply"}
    verdict = apply_rule(rule, ratios, [0.0] * len(ratios), None, points)
    r = np.asarray(ratios).reshape(seeds, -1)
    fraction = float(np.mean(np.all(r <= threshold, axis=1)))
    return BoundCheckReport(f"ergodic-h-{mode}", points, ratios, [threshold] * len(ratios), ratios,
                            [0.0] * len(ratios), rule, None, float(np.max(ratios)), verdict,
                            {"R": R_all, "fraction": fraction, "horizon": horizon, "gamma": gamma,
                             "step": step_used, "H": H, "deltas": deltas, "drift": spec.describe()})


def v_decay_threshold(p: int, h_max: float, slack: float = 0.15) -> float:
    return -(2.0 * p / 3.0) * min(1.0, 4.0 - 4.0 * h_max) + slack


def v_decay_verdict(times, moments, p: int, h_max: float, slack: float = 0.15,
                    moment_se=None) -> HolderRegression:
    """Regress ``log E|V_t|^{2p}`` on ``log(t+1)`` and compare with the decay threshold."""
    times = np.asarray(times, dtype=float)
    m = np.asarray(moments, dtype=float)
    thr = v_decay_threshold(p, h_max, slack)
    if np.all(m == m[0]) and m[0] > 0:
        fit = holder_regression(times + 1, m)
    else:
        fit = holder_regression(times + 1, np.maximum(m, 1e-300), moment_se)
    fit.threshold = thr
    fit.rule = f"slope <= -(2p/3)(1 ∧ (4 - 4 h_max)) + {slack:g} = {thr:.4f}"
    fit.passed = bool(fit.slope <= thr)
    fit.extra.update(p=p, h_max=h_max, abscissa="t+1")
    return fit


def v_moment_decay(H: float, K: float, p: int = 1, t_grid=None, seeds: int = 1000, step: float = 1 / 128,
                   seed: int = 0, tol: float = 1e-10, centering: float | None = None,
                   threads: int | None = None) -> HolderRegression:
    """MC moments ``E|V_t^{H,K}|^{2p}`` of centered ergodic means of a stationary fOU pair."""
    t_grid = np.geomspace(1, 100, 9) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t_grid.max() / t_grid.min() < 10:
        raise ValidationError("t_grid must span at least one decade")
    if seeds < 1000:
        raise ValidationError("need at least 1000 seeds")
    t_grid = np.round(t_grid / step) * step
    c = stationary_sq_diff(H, K) if centering is None else centering
    if H == K:
        zeros = np.zeros(len(t_grid))
        fit = HolderRegression(t_grid.tolist(), zeros.tolist(), 0.0, 0.0, 0.0, zeros.tolist())
        fit.extra.update(note="identical processes give V = 0", p=p)
        return fit
    sampler = StationaryFouSampler([min(H, K), max(H, K)], float(t_grid.max() + 1), step, tol=tol)
    def one(s):
        path = sampler.sample(seed, s)
        series = ergodic_mean_sq_diff(path.values[:, 0], path.values[:, 1], path.t_grid, "continuous", c)
        idx = np.searchsorted(series.times, t_grid - 1e-9)
        return np.abs(series.values[idx]) ** (2 * p)

    vals = np.array(_rng.replicate(one, seeds, threads))
    mean, se = _rng.mean_and_se(vals)
    fit = v_decay_verdict(t_grid, mean, p, max(H, K), moment_se=se)
    fit.extra.update(H=H, K=K, seeds=seeds, step=step, centering=c)
    return fit
