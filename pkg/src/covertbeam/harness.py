"""Experiment engine: seeded Monte-Carlo sweeps, detector simulation, result files.

Sweeps vary one parameter over a grid and run a set of designs at every grid
point.  Within a trial all designs and all grid points see common random
numbers: the channel draw depends only on (seed, trial), N-sweeps truncate a
single max-antenna draw, and the warden CSI error reuses one unit-ball draw
scaled per point, so nested-ellipsoid and nested-power comparisons are paired.
The SINR bisection upper bound is also shared across the grid (computed at the
most generous point), which keeps the per-trial bisection grids aligned and
the reported rates monotone where the feasible sets are nested.

Everything is deterministic given (spec, seed); re-running a sweep writes
byte-identical result files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import covert_metrics, designs, robust
from .channel import (
    ChannelSet,
    CsiErrorEllipsoid,
    ScenarioParams,
    apply_error,
    make_cover_beam,
    sample_channels,
    sample_error,
)
from .covert_metrics import LikelihoodParams
from .designs import BisectionConfig
from .exceptions import CovertBeamError, InvalidInputError, OutputError

__all__ = [
    "SweepSpec",
    "PointResult",
    "SweepResult",
    "DetectorMcResult",
    "run_sweep",
    "run_detector_mc",
    "emit_results",
    "read_results",
]

SWEEP_PARAMETERS = ("P_total", "power_ratio", "N", "epsilon", "v_w")
DESIGN_NAMES = ("covert", "zf", "robust_kl01", "robust_kl10", "nonrobust")

CSV_COLUMNS = ("swept_parameter", "grid_value", "design", "metric", "value")


def _child_seed(*keys: int) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: scenario, swept parameter, grid, designs and trial count."""

    scenario: ScenarioParams
    swept_parameter: str
    grid: tuple
    design_set: tuple = ("covert", "zf")
    trials_per_point: int = 200
    seed: int = 0
    v_w: float = 0.005
    zeta: float = 1e-4

    def __post_init__(self):
        if self.swept_parameter not in SWEEP_PARAMETERS:
            raise InvalidInputError(f"swept_parameter must be one of {SWEEP_PARAMETERS}")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise InvalidInputError("grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidInputError("grid must be strictly ascending")
        object.__setattr__(self, "grid", grid)
        designs_ = tuple(self.design_set)
        if not designs_ or any(d not in DESIGN_NAMES for d in designs_):
            raise InvalidInputError(f"design_set entries must be among {DESIGN_NAMES}")
        object.__setattr__(self, "design_set", designs_)
        if self.trials_per_point < 1:
            raise InvalidInputError("trials_per_point must be at least 1")

    def point_params(self, value: float) -> ScenarioParams:
        s = self.scenario
        if self.swept_parameter == "P_total":
            return replace(s, p_total=value)
        if self.swept_parameter == "power_ratio":
            return replace(s, p_c0=value * s.p_total)
        if self.swept_parameter == "N":
            if value != int(value):
                raise InvalidInputError("N grid values must be integers")
            return replace(s, n=int(value))
        if self.swept_parameter == "epsilon":
            return replace(s, epsilon=value)
        return s  # v_w sweeps leave the scenario untouched

    def point_v_w(self, value: float) -> float:
        return value if self.swept_parameter == "v_w" else self.v_w

    @property
    def max_n(self) -> int:
        if self.swept_parameter == "N":
            return int(max(self.grid))
        return self.scenario.n

    @property
    def max_p_total(self) -> float:
        if self.swept_parameter == "P_total":
            return max(self.grid)
        return self.scenario.p_total

    def as_dict(self) -> dict:
        return {
            "scenario": {k: getattr(self.scenario, k) for k in (
                "n", "sigma_b2", "sigma_c2", "sigma_w2", "sigma1", "sigma2",
                "sigma3", "p_total", "p_c0", "epsilon")},
            "swept_parameter": self.swept_parameter,
            "grid": list(self.grid),
            "design_set": list(self.design_set),
            "trials_per_point": self.trials_per_point,
            "seed": self.seed,
            "v_w": self.v_w,
            "zeta": self.zeta,
        }


@dataclass(frozen=True)
class PointResult:
    param_value: float
    design: str
    n_ok: int
    n_failed: int
    metrics: dict
    stderr: dict
    flagged: bool


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple

    def point(self, value: float, design: str) -> PointResult:
        for row in self.rows:
            if row.design == design and math.isclose(row.param_value, value):
                return row
        raise KeyError((value, design))

    def series(self, design: str, metric: str) -> list:
        return [row.metrics[metric] for row in self.rows if row.design == design]


def _truncate(ch: ChannelSet, n: int) -> ChannelSet:
    return ChannelSet(h_b=ch.h_b[:n], h_c=ch.h_c[:n], h_w=ch.h_w[:n],
                      h_w_hat=ch.h_w_hat[:n], dh_w=ch.dh_w[:n])


def _detector_metrics(lp: LikelihoodParams) -> dict:
    stats = covert_metrics.detector(lp)
    return {"xi": stats.xi, "p_fa": stats.p_fa, "p_md": stats.p_md}


def _run_trial(spec: SweepSpec, point_idx: int, trial: int) -> dict:
    """All requested designs on one common channel draw at one grid point."""
    value = spec.grid[point_idx]
    params = spec.point_params(value)
    full = sample_channels(replace(spec.scenario, n=spec.max_n), _child_seed(spec.seed, 1, trial))
    ch = _truncate(full, params.n)
    cover = make_cover_beam(params, ch)

    p_max = spec.max_p_total if spec.swept_parameter != "power_ratio" else spec.scenario.p_total
    r_up = p_max * float(np.linalg.norm(full.h_b) ** 2) / params.sigma_b2
    cfg = BisectionConfig(zeta=spec.zeta, r_upper_init=r_up)

    needs_error = any(d in ("robust_kl01", "robust_kl10", "nonrobust") for d in spec.design_set)
    ell = None
    ch_true = ch
    if needs_error:
        ell = CsiErrorEllipsoid(c_w=np.eye(params.n, dtype=complex), v_w=spec.point_v_w(value))
        dh = sample_error(ell, _child_seed(spec.seed, 2, trial))
        ch_true = apply_error(ch, dh)

    budget = 2.0 * params.epsilon ** 2
    out: dict = {}
    for name in spec.design_set:
        try:
            if name == "covert":
                sol = designs.covert_design(params, ch, cover, cfg)
                lp = covert_metrics.lambdas(cover.w_c0, sol.w_c1, sol.w_b, ch.h_w, params.sigma_w2)
            elif name == "zf":
                sol = designs.zf_design(params, ch, cover)
                lp = covert_metrics.lambdas(cover.w_c0, sol.w_c1, sol.w_b, ch.h_w, params.sigma_w2)
            elif name in ("robust_kl01", "robust_kl10"):
                direction = name.split("_")[1]
                rspec = robust.RobustProblemSpec.from_channels(params, ch_true, ell, cover, direction)
                sol = robust.robust_design(params, rspec, cfg, seed=_child_seed(spec.seed, 3, trial))
                lp = covert_metrics.lambdas(cover.w_c0, sol.w_c1, sol.w_b, ch_true.h_w, params.sigma_w2)
            else:  # nonrobust baseline, evaluated at the true channel
                sol = robust.nonrobust_baseline(params, ch_true, cover, params.epsilon, cfg)
                lp = covert_metrics.lambdas(cover.w_c0, sol.w_c1, sol.w_b, ch_true.h_w, params.sigma_w2)
        except CovertBeamError as exc:
            out[name] = {"failed": True, "error": f"{type(exc).__name__}: {exc}"}
            continue
        metrics = {"rate_b": sol.rate_b, "r_b": sol.r_b}
        metrics.update(_detector_metrics(lp))
        kl01 = covert_metrics.kl_01(lp)
        kl10 = covert_metrics.kl_10(lp)
        metrics["kl_01"] = kl01
        metrics["kl_10"] = kl10
        if name == "robust_kl10":
            metrics["violation"] = float(kl10 > budget)
        else:
            metrics["violation"] = float(kl01 > budget)
        metrics["feasibility_solves"] = float(sol.diagnostics.get("feasibility_solves", 0))
        out[name] = {"failed": False, "metrics": metrics}
    return out


def _aggregate(spec: SweepSpec, point_idx: int, design: str, trials: list) -> PointResult:
    oks = [t[design]["metrics"] for t in trials if not t[design]["failed"]]
    n_ok, n_failed = len(oks), len(trials) - len(oks)
    metrics: dict = {}
    stderr: dict = {}
    if oks:
        keys = oks[0].keys()
        for key in keys:
            vals = np.array([m[key] for m in oks])
            metrics[f"{key}_mean"] = float(vals.mean())
            stderr[f"{key}_mean"] = (float(vals.std(ddof=1) / math.sqrt(len(vals)))
                                     if len(vals) >= 2 else None)
    metrics["n_ok"] = float(n_ok)
    metrics["n_failed"] = float(n_failed)
    return PointResult(
        param_value=spec.grid[point_idx], design=design, n_ok=n_ok, n_failed=n_failed,
        metrics=metrics, stderr=stderr, flagged=n_failed > len(trials) / 2)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run the sweep; deterministic given (spec, seed) regardless of workers.

    Per-trial design failures are recorded and excluded from the aggregates
    (their counts are published); a grid point where more than half the trials
    failed is flagged.
    """
    tasks = [(p, t) for p in range(len(spec.grid)) for t in range(spec.trials_per_point)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, [spec] * len(tasks),
                                    [p for p, _ in tasks], [t for _, t in tasks]))
    else:
        results = [_run_trial(spec, p, t) for p, t in tasks]

    by_point: dict[int, list] = {}
    for (p, _), res in zip(tasks, results):
        by_point.setdefault(p, []).append(res)

    rows = []
    for p in range(len(spec.grid)):
        for design in spec.design_set:
            rows.append(_aggregate(spec, p, design, by_point[p]))
    return SweepResult(spec=spec, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Detector Monte-Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetectorMcResult:
    p_fa: float
    p_md: float
    se_fa: float
    se_md: float
    draws: int

    @property
    def xi(self) -> float:
        return self.p_fa + self.p_md


def run_detector_mc(lp: LikelihoodParams, draws: int, seed: int = 0) -> DetectorMcResult:
    """Empirical error rates of the optimal energy detector.

    Samples the warden's received power (exponential with mean lambda0 or
    lambda1), applies the closed-form threshold with the orientation-correct
    decision rule and returns binomial standard errors alongside the rates.
    """
    if draws < 1000:
        raise InvalidInputError("need at least 1000 draws for stable estimates")
    stats = covert_metrics.detector(lp)
    rng = np.random.default_rng(seed)
    y0 = rng.exponential(lp.lambda0, size=draws)
    y1 = rng.exponential(lp.lambda1, size=draws)
    if lp.lambda1 >= lp.lambda0:
        p_fa = float(np.mean(y0 >= stats.threshold))
        p_md = float(np.mean(y1 < stats.threshold))
    else:
        p_fa = float(np.mean(y0 < stats.threshold))
        p_md = float(np.mean(y1 >= stats.threshold))

    def se(p):
        return math.sqrt(max(p * (1.0 - p), 1.0 / draws) / draws)

    return DetectorMcResult(p_fa=p_fa, p_md=p_md, se_fa=se(p_fa), se_md=se(p_md), draws=draws)


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------


def emit_results(result: SweepResult, path) -> dict:
    """Write ``results.csv`` and ``manifest.json`` under ``path`` (a directory).

    The CSV has one row per (grid point, design, metric) in fixed column order
    ``swept_parameter, grid_value, design, metric, value``; standard errors
    appear as ``<metric>_stderr`` rows.  The manifest echoes the sweep spec and
    seed.  Re-running with identical inputs reproduces both files byte for
    byte.  Returns {"csv": ..., "manifest": ...} with the file paths.
    """
    os.makedirs(path, exist_ok=True)
    csv_path = os.path.join(path, "results.csv")
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(csv_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for row in result.rows:
                for metric in sorted(row.metrics):
                    writer.writerow([result.spec.swept_parameter, repr(row.param_value),
                                     row.design, metric, repr(row.metrics[metric])])
                for metric in sorted(row.stderr):
                    if row.stderr[metric] is not None:
                        writer.writerow([result.spec.swept_parameter, repr(row.param_value),
                                         row.design, f"{metric}_stderr",
                                         repr(row.stderr[metric])])
        manifest = {
            "format": "covertbeam-sweep-v1",
            "columns": list(CSV_COLUMNS),
            "spec": result.spec.as_dict(),
        }
        with open(manifest_path, "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise OutputError(f"failed writing results under {path!r}: {exc}") from exc
    return {"csv": csv_path, "manifest": manifest_path}


def read_results(path) -> dict:
    """Parse an emitted CSV back into {(grid_value, design): {metric: value}}."""
    out: dict = {}
    csv_path = os.path.join(path, "results.csv")
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise InvalidInputError(f"unexpected CSV header {header}")
        for _, value, design, metric, metric_value in reader:
            out.setdefault((float(value), design), {})[metric] = float(metric_value)
    return out
