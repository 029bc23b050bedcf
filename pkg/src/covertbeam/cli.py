"""Command-line interface.

Subcommands: ``design-covert``, ``design-zf``, ``design-robust``, ``detect``
and ``sweep``.  Scenario parameters come from flags or a scenario file
(``--config``); per the file contract, values present in the config file
override the corresponding flags.  Design reports are printed as JSON (or
written to ``--output``); sweeps write ``results.csv`` + ``manifest.json``
into the output directory.  Exit code 0 on success, otherwise a nonzero code
with a machine-readable JSON error on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import channel, covert_metrics, designs, harness, robust
from .channel import CsiErrorEllipsoid, ScenarioParams
from .covert_metrics import LikelihoodParams
from .designs import BisectionConfig
from .exceptions import CovertBeamError

EXIT_CODES = {
    "invalid-input": 2,
    "infeasible-scenario": 3,
    "degenerate-geometry": 4,
    "recovery-failed": 5,
    "io-error": 6,
    "internal": 1,
}

_SCENARIO_FLAGS = ("n", "sigma_b2", "sigma_c2", "sigma_w2", "sigma1", "sigma2",
                   "sigma3", "p_total", "p_c0", "epsilon")


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario file; its values override flags")
    p.add_argument("--n", type=int, default=5, help="antenna count")
    p.add_argument("--p-total", type=float, default=10.0, help="power budget (W)")
    p.add_argument("--p-c0", type=float, default=1.2589254117941673,
                   help="cover power (W)")
    p.add_argument("--epsilon", type=float, default=0.1, help="covertness level")
    for name in ("sigma-b2", "sigma-c2", "sigma-w2"):
        p.add_argument(f"--{name}", type=float, default=1.0)
    for name in ("sigma1", "sigma2", "sigma3"):
        p.add_argument(f"--{name}", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--v-w", type=float, default=0.005, help="CSI-error ellipsoid volume")
    p.add_argument("--zeta", type=float, default=1e-4, help="bisection width (relative)")
    p.add_argument("--output", help="write JSON/CSV output here instead of stdout")


def _scenario_from_args(args) -> tuple[ScenarioParams, int, CsiErrorEllipsoid | None]:
    kwargs = {name: getattr(args, name) for name in _SCENARIO_FLAGS}
    seed = args.seed
    ellipsoid = None
    if args.config:
        loaded = channel.load_scenario(args.config)
        file_params = loaded["params"]
        for name in _SCENARIO_FLAGS:
            kwargs[name] = getattr(file_params, name)
        if loaded["seed"] is not None:
            seed = loaded["seed"]
        ellipsoid = loaded["ellipsoid"]
    params = ScenarioParams(**kwargs)
    if ellipsoid is None:
        ellipsoid = CsiErrorEllipsoid(c_w=np.eye(params.n, dtype=complex), v_w=args.v_w)
    return params, seed, ellipsoid


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _cmd_design_covert(args) -> int:
    params, seed, _ = _scenario_from_args(args)
    ch = channel.sample_channels(params, seed)
    cover = channel.make_cover_beam(params, ch)
    sol = designs.covert_design(params, ch, cover, BisectionConfig(zeta=args.zeta))
    _emit(args, sol.as_report())
    return 0


def _cmd_design_zf(args) -> int:
    params, seed, _ = _scenario_from_args(args)
    ch = channel.sample_channels(params, seed)
    cover = channel.make_cover_beam(params, ch)
    sol = designs.zf_design(params, ch, cover)
    _emit(args, sol.as_report())
    return 0


def _cmd_design_robust(args) -> int:
    params, seed, ellipsoid = _scenario_from_args(args)
    ch = channel.sample_channels(params, seed)
    dh = channel.sample_error(ellipsoid, seed + 1)
    ch = channel.apply_error(ch, dh)
    cover = channel.make_cover_beam(params, ch)
    spec = robust.RobustProblemSpec.from_channels(params, ch, ellipsoid, cover,
                                                  args.direction)
    sol = robust.robust_design(params, spec, BisectionConfig(zeta=args.zeta), seed=seed)
    report = sol.as_report()
    check = robust.verify_worst_case(sol, spec, samples=args.verify_samples, seed=seed + 2)
    report["worst_case"] = {"max_kl": check.max_kl,
                            "violation_fraction": check.violation_fraction,
                            "samples": check.samples}
    lp_true = covert_metrics.lambdas(cover.w_c0, sol.w_c1, sol.w_b, ch.h_w, params.sigma_w2)
    det = covert_metrics.detector(lp_true)
    report["detector_at_true_channel"] = {"xi": det.xi, "p_fa": det.p_fa,
                                          "p_md": det.p_md, "threshold": det.threshold}
    _emit(args, report)
    return 0


def _cmd_detect(args) -> int:
    lp = LikelihoodParams(lambda0=args.lambda0, lambda1=args.lambda1)
    det = covert_metrics.detector(lp)
    payload = {
        "threshold": det.threshold, "p_fa": det.p_fa, "p_md": det.p_md, "xi": det.xi,
        "total_variation": covert_metrics.total_variation(lp),
        "kl_01": covert_metrics.kl_01(lp), "kl_10": covert_metrics.kl_10(lp),
    }
    if args.draws:
        mc = harness.run_detector_mc(lp, args.draws, args.seed)
        payload["monte_carlo"] = {"p_fa": mc.p_fa, "p_md": mc.p_md,
                                  "se_fa": mc.se_fa, "se_md": mc.se_md,
                                  "draws": mc.draws}
    _emit(args, payload)
    return 0


def _cmd_sweep(args) -> int:
    params, seed, _ = _scenario_from_args(args)
    spec = harness.SweepSpec(
        scenario=params,
        swept_parameter=args.param,
        grid=tuple(float(v) for v in args.grid.split(",")),
        design_set=tuple(args.designs.split(",")),
        trials_per_point=args.trials,
        seed=seed,
        v_w=args.v_w,
        zeta=args.zeta,
    )
    result = harness.run_sweep(spec, workers=args.workers)
    outdir = args.output or "sweep-results"
    paths = harness.emit_results(result, outdir)
    print(json.dumps({"written": paths}, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covertbeam",
                                     description="Covert beamforming designs and experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-covert", help="SINR-bisection covert design")
    _add_scenario_flags(p)
    p.set_defaults(func=_cmd_design_covert)

    p = sub.add_parser("design-zf", help="zero-forcing design")
    _add_scenario_flags(p)
    p.set_defaults(func=_cmd_design_zf)

    p = sub.add_parser("design-robust", help="robust design under CSI error")
    _add_scenario_flags(p)
    p.add_argument("--direction", choices=["kl01", "kl10"], default="kl01")
    p.add_argument("--verify-samples", type=int, default=10_000)
    p.set_defaults(func=_cmd_design_robust)

    p = sub.add_parser("detect", help="warden detector operating point")
    p.add_argument("--lambda0", type=float, required=True)
    p.add_argument("--lambda1", type=float, required=True)
    p.add_argument("--draws", type=int, default=0, help="optional Monte-Carlo draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("sweep", help="seeded Monte-Carlo sweep")
    _add_scenario_flags(p)
    p.add_argument("--param", choices=list(harness.SWEEP_PARAMETERS), required=True)
    p.add_argument("--grid", required=True, help="comma-separated ascending values")
    p.add_argument("--designs", default="covert,zf",
                   help="comma-separated subset of " + ",".join(harness.DESIGN_NAMES))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CovertBeamError as exc:
        payload = {"error": {"category": exc.category, "message": str(exc)}}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)


if __name__ == "__main__":
    sys.exit(main())
