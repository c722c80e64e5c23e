"""Command-line entry point.

Exit status: 0 on success (or a coordinated verdict), 1 for a
not-coordinated verdict, 2 for any configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import revpref, sim, statdetect
from .core import CoordError, NoiseModel, dumps_dataset, load_dataset
from .tracking import demo, waveform

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


def fmt(x: float) -> str:
    return f"{x:.9g}"


def _round(obj):
    """Round every float in a JSON-able structure to 9 significant digits."""
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    return obj


def _json(doc) -> str:
    return json.dumps(_round(doc), indent=1) + "\n"


def _kv_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in doc.items():
        if isinstance(v, (list, tuple, np.ndarray)):
            v = json.dumps(_round(v), separators=(",", ":"))
        elif isinstance(v, float):
            v = fmt(v)
        w.writerow([k, v])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _report(args, doc: dict) -> None:
    _emit(args, _kv_csv(doc) if args.format == "csv" else _json(doc))


def _gamma(text: str) -> float:
    g = float(text)
    if not 0.0 < g < 1.0:
        raise argparse.ArgumentTypeError("gamma must lie in (0, 1)")
    return g


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _sigma_grid(text: str) -> list[float]:
    """``a:step:b`` (inclusive) or a comma-separated list; empty string gives no points."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        a, step, b = (float(v) for v in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("step must be positive")
        n = int(np.floor((b - a) / step + 1e-9)) + 1
        return [round(a + k * step, 12) for k in range(max(n, 0))]
    return [float(v) for v in text.split(",")]


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = sim.example_config(args.weights, args.regime, args.sigma, T=args.T) \
        if (args.M, args.N) == (3, 2) else \
        sim.ScenarioConfig(M=args.M, T=args.T, N=args.N, regime=args.regime,
                           noise=None if args.sigma is None else NoiseModel(sigma=args.sigma))
    data = sim.generate_dataset(cfg, args.seed)
    _emit(args, dumps_dataset(data) + "\n")
    return EXIT_OK


def cmd_detect(args) -> int:
    data = load_dataset(args.dataset)
    verdict = revpref.detect_coordination(data)
    doc = {"verdict": "coordinated" if verdict.coordinated else "not_coordinated"}
    if verdict.coordinated:
        cert = verdict.certificate
        doc["max_violation"] = cert.max_violation(revpref.validate_dataset(data))
        doc["u"] = cert.u
        doc["lambda"] = cert.lam
    else:
        doc["failing_agents"] = [i + 1 for i in verdict.failing_agents]
    _report(args, doc)
    return EXIT_OK if verdict.coordinated else EXIT_NEGATIVE


def cmd_reconstruct(args) -> int:
    if args.resolution < 2:
        raise ValueError("resolution must be at least 2")
    data = load_dataset(args.dataset)
    verdict = revpref.detect_coordination(data)
    if not verdict.coordinated:
        sys.stderr.write("dataset is not coordinated (agents "
                         f"{[i + 1 for i in verdict.failing_agents]} fail); nothing to reconstruct\n")
        return EXIT_NEGATIVE
    utils = revpref.reconstruct_utilities(verdict.certificate, data)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for u in utils:
            (out / f"agent{u.agent + 1}.csv").write_text(u.to_csv(args.resolution, args.lo, args.hi))
    else:
        for u in utils:
            sys.stdout.write(f"# agent {u.agent + 1}\n")
            sys.stdout.write(u.to_csv(args.resolution, args.lo, args.hi))
    return EXIT_OK


def cmd_stat_detect(args) -> int:
    data = load_dataset(args.dataset)
    noise = None if args.sigma is None else NoiseModel(sigma=args.sigma)
    v = statdetect.decide(data, args.gamma, args.L, args.seed, noise=noise)
    _report(args, {"decision": v.decision.value, "statistic": v.statistic, "gamma": v.gamma,
                   "phi_star": v.phi_star})
    return EXIT_OK if v.coordinated else EXIT_NEGATIVE


def cmd_sweep(args) -> int:
    cfg = sim.example_config(args.weights, T=args.T)
    rows = statdetect.sweep(args.sigmas, cfg, args.seed, args.trials, args.L, args.threads)
    _emit(args, statdetect.sweep_csv(rows))
    return EXIT_OK


def cmd_track(args) -> int:
    rows = demo.run_tracking(args.targets, args.steps, args.seed, alpha=(args.alpha, args.alpha),
                             beta=(args.beta, args.beta), p_detect=args.pd,
                             clutter_density=args.clutter, coupled=not args.uncoupled)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = rows[0].mean.size if rows else 0
    w.writerow(["k", "target"] + [f"mean{d + 1}" for d in range(n)] + ["cov_trace", "nees"])
    for r in rows:
        w.writerow([r.k, r.target] + [fmt(v) for v in r.mean] + [fmt(r.cov_trace), fmt(r.nees)])
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_waveform(args) -> int:
    spec = waveform.WaveformSpec(args.kind, args.theta, args.eta, args.wc, args.c, args.theta2)
    R = waveform.waveform_covariance(spec)
    if args.format == "json":
        _emit(args, _json({"R": R, "alpha": waveform.probe_from_covariance(R)}))
    else:
        _emit(args, "".join(",".join(fmt(v) for v in row) + "\n" for row in R))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit random seed (default 0)")
    common.add_argument("-o", "--output", help="output file (directory for reconstruct)")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (default json; csv for waveform)")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="coordetect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="generate a probe/response dataset")
    s.add_argument("--regime", choices=(sim.COORDINATED, sim.INDEPENDENT), default=sim.COORDINATED)
    s.add_argument("--M", type=int, default=3)
    s.add_argument("--T", type=int, default=10)
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--sigma", type=float, default=None, help="additive Gaussian noise std")
    s.add_argument("--weights", choices=("normalized", "equal"), default="normalized")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("detect", parents=[common], help="deterministic coordination test")
    s.add_argument("dataset")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("reconstruct", parents=[common], help="export rationalizing utilities")
    s.add_argument("dataset")
    s.add_argument("--resolution", type=int, default=50)
    s.add_argument("--lo", type=float, default=0.0)
    s.add_argument("--hi", type=float, default=1.2)
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("stat-detect", parents=[common], help="statistical test for noisy data")
    s.add_argument("dataset")
    s.add_argument("--gamma", type=_gamma, default=0.05)
    s.add_argument("--L", type=_positive_int, default=statdetect.DEFAULT_L)
    s.add_argument("--sigma", type=float, default=None, help="override the dataset's noise level")
    s.set_defaults(func=cmd_stat_detect)

    s = sub.add_parser("sweep", parents=[common], help="statistic versus noise level")
    s.add_argument("--sigmas", type=_sigma_grid, default=_sigma_grid("0.01:0.01:0.1"))
    s.add_argument("--trials", type=_positive_int, default=statdetect.DEFAULT_TRIALS)
    s.add_argument("--L", type=_positive_int, default=statdetect.DEFAULT_L)
    s.add_argument("--T", type=int, default=10)
    s.add_argument("--weights", choices=("normalized", "equal"), default="equal")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("track", parents=[common], help="multi-target JPDA tracking run")
    s.add_argument("--targets", type=_positive_int, default=2)
    s.add_argument("--steps", type=_positive_int, default=100)
    s.add_argument("--alpha", type=float, default=4.0, help="measurement precision per axis")
    s.add_argument("--beta", type=float, default=0.01, help="process noise per axis")
    s.add_argument("--pd", type=float, default=0.95, help="detection probability")
    s.add_argument("--clutter", type=float, default=0.002, help="clutter points per unit area")
    s.add_argument("--uncoupled", action="store_true", help="per-target PDA instead of JPDACF")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("waveform", parents=[common], help="measurement covariance of a pulse")
    s.add_argument("--kind", choices=waveform.KINDS, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--theta2", type=float, default=0.0, help="chirp rate")
    s.add_argument("--eta", type=float, required=True, help="signal-to-noise ratio")
    s.add_argument("--wc", type=float, required=True, help="carrier frequency (rad/s)")
    s.add_argument("--c", type=float, default=waveform.SPEED_OF_LIGHT)
    s.set_defaults(func=cmd_waveform)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "waveform" else "json"
    try:
        return args.func(args)
    except (CoordError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
