"""Command-line front end: ``gazecal {synth,calibrate,evaluate,toy-train}``.

Exit codes: 0 success, 1 runtime or data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from gazecal import io
from gazecal.calibration import fit_calibrator
from gazecal.report import evaluation_report, quantile_report
from gazecal.synth import SCENARIOS, SynthConfig, generate_scenario, scenario
from gazecal.toytrain import HeteroscedasticRegressor, QuantilePairRegressor, make_toy_data


log = logging.getLogger("gazecal")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _non_negative_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def _non_negative_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {v}")
    return v


def _open_unit(text: str) -> float:
    v = _positive_float(text)
    if not v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {v}")
    return v


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "jsonl"), default=None,
                   help="dump format (default: from the file suffix)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazecal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic prediction dump")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default=None,
                   help="start from a named scenario; explicit flags override it")
    p.add_argument("--n", type=_positive_int, default=None, help="number of samples")
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--noise", choices=("gaussian", "student_t"), default=None)
    p.add_argument("--nu", type=_positive_float, default=None,
                   help="Student-t degrees of freedom (> 2)")
    p.add_argument("--sigma-pitch", type=_positive_float, default=None)
    p.add_argument("--sigma-yaw", type=_positive_float, default=None)
    p.add_argument("--alpha", type=_positive_float, default=None,
                   help="predicted/true standard deviation ratio")
    p.add_argument("--bias-pitch", type=float, default=None)
    p.add_argument("--bias-yaw", type=float, default=None)
    p.add_argument("--mean-range", type=_non_negative_float, default=None)
    p.add_argument("--workers", type=_positive_int, default=None)
    p.add_argument("--out", required=True)
    _add_format(p)

    p = sub.add_parser("calibrate", help="split a dump and fit the calibration maps")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--n-cal", type=_positive_int, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out-map", required=True)
    p.add_argument("--out-test", required=True)
    _add_format(p)

    p = sub.add_parser("evaluate", help="compute CPE, CI inclusion and error reports")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--map", default=None, help="calibrator JSON from 'calibrate'")
    p.add_argument("--ci", type=_open_unit, default=0.95)
    p.add_argument("--report", required=True)
    p.add_argument("--curve", default=None, help="optional coverage-curve CSV")
    p.add_argument("--indicator", choices=("joint", "component"), default="joint",
                   help="coverage indicator for the curve CSV")
    p.add_argument("--workers", type=_positive_int, default=None)
    _add_format(p)

    p = sub.add_parser("toy-train", help="train a toy model and dump its test predictions")
    p.add_argument("--kind", choices=("hetero", "quantile"), default="hetero")
    p.add_argument("--n", type=_positive_int, default=5000)
    p.add_argument("--d", type=_positive_int, default=3)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--lr", type=_non_negative_float, default=0.01)
    p.add_argument("--iterations", type=_non_negative_int, default=5000)
    p.add_argument("--noise-scale", type=_positive_float, default=0.1)
    p.add_argument("--hetero-slope", type=float, default=0.0)
    p.add_argument("--test-fraction", type=_open_unit, default=0.5)
    p.add_argument("--test-noise-multiplier", type=_positive_float, default=1.0,
                   help="scale test-set noise to simulate a domain shift")
    p.add_argument("--out", required=True)
    _add_format(p)
    return parser


def _cmd_synth(args) -> int:
    cfg = scenario(args.scenario) if args.scenario else SynthConfig()
    overrides = {
        "n_samples": args.n, "seed": args.seed, "noise": args.noise, "nu": args.nu,
        "sigma_true_pitch": args.sigma_pitch, "sigma_true_yaw": args.sigma_yaw,
        "variance_scale": args.alpha, "mean_range": args.mean_range,
    }
    fields = {k: v for k, v in overrides.items() if v is not None}
    if args.bias_pitch is not None or args.bias_yaw is not None:
        fields["mean_bias"] = (
            cfg.mean_bias[0] if args.bias_pitch is None else args.bias_pitch,
            cfg.mean_bias[1] if args.bias_yaw is None else args.bias_yaw,
        )
    cfg = SynthConfig(**{**cfg.to_dict(), **fields})
    pset = generate_scenario(cfg, workers=args.workers)
    io.write_predictions(pset, args.out, args.format)
    log.info("wrote %d samples to %s", len(pset), args.out)
    return 0


def _cmd_calibrate(args) -> int:
    pset = io.read_predictions(args.input, args.format)
    cal, test = io.split_calibration(pset, args.n_cal, args.seed)
    cp = fit_calibrator(cal)
    io.save_calibrator(cp, args.out_map)
    io.write_predictions(test, args.out_test, args.format)
    print(f"calibrated on {len(cal)} samples; {len(test)} held-out samples -> {args.out_test}")
    return 0


def _cmd_evaluate(args) -> int:
    kind = io.detect_dump_kind(args.input, args.format)
    config = {"input": str(args.input), "map": args.map, "ci": args.ci,
              "indicator": args.indicator}
    if kind == "quantiles":
        if args.map:
            raise ValueError("a calibration map cannot be applied to a quantile dump")
        report = quantile_report(io.read_quantiles(args.input, args.format), args.ci)
        curves = None
    else:
        pset = io.read_predictions(args.input, args.format)
        cp = io.load_calibrator(args.map) if args.map else None
        report, curves = evaluation_report(pset, cp, args.ci, workers=args.workers)
    report["config"] = config
    report["seed"] = None
    io.write_report(report, args.report)
    if args.curve:
        if curves is None:
            raise ValueError("quantile dumps have no coverage curve")
        chosen = [curves["joint"]] if args.indicator == "joint" else [curves["pitch"], curves["yaw"]]
        io.write_curve_csv(chosen, args.curve)
    summary = f"inclusion={report['ci']['inclusion_rate']:.4f}"
    if "cpe" in report:
        summary = (f"CPE={report['cpe']:.4f} (pitch {report['cpe_pitch']:.4f}, "
                   f"yaw {report['cpe_yaw']:.4f}) " + summary)
    print(summary)
    return 0


def _cmd_toy_train(args) -> int:
    n_test = int(round(args.n * args.test_fraction))
    n_train = args.n - n_test
    if n_test < 1 or n_train < args.d + 2:
        raise ValueError("not enough samples for the requested train/test split")
    train = make_toy_data(n_train, args.d, args.seed, args.noise_scale, args.hetero_slope,
                          stream=0)
    test = make_toy_data(n_test, args.d, args.seed, args.noise_scale, args.hetero_slope,
                         noise_multiplier=args.test_noise_multiplier, stream=1)
    ids = [f"t{i}" for i in range(n_test)]
    if args.kind == "hetero":
        model = HeteroscedasticRegressor(args.lr, args.iterations).fit(train.X, train.y)
        io.write_predictions(model.to_prediction_set(test.X, test.y, ids), args.out, args.format)
        print(f"trained hetero model: final NLL {model.loss_:.6f}")
    else:
        model = QuantilePairRegressor(learning_rate=args.lr, n_iter=args.iterations)
        model.fit(train.X, train.y)
        io.write_quantiles(model.to_quantile_set(test.X, test.y, ids), args.out, args.format)
        if model.meta_["crossed"]:
            print("warning: crossed quantiles on training data", file=sys.stderr)
        print(f"trained quantile baseline: {model.meta_}")
    return 0


COMMANDS = {
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "evaluate": _cmd_evaluate,
    "toy-train": _cmd_toy_train,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"gazecal {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
