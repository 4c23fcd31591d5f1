"""Command-line interface.

Exit codes: 0 success, 1 validation error (bad flags, schema, domain,
oracle mismatch), 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from dropcal import __version__
from dropcal._backend import BACKEND
from dropcal.binned_metrics import DEFAULT_BINS, reliability_table
from dropcal.errors import DropcalError
from dropcal.formats import (
    dumps,
    fmt_float,
    read_logit_dump_array,
    read_temperature,
    rejection_csv,
    rejection_curve_to_dict,
    reliability_csv,
    report_table_to_dict,
    temperature_to_dict,
)
from dropcal.pipeline import DemoConfig, build_report, records_at, run_demo, write_demo
from dropcal.rejection import reject_sweep
from dropcal.temp_fit import FitConfig, fit_temperature_array

logger = logging.getLogger("dropcal")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; 2 is reserved for I/O errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_io(p, temperature=True):
    p.add_argument("--input", "-i", required=True, help="logit dump (.jsonl)")
    if temperature:
        p.add_argument("--temperature", required=True, help="temperature JSON written by `fit`")
    p.add_argument("--output", "-o", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dropcal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dropcal {__version__} ({BACKEND})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = DemoConfig()
    p = sub.add_parser("demo", help="train the toy model and dump validation/test logits")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--passes", type=_positive_int, default=d.passes)
    p.add_argument("--beta", type=float, default=d.beta, help="confidence-penalty weight")
    p.add_argument("--classes", type=int, default=d.n_classes)
    p.add_argument("--sigma", type=float, default=d.sigma, help="blob spread (overlap)")
    p.add_argument("--train-size", type=_positive_int, default=d.train_size)
    p.add_argument("--val-size", type=_positive_int, default=d.val_size)
    p.add_argument("--test-size", type=_positive_int, default=d.test_size)
    p.add_argument("--hidden", type=_positive_int, default=d.hidden)
    p.add_argument("--dropout", type=float, default=d.dropout_p)
    p.add_argument("--epochs", type=_positive_int, default=d.epochs)
    p.add_argument("--batch-size", type=_positive_int, default=d.batch_size)
    p.add_argument("--lr", type=float, default=d.learning_rate)

    f = FitConfig()
    p = sub.add_parser("fit", help="fit the temperature on a validation dump")
    _add_io(p, temperature=False)
    p.add_argument("--t-min", type=float, default=f.t_min)
    p.add_argument("--t-max", type=float, default=f.t_max)
    p.add_argument("--grid-points", type=int, default=f.grid_points)

    p = sub.add_parser("evaluate", help="calibration report for a test dump")
    _add_io(p)
    p.add_argument("--bins", type=_positive_int, default=DEFAULT_BINS)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("reliability", help="per-bin reliability tables")
    _add_io(p)
    p.add_argument("--bins", type=_positive_int, default=DEFAULT_BINS)
    p.add_argument("--axis", choices=("confidence", "uncertainty", "both"), default="both")
    p.add_argument("--format", choices=("json", "csv"), default="csv")

    p = sub.add_parser("reject", help="rejection curve over uncertainty thresholds")
    _add_io(p)
    p.add_argument("--format", choices=("json", "csv"), default="csv")

    p = sub.add_parser("oracle", help="cross-check library metrics against naive loops")
    p.add_argument("--instances", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _write(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _load(args):
    logits, labels, _ = read_logit_dump_array(args.input)
    return logits, labels, read_temperature(args.temperature).t


def cmd_demo(args):
    cfg = DemoConfig(
        seed=args.seed, n_classes=args.classes, sigma=args.sigma,
        train_size=args.train_size, val_size=args.val_size, test_size=args.test_size,
        hidden=args.hidden, dropout_p=args.dropout, epochs=args.epochs,
        batch_size=args.batch_size, learning_rate=args.lr, beta=args.beta,
        passes=args.passes,
    )
    paths = write_demo(run_demo(cfg), args.out_dir, cfg)
    for kind, path in paths.items():
        logger.info("wrote %s: %s", kind, path)


def cmd_fit(args):
    logits, labels, _ = read_logit_dump_array(args.input)
    cfg = FitConfig(t_min=args.t_min, t_max=args.t_max, grid_points=args.grid_points)
    param = fit_temperature_array(logits, labels, cfg)
    echo = {"input": args.input, "t_min": cfg.t_min, "t_max": cfg.t_max,
            "grid_points": cfg.grid_points, "refine_tolerance": cfg.refine_tolerance,
            "n": int(logits.shape[0]), "n_passes": int(logits.shape[1])}
    _write(dumps(temperature_to_dict(param, echo)), args.output)


def cmd_evaluate(args):
    logits, labels, t = _load(args)
    echo = {"input": args.input, "temperature_file": args.temperature, "bins": args.bins}
    report = build_report(logits, labels, t, args.bins, config=echo)
    if args.format == "json":
        _write(dumps(report), args.output)
        return
    scalars = [k for k, v in report.items() if not isinstance(v, dict)]
    row = [fmt_float(report[k]) if isinstance(report[k], float) else str(report[k]) for k in scalars]
    _write(",".join(scalars) + "\r\n" + ",".join(row) + "\r\n", args.output)


def cmd_reliability(args):
    logits, labels, t = _load(args)
    axes = ("confidence", "uncertainty") if args.axis == "both" else (args.axis,)
    tables = {}
    for name, temp in (("uncalibrated", 1.0), ("calibrated", t)):
        recs = records_at(logits, labels, temp)
        for axis in axes:
            tables[(name, axis)] = reliability_table(recs, args.bins, axis)
    if args.format == "csv":
        text = ""
        for i, axis in enumerate(axes):
            block = reliability_csv({name: tables[(name, axis)] for name in ("uncalibrated", "calibrated")})
            text += block if i == 0 else block.split("\r\n", 1)[1]
        _write(text, args.output)
    else:
        doc = {"format_version": 1, "temperature": t, "tables": [
            {"table": name, **report_table_to_dict(rep)} for (name, _), rep in tables.items()
        ]}
        _write(dumps(doc), args.output)


def cmd_reject(args):
    logits, labels, t = _load(args)
    curves = {
        "uncalibrated": reject_sweep(records_at(logits, labels, 1.0)),
        "calibrated": reject_sweep(records_at(logits, labels, t)),
    }
    if args.format == "csv":
        _write(rejection_csv(curves), args.output)
    else:
        doc = {"format_version": 1, "temperature": t}
        doc.update({name: rejection_curve_to_dict(c) for name, c in curves.items()})
        _write(dumps(doc), args.output)


def cmd_oracle(args):
    from dropcal.oracle import check_binned_metrics, check_prob_core

    bad = check_binned_metrics(args.instances, args.seed)
    bad += check_prob_core(max(args.instances // 10, 1), args.seed)
    for item in bad[:20]:
        print(f"MISMATCH {item}", file=sys.stderr)
    print(f"oracle: {args.instances} binning instances, {len(bad)} mismatches (backend={BACKEND})")
    return EXIT_INVALID if bad else EXIT_OK


COMMANDS = {
    "demo": cmd_demo,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "reliability": cmd_reliability,
    "reject": cmd_reject,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args) or EXIT_OK
    except OSError as exc:
        print(f"dropcal: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DropcalError as exc:
        print(f"dropcal: {exc}", file=sys.stderr)
        return EXIT_INVALID
