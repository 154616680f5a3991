"""Command-line entry point: ``selfevo <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure,
3 pretrained model failed the sanity gate.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .distill import TrainingError
from .model import CheckpointError
from .scene import SequenceFormatError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_GATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML or JSON experiment config")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--preset", choices=("desk", "full"), help="default budgets to start from")
    common.add_argument("--force", action="store_true", help="overwrite non-empty output directories")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="selfevo", description="Synthetic self-improvement experiments for a geometry model.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("synth", parents=[common], help="generate all synthetic splits")
    sub.add_parser("pretrain", parents=[common], help="supervised pretraining on source data, then the gate")
    for name, text in (("selfevo", "label-free self-improvement on target clips"),
                       ("sft", "ground-truth fine-tuning on target clips")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--init", help="initial checkpoint (default: <out>/pretrain/final)")
        p.add_argument("--name", default=name, help="run directory name under <out>")
    p = sub.add_parser("eval", parents=[common], help="evaluate one checkpoint on the eval splits")
    p.add_argument("checkpoint")
    p.add_argument("--splits", nargs="+", default=list(harness.EVAL_SETS), choices=harness.SPLITS)
    p = sub.add_parser("context", parents=[common], help="context-length curve of one checkpoint")
    p.add_argument("checkpoint", nargs="?")
    p = sub.add_parser("sweep", parents=[common], help="evaluate every checkpoint of a run")
    p.add_argument("run_dir")
    p = sub.add_parser("report", parents=[common], help="tables and plots from run ledgers")
    p.add_argument("run_dirs", nargs="+")
    return parser


def _run(args) -> None:
    cfg = harness.resolve_config(args.config, args.preset, args.out, args.seed)
    cmd = args.command
    if cmd == "synth":
        for split, path in harness.cmd_synth(cfg, force=args.force).items():
            print(f"{split}: {path}")
    elif cmd == "pretrain":
        print(harness.cmd_pretrain(cfg, force=args.force))
    elif cmd in ("selfevo", "sft"):
        fn = harness.cmd_selfevo if cmd == "selfevo" else harness.cmd_sft
        ledger = fn(cfg, args.init, force=args.force, name=args.name)
        for split, metrics in ledger["summary"].items():
            print(split, {m: v["final"] for m, v in metrics.items()})
    elif cmd == "eval":
        for split, rep in harness.cmd_eval(cfg, args.checkpoint, args.splits).items():
            print(split, rep.mean)
    elif cmd == "context":
        res = harness.cmd_context(cfg, args.checkpoint)
        for row in res["mean"]:
            print(row)
    elif cmd == "sweep":
        harness.cmd_sweep(cfg, args.run_dir)
        print(f"{args.run_dir}/curves.csv")
    elif cmd == "report":
        out = args.out or f"{cfg.out}/report"
        print(harness.cmd_report(args.run_dirs, out))


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except harness.GateError as exc:
        print(f"gate failed: {exc}", file=sys.stderr)
        return EXIT_GATE
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingError, CheckpointError, SequenceFormatError, harness.LedgerError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
