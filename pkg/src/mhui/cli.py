"""Command-line entry point.

Subcommands: gen-data, train, attack, detect, ablate, report.
Exit codes: 0 success, 2 configuration error, 3 I/O or file-format
error, 4 numeric failure.
"""

import argparse
import sys

from . import harness, report
from .config import load_config
from .errors import ConfigError, FormatError, MhuiError, NumericError

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhui",
        description=(
            "Multi-head uncertainty inference: train a multi-head classifier, "
            "attack it, and evaluate attack detection."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, seeds: bool = True, config: bool = True):
        p = sub.add_parser(name, help=help_text)
        if config:
            p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        if seeds:
            p.add_argument("--seeds", type=int, default=5, help="number of consecutive seeds")
        return p

    add("gen-data", "write the configured dataset as an IDX pair", seeds=False)
    add("train", "train one checkpoint per seed")
    add("attack", "measure final-head accuracy over the eps grid")
    add("detect", "score clean vs attacked samples and report AUROC")
    add("ablate", "run detection over the configured head combinations")
    p_report = sub.add_parser("report", help="aggregate a run directory into report/")
    p_report.add_argument("--out", required=True, help="run directory to aggregate")
    return parser


def _resolve_out(args, cfg) -> str:
    return args.out if args.out else cfg.output_dir


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            report_dir = report.cmd_report(args.out)
            print(f"report written to {report_dir}")
            return 0

        cfg = load_config(args.config)
        out_dir = _resolve_out(args, cfg)
        if args.command == "gen-data":
            images, labels = harness.cmd_gen_data(cfg, out_dir)
            print(f"wrote {images} and {labels}")
        elif args.command == "train":
            harness.cmd_train(cfg, out_dir, args.seeds)
            print(f"trained {args.seeds} seed(s) under {out_dir}")
        elif args.command == "attack":
            harness.cmd_attack(cfg, out_dir, args.seeds)
            print(f"attack accuracy written under {out_dir}")
        elif args.command == "detect":
            harness.cmd_detect(cfg, out_dir, args.seeds)
            print(f"detection results written under {out_dir}")
        elif args.command == "ablate":
            harness.cmd_ablate(cfg, out_dir, args.seeds)
            print(f"ablation results written under {out_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, MhuiError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
