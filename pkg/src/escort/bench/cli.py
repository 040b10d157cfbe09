"""``escort-bench`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

from ..catalog import target_names
from ..envs import env_names
from ..errors import ConfigError, ContractError, NumericalError
from .config import load_config
from .runner import profile, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="escort-bench", description="Seeded belief-approximation benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (
        ("synthetic", "approximate catalog mixtures"),
        ("pomdp", "filter along scripted-policy episodes"),
        ("scalability", "ESCORT vs ESCORT-NoCorr across dimensions"),
        ("profile", "phase timing breakdown"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="INI experiment file (default: bundled config)")
        p.add_argument("--seeds", type=int, metavar="N", help="use seeds 0..N-1")
        p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V", help="override a setting")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_parser("list-targets", help="catalog mixture names")
    sub.add_parser("list-envs", help="environment names")
    return parser


def _summary_lines(report) -> list[str]:
    lines = []
    for method, cases in report.aggregates().items():
        for case, cols in cases.items():
            parts = [f"{c}={m:.4g}±{se:.2g}" for c, (m, se) in cols.items()]
            lines.append(f"{method:>14} {case:<12} " + " ".join(parts))
    lines += [f"{k} = {v:.4g}" for k, v in report.extras.items()]
    return lines


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-targets":
        print("\n".join(target_names()))
        return EXIT_OK
    if args.command == "list-envs":
        print("\n".join(env_names()))
        return EXIT_OK
    try:
        if args.command == "profile":
            xcfg = load_config(args.config, None, args.overrides, args.seeds, bundled="profile")
            report = profile(xcfg)
        else:
            xcfg = load_config(args.config, args.command, args.overrides, args.seeds)
            report = run_experiment(xcfg)
    except (ConfigError, ContractError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = report.render(args.format)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"config error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print("\n".join(_summary_lines(report)), file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
