"""Command line front end.

    semigroup-lab list [--json]
    semigroup-lab run <scenario> [--config FILE] [--set key=value ...] [--out DIR]
    semigroup-lab sweep <scenario> --param {L,n} --values v1,v2,... [--out DIR]

Exit codes: 0 when every verdict was computed (true or false), 1 for
configuration errors, 2 when the numerical pipeline fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import scenarios as sc

EXIT_OK, EXIT_CONFIG, EXIT_PIPELINE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semigroup-lab", description="Perron-Frobenius checks on discretized semigroups.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ls = sub.add_parser("list", help="list the scenario registry")
    ls.add_argument("--json", action="store_true", help="machine-readable output")

    for name in ("run", "sweep"):
        q = sub.add_parser(name)
        q.add_argument("scenario")
        q.add_argument("--config", type=Path, help="key=value configuration file")
        q.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a parameter (repeatable, wins over --config)")
        q.add_argument("--out", type=Path, default=None, help="output directory")
        if name == "sweep":
            q.add_argument("--param", required=True, choices=["L", "n"])
            q.add_argument("--values", required=True, help="comma-separated values")
    return p


def _config(args) -> sc.ScenarioConfig:
    overrides = sc.load_config_file(args.config) if args.config else {}
    overrides.update(sc.parse_assignments(args.set))
    out = args.out or Path("out") / args.scenario
    cfg = sc.ScenarioConfig(args.scenario, overrides, out)
    cfg.params()
    return cfg


def _print_verdicts(report: sc.ScenarioReport) -> None:
    for v in report.verdicts:
        detail = "" if v["detail"] is None else f"  [{v['detail']}]"
        print(f"  {v['claim']}: {'true' if v['value'] else 'false'} (tol {v['tolerance']}){detail}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        print(sc.list_scenarios(machine=args.json))
        return EXIT_OK
    try:
        cfg = _config(args)
        if args.command == "run":
            report = sc.run_scenario(cfg)
            print(f"{cfg.scenario}: n={report.summary['n']} "
                  f"lambda0={report.summary['spectrum']['lambda0']:.10g} "
                  f"gap={report.summary['spectrum']['gap']:.10g}")
            _print_verdicts(report)
            print(f"wrote {report.files['profile']}, {report.files['summary']}")
        else:
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            result = sc.run_sweep(cfg, args.param, values)
            print("value,lambda0,gap,delta_fit,t1,status")
            for r in result.rows:
                print(",".join(sc.fmt(r[k]) for k in ("value", "lambda0", "gap", "delta_fit", "t1"))
                      + f",{r['status']}")
            print(f"trend: {result.trend}")
            print(f"wrote {result.path}")
    except sc.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except sc.PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
