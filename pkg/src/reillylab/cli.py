"""Command-line suite runner.

    reillylab run --config <file|suite> --out <report.jsonl>
    reillylab converge --config <file|suite> --levels L --out <table.csv>
    reillylab list-cases [--suite NAME]

Exit status: 0 when every verdict passes (hypothesis-not-met included),
1 when any check fails or errors, 2 for configuration errors.
The REILLYLAB_THREADS environment variable sets how many cases run at once.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from . import reports
from .runner import ConfigError, converge_case, run_config, validate

SUITES = ("identities", "spectra-classical", "inequalities-paper", "paper-core")


def bundled_suite(name: str) -> dict:
    text = resources.files("reillylab").joinpath("suites", f"{name}.json").read_text("utf-8")
    return json.loads(text)


def load_config(ref: str) -> dict:
    """A JSON file path, or the name of a bundled suite."""
    path = Path(ref)
    try:
        if path.is_file():
            config = json.loads(path.read_text("utf-8"))
        elif ref in SUITES:
            config = bundled_suite(ref)
        else:
            raise ConfigError(f"no configuration file or bundled suite named {ref!r}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    validate(config)
    return config


def threads() -> int:
    raw = os.environ.get("REILLYLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_run(args) -> int:
    config = load_config(args.config)
    result = run_config(config, threads())
    out = Path(args.out)
    reports.write_report(str(out), result["header"], result["records"], result["summary"])
    out.with_suffix(".csv").write_text(reports.summary_csv(result["records"]), encoding="utf-8")
    out.with_suffix(".timing.json").write_text(reports.dumps(result["timing"]) + "\n", encoding="utf-8")
    counts = result["summary"]["counts"]
    print(f"{config['suite']}: {counts['total']} records, {counts['pass']} pass, "
          f"{counts['fail']} fail, {counts['hypothesis-not-met']} hypothesis-not-met, "
          f"{counts['error']} error")
    return 1 if counts["fail"] or counts["error"] else 0


def cmd_converge(args) -> int:
    if args.levels < 3:
        raise ConfigError("convergence studies need at least 3 levels")
    config = load_config(args.config)
    rows = []
    for case in config["cases"]:
        rows += converge_case(case, config["seed"], args.levels)
    Path(args.out).write_text(reports.convergence_csv(rows), encoding="utf-8")
    print(f"{len(rows)} rows written to {args.out}")
    return 0


def cmd_list(args) -> int:
    for name in ([args.suite] if args.suite else SUITES):
        suite = bundled_suite(name)
        print(f"{name}:")
        for case in suite["cases"]:
            d = case["domain"]
            print(f"  {case['name']:<32} {d['kind']}{d['n']}  p={case['p']}  "
                  f"checks={','.join(case['checks'])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reillylab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a suite and write a JSON-lines report")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("converge", help="write a convergence table over mesh levels")
    c.add_argument("--config", required=True)
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_converge)
    ls = sub.add_parser("list-cases", help="list the bundled suites")
    ls.add_argument("--suite", choices=SUITES)
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
