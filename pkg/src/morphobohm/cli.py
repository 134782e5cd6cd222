"""Command-line entry point ``morphobohm``.

Exit codes: 0 success, 1 check failure, 2 config error, 3 I/O error.
The default output directory is ``$MORPHOBOHM_OUT`` or ``./morphobohm_out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import io
from .config import load_config, parse_seed
from .errors import ConfigError
from .scenarios import RunReport, run_scenario
from .validation import SUITES, run_validation

ENV_OUT = "MORPHOBOHM_OUT"
EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _print_checks(checks) -> None:
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name}  value={c.value:.6g} {c.op} tol={c.tolerance:.3g}")
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail} passed, {n_fail} failed")


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"--tol expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"--tol value for {name!r} is not a number") from None
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = Path(args.out or cfg.out or os.environ.get(ENV_OUT) or "morphobohm_out")
    report = run_scenario(cfg, out)
    _print_checks(report.checks)
    print(f"wrote {len(report.manifest) + 1} files to {out} in {report.wall_time:.2f} s")
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_validate(args) -> int:
    if args.filter is not None and not any(n.startswith(args.filter) for n in SUITES):
        raise ConfigError(f"--filter {args.filter!r} matches no module; choose from {sorted(SUITES)}")
    checks = run_validation(args.filter, _parse_tol(args.tol))
    _print_checks(checks)
    if args.report:
        report = RunReport("validate", 0, checks)
        io.dump_json(report.to_dict(include_wall_time=False), args.report)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def cmd_export(args) -> int:
    field = io.read_field(args.field)
    text = json.dumps(io.field_to_json(field), indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morphobohm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario from an INI config")
    r.add_argument("--config", required=True, help="path to the INI config")
    r.add_argument("--out", help=f"output directory (default: ${ENV_OUT} or ./morphobohm_out)")
    r.add_argument("--seed", help="override the config seed (unsigned 64-bit)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="run the invariant suite")
    v.add_argument("--filter", help="only modules whose name starts with this")
    v.add_argument("--tol", action="append", metavar="NAME=VAL", help="override a tolerance; NAME may be a glob")
    v.add_argument("--report", help="also write the check table as JSON here")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("export", help="convert a field CSV to JSON")
    e.add_argument("--field", required=True, help="field CSV (with its JSON sidecar)")
    e.add_argument("--format", choices=["json"], default="json")
    e.add_argument("--output", help="write here instead of stdout")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if getattr(args, "seed", None) is not None:
            parse_seed(args.seed)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
