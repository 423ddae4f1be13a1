"""Command-line entry point: validate, register, browse, stats, simulate."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .engine import OutcomeKind, ValidationReport, run_validation
from .protocol import IntakeError, validate_base_url
from .registry import ComplianceLevel, NotEligible, RegistrationError, Registry, open_registry, render_table
from .report import render_json, render_text, report_to_dict
from .stats import (
    ValidationLog,
    ValidationLogEntry,
    attempts_histogram,
    breakdown_aborts,
    breakdown_intake,
    outcome_breakdown,
    render_breakdown,
    render_histogram,
    top_issues,
)
from .transport import RetryPolicy

log = logging.getLogger("oaival")

EXIT_ROBUST = 0
EXIT_VALID_EXCLUDING_EXCEPTIONS = 2
EXIT_FAILED = 3
EXIT_ABORTED = 4
EXIT_INTAKE = 5
EXIT_USAGE = 64

OUTCOME_EXIT = {
    OutcomeKind.ROBUSTLY_VALID: EXIT_ROBUST,
    OutcomeKind.VALID_EXCLUDING_EXCEPTIONS: EXIT_VALID_EXCLUDING_EXCEPTIONS,
    OutcomeKind.FAILED: EXIT_FAILED,
    OutcomeKind.ABORTED: EXIT_ABORTED,
}

LOG_ENV = "OAIVAL_LOG"
REGISTRY_ENV = "OAIVAL_REGISTRY"
DEFAULT_LOG = "oaival-log.jsonl"
DEFAULT_REGISTRY = "oaival-registry.json"


class UsageError(Exception):
    def __init__(self, message: str, usage: str | None = None):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_usage())


def exit_code(outcome_kind: OutcomeKind | None) -> int:
    """Exit status for an outcome; None stands for an intake error."""
    return EXIT_INTAKE if outcome_kind is None else OUTCOME_EXIT[outcome_kind]


def _add_validation_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("base_url", help="OAI-PMH baseURL to validate")
    p.add_argument("--no-exception-battery", dest="battery", action="store_false",
                   help="skip the illegal-request probes (robust validation then cannot be reached)")
    p.add_argument("--max-retry-after", type=int, default=5, metavar="N",
                   help="successive 503 Retry-After replies tolerated (default: 5)")
    p.add_argument("--max-wait", type=float, default=60.0, metavar="SECONDS",
                   help="cap on a single Retry-After wait (default: 60)")
    p.add_argument("--deadline", type=float, default=600.0, metavar="SECONDS",
                   help="overall time budget per request including retries (default: 600)")
    p.add_argument("--timeout", type=float, default=30.0, metavar="SECONDS",
                   help="per-request timeout (default: 30)")
    p.add_argument("--log", default=None, metavar="PATH",
                   help=f"validation log to append to (default: ${LOG_ENV} or {DEFAULT_LOG})")
    p.add_argument("--output", choices=["text", "structured"], default="text")
    p.add_argument("-v", "--verbose", action="store_true", help="show transcript notes and warnings")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oaival", description="OAI-PMH 2.0 data-provider validation and registration")
    parser.add_argument("--version", action="version", version=f"oaival {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="validate a baseURL and print the report")
    _add_validation_options(p)

    p = sub.add_parser("register", help="validate a baseURL and add it to the registry")
    _add_validation_options(p)
    p.add_argument("--level", choices=[lvl.value for lvl in ComplianceLevel], default=ComplianceLevel.ROBUST.value)
    p.add_argument("--registry", default=None, metavar="PATH",
                   help=f"registry file (default: ${REGISTRY_ENV} or {DEFAULT_REGISTRY})")

    p = sub.add_parser("browse", help="list registered repositories")
    p.add_argument("--registry", default=None, metavar="PATH")
    p.add_argument("--output", choices=["text", "structured"], default="text")

    p = sub.add_parser("stats", help="summarise the validation log")
    p.add_argument("--log", default=None, metavar="PATH")
    p.add_argument("--top", type=int, default=5, metavar="K", help="number of issue codes to rank")
    p.add_argument("--output", choices=["text", "structured"], default="text")

    p = sub.add_parser("simulate", help="run a fault-injectable OAI-PMH repository")
    p.add_argument("--fault", action="append", default=[], metavar="FLAG[=VALUE]",
                   help="fault flag to inject; repeatable (see README for the list)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--request-log", default=None, metavar="PATH", help="append each request as a JSON line")
    return parser


def _policy(args) -> RetryPolicy:
    try:
        return RetryPolicy(
            max_successive_retry_after=args.max_retry_after,
            max_single_wait=args.max_wait,
            overall_deadline=args.deadline,
            request_timeout=args.timeout,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _log_path(args) -> str:
    return args.log or os.environ.get(LOG_ENV) or DEFAULT_LOG


def _registry_path(args) -> str:
    return args.registry or os.environ.get(REGISTRY_ENV) or DEFAULT_REGISTRY


def _validate(args, out, err) -> tuple[int, ValidationReport | None]:
    raw = args.base_url
    policy = _policy(args)
    vlog = ValidationLog(_log_path(args))
    try:
        base = validate_base_url(raw)
    except IntakeError as exc:
        vlog.append(ValidationLogEntry.from_intake_error(raw, exc))
        if args.output == "structured":
            out.write(json.dumps({"intake": exc.intake_class, "message": str(exc)}, indent=2) + "\n")
        print(str(exc), file=err)
        return EXIT_INTAKE, None
    log.info("validating %s", base)
    report = run_validation(base, policy, args.battery)
    vlog.append(ValidationLogEntry.from_report(raw, report))
    return exit_code(report.outcome.kind), report


def cmd_validate(args, out, err) -> int:
    code, report = _validate(args, out, err)
    if report is not None:
        out.write(render_json(report) + "\n" if args.output == "structured" else render_text(report, args.verbose))
    return code


def cmd_register(args, out, err) -> int:
    code, report = _validate(args, out, err)
    if report is None:
        return code
    level = ComplianceLevel(args.level)
    path = _registry_path(args)
    try:
        with open_registry(path) as registry:
            entry = registry.register(report, level)
    except NotEligible as exc:
        if args.output == "structured":
            out.write(json.dumps({"registered": False, "reason": str(exc), "report": report_to_dict(report)}, indent=2) + "\n")
        else:
            out.write(render_text(report, args.verbose))
        print(f"NotEligible: {exc}", file=err)
        for issue in exc.issues:
            print(f"  [{issue.code}] {issue.detail}", file=err)
        return EXIT_FAILED
    except RegistrationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=err)
        return EXIT_FAILED
    reports_dir = os.path.join(os.path.dirname(os.path.abspath(path)), "reports")
    os.makedirs(reports_dir, exist_ok=True)
    with open(os.path.join(reports_dir, f"{entry.report_ref}.json"), "w", encoding="utf-8") as fh:
        fh.write(render_json(report) + "\n")
    if args.output == "structured":
        out.write(json.dumps({"registered": True, "entry": entry.to_dict()}, indent=2, sort_keys=True) + "\n")
    else:
        out.write(f"Registered {entry.base_url} at level {entry.compliance_level.value} ({entry.repository_name})\n")
    return EXIT_ROBUST


def cmd_browse(args, out, err) -> int:
    registry = Registry.load(_registry_path(args))
    if args.output == "structured":
        out.write(registry.dumps())
    else:
        out.write(render_table(registry))
    return 0


def cmd_stats(args, out, err) -> int:
    entries = ValidationLog(_log_path(args)).read()
    intake = breakdown_intake(entries)
    aborts = breakdown_aborts(entries)
    outcomes = outcome_breakdown(entries)
    issues = top_issues(entries, args.top)
    hists = [attempts_histogram(entries, t) for t in (OutcomeKind.VALID_EXCLUDING_EXCEPTIONS, OutcomeKind.ROBUSTLY_VALID)]
    if args.output == "structured":
        doc = {
            "intake": intake.to_dict(),
            "aborts": aborts.to_dict(),
            "completed": outcomes.to_dict(),
            "top_issues": issues.to_dict(),
            "histograms": [h.to_dict() for h in hists],
        }
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return 0
    out.write(render_breakdown("Validation requests", intake) + "\n")
    out.write(render_breakdown("Aborted validations by reason", aborts) + "\n")
    out.write(render_breakdown("Completed validations by outcome", outcomes) + "\n")
    out.write(render_breakdown(f"Most common issues in completed validations (top {args.top})", issues, with_percent=False) + "\n")
    for h in hists:
        out.write(render_histogram(h) + "\n")
    return 0


def cmd_simulate(args, out, err) -> int:
    from .simulator import FaultProfile, SimulatorServer

    try:
        profile = FaultProfile.from_flags(args.fault)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        server = SimulatorServer(profile, host=args.host, port=args.port, log_path=args.request_log)
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=err)
        return 1
    out.write(f"Serving OAI-PMH simulator at {server.base_url}  faults: {', '.join(profile.flags()) or 'none'}\n")
    out.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stopped.set()
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "register": cmd_register,
    "browse": cmd_browse,
    "stats": cmd_stats,
    "simulate": cmd_simulate,
}


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s", stream=err)
        return COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        err.write(exc.usage or parser.format_usage())
        print(f"oaival: error: {exc}", file=err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
