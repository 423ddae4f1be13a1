"""Text and structured renderings of a ValidationReport."""

from __future__ import annotations

import json

from .engine import ValidationReport
from .protocol import IdentifyInfo

REPORT_FORMAT = "oaival-report/1"


def _identify_dict(info: IdentifyInfo | None) -> dict | None:
    if info is None:
        return None
    return {
        "repository_name": info.repository_name,
        "base_url": str(info.base_url),
        "protocol_version": info.protocol_version,
        "earliest_datestamp": info.earliest_datestamp.render(),
        "deleted_record": info.deleted_record,
        "granularity": info.granularity.value,
        "admin_emails": list(info.admin_emails),
    }


def report_to_dict(report: ValidationReport) -> dict:
    outcome = report.outcome
    abort = None
    if outcome.abort is not None:
        abort = {
            "reason": outcome.abort.value,
            "detail": report.abort_detail,
            "diagnostics": [d.to_dict() for d in report.abort_diagnostics],
        }
    return {
        "format": REPORT_FORMAT,
        "base_url": str(report.base_url),
        "started_at": report.started_at.render(),
        "outcome": {
            "kind": outcome.kind.value,
            "abort_reason": outcome.abort.value if outcome.abort else None,
            "label": str(outcome),
        },
        "exception_battery": report.exception_battery,
        "identify": _identify_dict(report.identify),
        "abort": abort,
        "issues": [i.to_dict() for i in report.issues],
        "transcript": [e.to_dict() for e in report.transcript],
    }


def render_json(report: ValidationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)


def _indent(text: str, prefix: str) -> str:
    return "\n".join(prefix + line for line in text.splitlines())


def render_text(report: ValidationReport, verbose: bool = False) -> str:
    """Outcome first, then issues with hints, then the request transcript."""
    lines = [f"Outcome: {report.outcome}", f"baseURL: {report.base_url}", f"Started: {report.started_at}"]
    if report.identify:
        lines.append(f"Repository: {report.identify.repository_name}")
    if not report.exception_battery:
        lines.append("Exception battery: skipped")
    if report.outcome.abort:
        lines.append("")
        lines.append(f"Validation aborted: {report.abort_detail}")
        for d in report.abort_diagnostics:
            lines.append(_indent(d.render(), "  "))
    lines.append("")
    if report.issues:
        lines.append(f"Issues ({len(report.issues)}):")
        for n, issue in enumerate(report.issues, start=1):
            refs = ", ".join(f"#{r}" for r in issue.transcript_refs)
            lines.append(f"  {n}. [{issue.code}] {issue.detail}" + (f"  (see {refs})" if refs else ""))
            for d in issue.diagnostics:
                lines.append(_indent(d.render(), "       "))
    else:
        lines.append("Issues: none")
    lines.append("")
    lines.append("Transcript:")
    for n, entry in enumerate(report.transcript):
        status = entry.status_code if entry.status_code is not None else "no response"
        mark = "ok" if entry.ok else "--"
        lines.append(f"  #{n} {mark} {entry.step}: GET {entry.request_url} -> {status} ({entry.elapsed:.2f}s)")
        if entry.retries:
            lines.append(f"      after {entry.retries} Retry-After wait(s)")
        if entry.error_codes:
            lines.append(f"      error codes: {', '.join(entry.error_codes)}")
        if entry.note and verbose:
            lines.append(f"      {entry.note}")
        for event in entry.events if verbose else ():
            lines.append(f"      {event}")
        for d in entry.diagnostics:
            if verbose or d.blocking:
                lines.append(f"      {d.severity.value}: [{d.code}] {d.message}")
    return "\n".join(lines) + "\n"
