"""The validation log and the aggregate tables built from it."""

from __future__ import annotations

import json
import os
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Iterable

from .engine import AbortReason, OutcomeKind, ValidationReport
from .protocol import IntakeError, UtcDatestamp


class IntakeClass(str, Enum):
    NO_BASE_URL = "NoBaseUrl"
    NONSENSE_BASE_URL = "NonsenseBaseUrl"
    VALID = "Valid"


INTAKE_LABELS = {
    IntakeClass.NO_BASE_URL: "No base URL",
    IntakeClass.NONSENSE_BASE_URL: "Nonsense base URL",
    IntakeClass.VALID: "Valid base URL",
}

ABORT_LABELS = {
    AbortReason.NO_IDENTIFY_RESPONSE: "No Identify response",
    AbortReason.IDENTIFY_PARSE_FAILURE: "Identify response not parseable",
    AbortReason.BAD_PROTOCOL_VERSION: "Bad protocolVersion",
    AbortReason.BAD_ADMIN_EMAIL: "Bad adminEmail",
    AbortReason.OTHER_IDENTIFY_ERROR: "Other Identify errors",
    AbortReason.EXCESSIVE_RETRY_AFTER: "Too many successive 503 Retry-After",
    AbortReason.NO_IDENTIFIERS_LISTED: "No identifiers from ListIdentifiers",
    AbortReason.NO_DATESTAMP_IN_SAMPLE_RECORD: "Sample record has no datestamp",
}

COMPLETED = (OutcomeKind.FAILED, OutcomeKind.VALID_EXCLUDING_EXCEPTIONS, OutcomeKind.ROBUSTLY_VALID)


@dataclass(frozen=True)
class ValidationLogEntry:
    timestamp: str
    base_url_text: str
    intake_class: IntakeClass
    outcome: OutcomeKind | None = None
    abort_reason: AbortReason | None = None
    issue_codes: tuple[str, ...] = ()

    def __post_init__(self):
        if (self.outcome is None) != (self.intake_class is not IntakeClass.VALID):
            raise ValueError("outcome is present exactly when the baseURL passed intake")
        if (self.abort_reason is not None) != (self.outcome is OutcomeKind.ABORTED):
            raise ValueError("abort_reason is present exactly for aborted validations")

    @classmethod
    def from_report(cls, raw: str, report: ValidationReport) -> ValidationLogEntry:
        return cls(
            timestamp=report.started_at.render(),
            base_url_text=raw,
            intake_class=IntakeClass.VALID,
            outcome=report.outcome.kind,
            abort_reason=report.outcome.abort,
            issue_codes=tuple(report.issue_codes),
        )

    @classmethod
    def from_intake_error(cls, raw: str, error: IntakeError, timestamp: UtcDatestamp | None = None) -> ValidationLogEntry:
        stamp = (timestamp or UtcDatestamp.now()).render()
        return cls(stamp, raw, IntakeClass(error.intake_class))

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "base_url": self.base_url_text,
            "intake": self.intake_class.value,
            "outcome": self.outcome.value if self.outcome else None,
            "abort_reason": self.abort_reason.value if self.abort_reason else None,
            "issues": list(self.issue_codes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ValidationLogEntry:
        return cls(
            timestamp=data["timestamp"],
            base_url_text=data["base_url"],
            intake_class=IntakeClass(data["intake"]),
            outcome=OutcomeKind(data["outcome"]) if data.get("outcome") else None,
            abort_reason=AbortReason(data["abort_reason"]) if data.get("abort_reason") else None,
            issue_codes=tuple(data.get("issues") or ()),
        )


class ValidationLog:
    """Line-delimited JSON log; one writer lock per process, whole-file reads."""

    _write_lock = threading.Lock()

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)

    def append(self, entry: ValidationLogEntry) -> None:
        line = json.dumps(entry.to_dict(), sort_keys=True) + "\n"
        with self._write_lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)

    def read(self) -> list[ValidationLogEntry]:
        try:
            with open(self.path, encoding="utf-8") as fh:
                data = fh.read()
        except FileNotFoundError:
            return []
        entries = []
        for n, line in enumerate(data.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entries.append(ValidationLogEntry.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{self.path}:{n}: bad log line: {exc}") from None
        return entries


@dataclass(frozen=True)
class BreakdownRow:
    key: str
    label: str
    count: int
    percent: Decimal


@dataclass(frozen=True)
class Breakdown:
    rows: tuple[BreakdownRow, ...] = ()
    total: int = 0

    def percents(self) -> dict[str, str]:
        return {r.key: str(r.percent) for r in self.rows}

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "rows": [
                {"key": r.key, "label": r.label, "count": r.count, "percent": str(r.percent)} for r in self.rows
            ],
        }


def percent(count: int, total: int) -> Decimal:
    """100*count/total to one decimal place, halves rounded up."""
    if total == 0:
        return Decimal("0.0")
    return (Decimal(100 * count) / Decimal(total)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


def _breakdown(counts: list[tuple[str, str, int]], total: int) -> Breakdown:
    if total == 0:
        return Breakdown()
    return Breakdown(tuple(BreakdownRow(k, label, c, percent(c, total)) for k, label, c in counts), total)


def breakdown_intake(log: Iterable[ValidationLogEntry]) -> Breakdown:
    counts = Counter(e.intake_class for e in log)
    rows = [(c.value, INTAKE_LABELS[c], counts[c]) for c in IntakeClass]
    return _breakdown(rows, sum(counts.values()))


def breakdown_aborts(log: Iterable[ValidationLogEntry]) -> Breakdown:
    counts = Counter(e.abort_reason for e in log if e.outcome is OutcomeKind.ABORTED)
    rows = [(r.value, ABORT_LABELS[r], counts[r]) for r in AbortReason]
    return _breakdown(rows, sum(counts.values()))


def top_issues(log: Iterable[ValidationLogEntry], k: int = 5) -> Breakdown:
    """The k issue codes seen in the most completed validations.

    Each validation counts an issue code once. ``total`` is the number of
    completed validations, so percents give the share affected and need
    not sum to 100.
    """
    completed = [e for e in log if e.outcome in COMPLETED]
    counts = Counter(code for e in completed for code in set(e.issue_codes))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return _breakdown([(code, code, n) for code, n in ranked], len(completed))


def outcome_breakdown(log: Iterable[ValidationLogEntry]) -> Breakdown:
    counts = Counter(e.outcome for e in log if e.outcome in COMPLETED)
    rows = [(o.value, o.value, counts[o]) for o in (OutcomeKind.ROBUSTLY_VALID, OutcomeKind.VALID_EXCLUDING_EXCEPTIONS, OutcomeKind.FAILED)]
    return _breakdown(rows, sum(counts.values()))


@dataclass
class AttemptsHistogram:
    tier: OutcomeKind
    buckets: dict[int, int] = field(default_factory=dict)
    never_succeeded: int = 0
    never_succeeded_over_5: int = 0
    never_succeeded_single_attempt: int = 0

    @property
    def succeeded(self) -> int:
        return sum(self.buckets.values())

    def to_dict(self) -> dict:
        return {
            "tier": self.tier.value,
            "buckets": {str(k): v for k, v in sorted(self.buckets.items())},
            "succeeded": self.succeeded,
            "never_succeeded": self.never_succeeded,
            "never_succeeded_over_5": self.never_succeeded_over_5,
            "never_succeeded_single_attempt": self.never_succeeded_single_attempt,
        }


def _reaches(outcome: OutcomeKind | None, tier: OutcomeKind) -> bool:
    if tier is OutcomeKind.ROBUSTLY_VALID:
        return outcome is OutcomeKind.ROBUSTLY_VALID
    return outcome in (OutcomeKind.VALID_EXCLUDING_EXCEPTIONS, OutcomeKind.ROBUSTLY_VALID)


def attempts_histogram(log: Iterable[ValidationLogEntry], tier: OutcomeKind) -> AttemptsHistogram:
    """Attempts per repository up to and including its first success at ``tier``.

    Later attempts, successful or not, are ignored. Tiers are counted
    independently of one another.
    """
    if tier not in (OutcomeKind.VALID_EXCLUDING_EXCEPTIONS, OutcomeKind.ROBUSTLY_VALID):
        raise ValueError(f"no histogram for tier {tier.value}")
    per_repo: dict[str, list[ValidationLogEntry]] = defaultdict(list)
    for entry in log:
        if entry.intake_class is IntakeClass.VALID:
            per_repo[entry.base_url_text.strip()].append(entry)
    hist = AttemptsHistogram(tier)
    for entries in per_repo.values():
        entries.sort(key=lambda e: e.timestamp)
        first = next((n for n, e in enumerate(entries, start=1) if _reaches(e.outcome, tier)), None)
        if first is not None:
            hist.buckets[first] = hist.buckets.get(first, 0) + 1
        else:
            hist.never_succeeded += 1
            if len(entries) > 5:
                hist.never_succeeded_over_5 += 1
            if len(entries) == 1:
                hist.never_succeeded_single_attempt += 1
    return hist


def render_breakdown(title: str, b: Breakdown, with_percent: bool = True) -> str:
    width = max([len(r.label) for r in b.rows] + [len("Total"), 10])
    lines = [title, "-" * len(title)]
    for r in b.rows:
        line = f"{r.label:>{width}}  {r.count:>7}"
        if with_percent:
            line += f"  {r.percent:>6}"
        lines.append(line)
    total = f"{'Total':>{width}}  {b.total:>7}"
    if with_percent and b.rows:
        total += f"  {'100.0':>6}"
    lines.append(total)
    return "\n".join(lines) + "\n"


def render_histogram(h: AttemptsHistogram) -> str:
    label = "validation excluding exceptions" if h.tier is OutcomeKind.VALID_EXCLUDING_EXCEPTIONS else "robust validation"
    lines = [f"Attempts until first success ({label})"]
    peak = max(h.buckets.values(), default=0)
    for attempts in sorted(h.buckets):
        n = h.buckets[attempts]
        bar = "#" * (round(40 * n / peak) if peak else 0)
        lines.append(f"  {attempts:>3}  {n:>5}  {bar}")
    lines.append(f"  succeeded: {h.succeeded}")
    lines.append(
        f"  never succeeded: {h.never_succeeded} "
        f"(more than 5 attempts: {h.never_succeeded_over_5}, single attempt: {h.never_succeeded_single_attempt})"
    )
    return "\n".join(lines) + "\n"
