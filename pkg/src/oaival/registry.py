"""The registry of validated repositories and its compliance tiers."""

from __future__ import annotations

import contextlib
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator

from filelock import FileLock

from .engine import ComplianceIssue, OutcomeKind, ValidationReport
from .protocol import UtcDatestamp
from .report import render_json

REGISTRY_FORMAT = "oaival-registry/1"


class ComplianceLevel(str, Enum):
    BASIC = "basic"
    ROBUST = "robust"
    DUBLIN_CORE = "dublin-core"

    @property
    def rank(self) -> int:
        return list(ComplianceLevel).index(self)


class RegistrationError(Exception):
    pass


class NotEligible(RegistrationError):
    def __init__(self, level: ComplianceLevel, reasons: list[str], issues: list[ComplianceIssue] | None = None):
        self.level = level
        self.reasons = reasons
        self.issues = issues or []
        super().__init__(f"not eligible for {level.value} registration: " + "; ".join(reasons))


class DuplicateBaseUrl(RegistrationError):
    def __init__(self, base_url: str, existing: ComplianceLevel, requested: ComplianceLevel):
        self.base_url = base_url
        self.existing = existing
        self.requested = requested
        super().__init__(
            f"{base_url} is already registered at level {existing.value}; "
            f"re-registration at {requested.value} would downgrade it"
        )


@dataclass(frozen=True)
class RegistryEntry:
    base_url: str
    repository_name: str
    admin_emails: tuple[str, ...]
    registered_at: str
    compliance_level: ComplianceLevel
    report_ref: str

    def to_dict(self) -> dict:
        return {
            "base_url": self.base_url,
            "repository_name": self.repository_name,
            "admin_emails": list(self.admin_emails),
            "registered_at": self.registered_at,
            "compliance_level": self.compliance_level.value,
            "report_ref": self.report_ref,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RegistryEntry:
        return cls(
            base_url=data["base_url"],
            repository_name=data["repository_name"],
            admin_emails=tuple(data["admin_emails"]),
            registered_at=data["registered_at"],
            compliance_level=ComplianceLevel(data["compliance_level"]),
            report_ref=data["report_ref"],
        )


def eligibility_problems(report: ValidationReport, level: ComplianceLevel) -> list[str]:
    """Reasons ``report`` does not qualify for ``level``; empty when it does."""
    outcome = report.outcome
    problems = []
    if outcome.kind is OutcomeKind.ABORTED:
        problems.append(f"validation aborted ({outcome.abort.value})")
    elif level is ComplianceLevel.BASIC:
        if not outcome.passes_valid_requests:
            problems.append("valid requests do not all succeed")
    elif outcome.kind is not OutcomeKind.ROBUSTLY_VALID:
        problems.append(f"outcome is {outcome.kind.value}, robust validation is required")
    if not problems and level is ComplianceLevel.DUBLIN_CORE and not report.dublin_core_record_ok():
        problems.append("no GetRecord in the transcript returned oai_dc metadata")
    if not problems and report.identify is None:
        problems.append("the report carries no Identify information")
    return problems


def report_digest(report: ValidationReport) -> str:
    return hashlib.sha256(render_json(report).encode("utf-8")).hexdigest()[:16]


class Registry:
    """Entries keyed by baseURL. Saved sorted, so an unmodified rewrite is byte-identical."""

    def __init__(self, entries=(), clock: Callable[[], UtcDatestamp] = UtcDatestamp.now):
        self._entries: dict[str, RegistryEntry] = {e.base_url: e for e in entries}
        self.clock = clock

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, base_url: str) -> bool:
        return base_url in self._entries

    def get(self, base_url: str) -> RegistryEntry | None:
        return self._entries.get(base_url)

    @property
    def entries(self) -> list[RegistryEntry]:
        return [self._entries[k] for k in sorted(self._entries)]

    def register(self, report: ValidationReport, level: ComplianceLevel, report_ref: str | None = None) -> RegistryEntry:
        problems = eligibility_problems(report, level)
        if problems:
            blocking = [i for i in report.issues if level is not ComplianceLevel.BASIC or not i.is_exception_issue]
            raise NotEligible(level, problems, blocking)
        key = str(report.base_url)
        existing = self._entries.get(key)
        if existing is not None:
            if level.rank < existing.compliance_level.rank:
                raise DuplicateBaseUrl(key, existing.compliance_level, level)
            if level is existing.compliance_level:
                return existing
        info = report.identify
        entry = RegistryEntry(
            base_url=key,
            repository_name=info.repository_name,
            admin_emails=tuple(info.admin_emails),
            registered_at=existing.registered_at if existing else self.clock().render(),
            compliance_level=level,
            report_ref=report_ref or report_digest(report),
        )
        self._entries[key] = entry
        return entry

    def dumps(self) -> str:
        doc = {"format": REGISTRY_FORMAT, "entries": [e.to_dict() for e in self.entries]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str, **kwargs) -> Registry:
        doc = json.loads(text)
        if doc.get("format") != REGISTRY_FORMAT:
            raise ValueError(f"not a registry file (format {doc.get('format')!r})")
        return cls([RegistryEntry.from_dict(e) for e in doc["entries"]], **kwargs)

    def save(self, path: str | os.PathLike) -> None:
        path = os.fspath(path)
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(prefix=".registry-", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.dumps())
            os.replace(tmp, path)
        except BaseException:
            with contextlib.suppress(FileNotFoundError):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str | os.PathLike, **kwargs) -> Registry:
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.loads(fh.read(), **kwargs)
        except FileNotFoundError:
            return cls(**kwargs)


@contextlib.contextmanager
def open_registry(path: str | os.PathLike, **kwargs) -> Iterator[Registry]:
    """Load, yield and save the registry while holding an exclusive file lock."""
    path = os.fspath(path)
    with FileLock(path + ".lock"):
        registry = Registry.load(path, **kwargs)
        before = registry.dumps()
        yield registry
        if registry.dumps() != before:
            registry.save(path)


def render_table(registry: Registry) -> str:
    rows = [("baseURL", "Repository", "Level", "Registered", "Admin")]
    for e in registry.entries:
        rows.append((e.base_url, e.repository_name, e.compliance_level.value, e.registered_at, ", ".join(e.admin_emails)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.append(f"{len(registry)} registered repositor{'y' if len(registry) == 1 else 'ies'}")
    return "\n".join(lines) + "\n"
