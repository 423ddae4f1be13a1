"""The validation sequence, its abort taxonomy and the outcome tiers."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import httpx

from .analysis import (
    XML_LEVEL_CODES,
    Diagnostic,
    Envelope,
    HeaderPage,
    analyze,
    diagnostic,
    extract_headers,
    extract_identify,
)
from .protocol import (
    OAI_DC_NS,
    OAI_NS,
    PROTOCOL_VERSION,
    BaseUrl,
    Granularity,
    IdentifyInfo,
    OaiErrorCode,
    UtcDatestamp,
    Verb,
    validate_admin_email,
)
from .transport import ExcessiveRetryAfter, HttpExchange, NoResponse, RetryPolicy, fetch, make_client

log = logging.getLogger(__name__)


class AbortReason(str, Enum):
    NO_IDENTIFY_RESPONSE = "NoIdentifyResponse"
    IDENTIFY_PARSE_FAILURE = "IdentifyParseFailure"
    BAD_PROTOCOL_VERSION = "BadProtocolVersion"
    BAD_ADMIN_EMAIL = "BadAdminEmail"
    OTHER_IDENTIFY_ERROR = "OtherIdentifyError"
    EXCESSIVE_RETRY_AFTER = "ExcessiveRetryAfter"
    NO_IDENTIFIERS_LISTED = "NoIdentifiersListed"
    NO_DATESTAMP_IN_SAMPLE_RECORD = "NoDatestampInSampleRecord"


class IssueKind(str, Enum):
    ENVELOPE_SCHEMA_ERROR = "EnvelopeSchemaError"
    EMPTY_KNOWN_DATESTAMP_WINDOW = "EmptyKnownDatestampWindow"
    SPURIOUS_EMPTY_RESUMPTION_TOKEN = "SpuriousEmptyResumptionToken"
    MALFORMED_INVALID_ID_RESPONSE = "MalformedInvalidIdResponse"
    GRANULARITY_MISMATCH = "GranularityMismatch"
    EXCEPTION_HANDLING_ERROR = "ExceptionHandlingError"
    OTHER_ERROR = "OtherError"


# Failures on illegal requests only; they do not spoil the valid-request tier.
EXCEPTION_ISSUE_KINDS = frozenset({IssueKind.EXCEPTION_HANDLING_ERROR, IssueKind.MALFORMED_INVALID_ID_RESPONSE})


@dataclass(frozen=True)
class ComplianceIssue:
    kind: IssueKind
    detail: str = ""
    probe: str | None = None
    transcript_refs: tuple[int, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def code(self) -> str:
        return f"{self.kind.value}:{self.probe}" if self.probe else self.kind.value

    @property
    def is_exception_issue(self) -> bool:
        return self.kind in EXCEPTION_ISSUE_KINDS

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "code": self.code,
            "probe": self.probe,
            "detail": self.detail,
            "transcript_refs": list(self.transcript_refs),
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }


class OutcomeKind(str, Enum):
    ABORTED = "Aborted"
    FAILED = "Failed"
    VALID_EXCLUDING_EXCEPTIONS = "ValidExcludingExceptions"
    ROBUSTLY_VALID = "RobustlyValid"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    abort: AbortReason | None = None

    def __str__(self) -> str:
        return f"Aborted({self.abort.value})" if self.abort else self.kind.value

    @property
    def passes_valid_requests(self) -> bool:
        return self.kind in (OutcomeKind.VALID_EXCLUDING_EXCEPTIONS, OutcomeKind.ROBUSTLY_VALID)


def classify(issues: Iterable[ComplianceIssue], abort: AbortReason | None = None) -> Outcome:
    if abort is not None:
        return Outcome(OutcomeKind.ABORTED, abort)
    issues = list(issues)
    if not issues:
        return Outcome(OutcomeKind.ROBUSTLY_VALID)
    if all(i.is_exception_issue for i in issues):
        return Outcome(OutcomeKind.VALID_EXCLUDING_EXCEPTIONS)
    return Outcome(OutcomeKind.FAILED)


def check_identify(info: IdentifyInfo | None, diagnostics: Sequence[Diagnostic] = ()) -> AbortReason | None:
    """Abort reason for a parsed Identify response, or None when it passes."""
    if info is None or any(d.blocking for d in diagnostics):
        return AbortReason.OTHER_IDENTIFY_ERROR
    if info.protocol_version != PROTOCOL_VERSION:
        return AbortReason.BAD_PROTOCOL_VERSION
    if not info.admin_emails or not all(validate_admin_email(e) for e in info.admin_emails):
        return AbortReason.BAD_ADMIN_EMAIL
    return None


def granularity_issues(info: IdentifyInfo) -> list[ComplianceIssue]:
    if info.earliest_datestamp.granularity is info.granularity:
        return []
    return [ComplianceIssue(
        IssueKind.GRANULARITY_MISMATCH,
        f"earliestDatestamp {info.earliest_datestamp} does not have the declared "
        f"granularity {info.granularity.value}",
    )]


@dataclass(frozen=True)
class SampleRecordRef:
    identifier: str
    datestamp: UtcDatestamp
    deleted: bool = False


@dataclass(frozen=True)
class Probe:
    id: str
    verb: str
    args: tuple[tuple[str, str], ...]
    expected: frozenset[str]
    purpose: str


INVALID_ID = 'invalid"id'


def exception_probes(sample: SampleRecordRef) -> list[Probe]:
    codes = OaiErrorCode
    p6 = {codes.CANNOT_DISSEMINATE_FORMAT.value}
    if sample.deleted:
        p6.add(codes.ID_DOES_NOT_EXIST.value)
    return [
        Probe("P1", "GetRecord", (("identifier", INVALID_ID), ("metadataPrefix", "oai_dc")),
              frozenset({codes.BAD_ARGUMENT.value, codes.ID_DOES_NOT_EXIST.value}),
              "illegal identifier containing a quotation mark"),
        Probe("P2", "NoSuchVerb", (), frozenset({codes.BAD_VERB.value}), "illegal verb"),
        Probe("P3", "GetRecord", (), frozenset({codes.BAD_ARGUMENT.value}), "missing required arguments"),
        Probe("P4", "ListIdentifiers", (("resumptionToken", "junk"),),
              frozenset({codes.BAD_RESUMPTION_TOKEN.value}), "made-up resumptionToken"),
        Probe("P5", "ListRecords", (("metadataPrefix", "nonexistent"),),
              frozenset({codes.CANNOT_DISSEMINATE_FORMAT.value}), "unsupported metadataPrefix"),
        Probe("P6", "GetRecord", (("identifier", sample.identifier), ("metadataPrefix", "nonexistent")),
              frozenset(p6), "unsupported metadataPrefix for an existing item"),
    ]


@dataclass
class TranscriptEntry:
    step: str
    request_url: str
    status_code: int | None = None
    retries: int = 0
    elapsed: float = 0.0
    content_type: str | None = None
    events: list[str] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    error_codes: list[str] = field(default_factory=list)
    ok: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "request_url": self.request_url,
            "status_code": self.status_code,
            "retries": self.retries,
            "elapsed": round(self.elapsed, 3),
            "content_type": self.content_type,
            "events": list(self.events),
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "error_codes": list(self.error_codes),
            "ok": self.ok,
            "note": self.note,
        }


@dataclass
class ValidationReport:
    base_url: BaseUrl
    started_at: UtcDatestamp
    outcome: Outcome
    issues: list[ComplianceIssue] = field(default_factory=list)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    identify: IdentifyInfo | None = None
    abort_detail: str = ""
    abort_diagnostics: list[Diagnostic] = field(default_factory=list)
    exception_battery: bool = True

    @property
    def issue_codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def dublin_core_record_ok(self) -> bool:
        """True when an oai_dc GetRecord on the sample returned Dublin Core metadata."""
        return any(e.step == "get-record" and e.ok for e in self.transcript)


class _Abort(Exception):
    def __init__(self, reason: AbortReason, detail: str, diagnostics: Sequence[Diagnostic] = (), ref: int | None = None):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail
        self.diagnostics = list(diagnostics)
        self.ref = ref


_Result = Envelope | list[Diagnostic] | None


class Validator:
    """One validation run against one baseURL; requests are strictly sequential."""

    def __init__(
        self,
        base: BaseUrl,
        policy: RetryPolicy = RetryPolicy(),
        *,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], UtcDatestamp] = UtcDatestamp.now,
    ):
        self.base = base
        self.policy = policy
        self.client = client
        self.sleep = sleep
        self.clock = clock
        self.transcript: list[TranscriptEntry] = []
        self.issues: list[ComplianceIssue] = []

    # -- plumbing -----------------------------------------------------------

    def request(self, step: str, verb: str, args: Sequence[tuple[str, str]], expected: Verb | None) -> tuple[int, _Result]:
        """Fetch and analyze; returns the transcript index and the analysis result.

        The result is None when nothing came back. Excessive 503s abort the run
        whichever step they hit.
        """
        index = len(self.transcript)
        try:
            exchange = fetch(self.base, verb, args, self.policy, client=self.client, sleep=self.sleep)
        except ExcessiveRetryAfter as exc:
            entry = TranscriptEntry(step, exc.request_url, 503, exc.retries, exc.elapsed, events=exc.events, note=str(exc))
            self.transcript.append(entry)
            raise _Abort(AbortReason.EXCESSIVE_RETRY_AFTER, str(exc), ref=index) from None
        except NoResponse as exc:
            diag = diagnostic("no-response", str(exc))
            entry = TranscriptEntry(
                step, exc.request_url, None, exc.retries, exc.elapsed, events=exc.events, diagnostics=[diag], note=str(exc)
            )
            self.transcript.append(entry)
            return index, None
        entry = self._entry(step, exchange)
        self.transcript.append(entry)
        result = analyze(exchange.body, expected, exchange.content_type)
        if exchange.status_code != 200:
            status = diagnostic("http-status", f"HTTP {exchange.status_code}.")
            result = [status] + (result if isinstance(result, list) else [])
        if isinstance(result, list):
            entry.diagnostics.extend(result)
        else:
            entry.diagnostics.extend(result.diagnostics)
            entry.error_codes = result.error_codes
            entry.ok = not result.is_error
        return index, result

    @staticmethod
    def _entry(step: str, exchange: HttpExchange) -> TranscriptEntry:
        return TranscriptEntry(
            step=step,
            request_url=exchange.request_url,
            status_code=exchange.status_code,
            retries=exchange.retries_performed,
            elapsed=exchange.elapsed,
            content_type=exchange.content_type,
            events=list(exchange.events),
        )

    def issue(self, kind: IssueKind, detail: str, ref: int | None = None, diagnostics=(), probe: str | None = None) -> ComplianceIssue:
        issue = ComplianceIssue(kind, detail, probe, () if ref is None else (ref,), tuple(diagnostics))
        self.issues.append(issue)
        if ref is not None:
            self.transcript[ref].ok = False
        return issue

    # -- the sequence ---------------------------------------------------------

    def run(self, include_exception_battery: bool = True) -> ValidationReport:
        started = self.clock()
        own_client = self.client is None
        if own_client:
            self.client = make_client(self.policy)
        info = None
        abort = None
        try:
            info = self.identify()
            self.list_metadata_formats()
            self.list_sets()
            sample, first_page = self.sample_record()
            self.test_known_datestamp_window(sample, info.granularity)
            self.get_sample_record(sample)
            self.issues.extend(self.test_granularity_consistency(info))
            self.test_resumption_discipline(first_page)
            if include_exception_battery:
                self.run_exception_battery(sample)
        except _Abort as exc:
            abort = exc
        finally:
            if own_client:
                self.client.close()
                self.client = None
        outcome = classify(self.issues, abort.reason if abort else None)
        if outcome.kind is OutcomeKind.ROBUSTLY_VALID and not include_exception_battery:
            # Robustness was never probed.
            outcome = Outcome(OutcomeKind.VALID_EXCLUDING_EXCEPTIONS)
        report = ValidationReport(
            base_url=self.base,
            started_at=started,
            outcome=outcome,
            issues=list(self.issues),
            transcript=self.transcript,
            identify=info,
            exception_battery=include_exception_battery,
        )
        if abort:
            report.abort_detail = abort.detail
            report.abort_diagnostics = abort.diagnostics
        return report

    def identify(self) -> IdentifyInfo:
        ref, result = self.request("identify", Verb.IDENTIFY.value, (), Verb.IDENTIFY)
        if result is None:
            raise _Abort(AbortReason.NO_IDENTIFY_RESPONSE, self.transcript[ref].note, self.transcript[ref].diagnostics, ref)
        if isinstance(result, list):
            if any(d.code in XML_LEVEL_CODES for d in result):
                raise _Abort(AbortReason.IDENTIFY_PARSE_FAILURE, "the Identify response could not be parsed", result, ref)
            raise _Abort(AbortReason.OTHER_IDENTIFY_ERROR, "the Identify envelope is malformed", result, ref)
        info = extract_identify(result)
        if isinstance(info, list):
            self.transcript[ref].diagnostics.extend(info)
            self.transcript[ref].ok = False
            raise _Abort(AbortReason.OTHER_IDENTIFY_ERROR, "the Identify response is incomplete or invalid", info, ref)
        reason = check_identify(info)
        if reason is AbortReason.BAD_PROTOCOL_VERSION:
            raise _Abort(reason, f"protocolVersion is {info.protocol_version!r}, expected {PROTOCOL_VERSION!r}", ref=ref)
        if reason is AbortReason.BAD_ADMIN_EMAIL:
            bad = [e for e in info.admin_emails if not validate_admin_email(e)]
            raise _Abort(reason, f"adminEmail value(s) {bad!r} are not email addresses", ref=ref)
        return info

    def list_metadata_formats(self) -> None:
        ref, result = self.request("list-metadata-formats", Verb.LIST_METADATA_FORMATS.value, (), Verb.LIST_METADATA_FORMATS)
        if result is None:
            self.issue(IssueKind.OTHER_ERROR, "no response to ListMetadataFormats", ref)
        elif isinstance(result, list):
            self.issue(IssueKind.ENVELOPE_SCHEMA_ERROR, "ListMetadataFormats response is invalid", ref, result)
        elif result.is_error:
            self.issue(IssueKind.OTHER_ERROR, f"ListMetadataFormats answered with errors {result.error_codes}", ref)
        else:
            prefixes = [el.text.strip() for el in result.payload.iter(f"{{{OAI_NS}}}metadataPrefix") if el.text]
            if "oai_dc" not in prefixes:
                self.issue(IssueKind.OTHER_ERROR, f"oai_dc is not among the listed formats {prefixes}", ref)

    def list_sets(self) -> None:
        ref, result = self.request("list-sets", Verb.LIST_SETS.value, (), Verb.LIST_SETS)
        if result is None:
            self.issue(IssueKind.OTHER_ERROR, "no response to ListSets", ref)
        elif isinstance(result, list):
            self.issue(IssueKind.ENVELOPE_SCHEMA_ERROR, "ListSets response is invalid", ref, result)
        elif result.is_error:
            if set(result.error_codes) - {OaiErrorCode.NO_SET_HIERARCHY.value}:
                self.issue(IssueKind.OTHER_ERROR, f"ListSets answered with errors {result.error_codes}", ref)
            else:
                self.transcript[ref].ok = True

    def sample_record(self) -> tuple[SampleRecordRef, Envelope]:
        ref, result = self.request(
            "list-identifiers", Verb.LIST_IDENTIFIERS.value, (("metadataPrefix", "oai_dc"),), Verb.LIST_IDENTIFIERS
        )
        fail = AbortReason.NO_IDENTIFIERS_LISTED
        if result is None:
            raise _Abort(fail, "no response to ListIdentifiers", self.transcript[ref].diagnostics, ref)
        if isinstance(result, list):
            raise _Abort(fail, "the ListIdentifiers response is invalid", result, ref)
        page = extract_headers(result)
        if isinstance(page, list):
            raise _Abort(fail, "headers could not be read from ListIdentifiers", page, ref)
        if page.error_codes:
            raise _Abort(fail, f"ListIdentifiers answered with errors {page.error_codes}", ref=ref)
        if not page.headers:
            raise _Abort(fail, "ListIdentifiers returned no headers", ref=ref)
        header = next((h for h in page.headers if not h.deleted), page.headers[0])
        if header.datestamp is None:
            raise _Abort(
                AbortReason.NO_DATESTAMP_IN_SAMPLE_RECORD,
                f"sample record {header.identifier!r} has no datestamp",
                ref=ref,
            )
        undated = [h.identifier for h in page.headers if h.datestamp is None]
        if undated:
            self.issue(
                IssueKind.ENVELOPE_SCHEMA_ERROR, f"headers without a datestamp: {undated}", ref,
                [diagnostic("missing-element", "<header> has no <datestamp>.")],
            )
        return SampleRecordRef(header.identifier, header.datestamp, header.deleted), result

    def test_known_datestamp_window(self, sample: SampleRecordRef, granularity: Granularity) -> list[ComplianceIssue]:
        """ListIdentifiers with from=until=the sample's datestamp must return the sample."""
        before = len(self.issues)
        stamp = sample.datestamp.truncate(granularity).render()
        args = (("metadataPrefix", "oai_dc"), ("from", stamp), ("until", stamp))
        ref, result = self.request("window", Verb.LIST_IDENTIFIERS.value, args, Verb.LIST_IDENTIFIERS)
        empty = IssueKind.EMPTY_KNOWN_DATESTAMP_WINDOW
        if result is None:
            self.issue(IssueKind.OTHER_ERROR, "no response to the datestamp window request", ref)
        elif isinstance(result, list):
            self.issue(IssueKind.ENVELOPE_SCHEMA_ERROR, "window response is invalid", ref, result)
        else:
            page = extract_headers(result)
            if isinstance(page, list):
                self.issue(IssueKind.ENVELOPE_SCHEMA_ERROR, "window response headers are unreadable", ref, page)
            elif page.error_codes:
                self.issue(empty, f"from=until={stamp} answered with errors {page.error_codes}", ref)
            elif not self._window_contains(page, sample.identifier, ref):
                self.issue(empty, f"from=until={stamp} did not return {sample.identifier!r}", ref)
            else:
                self.test_resumption_discipline(result, follow=False, ref=ref)
        return self.issues[before:]

    def _window_contains(self, page: HeaderPage, identifier: str, ref: int, max_pages: int = 10) -> bool:
        for _ in range(max_pages):
            if any(h.identifier == identifier for h in page.headers):
                return True
            if page.token is None or page.token.is_empty:
                return False
            _, result = self.request(
                "window-continuation", Verb.LIST_IDENTIFIERS.value, (("resumptionToken", page.token.token),),
                Verb.LIST_IDENTIFIERS,
            )
            if not isinstance(result, Envelope):
                return False
            page = extract_headers(result)
            if isinstance(page, list):
                return False
        return False

    def get_sample_record(self, sample: SampleRecordRef) -> None:
        args = (("identifier", sample.identifier), ("metadataPrefix", "oai_dc"))
        ref, result = self.request("get-record", Verb.GET_RECORD.value, args, Verb.GET_RECORD)
        entry = self.transcript[ref]
        if result is None:
            self.issue(IssueKind.OTHER_ERROR, "no response to GetRecord for the sample", ref)
            return
        if isinstance(result, list):
            self.issue(IssueKind.ENVELOPE_SCHEMA_ERROR, "GetRecord response is invalid", ref, result)
            return
        if result.is_error:
            self.issue(IssueKind.OTHER_ERROR, f"GetRecord for {sample.identifier!r} answered with {result.error_codes}", ref)
            return
        ident = result.payload.find(f"{{{OAI_NS}}}record/{{{OAI_NS}}}header/{{{OAI_NS}}}identifier")
        got = (ident.text or "").strip() if ident is not None else None
        if got != sample.identifier:
            self.issue(IssueKind.OTHER_ERROR, f"GetRecord for {sample.identifier!r} returned {got!r}", ref)
            return
        dc = result.payload.find(f"{{{OAI_NS}}}record/{{{OAI_NS}}}metadata/{{{OAI_DC_NS}}}dc")
        entry.ok = dc is not None

    def test_granularity_consistency(self, info: IdentifyInfo) -> list[ComplianceIssue]:
        return granularity_issues(info)

    def test_resumption_discipline(self, env: Envelope, *, follow: bool = True, ref: int | None = None) -> list[ComplianceIssue]:
        """Check the token on a response to a request that carried none."""
        before = len(self.issues)
        if ref is None:
            ref = next((i for i, e in enumerate(self.transcript) if e.step == "list-identifiers"), None)
        page = extract_headers(env)
        if isinstance(page, list) or page.token is None:
            return []
        if page.token.is_empty:
            if not any(i.kind is IssueKind.SPURIOUS_EMPTY_RESUMPTION_TOKEN for i in self.issues):
                self.issue(
                    IssueKind.SPURIOUS_EMPTY_RESUMPTION_TOKEN,
                    "an empty resumptionToken was returned for a request without a resumptionToken",
                    ref,
                )
            return self.issues[before:]
        if not follow:
            return []
        cref, result = self.request(
            "resumption", Verb.LIST_IDENTIFIERS.value, (("resumptionToken", page.token.token),), Verb.LIST_IDENTIFIERS
        )
        if result is None:
            self.issue(IssueKind.OTHER_ERROR, "no response when following the resumptionToken", cref)
        elif isinstance(result, list):
            self.issue(IssueKind.ENVELOPE_SCHEMA_ERROR, "continuation response is invalid", cref, result)
        elif result.is_error:
            if OaiErrorCode.BAD_RESUMPTION_TOKEN.value in result.error_codes:
                # Following a token the repository issued is a valid request.
                self.issue(IssueKind.OTHER_ERROR, f"the repository rejected its own resumptionToken {page.token.token!r}", cref)
            else:
                self.issue(IssueKind.OTHER_ERROR, f"continuation answered with errors {result.error_codes}", cref)
        else:
            cont = extract_headers(result)
            if isinstance(cont, list):
                self.issue(IssueKind.ENVELOPE_SCHEMA_ERROR, "continuation headers are unreadable", cref, cont)
            elif not cont.headers:
                self.issue(IssueKind.OTHER_ERROR, "the continuation page holds no headers", cref)
        return self.issues[before:]

    def run_exception_battery(self, sample: SampleRecordRef) -> list[ComplianceIssue]:
        before = len(self.issues)
        for probe in exception_probes(sample):
            self._run_probe(probe)
        return self.issues[before:]

    def _run_probe(self, probe: Probe) -> None:
        ref, result = self.request(f"probe-{probe.id}", probe.verb, probe.args, None)
        entry = self.transcript[ref]
        entry.note = f"{probe.purpose}; expecting {sorted(probe.expected)}"
        eh = IssueKind.EXCEPTION_HANDLING_ERROR
        if result is None:
            self.issue(eh, f"no response to the {probe.purpose} probe", ref, probe=probe.id)
            return
        if isinstance(result, list):
            if probe.id == "P1":
                self.issue(
                    IssueKind.MALFORMED_INVALID_ID_RESPONSE,
                    "the response to GetRecord with identifier invalid\"id is not well-formed",
                    ref, result,
                )
            else:
                self.issue(eh, f"the {probe.purpose} probe got an invalid response", ref, result, probe.id)
            return
        if not result.is_error:
            verb = result.verb.value if result.verb else "?"
            self.issue(eh, f"the {probe.purpose} probe got a normal <{verb}> answer instead of an error", ref, probe=probe.id)
            return
        codes = set(result.error_codes)
        unknown = sorted(c for c in codes if OaiErrorCode.lookup(c) is None)
        if unknown:
            self.issue(eh, f"undefined error code(s) {unknown}", ref, result.diagnostics, probe.id)
        elif not codes & probe.expected:
            self.issue(eh, f"got {sorted(codes)}, expected one of {sorted(probe.expected)}", ref, probe=probe.id)
        else:
            entry.ok = True


def run_validation(
    base: BaseUrl,
    policy: RetryPolicy = RetryPolicy(),
    include_exception_battery: bool = True,
    **kwargs,
) -> ValidationReport:
    """Run the full test sequence against ``base`` (already through intake)."""
    return Validator(base, policy, **kwargs).run(include_exception_battery)



