import dataclasses
from datetime import datetime, timezone

import httpx
import pytest

from oaival.analysis import Envelope, analyze
from oaival.engine import (
    AbortReason,
    ComplianceIssue,
    IssueKind,
    Outcome,
    OutcomeKind,
    SampleRecordRef,
    Validator,
    check_identify,
    classify,
    exception_probes,
    granularity_issues,
)
from oaival.protocol import BaseUrl, Granularity, IdentifyInfo, parse_datestamp
from oaival.simulator import FaultProfile, SimRecord, default_content, handle
from oaival.transport import RetryPolicy

BASE = BaseUrl("http://sim.test/oai")
NOW = datetime(2024, 1, 1, tzinfo=timezone.utc)


def in_process(profile=FaultProfile(), content=None):
    """An httpx client whose transport calls the simulator directly."""
    content = content or default_content(str(BASE))
    count = [0]

    def respond(request):
        n = count[0]
        count[0] += 1
        r = handle(request.url.query.decode(), profile, content, now=NOW, request_number=n)
        if r.status == 0:
            raise httpx.ReadTimeout("idle", request=request)
        return httpx.Response(r.status, headers=r.headers, content=r.body)

    return httpx.Client(transport=httpx.MockTransport(respond))


def run(*flags, content=None, battery=True):
    profile = FaultProfile.from_flags(flags)
    with in_process(profile, content) as client:
        v = Validator(BASE, RetryPolicy(), client=client, sleep=lambda s: None,
                      clock=lambda: parse_datestamp("2024-01-01T00:00:00Z"))
        return v.run(battery)


def info(version="2.0", emails=("a@b.org",), earliest="2002-06-01T00:00:00Z", granularity=Granularity.SECOND):
    return IdentifyInfo("R", BASE, version, parse_datestamp(earliest), "no", granularity, tuple(emails))


class TestCheckIdentify:
    def test_pass(self):
        assert check_identify(info()) is None

    @pytest.mark.parametrize("version", ["2", "2.00", " 2.0", "1.1", ""])
    def test_version_is_exact_string(self, version):
        assert version != "2.0"
        assert check_identify(info(version=version)) is AbortReason.BAD_PROTOCOL_VERSION

    @pytest.mark.parametrize("emails", [("",), (), ("a@b.org", "nobody")])
    def test_bad_email(self, emails):
        assert check_identify(info(emails=emails)) is AbortReason.BAD_ADMIN_EMAIL

    def test_version_checked_before_email(self):
        assert check_identify(info(version="1.1", emails=("",))) is AbortReason.BAD_PROTOCOL_VERSION

    def test_missing_info(self):
        assert check_identify(None) is AbortReason.OTHER_IDENTIFY_ERROR


@pytest.mark.parametrize("granularity, earliest, mismatch", [
    (Granularity.SECOND, "2002-06-01T00:00:00Z", False),
    (Granularity.SECOND, "2002-06-01", True),
    (Granularity.DAY, "2002-06-01", False),
    (Granularity.DAY, "2002-06-01T00:00:00Z", True),
])
def test_granularity_consistency(granularity, earliest, mismatch):
    issues = granularity_issues(info(earliest=earliest, granularity=granularity))
    assert [i.kind for i in issues] == ([IssueKind.GRANULARITY_MISMATCH] if mismatch else [])


def test_classify_examples():
    assert classify([], AbortReason.EXCESSIVE_RETRY_AFTER) == Outcome(OutcomeKind.ABORTED, AbortReason.EXCESSIVE_RETRY_AFTER)
    assert str(classify([], AbortReason.EXCESSIVE_RETRY_AFTER)) == "Aborted(ExcessiveRetryAfter)"
    assert classify([]).kind is OutcomeKind.ROBUSTLY_VALID
    p2 = ComplianceIssue(IssueKind.EXCEPTION_HANDLING_ERROR, "x", "P2")
    assert classify([p2]).kind is OutcomeKind.VALID_EXCLUDING_EXCEPTIONS
    assert classify([p2, ComplianceIssue(IssueKind.OTHER_ERROR)]).kind is OutcomeKind.FAILED
    assert p2.code == "ExceptionHandlingError:P2"


def test_probe_p6_depends_on_deleted_status():
    stamp = parse_datestamp("2002-06-01")
    live = {p.id: p for p in exception_probes(SampleRecordRef("oai:x:1", stamp))}
    gone = {p.id: p for p in exception_probes(SampleRecordRef("oai:x:1", stamp, deleted=True))}
    assert live["P6"].expected == {"cannotDisseminateFormat"}
    assert gone["P6"].expected == {"cannotDisseminateFormat", "idDoesNotExist"}
    assert [p.id for p in live.values()] == ["P1", "P2", "P3", "P4", "P5", "P6"]
    assert dict(live["P1"].args)["identifier"] == 'invalid"id'


class TestRunValidation:
    def test_clean(self):
        report = run()
        assert report.outcome.kind is OutcomeKind.ROBUSTLY_VALID
        assert report.issues == []
        steps = [e.step for e in report.transcript]
        assert steps[:7] == ["identify", "list-metadata-formats", "list-sets", "list-identifiers",
                             "window", "get-record", "resumption"]
        assert steps[7:] == [f"probe-P{n}" for n in range(1, 7)]
        assert all(e.ok for e in report.transcript), [(e.step, e.diagnostics) for e in report.transcript if not e.ok]
        assert report.dublin_core_record_ok()

    def test_deterministic(self):
        for flags in ((), ("ignore_bad_args",), ("granularity_mismatch",)):
            a, b = run(*flags), run(*flags)
            assert a.outcome == b.outcome
            assert sorted(a.issue_codes) == sorted(b.issue_codes)

    @pytest.mark.parametrize("flags, reason", [
        (("protocol_version_override=1.1",), AbortReason.BAD_PROTOCOL_VERSION),
        (("empty_repository",), AbortReason.NO_IDENTIFIERS_LISTED),
        (("no_response",), AbortReason.NO_IDENTIFY_RESPONSE),
        (("infinite_503=1",), AbortReason.EXCESSIVE_RETRY_AFTER),
        (("bad_admin_email",), AbortReason.BAD_ADMIN_EMAIL),
        (("strip_datestamps",), AbortReason.NO_DATESTAMP_IN_SAMPLE_RECORD),
    ])
    def test_aborts_stop_the_sequence(self, flags, reason):
        report = run(*flags)
        assert report.outcome.abort is reason
        assert report.issues == []
        assert report.abort_detail

    def test_only_illegal_requests_mishandled(self):
        report = run("ignore_bad_args")
        assert report.outcome.kind is OutcomeKind.VALID_EXCLUDING_EXCEPTIONS
        assert "ExceptionHandlingError:P3" in report.issue_codes
        p2 = next(e for e in report.transcript if e.step == "probe-P2")
        assert p2.ok and p2.error_codes == ["badVerb"]

    def test_battery_skipped_caps_outcome(self):
        report = run(battery=False)
        assert report.outcome.kind is OutcomeKind.VALID_EXCLUDING_EXCEPTIONS
        assert not any(e.step.startswith("probe-") for e in report.transcript)

    def test_spurious_token_reported_once(self):
        report = run("spurious_empty_resumption_token")
        assert report.issue_codes == ["SpuriousEmptyResumptionToken"]

    def test_day_granularity_repository(self):
        content = default_content(str(BASE))
        days = ["2002-06-01", "2002-06-01", "2002-06-02", "2002-06-03", "2002-06-04"]
        content = dataclasses.replace(
            content,
            granularity=Granularity.DAY,
            earliest_datestamp=parse_datestamp("2002-06-01"),
            records=tuple(SimRecord(r.identifier, parse_datestamp(d), r.deleted, r.title)
                          for r, d in zip(content.records, days)),
        )
        report = run(content=content)
        assert report.outcome.kind is OutcomeKind.ROBUSTLY_VALID, report.issue_codes
        window = next(e for e in report.transcript if e.step == "window")
        assert "from=2002-06-01&until=2002-06-01" in window.request_url

    def test_second_sample_truncated_for_day_window(self):
        v = Validator(BASE, client=in_process(), sleep=lambda s: None)
        sample = SampleRecordRef("oai:sim.example.org:1", parse_datestamp("2002-06-01T08:00:00Z"))
        issues = v.test_known_datestamp_window(sample, Granularity.DAY)
        assert issues == []
        assert "from=2002-06-01&" in v.transcript[-1].request_url


class TestResumptionDiscipline:
    def envelope(self, token_xml):
        body = handle("verb=ListIdentifiers&metadataPrefix=oai_dc&from=2002-06-02", now=NOW).body
        body = body.replace(b"</ListIdentifiers>", token_xml.encode() + b"</ListIdentifiers>")
        env = analyze(body)
        assert isinstance(env, Envelope)
        return env

    def validator(self, profile=FaultProfile()):
        return Validator(BASE, client=in_process(profile), sleep=lambda s: None)

    def test_no_token(self):
        assert self.validator().test_resumption_discipline(self.envelope("")) == []

    def test_empty_token_on_first_page(self):
        issues = self.validator().test_resumption_discipline(self.envelope("<resumptionToken></resumptionToken>"))
        assert [i.kind for i in issues] == [IssueKind.SPURIOUS_EMPTY_RESUMPTION_TOKEN]

    def test_valid_second_page(self):
        first = analyze(handle("verb=ListIdentifiers&metadataPrefix=oai_dc", now=NOW).body)
        v = self.validator()
        assert v.test_resumption_discipline(first) == []
        assert v.transcript[-1].step == "resumption" and v.transcript[-1].ok

    def test_rejected_own_token(self):
        env = self.envelope("<resumptionToken>made-up</resumptionToken>")
        issues = self.validator().test_resumption_discipline(env)
        assert [i.kind for i in issues] == [IssueKind.OTHER_ERROR]
        assert classify(issues).kind is OutcomeKind.FAILED
