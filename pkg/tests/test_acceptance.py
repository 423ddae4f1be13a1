"""Acceptance criteria, one test per criterion.

Each test prints a single ``AC<n> PASS|FAIL`` line (also collected into the
pytest terminal summary). Run just this file with::

    pytest tests/test_acceptance.py -v -s
"""

from __future__ import annotations

import contextlib
import io
import json
import random
import time
from collections import Counter
from decimal import Decimal
from importlib import resources

import jsonschema
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES, FAST_POLICY
from oaival.analysis import Diagnostic, Envelope, analyze
from oaival.cli import main
from oaival.engine import (
    AbortReason,
    ComplianceIssue,
    IssueKind,
    OutcomeKind,
    classify,
    run_validation,
)
from oaival.protocol import parse_datestamp, validate_base_url
from oaival.registry import ComplianceLevel, DuplicateBaseUrl, NotEligible, Registry
from oaival.simulator import FaultProfile, SimulatorServer, handle
from oaival.stats import IntakeClass, ValidationLogEntry, attempts_histogram, breakdown_aborts, breakdown_intake


@contextlib.contextmanager
def criterion(number: int, title: str):
    started = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"AC{number} FAIL  {title}  ({time.perf_counter() - started:.1f}s): {type(exc).__name__}: {str(exc)[:300]}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"AC{number} PASS  {title}  ({time.perf_counter() - started:.1f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


def load_json(name: str) -> dict:
    return json.loads(resources.files("oaival").joinpath("data", name).read_text(encoding="utf-8"))


def validate(*flags, battery=True):
    with SimulatorServer(FaultProfile.from_flags(flags)) as sim:
        return run_validation(validate_base_url(sim.base_url), FAST_POLICY, battery)


@pytest.fixture(scope="module")
def clean_report():
    return validate()


# --- 1 ----------------------------------------------------------------------

def _diagnostic_codes(doc: dict) -> set[str]:
    codes = set()
    if doc["abort"]:
        codes |= {d["code"] for d in doc["abort"]["diagnostics"]}
    for issue in doc["issues"]:
        codes |= {d["code"] for d in issue["diagnostics"]}
    return codes


def test_ac1_conformance_matrix(tmp_path):
    with criterion(1, "conformance matrix: every fault profile maps to its outcome, under 60 s"):
        matrix = load_json("conformance_matrix.json")
        schema = load_json("report.schema.json")
        rows = matrix["rows"]
        faulty = [r for r in rows if r["faults"]]
        assert len(faulty) >= 15, f"only {len(faulty)} fault rows"
        assert any(not r["faults"] and r["outcome"] == "RobustlyValid" for r in rows)
        exit_for = {"RobustlyValid": 0, "ValidExcludingExceptions": 2, "Failed": 3, "Aborted": 4}

        failures = []
        started = time.perf_counter()
        for row in rows:
            with SimulatorServer(FaultProfile.from_flags(row["faults"])) as sim:
                out, err = io.StringIO(), io.StringIO()
                code = main(
                    ["validate", sim.base_url, "--output", "structured", "--timeout", "1",
                     "--log", str(tmp_path / "log.jsonl")],
                    out, err,
                )
            doc = json.loads(out.getvalue())
            jsonschema.validate(doc, schema)
            got = (doc["outcome"]["kind"], doc["outcome"]["abort_reason"], Counter(i["code"] for i in doc["issues"]))
            want = (row["outcome"], row["abort"], Counter(row["issues"]))
            if got != want or code != exit_for[row["outcome"]]:
                failures.append(f"{row['id']}: got {got} exit {code}, want {want}")
            elif row.get("diagnostic") and row["diagnostic"] not in _diagnostic_codes(doc):
                failures.append(f"{row['id']}: diagnostic {row['diagnostic']} missing from {_diagnostic_codes(doc)}")
        elapsed = time.perf_counter() - started
        passed = len(rows) - len(failures)
        print(f"    matrix: {passed}/{len(rows)} rows in {elapsed:.1f}s")
        assert not failures, "; ".join(failures)
        assert elapsed < 60.0


# --- 2 ----------------------------------------------------------------------

def test_ac2_retry_after_discipline():
    with criterion(2, "Retry-After: 5 successive 503s are waited out in 5-8 s, a 6th aborts"):
        started = time.monotonic()
        report = validate("n_503_then_ok=5", "retry_after_seconds=1")
        wall = time.monotonic() - started
        identify = report.transcript[0]
        assert identify.step == "identify"
        assert identify.retries == 5, identify.retries
        assert identify.status_code == 200
        assert report.outcome.kind is OutcomeKind.ROBUSTLY_VALID, report.outcome
        assert 5.0 <= wall <= 8.0, f"wall time {wall:.2f}s"
        print(f"    n_503_then_ok(5): retries=5, wall {wall:.2f}s")

        report = validate("n_503_then_ok=6", "retry_after_seconds=1")
        assert report.outcome.abort is AbortReason.EXCESSIVE_RETRY_AFTER, report.outcome


# --- 3 ----------------------------------------------------------------------

def test_ac3_table_arithmetic():
    with criterion(3, "breakdown percentages for the logged intake and abort counts"):
        log = []
        for intake, n in ((IntakeClass.NO_BASE_URL, 89), (IntakeClass.NONSENSE_BASE_URL, 7), (IntakeClass.VALID, 1797)):
            for _ in range(n):
                outcome = OutcomeKind.FAILED if intake is IntakeClass.VALID else None
                log.append(ValidationLogEntry("2004-01-01T00:00:00Z", "x", intake, outcome))
        intake = breakdown_intake(log)
        assert intake.total == 1893
        assert [r.percent for r in intake.rows] == [Decimal("4.7"), Decimal("0.4"), Decimal("94.9")]

        counts = {
            AbortReason.NO_IDENTIFY_RESPONSE: 349,
            AbortReason.IDENTIFY_PARSE_FAILURE: 184,
            AbortReason.BAD_PROTOCOL_VERSION: 3,
            AbortReason.BAD_ADMIN_EMAIL: 62,
            AbortReason.OTHER_IDENTIFY_ERROR: 212,
            AbortReason.EXCESSIVE_RETRY_AFTER: 9,
            AbortReason.NO_IDENTIFIERS_LISTED: 29,
            AbortReason.NO_DATESTAMP_IN_SAMPLE_RECORD: 22,
        }
        log = [
            ValidationLogEntry("2004-01-01T00:00:00Z", "http://x/oai", IntakeClass.VALID, OutcomeKind.ABORTED, reason)
            for reason, n in counts.items()
            for _ in range(n)
        ]
        aborts = breakdown_aborts(log)
        assert aborts.total == 870
        want = ["40.1", "21.1", "0.3", "7.1", "24.4", "1.0", "3.3", "2.5"]
        assert {r.key: str(r.percent) for r in aborts.rows} == dict(zip((r.value for r in counts), want))


# --- 4 ----------------------------------------------------------------------

def test_ac4_invalid_id_probe(clean_report):
    with criterion(4, 'invalid"id probe: percent-encoded, passes clean, flags an unescaped echo'):
        p1 = next(e for e in clean_report.transcript if e.step == "probe-P1")
        assert "invalid%22id" in p1.request_url, p1.request_url
        assert p1.ok, p1.diagnostics
        assert p1.error_codes and set(p1.error_codes) <= {"badArgument", "idDoesNotExist"}
        assert "MalformedInvalidIdResponse" not in clean_report.issue_codes

        faulty = validate("unescaped_invalid_id_echo")
        assert "MalformedInvalidIdResponse" in faulty.issue_codes, faulty.issue_codes


# --- 5 ----------------------------------------------------------------------

def test_ac5_known_datestamp_window(clean_report):
    with criterion(5, "known-datestamp window returns the sample; empty_window yields exactly that issue"):
        window = next(e for e in clean_report.transcript if e.step == "window")
        assert window.ok
        assert "EmptyKnownDatestampWindow" not in clean_report.issue_codes
        # Oracle straight from the simulator: from=until=datestamp lists the item.
        body = handle([("verb", "ListIdentifiers"), ("metadataPrefix", "oai_dc"),
                       ("from", "2002-06-01T08:00:00Z"), ("until", "2002-06-01T08:00:00Z")]).body
        assert b"<identifier>oai:sim.example.org:1</identifier>" in body

        faulty = validate("empty_window")
        assert faulty.issue_codes == ["EmptyKnownDatestampWindow"], faulty.issue_codes


# --- 6 ----------------------------------------------------------------------

# Written out independently of the engine's own constant.
EXCEPTION_KINDS = {"ExceptionHandlingError", "MalformedInvalidIdResponse"}

issue_st = st.builds(
    ComplianceIssue,
    kind=st.sampled_from(list(IssueKind)),
    detail=st.sampled_from(["", "x"]),
    probe=st.one_of(st.none(), st.sampled_from(["P1", "P2", "P3", "P4", "P5", "P6"])),
)


def test_ac6_classification_property():
    checked = []

    @settings(max_examples=10_000, deadline=None, database=None, suppress_health_check=list(HealthCheck))
    @given(issues=st.lists(issue_st, max_size=8), abort=st.one_of(st.none(), st.sampled_from(list(AbortReason))))
    def prop(issues, abort):
        checked.append(1)
        out = classify(issues, abort)
        kinds = {i.kind.value for i in issues}
        if abort is not None:
            assert out.kind is OutcomeKind.ABORTED and out.abort is abort
            return
        assert out.abort is None
        assert (out.kind is OutcomeKind.ROBUSTLY_VALID) == (not issues)
        assert (out.kind is OutcomeKind.VALID_EXCLUDING_EXCEPTIONS) == (bool(issues) and kinds <= EXCEPTION_KINDS)
        assert (out.kind is OutcomeKind.FAILED) == bool(kinds - EXCEPTION_KINDS)

    with criterion(6, "classification invariants hold over 10,000 generated issue sets"):
        prop()
        assert len(checked) >= 10_000, len(checked)
        print(f"    {len(checked)} cases checked")


# --- 7 ----------------------------------------------------------------------

def _seed_bodies() -> list[bytes]:
    requests = [
        [("verb", "Identify")],
        [("verb", "ListMetadataFormats")],
        [("verb", "ListSets")],
        [("verb", "ListIdentifiers"), ("metadataPrefix", "oai_dc")],
        [("verb", "ListRecords"), ("metadataPrefix", "oai_dc")],
        [("verb", "GetRecord"), ("identifier", "oai:sim.example.org:1"), ("metadataPrefix", "oai_dc")],
        [("verb", "GetRecord"), ("identifier", 'invalid"id'), ("metadataPrefix", "oai_dc")],
        [("verb", "Bogus")],
    ]
    bodies = [handle(r).body for r in requests]
    bodies += [handle(r, FaultProfile(stylesheet_pi_invalid_body=True)).body for r in requests[:2]]
    bodies += [handle(requests[0], FaultProfile(http_500_html_body=True)).body]
    return bodies


FRAGMENTS = [b"<", b">", b"&", b'"', b"</", b"<!DOCTYPE x>", b"<?xml version='1.0'?>", b"]]>", b"\x00",
             b"\xff\xfe", b"\xef\xbb\xbf", b"<![CDATA[", b"&amp;", b"&#0;", b"&#x110000;", b"xmlns=''",
             b'encoding="UTF-16"', b'encoding="bogus"', b"\xc3", b"\n"]


def mutate(rng: random.Random, seeds: list[bytes]) -> bytes:
    mode = rng.randrange(6)
    if mode == 0:
        return bytes(rng.randrange(256) for _ in range(rng.randrange(64)))
    body = bytearray(rng.choice(seeds))
    for _ in range(rng.randint(1, 6)):
        op = rng.randrange(5)
        pos = rng.randrange(len(body) + 1)
        if op == 0 and body:
            body[min(pos, len(body) - 1)] = rng.randrange(256)
        elif op == 1:
            body[pos:pos] = rng.choice(FRAGMENTS)
        elif op == 2:
            del body[pos:pos + rng.randint(1, 40)]
        elif op == 3:
            body = body[:pos]
        else:
            other = rng.choice(seeds)
            start = rng.randrange(len(other))
            body[pos:pos] = other[start:start + rng.randint(1, 80)]
    return bytes(body)


def test_ac7_analyzer_totality_fuzz():
    with criterion(7, "analyze is total over 100,000 random and mutated bodies"):
        rng = random.Random(20040101)
        seeds = _seed_bodies()
        kinds = Counter()
        for n in range(100_000):
            body = mutate(rng, seeds)
            result = analyze(body, content_type=rng.choice([None, "text/xml", "text/xml; charset=ISO-8859-1"]))
            if isinstance(result, Envelope):
                kinds["envelope"] += 1
            else:
                assert isinstance(result, list) and result, f"case {n}: empty diagnostics for {body[:80]!r}"
                assert all(isinstance(d, Diagnostic) for d in result)
                kinds["diagnostics"] += 1
        assert sum(kinds.values()) == 100_000
        print(f"    {dict(kinds)}")


# --- 8 ----------------------------------------------------------------------

def test_ac8_registry_gating(tmp_path, clean_report):
    with criterion(8, "registry gating, byte-identical round-trip, idempotency and monotonicity"):
        partial = validate("ignore_bad_args")
        assert partial.outcome.kind is OutcomeKind.VALID_EXCLUDING_EXCEPTIONS

        clock = iter(f"2024-01-0{d}T00:00:00Z" for d in range(1, 10))
        reg = Registry(clock=lambda: parse_datestamp(next(clock)))
        with pytest.raises(NotEligible) as refused:
            reg.register(partial, ComplianceLevel.ROBUST)
        assert refused.value.issues, "refusal must carry the blocking issues"
        basic = reg.register(partial, ComplianceLevel.BASIC)
        assert basic.compliance_level is ComplianceLevel.BASIC

        robust = reg.register(clean_report, ComplianceLevel.ROBUST)
        again = reg.register(clean_report, ComplianceLevel.ROBUST)
        assert again == robust
        with pytest.raises(DuplicateBaseUrl):
            reg.register(clean_report, ComplianceLevel.BASIC)
        assert reg.get(robust.base_url).compliance_level is ComplianceLevel.ROBUST
        upgraded = reg.register(clean_report, ComplianceLevel.DUBLIN_CORE)
        assert upgraded.compliance_level is ComplianceLevel.DUBLIN_CORE
        assert upgraded.registered_at == robust.registered_at
        with pytest.raises(DuplicateBaseUrl):
            reg.register(clean_report, ComplianceLevel.ROBUST)

        path = tmp_path / "registry.json"
        reg.save(path)
        first = path.read_bytes()
        loaded = Registry.load(path)
        assert loaded.entries == reg.entries
        loaded.save(path)
        assert path.read_bytes() == first


# --- 9 ----------------------------------------------------------------------

def test_ac9_attempts_histogram():
    with criterion(9, "attempts histogram counts to the first success and tallies >5 failures"):
        def entries(url, outcomes):
            return [
                ValidationLogEntry(f"2004-03-{day:02d}T10:00:00Z", url, IntakeClass.VALID, o,
                                   AbortReason.NO_IDENTIFY_RESPONSE if o is OutcomeKind.ABORTED else None)
                for day, o in enumerate(outcomes, start=1)
            ]

        F, R = OutcomeKind.FAILED, OutcomeKind.ROBUSTLY_VALID
        hist = attempts_histogram(entries("http://a.example/oai", [F, F, R, F]), R)
        assert hist.buckets == {3: 1} and hist.never_succeeded == 0

        hist = attempts_histogram(entries("http://b.example/oai", [F] * 6), R)
        assert hist.buckets == {}
        assert hist.never_succeeded == 1 and hist.never_succeeded_over_5 == 1
