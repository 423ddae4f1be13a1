import pytest

from oaival.analysis import (
    CATALOG,
    XML_LEVEL_CODES,
    Envelope,
    HeaderPage,
    Severity,
    analyze,
    diagnostic,
    extract_headers,
    extract_identify,
)
from oaival.protocol import Granularity, IdentifyInfo, ResumptionToken, Verb
from oaival.simulator import FaultProfile, handle

NS = 'xmlns="http://www.openarchives.org/OAI/2.0/"'


def envelope(inner: str, request: str = '<request verb="ListIdentifiers">http://x.example/oai</request>') -> bytes:
    return (
        f'<?xml version="1.0" encoding="UTF-8"?>\n<OAI-PMH {NS}>'
        f"<responseDate>2024-01-01T00:00:00Z</responseDate>{request}{inner}</OAI-PMH>"
    ).encode()


def codes(result):
    assert isinstance(result, list), result
    return [d.code for d in result]


def sim(*args, **faults):
    return handle(list(args), FaultProfile(**faults)).body


def test_catalog_entries_have_hints():
    assert XML_LEVEL_CODES <= set(CATALOG)
    for code, (summary, hint) in CATALOG.items():
        assert summary.endswith(".") and hint, code
    d = diagnostic("mismatched-tag", "extra", location=(3, 4))
    assert d.severity is Severity.FATAL and d.blocking
    assert "line 3, column 4" in d.render() and "hint:" in d.render()
    odd = diagnostic("no-such-code")
    assert odd.message == "no-such-code" and odd.hint is None


def test_identify_happy_path():
    env = analyze(sim(("verb", "Identify")), Verb.IDENTIFY)
    assert isinstance(env, Envelope)
    assert env.verb is Verb.IDENTIFY and not env.is_error
    assert env.request_echo.attributes == {"verb": "Identify"}
    info = extract_identify(env)
    assert isinstance(info, IdentifyInfo)
    assert info.protocol_version == "2.0"
    assert info.granularity is Granularity.SECOND
    assert info.earliest_datestamp.render() == "2002-06-01T00:00:00Z"
    assert info.admin_emails == ("oai-admin@sim.example.org",)


def test_stylesheet_before_invalid_content():
    body = sim(("verb", "Identify"), stylesheet_pi_invalid_body=True)
    assert body.startswith(b"<?xml-stylesheet")
    result = analyze(body, Verb.IDENTIFY)
    assert codes(result) == ["stylesheet-pi-plus-invalid-content"]
    assert "stylesheet" in result[0].hint


def test_unescaped_quote_in_request_attribute():
    body = sim(("verb", "GetRecord"), ("identifier", 'invalid"id'), ("metadataPrefix", "oai_dc"),
               unescaped_invalid_id_echo=True)
    assert b'identifier="invalid"id"' in body
    result = analyze(body)
    assert codes(result) == ["unescaped-quote"]
    assert result[0].location is not None


def test_escaped_quote_is_fine():
    body = sim(("verb", "GetRecord"), ("identifier", 'invalid"id'), ("metadataPrefix", "oai_dc"))
    assert b"invalid&quot;id" in body
    env = analyze(body)
    assert env.error_codes == ["idDoesNotExist"]


def test_html_error_page():
    response = handle([("verb", "Identify")], FaultProfile(http_500_html_body=True))
    assert response.status == 500
    result = analyze(response.body, Verb.IDENTIFY, "text/html")
    assert "not-xml" in codes(result)
    assert "error page" in result[0].hint


@pytest.mark.parametrize("body, code", [
    (b"", "not-xml"),
    (b"Internal error", "not-xml"),
    (b"\n<?xml version='1.0'?><OAI-PMH/>", "misplaced-xml-declaration"),
    (b"<OAI-PMH><a></b></OAI-PMH>", "mismatched-tag"),
    (b"<OAI-PMH/><OAI-PMH/>", "junk-after-document"),
    (b"<OAI-PMH>Dewey & Co</OAI-PMH>", "unescaped-ampersand"),
    (b"<!DOCTYPE x [<!ENTITY a 'b'>]><OAI-PMH/>", "doctype-not-allowed"),
    (b"<OAI-PMH><a b='1' b='2'/></OAI-PMH>", "not-well-formed"),
    (b'<?xml version="1.0" encoding="UTF-8"?><OAI-PMH>caf\xe9</OAI-PMH>', "character-encoding-mismatch"),
    (b'<?xml version="1.0" encoding="no-such-codec"?><OAI-PMH/>', "character-encoding-mismatch"),
    (b"<oai xmlns='http://www.openarchives.org/OAI/2.0/'/>", "missing-element"),
    (b"<OAI-PMH xmlns='http://www.openarchives.org/OAI/1.1/'/>", "bad-namespace"),
])
def test_parse_failures(body, code):
    result = analyze(body)
    assert code in codes(result)
    assert all(d.hint for d in result)


def test_billion_laughs_refused():
    body = b'<?xml version="1.0"?><!DOCTYPE lolz [<!ENTITY lol "lol"><!ENTITY lol2 "&lol;&lol;">]><OAI-PMH>&lol2;</OAI-PMH>'
    assert codes(analyze(body)) == ["doctype-not-allowed"]


def test_latin1_declared_is_accepted():
    body = envelope("<ListSets><set><setSpec>a</setSpec><setName>caf\xe9</setName></set></ListSets>",
                    '<request verb="ListSets">http://x.example/oai</request>')
    body = body.replace(b"UTF-8", b"ISO-8859-1").replace("\xe9".encode(), b"\xe9")
    env = analyze(body, Verb.LIST_SETS)
    assert isinstance(env, Envelope), env


def test_charset_conflict_is_a_warning():
    env = analyze(sim(("verb", "Identify")), Verb.IDENTIFY, "text/xml; charset=ISO-8859-1")
    assert isinstance(env, Envelope)
    assert [d.severity for d in env.diagnostics] == [Severity.WARNING]


def test_wrong_verb_payload():
    result = analyze(sim(("verb", "Identify")), Verb.LIST_SETS)
    assert codes(result) == ["wrong-verb"]


def test_bad_response_date():
    body = envelope("<ListSets/>").replace(b"2024-01-01T00:00:00Z", b"2024-01-01")
    assert "bad-datestamp" in codes(analyze(body))


def test_unknown_error_code_is_kept():
    body = envelope('<error code="internalError">boom</error>', '<request>http://x.example/oai</request>')
    env = analyze(body)
    assert isinstance(env, Envelope)
    assert env.error_codes == ["internalError"]
    assert [d.code for d in env.diagnostics] == ["unknown-error-code"]
    assert env.errors[0].known is None


def test_metadata_formats_order_checked():
    body = sim(("verb", "ListMetadataFormats"), schema_violation=True)
    assert "element-out-of-order" in codes(analyze(body, Verb.LIST_METADATA_FORMATS))


def test_get_record_requires_dc_payload():
    good = sim(("verb", "GetRecord"), ("identifier", "oai:sim.example.org:1"), ("metadataPrefix", "oai_dc"))
    assert isinstance(analyze(good, Verb.GET_RECORD), Envelope)
    bad = good.replace(b"oai_dc:dc", b"oai_dc:dublin")
    assert isinstance(analyze(bad, Verb.GET_RECORD), list)


class TestExtractIdentify:
    def test_missing_earliest_datestamp(self):
        env = analyze(sim(("verb", "Identify"), missing_identify_element="earliestDatestamp"), Verb.IDENTIFY)
        assert codes(extract_identify(env)) == ["missing-element"]

    def test_version_1_1_extracts(self):
        env = analyze(sim(("verb", "Identify"), protocol_version_override="1.1"), Verb.IDENTIFY)
        info = extract_identify(env)
        assert info.protocol_version == "1.1"

    def test_bad_granularity_value(self):
        body = sim(("verb", "Identify")).replace(b"YYYY-MM-DDThh:mm:ssZ", b"seconds")
        assert codes(extract_identify(analyze(body, Verb.IDENTIFY))) == ["bad-value"]

    def test_mismatched_granularity_still_extracts(self):
        env = analyze(sim(("verb", "Identify"), granularity_mismatch=True), Verb.IDENTIFY)
        info = extract_identify(env)
        assert info.earliest_datestamp.granularity is not info.granularity

    def test_error_envelope(self):
        env = analyze(envelope('<error code="badVerb">x</error>', "<request>http://x.example/oai</request>"))
        assert codes(extract_identify(env)) == ["wrong-verb"]


def _headers(n, token=""):
    hs = "".join(
        f"<header><identifier>oai:x:{i}</identifier><datestamp>2002-06-0{i}</datestamp></header>" for i in range(1, n + 1)
    )
    return envelope(f"<ListIdentifiers>{hs}{token}</ListIdentifiers>")


class TestExtractHeaders:
    def test_three_headers_no_token(self):
        page = extract_headers(analyze(_headers(3)))
        assert isinstance(page, HeaderPage)
        assert [h.identifier for h in page.headers] == ["oai:x:1", "oai:x:2", "oai:x:3"]
        assert page.token is None

    def test_missing_datestamp_is_absent(self):
        body = sim(("verb", "ListIdentifiers"), ("metadataPrefix", "oai_dc"), strip_datestamps=True)
        page = extract_headers(analyze(body, Verb.LIST_IDENTIFIERS))
        assert page.headers and page.headers[0].datestamp is None

    def test_empty_token(self):
        page = extract_headers(analyze(_headers(2, "<resumptionToken></resumptionToken>")))
        assert page.token == ResumptionToken("")
        assert page.token.is_empty

    def test_token_attributes(self):
        page = extract_headers(analyze(_headers(1, '<resumptionToken completeListSize="5" cursor="0"> abc </resumptionToken>')))
        assert page.token == ResumptionToken("abc", 5, 0)

    def test_bad_token_attribute(self):
        result = analyze(_headers(1, '<resumptionToken cursor="-1">abc</resumptionToken>'))
        if isinstance(result, Envelope):
            result = extract_headers(result)
        assert "bad-attribute" in codes(result)

    def test_simulator_first_page(self):
        body = sim(("verb", "ListRecords"), ("metadataPrefix", "oai_dc"))
        page = extract_headers(analyze(body, Verb.LIST_RECORDS))
        assert len(page.headers) == 3 and page.token.token
        assert page.headers[0].datestamp.render() == "2002-06-01T08:00:00Z"

    def test_error_envelope(self):
        body = sim(("verb", "ListIdentifiers"), ("metadataPrefix", "oai_dc"), empty_repository=True)
        page = extract_headers(analyze(body, Verb.LIST_IDENTIFIERS))
        assert page == HeaderPage([], None, ["noRecordsMatch"])


def test_non_bytes_input_is_tolerated():
    assert isinstance(analyze("not bytes"), list)
