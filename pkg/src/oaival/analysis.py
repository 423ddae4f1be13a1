"""Well-formedness and envelope checks for OAI-PMH responses.

Raw parser failures are translated into plain-language diagnostics drawn
from a catalog of errors that repository administrators commonly make.
DTDs are refused outright, so no entity is ever expanded or fetched.
"""

from __future__ import annotations

import codecs
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence
from xml.parsers import expat

from .protocol import (
    DELETED_RECORD_VALUES,
    OAI_DC_NS,
    OAI_NS,
    BaseUrl,
    Granularity,
    IdentifyInfo,
    MalformedDatestamp,
    NonsenseBaseUrl,
    NoBaseUrl,
    OaiError,
    RecordHeader,
    ResumptionToken,
    UtcDatestamp,
    Verb,
    parse_datestamp,
    validate_base_url,
)


class Severity(str, Enum):
    FATAL = "fatal"
    ERROR = "error"
    WARNING = "warning"


# code -> (summary, hint)
CATALOG: dict[str, tuple[str, str]] = {
    "not-xml": (
        "The response is not XML.",
        "OAI-PMH responses must be XML documents. If the body is a web page, the "
        "server probably returned a server error page or a login page instead of "
        "running the OAI-PMH handler; check the server logs for the failing request.",
    ),
    "html-error-page": (
        "The response is an HTML page.",
        "HTML bodies usually come from a server error page (HTTP 500), a proxy, or a "
        "misconfigured baseURL that points at a web page rather than the OAI-PMH script.",
    ),
    "unescaped-quote": (
        "An attribute value contains an unescaped quotation mark.",
        "Inside a double-quoted attribute a literal \" must be written as &quot;. This "
        "often happens when request arguments (such as an illegal identifier) are "
        "echoed into the <request> element; either escape them or omit attributes for "
        "badArgument/badVerb errors.",
    ),
    "unescaped-ampersand": (
        "A bare '&' appears in text or an attribute.",
        "Write '&' as &amp; and '<' as &lt; in XML content; escape all metadata values "
        "when building the response.",
    ),
    "bad-namespace": (
        "An element is not in the expected namespace.",
        "The root element must be OAI-PMH in the namespace "
        "http://www.openarchives.org/OAI/2.0/ and its protocol children must inherit it.",
    ),
    "missing-element": (
        "A required element is missing.",
        "Compare the response with the element list required for this verb; every "
        "mandatory element must appear exactly as named, including capitalisation.",
    ),
    "element-out-of-order": (
        "Elements appear in the wrong order.",
        "The OAI-PMH schema fixes the order of child elements; reorder the output to "
        "follow the schema sequence.",
    ),
    "duplicate-element": (
        "An element appears more often than allowed.",
        "Emit this element once only.",
    ),
    "unexpected-element": (
        "An element appears that is not allowed here.",
        "Remove the element or move it inside a <description> or <about> container.",
    ),
    "stylesheet-pi-plus-invalid-content": (
        "The response carries stylesheet information and is not well-formed XML.",
        "An <?xml-stylesheet?> instruction is allowed only after the XML declaration "
        "and cannot make an invalid document valid; put the stylesheet information "
        "after <?xml ...?> or remove it, then fix the reported XML error.",
    ),
    "character-encoding-mismatch": (
        "The bytes do not match the declared character encoding.",
        "Declare the real encoding in the XML declaration (UTF-8 is strongly "
        "preferred) and make the HTTP Content-Type charset agree with it.",
    ),
    "misplaced-xml-declaration": (
        "The XML declaration is not at the very start of the response.",
        "Nothing, not even whitespace or a blank line, may precede <?xml ...?>; check "
        "for stray output printed before the response.",
    ),
    "mismatched-tag": (
        "A closing tag does not match the open element.",
        "Check that every element is closed in the reverse order it was opened.",
    ),
    "junk-after-document": (
        "Content follows the end of the document element.",
        "Only one root element is allowed; remove trailing output such as debug text "
        "or a second document.",
    ),
    "not-well-formed": (
        "The response is not well-formed XML.",
        "Locate the reported line and column; typical causes are unescaped markup "
        "characters, truncated output, or invalid control characters.",
    ),
    "doctype-not-allowed": (
        "The response contains a document type declaration.",
        "OAI-PMH responses are validated against XML Schema; remove the DOCTYPE.",
    ),
    "bad-datestamp": (
        "A date does not follow the UTC datestamp format.",
        "Use YYYY-MM-DD or YYYY-MM-DDThh:mm:ssZ (with the literal T and Z) matching "
        "the granularity declared by Identify.",
    ),
    "bad-attribute": (
        "An attribute is missing or has an illegal value.",
        "Check attribute names and values against the OAI-PMH schema.",
    ),
    "bad-value": (
        "An element carries an illegal value.",
        "Check the element content against the values the protocol allows.",
    ),
    "wrong-verb": (
        "The response payload does not match the requested verb.",
        "The element after <request> must be named after the requested verb, or be "
        "one or more <error> elements.",
    ),
    "unknown-error-code": (
        "An <error> element carries a code that OAI-PMH does not define.",
        "Use one of badArgument, badResumptionToken, badVerb, cannotDisseminateFormat, "
        "idDoesNotExist, noRecordsMatch, noMetadataFormats, noSetHierarchy.",
    ),
    "no-response": (
        "The server did not answer.",
        "Check that the baseURL is typed correctly and reachable from the public "
        "internet, and that the server answers within the timeout.",
    ),
    "http-status": (
        "The server answered with an unexpected HTTP status.",
        "OAI-PMH errors are reported inside an HTTP 200 response; other statuses "
        "normally mean the server failed before producing a response.",
    ),
}


# Codes meaning the body could not be read as XML at all.
XML_LEVEL_CODES = frozenset({
    "not-xml",
    "html-error-page",
    "unescaped-quote",
    "unescaped-ampersand",
    "stylesheet-pi-plus-invalid-content",
    "character-encoding-mismatch",
    "misplaced-xml-declaration",
    "mismatched-tag",
    "junk-after-document",
    "not-well-formed",
    "doctype-not-allowed",
    "http-status",
})


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    location: tuple[int, int] | None = None
    hint: str | None = None
    raw: str | None = None

    def render(self) -> str:
        where = f" (line {self.location[0]}, column {self.location[1]})" if self.location else ""
        text = f"{self.severity.value}: [{self.code}] {self.message}{where}"
        if self.raw:
            text += f"\n    parser said: {self.raw}"
        if self.hint:
            text += f"\n    hint: {self.hint}"
        return text

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "message": self.message,
            "location": list(self.location) if self.location else None,
            "hint": self.hint,
            "raw": self.raw,
        }

    @property
    def blocking(self) -> bool:
        return self.severity is not Severity.WARNING


def diagnostic(
    code: str,
    detail: str | None = None,
    *,
    severity: Severity = Severity.FATAL,
    location: tuple[int, int] | None = None,
    raw: str | None = None,
) -> Diagnostic:
    """Build a Diagnostic, filling message and hint from the catalog."""
    summary, hint = CATALOG.get(code, ("", None))
    message = f"{summary} {detail}".strip() if detail else summary or code
    return Diagnostic(severity, code, message, location, hint, raw)


@dataclass(frozen=True)
class RequestEcho:
    attributes: dict[str, str]
    text: str


@dataclass
class Envelope:
    response_date: UtcDatestamp
    request_echo: RequestEcho
    verb: Verb | None = None
    payload: ET.Element | None = None
    errors: list[OaiError] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def error_codes(self) -> list[str]:
        return [e.code for e in self.errors]

    @property
    def is_error(self) -> bool:
        return bool(self.errors)


class HeaderPage(NamedTuple):
    headers: list[RecordHeader]
    token: ResumptionToken | None
    error_codes: list[str]


def _oai(name: str) -> str:
    return f"{{{OAI_NS}}}{name}"


def _split(tag: str) -> tuple[str | None, str]:
    if tag.startswith("{"):
        ns, _, local = tag[1:].partition("}")
        return ns, local
    return None, tag


class _Refused(Exception):
    def __init__(self, code: str, detail: str, location: tuple[int, int]):
        super().__init__(detail)
        self.code = code
        self.location = location


def _qname(name: str) -> str:
    if "}" in name:
        return "{" + name
    return name


def parse_xml(body: bytes) -> ET.Element:
    """Parse bytes into an element tree with namespace-qualified tags.

    Raises expat.ExpatError for malformed input and _Refused for DTDs.
    """
    builder = ET.TreeBuilder()
    parser = expat.ParserCreate(namespace_separator="}")
    parser.buffer_text = True
    parser.SetParamEntityParsing(expat.XML_PARAM_ENTITY_PARSING_NEVER)

    def start(name, attrs):
        builder.start(_qname(name), {_qname(k): v for k, v in attrs.items()})

    def end(name):
        builder.end(_qname(name))

    def refuse_doctype(*_):
        raise _Refused(
            "doctype-not-allowed",
            "DOCTYPE declarations are not processed.",
            (parser.CurrentLineNumber, parser.CurrentColumnNumber),
        )

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = builder.data
    parser.StartDoctypeDeclHandler = refuse_doctype
    parser.EntityDeclHandler = refuse_doctype
    parser.Parse(body, True)
    return builder.close()


_XML_DECL_RE = re.compile(rb"^\s*<\?xml[^>]*?encoding\s*=\s*[\"']([A-Za-z][A-Za-z0-9._-]*)[\"']")
_CHARSET_RE = re.compile(r"charset\s*=\s*[\"']?([A-Za-z0-9._:-]+)", re.I)
_HTML_RE = re.compile(r"^(?:<\?xml[^>]*\?>\s*)?(?:<!--.*?-->\s*)*<(?:!doctype\s+html|html[\s>])", re.I | re.S)
_UNESCAPED_QUOTE_RE = re.compile(r"""=\s*(?:"[^"<]*"|'[^'<]*')[^\s/>]""")


def _codec_name(name: str) -> str | None:
    try:
        return codecs.lookup(name).name
    except LookupError:
        return None


def _charset_of(content_type: str | None) -> str | None:
    if not content_type:
        return None
    m = _CHARSET_RE.search(content_type)
    return m.group(1) if m else None


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1)
    return line, col


def _offset_of(text: str, line: int, col: int) -> int:
    pos = 0
    for _ in range(line - 1):
        nl = text.find("\n", pos)
        if nl < 0:
            return len(text)
        pos = nl + 1
    return min(pos + col, len(text))


def _prolog_checks(body: bytes, content_type: str | None) -> tuple[list[Diagnostic], str]:
    """Encoding and content-sniffing checks run before the XML parser.

    Returns (diagnostics, decoded text); any fatal diagnostic ends analysis.
    """
    diags: list[Diagnostic] = []
    if body.startswith((codecs.BOM_UTF16_LE, codecs.BOM_UTF16_BE)):
        declared = "utf-16"
    else:
        m = _XML_DECL_RE.match(body)
        declared = m.group(1).decode("ascii") if m else "utf-8"
    codec = _codec_name(declared)
    if codec is None:
        return [diagnostic("character-encoding-mismatch", f"Unknown encoding {declared!r} declared.")], ""
    try:
        text = body.decode(codec)
    except UnicodeDecodeError as exc:
        # Sniff with latin-1 so HTML pages are still recognised.
        loose = body.decode("latin-1")
        if _HTML_RE.match(loose.lstrip("\ufeff \t\r\n")):
            return _not_xml(loose, html=True), loose
        return [diagnostic(
            "character-encoding-mismatch",
            f"Byte {exc.start} is not valid {codec}.",
            location=_line_col(loose, exc.start),
            raw=str(exc),
        )], loose
    except LookupError:
        return [diagnostic("character-encoding-mismatch", f"Encoding {declared!r} cannot be decoded.")], ""

    stripped = text.lstrip("\ufeff \t\r\n")
    if not stripped:
        return [diagnostic("not-xml", "The body is empty.")], text
    if _HTML_RE.match(stripped):
        return _not_xml(text, html=True), text
    if not stripped.startswith("<"):
        return _not_xml(text, html=False), text

    charset = _charset_of(content_type)
    if charset:
        header_codec = _codec_name(charset)
        if header_codec != codec:
            diags.append(diagnostic(
                "character-encoding-mismatch",
                f"HTTP Content-Type says {charset!r} but the document is {declared!r}.",
                severity=Severity.WARNING,
            ))
    return diags, text


def _not_xml(text: str, html: bool) -> list[Diagnostic]:
    start = text.lstrip("\ufeff \t\r\n")[:60].replace("\n", " ")
    if html:
        return [
            Diagnostic(
                Severity.FATAL,
                "not-xml",
                f"The response is an HTML page, not XML (starts {start!r}).",
                hint=CATALOG["not-xml"][1],
            ),
            diagnostic("html-error-page"),
        ]
    return [diagnostic("not-xml", f"The body starts {start!r}.")]


def _translate_parse_error(err: expat.ExpatError, text: str) -> Diagnostic:
    line, col = err.lineno, err.offset
    raw = expat.errors.messages.get(err.code, str(err)) if err.code else str(err)
    raw = f"{raw}: line {line}, column {col}"
    loc = (line, col)
    pos = _offset_of(text, line, col)
    head = text[:2048]
    if "<?xml-stylesheet" in head:
        return diagnostic("stylesheet-pi-plus-invalid-content", location=loc, raw=raw)
    codes = expat.errors.codes
    if err.code == codes.get(expat.errors.XML_ERROR_MISPLACED_XML_PI):
        return diagnostic("misplaced-xml-declaration", location=loc, raw=raw)
    if err.code == codes.get(expat.errors.XML_ERROR_TAG_MISMATCH):
        return diagnostic("mismatched-tag", location=loc, raw=raw)
    if err.code == codes.get(expat.errors.XML_ERROR_JUNK_AFTER_DOC_ELEMENT):
        return diagnostic("junk-after-document", location=loc, raw=raw)
    if err.code == codes.get(expat.errors.XML_ERROR_NO_ELEMENTS):
        return diagnostic("not-xml", "No root element was found.", location=loc, raw=raw)
    tag_start = text.rfind("<", 0, pos + 1)
    tag_end = text.find(">", pos)
    if tag_start >= 0 and tag_end >= 0 and "<" not in text[tag_start + 1:pos]:
        fragment = text[tag_start:tag_end + 1]
        if _UNESCAPED_QUOTE_RE.search(fragment):
            name = re.match(r"<\s*([^\s/>]*)", fragment)
            where = f" in <{name.group(1)}>" if name and name.group(1) else ""
            return diagnostic("unescaped-quote", f"Found{where}.", location=loc, raw=raw)
    near = text[max(0, pos - 1):pos + 1]
    if "&" in near or err.code in (
        codes.get(expat.errors.XML_ERROR_UNDEFINED_ENTITY),
        codes.get(expat.errors.XML_ERROR_BAD_CHAR_REF),
    ):
        return diagnostic("unescaped-ampersand", location=loc, raw=raw)
    return diagnostic("not-well-formed", location=loc, raw=raw)


class _Seq(NamedTuple):
    name: str
    min: int = 1
    max: int | None = 1


def check_sequence(parent: ET.Element, model: Sequence[_Seq], context: str) -> tuple[list[Diagnostic], dict[str, list[ET.Element]]]:
    """Check the OAI-namespace children of ``parent`` against an ordered content model."""
    diags: list[Diagnostic] = []
    found: dict[str, list[ET.Element]] = {s.name: [] for s in model}
    names = [s.name for s in model]
    position = 0
    for child in parent:
        ns, local = _split(child.tag) if isinstance(child.tag, str) else (None, "")
        if local not in found:
            diags.append(diagnostic("unexpected-element", f"<{local}> inside <{context}>."))
            continue
        if ns != OAI_NS:
            diags.append(diagnostic("bad-namespace", f"<{local}> inside <{context}> is in namespace {ns!r}."))
        index = names.index(local)
        if index < position:
            diags.append(diagnostic(
                "element-out-of-order", f"<{local}> appears after <{names[position]}> inside <{context}>."
            ))
        else:
            position = index
        found[local].append(child)
    for s in model:
        count = len(found[s.name])
        if count < s.min:
            diags.append(diagnostic("missing-element", f"<{context}> has no <{s.name}>."))
        elif s.max is not None and count > s.max:
            diags.append(diagnostic("duplicate-element", f"<{context}> has {count} <{s.name}> elements."))
    return diags, found


def _text(el: ET.Element | None) -> str:
    return "".join(el.itertext()).strip() if el is not None else ""


REQUEST_ARGUMENTS = frozenset(
    {"verb", "identifier", "metadataPrefix", "from", "until", "set", "resumptionToken"}
)


def analyze(body: bytes, expected_verb: Verb | None = None, content_type: str | None = None) -> Envelope | list[Diagnostic]:
    """Parse a raw response body into an Envelope, or explain why it cannot be one.

    ``expected_verb`` None accepts any verb payload (used for illegal-verb
    probes). Non-blocking findings such as a charset conflict travel on
    ``Envelope.diagnostics``.
    """
    if not isinstance(body, (bytes, bytearray)):
        body = str(body).encode("utf-8", "replace")
    body = bytes(body)
    diags, text = _prolog_checks(body, content_type)
    if any(d.blocking for d in diags):
        return diags
    try:
        root = parse_xml(body)
    except _Refused as exc:
        return [diagnostic(exc.code, location=exc.location)]
    except expat.ExpatError as err:
        return [_translate_parse_error(err, text)]
    except (ValueError, LookupError) as exc:
        # Expat cannot decode some codec names it was handed.
        return [diagnostic("character-encoding-mismatch", raw=str(exc))]

    fatal = _check_envelope(root, expected_verb)
    if isinstance(fatal, list):
        return fatal
    fatal.diagnostics[:0] = diags
    return fatal


def _check_envelope(root: ET.Element, expected_verb: Verb | None) -> Envelope | list[Diagnostic]:
    ns, local = _split(root.tag)
    if local != "OAI-PMH":
        return [diagnostic("missing-element", f"The root element is <{local}>, not <OAI-PMH>.")]
    if ns != OAI_NS:
        return [diagnostic("bad-namespace", f"<OAI-PMH> is in namespace {ns!r}; expected {OAI_NS!r}.")]

    children = list(root)
    diags: list[Diagnostic] = []
    local_names = [_split(c.tag)[1] for c in children]
    if len(children) < 3:
        for need in ("responseDate", "request"):
            if need not in local_names:
                diags.append(diagnostic("missing-element", f"<OAI-PMH> has no <{need}>."))
        if not diags:
            diags.append(diagnostic("missing-element", "<OAI-PMH> has neither a verb element nor <error>."))
        return diags
    if local_names[0] != "responseDate" or local_names[1] != "request":
        if "responseDate" in local_names and "request" in local_names:
            return [diagnostic("element-out-of-order", "<responseDate> and <request> must come first, in that order.")]
        missing = "responseDate" if "responseDate" not in local_names else "request"
        return [diagnostic("missing-element", f"<OAI-PMH> has no <{missing}>.")]
    for child in children[:2]:
        if _split(child.tag)[0] != OAI_NS:
            diags.append(diagnostic("bad-namespace", f"<{_split(child.tag)[1]}> is not in the OAI-PMH namespace."))

    try:
        response_date = parse_datestamp(_text(children[0]))
        if response_date.granularity is not Granularity.SECOND:
            diags.append(diagnostic("bad-datestamp", "<responseDate> must have seconds granularity."))
    except MalformedDatestamp as exc:
        diags.append(diagnostic("bad-datestamp", f"<responseDate>: {exc}."))
        response_date = None

    req = children[1]
    attrs = {}
    for key, value in req.attrib.items():
        if key not in REQUEST_ARGUMENTS:
            diags.append(diagnostic("bad-attribute", f"<request> carries attribute {key!r}."))
        attrs[key] = value
    echo = RequestEcho(attrs, _text(req))
    if not echo.text:
        diags.append(diagnostic("missing-element", "<request> does not contain the baseURL."))

    rest = children[2:]
    rest_names = local_names[2:]
    envelope_diags: list[Diagnostic] = []
    errors: list[OaiError] = []
    payload = None
    verb = None
    if "error" in rest_names:
        for child, name in zip(rest, rest_names):
            if name != "error":
                diags.append(diagnostic("unexpected-element", f"<{name}> next to <error> elements."))
                continue
            if _split(child.tag)[0] != OAI_NS:
                diags.append(diagnostic("bad-namespace", "<error> is not in the OAI-PMH namespace."))
            code = child.get("code")
            if code is None:
                diags.append(diagnostic("bad-attribute", "<error> has no code attribute."))
                continue
            err = OaiError(code, _text(child))
            if err.known is None:
                envelope_diags.append(diagnostic(
                    "unknown-error-code", f"Code {code!r}.", severity=Severity.ERROR
                ))
            errors.append(err)
    else:
        if len(rest) > 1:
            diags.append(diagnostic("unexpected-element", f"Extra elements after <{rest_names[0]}>: {rest_names[1:]}."))
        payload = rest[0]
        verb = Verb.lookup(rest_names[0])
        if verb is None:
            diags.append(diagnostic("wrong-verb", f"<{rest_names[0]}> is not an OAI-PMH verb."))
        elif expected_verb is not None and verb is not expected_verb:
            diags.append(diagnostic("wrong-verb", f"Expected <{expected_verb.value}>, found <{verb.value}>."))
        elif _split(payload.tag)[0] != OAI_NS:
            diags.append(diagnostic("bad-namespace", f"<{verb.value}> is not in the OAI-PMH namespace."))
        else:
            diags.extend(check_payload(verb, payload, echo))
    if diags:
        return diags
    return Envelope(response_date, echo, verb, payload, errors, envelope_diags)


_HEADER = [_Seq("identifier"), _Seq("datestamp", 0, 1), _Seq("setSpec", 0, None)]
_RECORD = [_Seq("header"), _Seq("metadata", 0, 1), _Seq("about", 0, None)]
_PAYLOAD_MODELS = {
    Verb.LIST_METADATA_FORMATS: [_Seq("metadataFormat", 1, None)],
    Verb.LIST_SETS: [_Seq("set", 1, None), _Seq("resumptionToken", 0, 1)],
    Verb.LIST_IDENTIFIERS: [_Seq("header", 0, None), _Seq("resumptionToken", 0, 1)],
    Verb.LIST_RECORDS: [_Seq("record", 0, None), _Seq("resumptionToken", 0, 1)],
    Verb.GET_RECORD: [_Seq("record")],
}


def check_payload(verb: Verb, payload: ET.Element, echo: RequestEcho | None = None) -> list[Diagnostic]:
    """Content-model checks for one verb payload.

    Identify is checked by extract_identify so that its problems can be
    told apart from XML errors. Headers may lack a datestamp here; the
    caller decides how serious that is.
    """
    if verb is Verb.IDENTIFY:
        return []
    diags, found = check_sequence(payload, _PAYLOAD_MODELS[verb], verb.value)
    for fmt in found.get("metadataFormat", []):
        d, _ = check_sequence(fmt, [_Seq("metadataPrefix"), _Seq("schema"), _Seq("metadataNamespace")], "metadataFormat")
        diags.extend(d)
    for s in found.get("set", []):
        d, _ = check_sequence(s, [_Seq("setSpec"), _Seq("setName"), _Seq("setDescription", 0, None)], "set")
        diags.extend(d)
    headers = list(found.get("header", []))
    want_dc = echo is not None and echo.attributes.get("metadataPrefix") == "oai_dc"
    for record in found.get("record", []):
        d, parts = check_sequence(record, _RECORD, "record")
        diags.extend(d)
        headers.extend(parts["header"])
        deleted = bool(parts["header"]) and parts["header"][0].get("status") == "deleted"
        if parts["metadata"]:
            inner = list(parts["metadata"][0])
            if len(inner) != 1:
                diags.append(diagnostic("bad-value", f"<metadata> must hold exactly one element, found {len(inner)}."))
            elif want_dc and inner[0].tag != f"{{{OAI_DC_NS}}}dc":
                diags.append(diagnostic(
                    "bad-namespace", f"oai_dc metadata must be an <oai_dc:dc> element, found {inner[0].tag!r}."
                ))
        elif not deleted and parts["header"]:
            diags.append(diagnostic("missing-element", "<record> of a non-deleted item has no <metadata>."))
    for header in headers:
        d, parts = check_sequence(header, _HEADER, "header")
        diags.extend(d)
        status = header.get("status")
        if status is not None and status != "deleted":
            diags.append(diagnostic("bad-attribute", f"<header status={status!r}>; only 'deleted' is allowed."))
        for ds in parts["datestamp"]:
            try:
                parse_datestamp(_text(ds))
            except MalformedDatestamp as exc:
                diags.append(diagnostic("bad-datestamp", f"<datestamp>: {exc}."))
    for tok in found.get("resumptionToken", []):
        diags.extend(_token_attribute_checks(tok))
    return diags


def _token_attribute_checks(tok: ET.Element) -> list[Diagnostic]:
    diags = []
    for name in ("completeListSize", "cursor"):
        value = tok.get(name)
        if value is not None and not (value.isascii() and value.isdigit()):
            diags.append(diagnostic("bad-attribute", f"resumptionToken {name}={value!r} is not a non-negative integer."))
    expiry = tok.get("expirationDate")
    if expiry is not None:
        try:
            parse_datestamp(expiry)
        except MalformedDatestamp as exc:
            diags.append(diagnostic("bad-datestamp", f"resumptionToken expirationDate: {exc}."))
    return diags


_IDENTIFY_MODEL = [
    _Seq("repositoryName"),
    _Seq("baseURL"),
    _Seq("protocolVersion"),
    _Seq("adminEmail", 1, None),
    _Seq("earliestDatestamp"),
    _Seq("deletedRecord"),
    _Seq("granularity"),
    _Seq("compression", 0, None),
    _Seq("description", 0, None),
]


def extract_identify(env: Envelope) -> IdentifyInfo | list[Diagnostic]:
    if env.is_error:
        return [diagnostic("wrong-verb", f"Identify answered with error codes {env.error_codes}.")]
    if env.verb is not Verb.IDENTIFY or env.payload is None:
        return [diagnostic("wrong-verb", "The envelope carries no Identify payload.")]
    diags, found = check_sequence(env.payload, _IDENTIFY_MODEL, "Identify")
    if diags:
        return diags

    def one(name: str) -> str:
        return _text(found[name][0])

    try:
        base_url = validate_base_url(one("baseURL"))
    except (NoBaseUrl, NonsenseBaseUrl) as exc:
        diags.append(diagnostic("bad-value", f"<baseURL>: {exc}."))
        base_url = BaseUrl(one("baseURL"))
    try:
        earliest = parse_datestamp(one("earliestDatestamp"))
    except MalformedDatestamp as exc:
        diags.append(diagnostic("bad-datestamp", f"<earliestDatestamp>: {exc}."))
        earliest = None
    try:
        granularity = Granularity(one("granularity"))
    except ValueError:
        diags.append(diagnostic("bad-value", f"<granularity> is {one('granularity')!r}."))
        granularity = None
    deleted = one("deletedRecord")
    if deleted not in DELETED_RECORD_VALUES:
        diags.append(diagnostic("bad-value", f"<deletedRecord> is {deleted!r}."))
    if diags:
        return diags
    return IdentifyInfo(
        repository_name=one("repositoryName"),
        base_url=base_url,
        protocol_version=one("protocolVersion"),
        earliest_datestamp=earliest,
        deleted_record=deleted,
        granularity=granularity,
        admin_emails=tuple(_text(e) for e in found["adminEmail"]),
    )


def extract_headers(env: Envelope) -> HeaderPage | list[Diagnostic]:
    """Headers in document order plus the resumption token, if any."""
    if env.is_error:
        return HeaderPage([], None, env.error_codes)
    if env.verb not in (Verb.LIST_IDENTIFIERS, Verb.LIST_RECORDS) or env.payload is None:
        return [diagnostic("wrong-verb", "Expected a ListIdentifiers or ListRecords payload.")]
    diags: list[Diagnostic] = []
    headers: list[RecordHeader] = []
    token = None
    for child in env.payload:
        local = _split(child.tag)[1]
        if local == "record":
            child = child.find(_oai("header"))
            if child is None:
                diags.append(diagnostic("missing-element", "<record> has no <header>."))
                continue
            local = "header"
        if local == "header":
            ident = child.find(_oai("identifier"))
            if ident is None:
                diags.append(diagnostic("missing-element", "<header> has no <identifier>."))
                continue
            ds_el = child.find(_oai("datestamp"))
            datestamp = None
            if ds_el is not None:
                try:
                    datestamp = parse_datestamp(_text(ds_el))
                except MalformedDatestamp as exc:
                    diags.append(diagnostic("bad-datestamp", f"<datestamp>: {exc}."))
                    continue
            headers.append(RecordHeader(
                identifier=_text(ident),
                datestamp=datestamp,
                set_specs=tuple(_text(s) for s in child.findall(_oai("setSpec"))),
                deleted=child.get("status") == "deleted",
            ))
        elif local == "resumptionToken":
            bad = _token_attribute_checks(child)
            if bad:
                diags.extend(bad)
                continue
            size, cursor = child.get("completeListSize"), child.get("cursor")
            token = ResumptionToken(
                token=(child.text or "").strip(),
                complete_list_size=int(size) if size is not None else None,
                cursor=int(cursor) if cursor is not None else None,
            )
    if diags:
        return diags
    return HeaderPage(headers, token, [])
