"""A fault-injectable OAI-PMH data-provider serving known content.

``handle`` maps a parsed query to a response and is deterministic given its
inputs; ``SimulatorServer`` exposes it over HTTP on loopback and keeps an
append-only request log.

Fault interactions, strongest first:

* ``no_response`` subsumes every other flag (nothing is ever sent).
* ``infinite_503`` subsumes all content faults; ``n_503_then_ok`` delays them.
* ``http_500_html_body`` replaces every body, so content faults never show.
* ``stylesheet_pi_invalid_body`` wraps whatever body the other flags produce.
* ``ignore_bad_args`` hides the correct error for argument problems, so it
  masks ``unknown_error_code`` for those requests.

All other flags are independent.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Iterable, NamedTuple, Sequence
from urllib.parse import parse_qsl, urlsplit
from xml.sax.saxutils import escape

from .protocol import (
    DC_NS,
    OAI_DC_NS,
    OAI_DC_SCHEMA_LOCATION,
    OAI_NS,
    OAI_SCHEMA_LOCATION,
    PROTOCOL_VERSION,
    XSI_NS,
    Granularity,
    MalformedDatestamp,
    OaiErrorCode,
    UtcDatestamp,
    Verb,
    parse_datestamp,
)

log = logging.getLogger(__name__)

BOGUS_ERROR_CODE = "internalError"
STYLESHEET_PI = '<?xml-stylesheet type="text/xsl" href="/oai2.xsl"?>'


@dataclass(frozen=True)
class SimRecord:
    identifier: str
    datestamp: UtcDatestamp
    deleted: bool = False
    title: str = ""


@dataclass(frozen=True)
class RepoContent:
    repository_name: str
    admin_email: str
    earliest_datestamp: UtcDatestamp
    granularity: Granularity
    records: tuple[SimRecord, ...]
    page_size: int = 3
    base_url: str = "http://localhost/oai"
    deleted_record: str = "persistent"

    def __post_init__(self):
        if self.page_size < 1:
            raise ValueError("page_size must be at least 1")
        ids = [r.identifier for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("record identifiers must be unique")
        for r in self.records:
            if r.datestamp.epoch_seconds < self.earliest_datestamp.epoch_seconds:
                raise ValueError(f"{r.identifier} predates earliest_datestamp")

    def content_hash(self) -> str:
        h = hashlib.sha1()
        for r in self.records:
            h.update(f"{r.identifier}\t{r.datestamp}\t{int(r.deleted)}\n".encode())
        return h.hexdigest()[:8]

    def find(self, identifier: str) -> SimRecord | None:
        for r in self.records:
            if r.identifier == identifier:
                return r
        return None


def default_content(base_url: str = "http://localhost/oai") -> RepoContent:
    """Five records over two days at seconds granularity; the fourth is deleted."""
    stamps = [
        "2002-06-01T08:00:00Z",
        "2002-06-01T12:30:00Z",
        "2002-06-01T17:45:10Z",
        "2002-06-02T09:15:00Z",
        "2002-06-02T21:00:59Z",
    ]
    records = tuple(
        SimRecord(
            identifier=f"oai:sim.example.org:{i}",
            datestamp=parse_datestamp(s),
            deleted=(i == 4),
            title=f"Simulated item {i}",
        )
        for i, s in enumerate(stamps, start=1)
    )
    return RepoContent(
        repository_name="Simulated Repository",
        admin_email="oai-admin@sim.example.org",
        earliest_datestamp=parse_datestamp("2002-06-01T00:00:00Z"),
        granularity=Granularity.SECOND,
        records=records,
        page_size=3,
        base_url=base_url,
    )


@dataclass(frozen=True)
class FaultProfile:
    no_response: bool = False
    infinite_503: int | None = None
    n_503_then_ok: int | None = None
    retry_after_seconds: int = 1
    malformed_identify_xml: bool = False
    protocol_version_override: str | None = None
    bad_admin_email: bool = False
    missing_identify_element: str | None = None
    empty_repository: bool = False
    strip_datestamps: bool = False
    empty_window: bool = False
    spurious_empty_resumption_token: bool = False
    unescaped_invalid_id_echo: bool = False
    ignore_bad_args: bool = False
    granularity_mismatch: bool = False
    http_500_html_body: bool = False
    stylesheet_pi_invalid_body: bool = False
    unknown_error_code: bool = False
    schema_violation: bool = False

    @classmethod
    def from_flags(cls, flags: Iterable[str]) -> FaultProfile:
        """Build a profile from ``name`` or ``name=value`` strings."""
        kwargs = {}
        fields = {f.name: f for f in dataclasses.fields(cls)}
        for flag in flags:
            name, sep, value = flag.partition("=")
            name = name.strip().replace("-", "_")
            if name not in fields:
                raise ValueError(f"unknown fault flag {name!r}")
            kind = fields[name].type
            if kind == "bool":
                if sep and value.lower() not in ("1", "true", "yes"):
                    raise ValueError(f"fault flag {name!r} takes no value")
                kwargs[name] = True
            elif not sep:
                raise ValueError(f"fault flag {name!r} needs a value ({name}=...)")
            elif "int" in kind:
                try:
                    kwargs[name] = int(value)
                except ValueError:
                    raise ValueError(f"fault flag {name!r} needs an integer, got {value!r}") from None
            else:
                kwargs[name] = value
        return cls(**kwargs)

    def flags(self) -> list[str]:
        out = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value == f.default:
                continue
            out.append(f.name if value is True else f"{f.name}={value}")
        return out

    @property
    def is_clean(self) -> bool:
        return not self.flags()


FAULT_FLAGS = tuple(f.name for f in dataclasses.fields(FaultProfile))


class SimResponse(NamedTuple):
    status: int  # 0 means: accept the connection and never answer
    headers: list[tuple[str, str]]
    body: bytes


NO_RESPONSE = SimResponse(0, [], b"")

_XML_HEADERS = [("Content-Type", "text/xml; charset=UTF-8")]

_ARGUMENTS = {
    Verb.IDENTIFY: (set(), set(), None),
    Verb.LIST_METADATA_FORMATS: (set(), {"identifier"}, None),
    Verb.LIST_SETS: (set(), set(), "resumptionToken"),
    Verb.LIST_IDENTIFIERS: ({"metadataPrefix"}, {"from", "until", "set"}, "resumptionToken"),
    Verb.LIST_RECORDS: ({"metadataPrefix"}, {"from", "until", "set"}, "resumptionToken"),
    Verb.GET_RECORD: ({"identifier", "metadataPrefix"}, set(), None),
}

# Codes that answer an illegal request rather than a legal one with no data.
_ILLEGAL_REQUEST_CODES = {
    OaiErrorCode.BAD_ARGUMENT,
    OaiErrorCode.BAD_VERB,
    OaiErrorCode.BAD_RESUMPTION_TOKEN,
    OaiErrorCode.CANNOT_DISSEMINATE_FORMAT,
    OaiErrorCode.ID_DOES_NOT_EXIST,
}


class _OaiFailure(Exception):
    def __init__(self, code: OaiErrorCode, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _attr(value: str) -> str:
    return '"' + escape(value, {'"': "&quot;"}) + '"'


class _Builder:
    """Renders one response; holds the per-request context."""

    def __init__(self, pairs, profile: FaultProfile, content: RepoContent, now: datetime):
        self.pairs = list(pairs)
        self.profile = profile
        self.content = content
        self.now = now
        self.args = {}
        for k, v in self.pairs:
            self.args.setdefault(k, v)

    def echo(self, with_attributes: bool) -> str:
        attrs = ""
        if with_attributes:
            for k, v in self.pairs:
                if self.profile.unescaped_invalid_id_echo:
                    attrs += f' {k}="{v}"'
                else:
                    attrs += f" {k}={_attr(v)}"
        return f"<request{attrs}>{escape(self.content.base_url)}</request>"

    def envelope(self, inner: str, with_attributes: bool = True) -> bytes:
        stamp = self.now.strftime("%Y-%m-%dT%H:%M:%SZ")
        doc = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<OAI-PMH xmlns="{OAI_NS}" xmlns:xsi="{XSI_NS}" '
            f'xsi:schemaLocation="{OAI_NS} {OAI_SCHEMA_LOCATION}">\n'
            f"  <responseDate>{stamp}</responseDate>\n"
            f"  {self.echo(with_attributes)}\n"
            f"{inner}"
            "</OAI-PMH>\n"
        )
        return doc.encode("utf-8")

    def error(self, code: OaiErrorCode, message: str) -> bytes:
        shown = code.value
        if self.profile.unknown_error_code and code in _ILLEGAL_REQUEST_CODES:
            shown = BOGUS_ERROR_CODE
        with_attributes = code not in (OaiErrorCode.BAD_VERB, OaiErrorCode.BAD_ARGUMENT)
        inner = f'  <error code="{shown}">{escape(message)}</error>\n'
        return self.envelope(inner, with_attributes)

    # -- argument handling -------------------------------------------------

    def check_arguments(self, verb: Verb) -> None:
        if self.profile.ignore_bad_args:
            return
        required, optional, exclusive = _ARGUMENTS[verb]
        names = [k for k, _ in self.pairs if k != "verb"]
        if len(names) != len(set(names)):
            raise _OaiFailure(OaiErrorCode.BAD_ARGUMENT, "repeated argument")
        allowed = required | optional | ({exclusive} if exclusive else set())
        for name in names:
            if name not in allowed:
                raise _OaiFailure(OaiErrorCode.BAD_ARGUMENT, f"illegal argument {name!r}")
        if exclusive and exclusive in names:
            if len(names) > 1:
                raise _OaiFailure(OaiErrorCode.BAD_ARGUMENT, f"{exclusive} is an exclusive argument")
            return
        missing = required - set(names)
        if missing:
            raise _OaiFailure(OaiErrorCode.BAD_ARGUMENT, f"missing argument(s) {sorted(missing)}")

    def prefix(self) -> str:
        prefix = self.args.get("metadataPrefix", "oai_dc")
        if prefix != "oai_dc" and not self.profile.ignore_bad_args:
            raise _OaiFailure(OaiErrorCode.CANNOT_DISSEMINATE_FORMAT, f"format {prefix!r} is not supported")
        return "oai_dc"

    def window_bound(self, name: str) -> UtcDatestamp | None:
        text = self.args.get(name)
        if text is None:
            return None
        try:
            stamp = parse_datestamp(text)
        except MalformedDatestamp:
            if self.profile.ignore_bad_args:
                return None
            raise _OaiFailure(OaiErrorCode.BAD_ARGUMENT, f"{name} is not a valid datestamp") from None
        if stamp.granularity is Granularity.SECOND and self.content.granularity is Granularity.DAY:
            if self.profile.ignore_bad_args:
                return stamp
            raise _OaiFailure(OaiErrorCode.BAD_ARGUMENT, f"{name} is finer than the repository granularity")
        return stamp

    # -- content ------------------------------------------------------------

    def records(self) -> tuple[SimRecord, ...]:
        return () if self.profile.empty_repository else self.content.records

    def datestamp(self, stamp: UtcDatestamp) -> str:
        return stamp.truncate(self.content.granularity).render()

    def header(self, rec: SimRecord, indent: str) -> str:
        status = ' status="deleted"' if rec.deleted else ""
        lines = [f"{indent}<header{status}>", f"{indent}  <identifier>{escape(rec.identifier)}</identifier>"]
        if not self.profile.strip_datestamps:
            lines.append(f"{indent}  <datestamp>{self.datestamp(rec.datestamp)}</datestamp>")
        lines.append(f"{indent}</header>")
        return "\n".join(lines) + "\n"

    def record(self, rec: SimRecord, indent: str) -> str:
        out = f"{indent}<record>\n" + self.header(rec, indent + "  ")
        if not rec.deleted:
            out += (
                f"{indent}  <metadata>\n"
                f'{indent}    <oai_dc:dc xmlns:oai_dc="{OAI_DC_NS}" xmlns:dc="{DC_NS}" '
                f'xsi:schemaLocation="{OAI_DC_NS} {OAI_DC_SCHEMA_LOCATION}">\n'
                f"{indent}      <dc:title>{escape(rec.title)}</dc:title>\n"
                f"{indent}      <dc:identifier>{escape(rec.identifier)}</dc:identifier>\n"
                f"{indent}    </oai_dc:dc>\n"
                f"{indent}  </metadata>\n"
            )
        return out + f"{indent}</record>\n"

    # -- verbs --------------------------------------------------------------

    def identify(self) -> bytes:
        p, c = self.profile, self.content
        name = c.repository_name + (" & Archive" if p.malformed_identify_xml else "")
        if not p.malformed_identify_xml:
            name = escape(name)
        email = "admin at sim.example.org" if p.bad_admin_email else escape(c.admin_email)
        earliest = c.earliest_datestamp.truncate(c.granularity)
        if p.granularity_mismatch:
            other = Granularity.DAY if c.granularity is Granularity.SECOND else Granularity.SECOND
            earliest = UtcDatestamp(earliest.truncate(Granularity.DAY).value, other)
        elements = [
            ("repositoryName", name),
            ("baseURL", escape(c.base_url)),
            ("protocolVersion", escape(p.protocol_version_override or PROTOCOL_VERSION)),
            ("adminEmail", email),
            ("earliestDatestamp", earliest.render()),
            ("deletedRecord", c.deleted_record),
            ("granularity", c.granularity.value),
        ]
        body = "".join(
            f"    <{tag}>{value}</{tag}>\n" for tag, value in elements if tag != p.missing_identify_element
        )
        return self.envelope(f"  <Identify>\n{body}  </Identify>\n")

    def list_metadata_formats(self) -> bytes:
        ident = self.args.get("identifier")
        if ident is not None and self.content.find(ident) is None:
            raise _OaiFailure(OaiErrorCode.ID_DOES_NOT_EXIST, f"no item {ident!r}")
        parts = [
            f"      <metadataPrefix>oai_dc</metadataPrefix>\n",
            f"      <schema>{OAI_DC_SCHEMA_LOCATION}</schema>\n",
            f"      <metadataNamespace>{OAI_DC_NS}</metadataNamespace>\n",
        ]
        if self.profile.schema_violation:
            parts[0], parts[1] = parts[1], parts[0]
        inner = "  <ListMetadataFormats>\n    <metadataFormat>\n" + "".join(parts)
        inner += "    </metadataFormat>\n  </ListMetadataFormats>\n"
        return self.envelope(inner)

    def list_sets(self) -> bytes:
        if "resumptionToken" in self.args and not self.profile.ignore_bad_args:
            raise _OaiFailure(OaiErrorCode.BAD_RESUMPTION_TOKEN, "this repository issues no set tokens")
        raise _OaiFailure(OaiErrorCode.NO_SET_HIERARCHY, "this repository does not support sets")

    def get_record(self) -> bytes:
        ident = self.args.get("identifier")
        records = self.records()
        if ident is None and self.profile.ignore_bad_args:
            if not records:
                raise _OaiFailure(OaiErrorCode.ID_DOES_NOT_EXIST, "no items")
            rec = records[0]
        else:
            rec = next((r for r in records if r.identifier == ident), None)
        if rec is None:
            raise _OaiFailure(OaiErrorCode.ID_DOES_NOT_EXIST, f"no item {ident!r}")
        self.prefix()
        return self.envelope("  <GetRecord>\n" + self.record(rec, "    ") + "  </GetRecord>\n")

    def token_for(self, prefix, start, until, cursor) -> str:
        return "|".join([prefix, start or "", until or "", str(cursor), self.content.content_hash()])

    def parse_token(self, token: str):
        parts = token.split("|")
        try:
            prefix, start, until, cursor, digest = parts
            cursor = int(cursor)
        except ValueError:
            return None
        if digest != self.content.content_hash() or prefix != "oai_dc" or cursor <= 0:
            return None
        return prefix, start or None, until or None, cursor

    def list_items(self, verb: Verb) -> bytes:
        p = self.profile
        token = self.args.get("resumptionToken")
        resumed = token is not None
        if resumed:
            state = self.parse_token(token)
            if state is None:
                if not p.ignore_bad_args:
                    raise _OaiFailure(OaiErrorCode.BAD_RESUMPTION_TOKEN, "token is invalid or expired")
                state, resumed = ("oai_dc", None, None, 0), False
            prefix, start_text, until_text, cursor = state
            start = parse_datestamp(start_text) if start_text else None
            until = parse_datestamp(until_text) if until_text else None
        else:
            prefix = self.prefix()
            start, until = self.window_bound("from"), self.window_bound("until")
            if start and until and start.granularity is not until.granularity and not p.ignore_bad_args:
                raise _OaiFailure(OaiErrorCode.BAD_ARGUMENT, "from and until differ in granularity")
            if "set" in self.args and not p.ignore_bad_args:
                raise _OaiFailure(OaiErrorCode.NO_SET_HIERARCHY, "this repository does not support sets")
            cursor = 0
            if p.empty_window and start is not None and until is not None:
                raise _OaiFailure(OaiErrorCode.NO_RECORDS_MATCH, "no records match")

        lo = start.epoch_seconds if start else None
        hi = None
        if until is not None:
            hi = until.epoch_seconds + (86399 if until.granularity is Granularity.DAY else 0)
        matched = [
            r for r in self.records()
            if (lo is None or r.datestamp.epoch_seconds >= lo) and (hi is None or r.datestamp.epoch_seconds <= hi)
        ]
        if not matched:
            raise _OaiFailure(OaiErrorCode.NO_RECORDS_MATCH, "no records match")
        if cursor >= len(matched):
            raise _OaiFailure(OaiErrorCode.BAD_RESUMPTION_TOKEN, "token points past the end of the list")
        size = self.content.page_size
        page = matched[cursor:cursor + size]
        if verb is Verb.LIST_IDENTIFIERS:
            items = "".join(self.header(r, "    ") for r in page)
        else:
            items = "".join(self.record(r, "    ") for r in page)
        total = len(matched)
        if cursor + size < total:
            nxt = self.token_for(prefix, start and start.render(), until and until.render(), cursor + size)
            items += f'    <resumptionToken completeListSize="{total}" cursor="{cursor}">{escape(nxt)}</resumptionToken>\n'
        elif resumed:
            items += f'    <resumptionToken completeListSize="{total}" cursor="{cursor}"/>\n'
        elif p.spurious_empty_resumption_token:
            items += "    <resumptionToken></resumptionToken>\n"
        return self.envelope(f"  <{verb.value}>\n{items}  </{verb.value}>\n")


def _html_page(status: int, title: str, text: str) -> bytes:
    return (
        "<!DOCTYPE HTML PUBLIC \"-//IETF//DTD HTML 2.0//EN\">\n"
        f"<html><head><title>{status} {title}</title></head>\n"
        f"<body><h1>{title}</h1><p>{text}</p></body></html>\n"
    ).encode("utf-8")


def handle(
    request: Sequence[tuple[str, str]] | str,
    profile: FaultProfile = FaultProfile(),
    content: RepoContent | None = None,
    *,
    now: datetime | None = None,
    request_number: int = 0,
) -> SimResponse:
    """Answer one OAI-PMH GET.

    ``request`` is a list of (key, value) pairs or a raw query string.
    ``request_number`` counts earlier requests to the same server; only the
    ``n_503_then_ok`` fault looks at it. A status of 0 asks the server to
    keep the connection open without answering.
    """
    if isinstance(request, str):
        request = parse_qsl(request, keep_blank_values=True)
    content = content or default_content()
    now = now or datetime.now(timezone.utc)
    p = profile
    if p.no_response:
        return NO_RESPONSE
    if p.infinite_503 is not None:
        return _unavailable(p.infinite_503)
    if p.n_503_then_ok is not None and request_number < p.n_503_then_ok:
        return _unavailable(p.retry_after_seconds)
    if p.http_500_html_body:
        body = _html_page(500, "Internal Server Error", "The server encountered an internal error.")
        return SimResponse(500, [("Content-Type", "text/html; charset=UTF-8")], body)

    b = _Builder(request, p, content, now)
    verbs = [v for k, v in request if k == "verb"]
    verb = Verb.lookup(verbs[0]) if len(verbs) == 1 else None
    try:
        if verb is None:
            raise _OaiFailure(OaiErrorCode.BAD_VERB, "illegal or missing verb")
        b.check_arguments(verb)
        if verb is Verb.IDENTIFY:
            body = b.identify()
        elif verb is Verb.LIST_METADATA_FORMATS:
            body = b.list_metadata_formats()
        elif verb is Verb.LIST_SETS:
            body = b.list_sets()
        elif verb is Verb.GET_RECORD:
            body = b.get_record()
        else:
            body = b.list_items(verb)
    except _OaiFailure as failure:
        body = b.error(failure.code, failure.message)
    if p.stylesheet_pi_invalid_body:
        body = STYLESHEET_PI.encode() + b"\n" + body
    return SimResponse(200, list(_XML_HEADERS), body)


def _unavailable(seconds: int) -> SimResponse:
    body = _html_page(503, "Service Unavailable", "Try again later.")
    return SimResponse(503, [("Retry-After", str(seconds)), ("Content-Type", "text/html")], body)


class _Handler(BaseHTTPRequestHandler):
    server: _SimHTTPServer
    protocol_version = "HTTP/1.1"

    def do_GET(self):
        sim = self.server.sim
        parts = urlsplit(self.path)
        if parts.path != sim.path:
            response = SimResponse(404, [("Content-Type", "text/html")], _html_page(404, "Not Found", "No such page."))
            self._send(response)
            return
        pairs = parse_qsl(parts.query, keep_blank_values=True)
        number, response = sim.respond(pairs, self.path)
        if response.status == 0:
            # Hold the connection open so the client times out.
            sim.stopped.wait(sim.idle_limit)
            self.close_connection = True
            return
        self._send(response)

    def _send(self, response: SimResponse) -> None:
        self.send_response(response.status)
        for name, value in response.headers:
            self.send_header(name, value)
        self.send_header("Content-Length", str(len(response.body)))
        self.end_headers()
        self.wfile.write(response.body)

    def do_POST(self):
        self.send_response(405)
        self.send_header("Allow", "GET")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def log_message(self, format, *args):
        log.debug("%s %s", self.address_string(), format % args)


class _SimHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    block_on_close = False
    sim: SimulatorServer


class SimulatorServer:
    """Serve ``handle`` on an HTTP port; use as a context manager or call start/stop."""

    def __init__(
        self,
        profile: FaultProfile = FaultProfile(),
        content: RepoContent | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
        *,
        clock: Callable[[], datetime] | None = None,
        log_path: str | None = None,
        path: str = "/oai",
        idle_limit: float = 600.0,
    ):
        self.profile = profile
        self._content = content
        self.clock = clock or (lambda: datetime.now(timezone.utc))
        self.log_path = log_path
        self.path = path
        self.idle_limit = idle_limit
        self.stopped = threading.Event()
        self._lock = threading.Lock()
        self._log: list[dict] = []
        self._httpd = _SimHTTPServer((host, port), _Handler)
        self._httpd.sim = self
        self._thread: threading.Thread | None = None
        host, port = self._httpd.server_address[:2]
        self.base_url = f"http://{host}:{port}{path}"
        self.content = dataclasses.replace(content or default_content(), base_url=self.base_url)

    def respond(self, pairs, raw_path: str) -> tuple[int, SimResponse]:
        with self._lock:
            number = len(self._log)
            now = self.clock()
            response = handle(pairs, self.profile, self.content, now=now, request_number=number)
            entry = {
                "n": number,
                "time": now.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "path": raw_path,
                "args": [list(p) for p in pairs],
                "status": response.status,
            }
            self._log.append(entry)
            if self.log_path:
                with open(self.log_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")
        return number, response

    @property
    def requests(self) -> list[dict]:
        with self._lock:
            return [dict(e) for e in self._log]

    def start(self) -> SimulatorServer:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()
        log.info("simulator listening on %s (faults: %s)", self.base_url, self.profile.flags() or "none")
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever(poll_interval=0.2)

    def stop(self) -> None:
        self.stopped.set()
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self) -> SimulatorServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve(bind_address: tuple[str, int], profile: FaultProfile = FaultProfile(), content: RepoContent | None = None, **kwargs) -> SimulatorServer:
    """Start a simulator in a background thread and return its handle."""
    host, port = bind_address
    return SimulatorServer(profile, content, host, port, **kwargs).start()


def fixed_clock(stamp: str = "2024-01-01T00:00:00Z") -> Callable[[], datetime]:
    value = parse_datestamp(stamp).value
    return lambda: value


__all__ = [
    "FAULT_FLAGS",
    "FaultProfile",
    "RepoContent",
    "SimRecord",
    "SimResponse",
    "SimulatorServer",
    "default_content",
    "fixed_clock",
    "handle",
    "serve",
]
