"""OAI-PMH 2.0 vocabulary: verbs, error codes, datestamps, baseURLs and parsed records."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from urllib.parse import urlsplit

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
OAI_DC_NS = "http://www.openarchives.org/OAI/2.0/oai_dc/"
DC_NS = "http://purl.org/dc/elements/1.1/"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"
OAI_SCHEMA_LOCATION = "http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd"
OAI_DC_SCHEMA_LOCATION = "http://www.openarchives.org/OAI/2.0/oai_dc.xsd"

PROTOCOL_VERSION = "2.0"


class Verb(str, Enum):
    IDENTIFY = "Identify"
    LIST_METADATA_FORMATS = "ListMetadataFormats"
    LIST_SETS = "ListSets"
    LIST_IDENTIFIERS = "ListIdentifiers"
    LIST_RECORDS = "ListRecords"
    GET_RECORD = "GetRecord"

    @classmethod
    def lookup(cls, text: str) -> Verb | None:
        """Return the verb named ``text`` or None when it is illegal."""
        try:
            return cls(text)
        except ValueError:
            return None


class OaiErrorCode(str, Enum):
    BAD_ARGUMENT = "badArgument"
    BAD_RESUMPTION_TOKEN = "badResumptionToken"
    BAD_VERB = "badVerb"
    CANNOT_DISSEMINATE_FORMAT = "cannotDisseminateFormat"
    ID_DOES_NOT_EXIST = "idDoesNotExist"
    NO_RECORDS_MATCH = "noRecordsMatch"
    NO_METADATA_FORMATS = "noMetadataFormats"
    NO_SET_HIERARCHY = "noSetHierarchy"

    @classmethod
    def lookup(cls, text: str) -> OaiErrorCode | None:
        try:
            return cls(text)
        except ValueError:
            return None


class Granularity(str, Enum):
    DAY = "YYYY-MM-DD"
    SECOND = "YYYY-MM-DDThh:mm:ssZ"

    @property
    def length(self) -> int:
        return 10 if self is Granularity.DAY else 20


class MalformedDatestamp(ValueError):
    pass


_DAY_RE = re.compile(r"([0-9]{4})-([0-9]{2})-([0-9]{2})")
_SECOND_RE = re.compile(r"([0-9]{4})-([0-9]{2})-([0-9]{2})T([0-9]{2}):([0-9]{2}):([0-9]{2})Z")


@dataclass(frozen=True)
class UtcDatestamp:
    value: datetime
    granularity: Granularity

    def __post_init__(self):
        if self.value.tzinfo is None:
            object.__setattr__(self, "value", self.value.replace(tzinfo=timezone.utc))
        if self.granularity is Granularity.DAY and (
            self.value.hour or self.value.minute or self.value.second or self.value.microsecond
        ):
            raise ValueError("day-granularity datestamp cannot carry a time component")

    def render(self) -> str:
        # strftime("%Y") does not zero-pad years before 1000 on every libc.
        v = self.value
        day = f"{v.year:04d}-{v.month:02d}-{v.day:02d}"
        if self.granularity is Granularity.DAY:
            return day
        return f"{day}T{v.hour:02d}:{v.minute:02d}:{v.second:02d}Z"

    def __str__(self) -> str:
        return self.render()

    @property
    def epoch_seconds(self) -> int:
        # Day values sort as midnight UTC.
        return int(self.value.timestamp())

    def truncate(self, granularity: Granularity) -> UtcDatestamp:
        """Coarsen to ``granularity``; a finer target leaves the value unchanged."""
        if granularity is Granularity.DAY and self.granularity is Granularity.SECOND:
            day = self.value.replace(hour=0, minute=0, second=0, microsecond=0)
            return UtcDatestamp(day, Granularity.DAY)
        return self

    @classmethod
    def now(cls) -> UtcDatestamp:
        return cls(datetime.now(timezone.utc).replace(microsecond=0), Granularity.SECOND)


def parse_datestamp(text: str) -> UtcDatestamp:
    """Parse an OAI-PMH datestamp in either Day or Second granularity.

    Raises MalformedDatestamp for anything that is not an exact match of
    ``YYYY-MM-DD`` or ``YYYY-MM-DDThh:mm:ssZ`` naming a real calendar instant.
    """
    if not isinstance(text, str):
        raise MalformedDatestamp(f"datestamp must be text, got {type(text).__name__}")
    if m := _DAY_RE.fullmatch(text):
        granularity = Granularity.DAY
    elif m := _SECOND_RE.fullmatch(text):
        granularity = Granularity.SECOND
    else:
        raise MalformedDatestamp(f"{text!r} matches neither YYYY-MM-DD nor YYYY-MM-DDThh:mm:ssZ")
    try:
        value = datetime(*(int(g) for g in m.groups()), tzinfo=timezone.utc)
    except ValueError as exc:
        raise MalformedDatestamp(f"{text!r} is not a valid calendar date: {exc}") from None
    return UtcDatestamp(value, granularity)


class IntakeError(ValueError):
    """A submitted baseURL that cannot be validated at all."""

    intake_class = ""


class NoBaseUrl(IntakeError):
    intake_class = "NoBaseUrl"


class NonsenseBaseUrl(IntakeError):
    intake_class = "NonsenseBaseUrl"


@dataclass(frozen=True)
class BaseUrl:
    url: str

    def __str__(self) -> str:
        return self.url


def validate_base_url(text: str | None) -> BaseUrl:
    """Triage a submitted baseURL without touching the network."""
    if text is None or not text.strip():
        raise NoBaseUrl("No base URL")
    text = text.strip()
    try:
        parts = urlsplit(text)
        host = parts.hostname
        parts.port  # raises on a non-numeric port
    except ValueError as exc:
        raise NonsenseBaseUrl(f"Nonsense base URL: {exc}") from None
    if parts.scheme.lower() not in ("http", "https"):
        raise NonsenseBaseUrl(f"Nonsense base URL: {text!r} is not an http(s) URL")
    if not host:
        raise NonsenseBaseUrl(f"Nonsense base URL: {text!r} has no host")
    if parts.fragment or "#" in text:
        raise NonsenseBaseUrl(f"Nonsense base URL: {text!r} carries a fragment")
    if any(c.isspace() for c in text):
        raise NonsenseBaseUrl(f"Nonsense base URL: {text!r} contains whitespace")
    return BaseUrl(text)


_ATEXT = r"[A-Za-z0-9!#$%&'*+/=?^_`{|}~-]+"
_LABEL = r"[A-Za-z0-9](?:[A-Za-z0-9-]*[A-Za-z0-9])?"
_MAILBOX_RE = re.compile(rf"{_ATEXT}(?:\.{_ATEXT})*@{_LABEL}(?:\.{_LABEL})+")


def validate_admin_email(text: str) -> bool:
    """True for a plain ``local@domain.tld`` mailbox (dot-atom local part, dotted host)."""
    return bool(text) and _MAILBOX_RE.fullmatch(text) is not None


@dataclass(frozen=True)
class IdentifyInfo:
    repository_name: str
    base_url: BaseUrl
    protocol_version: str
    earliest_datestamp: UtcDatestamp
    deleted_record: str
    granularity: Granularity
    admin_emails: tuple[str, ...]


@dataclass(frozen=True)
class RecordHeader:
    identifier: str
    datestamp: UtcDatestamp | None
    set_specs: tuple[str, ...] = ()
    deleted: bool = False


@dataclass(frozen=True)
class ResumptionToken:
    token: str
    complete_list_size: int | None = None
    cursor: int | None = None

    @property
    def is_empty(self) -> bool:
        return self.token == ""


@dataclass(frozen=True)
class OaiError:
    """One ``<error>`` element; ``code`` is kept verbatim so unknown codes survive."""

    code: str
    message: str = ""

    @property
    def known(self) -> OaiErrorCode | None:
        return OaiErrorCode.lookup(self.code)


DELETED_RECORD_VALUES = ("no", "persistent", "transient")

