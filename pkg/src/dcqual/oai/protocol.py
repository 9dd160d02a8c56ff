"""OAI-PMH 2.0 request construction and response parsing.

Everything here is pure: no network access. :mod:`dcqual.oai.client` adds the
transport on top.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from urllib.parse import quote, urlsplit
import xml.etree.ElementTree as ET

from dcqual.errors import (
    OAI_ERROR_CODES,
    IllegalArgument,
    MalformedXml,
    MissingElement,
    NotOaiPmh,
    OaiProtocolError,
)
from dcqual.records import DublinCoreRecord, RecordHeader, dc_from_element

OAI_NS = "http://www.openarchives.org/OAI/2.0/"
_O = "{%s}" % OAI_NS


class OaiVerb(str, Enum):
    IDENTIFY = "Identify"
    LIST_METADATA_FORMATS = "ListMetadataFormats"
    LIST_SETS = "ListSets"
    LIST_IDENTIFIERS = "ListIdentifiers"
    LIST_RECORDS = "ListRecords"
    GET_RECORD = "GetRecord"

    def __str__(self) -> str:
        return self.value


_LIST_ARGS = frozenset({"metadataPrefix", "from", "until", "set", "resumptionToken"})
LEGAL_ARGS: dict[OaiVerb, frozenset[str]] = {
    OaiVerb.IDENTIFY: frozenset(),
    OaiVerb.LIST_METADATA_FORMATS: frozenset({"identifier"}),
    OaiVerb.LIST_SETS: frozenset({"resumptionToken"}),
    OaiVerb.LIST_IDENTIFIERS: _LIST_ARGS,
    OaiVerb.LIST_RECORDS: _LIST_ARGS,
    OaiVerb.GET_RECORD: frozenset({"identifier", "metadataPrefix"}),
}
REQUIRED_ARGS: dict[OaiVerb, frozenset[str]] = {
    OaiVerb.LIST_IDENTIFIERS: frozenset({"metadataPrefix"}),
    OaiVerb.LIST_RECORDS: frozenset({"metadataPrefix"}),
    OaiVerb.GET_RECORD: frozenset({"identifier", "metadataPrefix"}),
}


@dataclass(frozen=True)
class Endpoint:
    repo_id: str
    base_url: str

    def __post_init__(self):
        if not self.repo_id or re.search(r"\s", self.repo_id):
            raise IllegalArgument(f"invalid repo_id {self.repo_id!r}")
        parts = urlsplit(self.base_url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise IllegalArgument(f"base_url must be an absolute http(s) URL: {self.base_url!r}")


@dataclass(frozen=True)
class ResumptionToken:
    token: str
    complete_list_size: int | None = None
    cursor: int | None = None

    @property
    def is_final(self) -> bool:
        return self.token == ""


@dataclass(frozen=True)
class RepositoryIdentity:
    repository_name: str
    protocol_version: str
    earliest_datestamp: str
    granularity: str
    admin_emails: tuple[str, ...] = ()
    deleted_record_policy: str = ""
    base_url: str = ""


@dataclass(frozen=True)
class MetadataFormat:
    prefix: str
    schema: str = ""
    namespace: str = ""


@dataclass(frozen=True)
class FormatList:
    formats: tuple[MetadataFormat, ...]

    @property
    def prefixes(self) -> tuple[str, ...]:
        return tuple(f.prefix for f in self.formats)


@dataclass(frozen=True)
class SetList:
    sets: tuple[tuple[str, str], ...]  # (setSpec, setName)
    token: ResumptionToken | None = None


@dataclass(frozen=True)
class PageRecord:
    header: RecordHeader
    metadata: DublinCoreRecord | None


@dataclass(frozen=True)
class RecordsPage:
    records: tuple[PageRecord, ...]
    token: ResumptionToken | None = None


def build_request(endpoint: Endpoint, verb: OaiVerb | str, params: dict[str, str] | None = None) -> str:
    """Return the GET URL for ``verb`` with ``params``.

    ``verb`` comes first, remaining keys follow in alphabetical order, and
    values are percent-encoded leaving only RFC 3986 unreserved characters.
    """
    try:
        verb = OaiVerb(verb)
    except ValueError:
        raise IllegalArgument(f"unknown verb {verb!r}") from None
    params = dict(params or {})
    illegal = set(params) - LEGAL_ARGS[verb]
    if illegal:
        raise IllegalArgument(f"{verb.value} does not accept {sorted(illegal)}")
    if "resumptionToken" in params:
        if len(params) > 1:
            raise IllegalArgument("resumptionToken is an exclusive argument")
    else:
        missing = REQUIRED_ARGS.get(verb, frozenset()) - set(params)
        if missing:
            raise IllegalArgument(f"{verb.value} requires {sorted(missing)}")
    query = [("verb", verb.value)] + sorted(params.items())
    encoded = "&".join(f"{k}={quote(str(v), safe='')}" for k, v in query)
    return f"{endpoint.base_url}?{encoded}"


def _looks_like_html(body: bytes) -> bool:
    head = body[:512].lstrip().lower()
    return head.startswith(b"<!doctype html") or head.startswith(b"<html")


def _text(elem: ET.Element | None) -> str:
    return "".join(elem.itertext()).strip() if elem is not None else ""


def _required(parent: ET.Element, name: str) -> ET.Element:
    elem = parent.find(_O + name)
    if elem is None:
        raise MissingElement(f"<{name}> missing in <{parent.tag.split('}')[-1]}>")
    return elem


def _int_attr(elem: ET.Element, name: str) -> int | None:
    raw = elem.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise MalformedXml(f"resumptionToken {name}={raw!r} is not an integer") from None
    if value < 0:
        raise MalformedXml(f"resumptionToken {name} is negative")
    return value


def _token(container: ET.Element) -> ResumptionToken | None:
    elem = container.find(_O + "resumptionToken")
    if elem is None:
        return None
    return ResumptionToken(
        token=(elem.text or "").strip(),
        complete_list_size=_int_attr(elem, "completeListSize"),
        cursor=_int_attr(elem, "cursor"),
    )


def _header(elem: ET.Element) -> RecordHeader:
    identifier = _text(_required(elem, "identifier"))
    if not identifier:
        raise MissingElement("empty <identifier> in header")
    return RecordHeader(
        identifier=identifier,
        datestamp=_text(_required(elem, "datestamp")),
        set_specs=tuple(_text(s) for s in elem.findall(_O + "setSpec")),
        deleted=elem.get("status") == "deleted",
    )


def _record(elem: ET.Element) -> PageRecord:
    header = _header(_required(elem, "header"))
    metadata = None
    md = elem.find(_O + "metadata")
    if md is not None and not header.deleted:
        payload = next((c for c in md if isinstance(c.tag, str)), None)
        metadata = dc_from_element(payload) if payload is not None else DublinCoreRecord()
    return PageRecord(header, metadata)


def _identity(elem: ET.Element) -> RepositoryIdentity:
    return RepositoryIdentity(
        repository_name=_text(_required(elem, "repositoryName")),
        protocol_version=_text(_required(elem, "protocolVersion")),
        earliest_datestamp=_text(_required(elem, "earliestDatestamp")),
        granularity=_text(_required(elem, "granularity")),
        admin_emails=tuple(_text(a) for a in elem.findall(_O + "adminEmail")),
        deleted_record_policy=_text(elem.find(_O + "deletedRecord")),
        base_url=_text(elem.find(_O + "baseURL")),
    )


def parse_response(body: bytes) -> RecordsPage | RepositoryIdentity | SetList | FormatList:
    """Interpret one OAI-PMH response payload.

    Protocol-level ``<error>`` elements are raised as :class:`OaiProtocolError`
    (the first one, when several are present).
    """
    try:
        root = ET.fromstring(body)
    except (ET.ParseError, ValueError, LookupError) as exc:
        if _looks_like_html(body):
            raise NotOaiPmh("response is an HTML document") from exc
        raise MalformedXml(str(exc)) from exc
    if root.tag != _O + "OAI-PMH":
        raise NotOaiPmh(f"root element is {root.tag!r}, not OAI-PMH")

    error = root.find(_O + "error")
    if error is not None:
        code = error.get("code", "")
        if code not in OAI_ERROR_CODES:
            raise MalformedXml(f"unknown OAI-PMH error code {code!r}")
        raise OaiProtocolError(code, _text(error))

    for child in root:
        if not isinstance(child.tag, str) or not child.tag.startswith(_O):
            continue
        name = child.tag[len(_O):]
        if name == "Identify":
            return _identity(child)
        if name == "ListMetadataFormats":
            return FormatList(
                tuple(
                    MetadataFormat(
                        prefix=_text(_required(f, "metadataPrefix")),
                        schema=_text(f.find(_O + "schema")),
                        namespace=_text(f.find(_O + "metadataNamespace")),
                    )
                    for f in child.findall(_O + "metadataFormat")
                )
            )
        if name == "ListSets":
            sets = tuple(
                (_text(_required(s, "setSpec")), _text(s.find(_O + "setName")))
                for s in child.findall(_O + "set")
            )
            return SetList(sets, _token(child))
        if name in ("ListRecords", "GetRecord"):
            records = tuple(_record(r) for r in child.findall(_O + "record"))
            return RecordsPage(records, _token(child) if name == "ListRecords" else None)
        if name == "ListIdentifiers":
            headers = tuple(PageRecord(_header(h), None) for h in child.findall(_O + "header"))
            return RecordsPage(headers, _token(child))
    raise MissingElement("no verb element in OAI-PMH response")
