"""A small OAI-PMH data provider for offline testing.

Serves a fixture of Dublin Core records over HTTP with stateless resumption
tokens (``page:<n>``, 1-based page to fetch next). A fault script can make
chosen requests fail once, to exercise the client's recovery paths.

Fault script syntax, comma separated::

    <kind>@<target>[*<times>][=<retry-after seconds>]

``kind`` is one of ``503``, ``500``, ``malformed``, ``html`` or ``expire``
(answer ``badResumptionToken``). ``target`` is a list page number (1 is the
request without a token) or a verb name such as ``Identify``. ``503``
responses carry ``Retry-After: 1`` unless another value is given.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import parse_qs, urlencode, urlsplit
from xml.sax.saxutils import escape, quoteattr

from dcqual.errors import BindError
from dcqual.oai.protocol import LEGAL_ARGS, OAI_NS, REQUIRED_ARGS, OaiVerb
from dcqual.records import DC_ELEMENTS, DC_NS, OAI_DC_NS, DublinCoreRecord
from dcqual.store import Corpus

logger = logging.getLogger(__name__)

_XSI = "http://www.w3.org/2001/XMLSchema-instance"
_FORMAT_INFO = {
    "oai_dc": ("http://www.openarchives.org/OAI/2.0/oai_dc.xsd", OAI_DC_NS),
    "marcxml": ("http://www.loc.gov/standards/marcxml/schema/MARC21slim.xsd", "http://www.loc.gov/MARC21/slim"),
}
_LIST_VERBS = ("ListRecords", "ListIdentifiers")
_ENTITIES = {"\r": "&#13;"}


@dataclass(frozen=True)
class FixtureRecord:
    identifier: str
    datestamp: str = "2017-03-13"
    set_specs: tuple[str, ...] = ()
    deleted: bool = False
    metadata: DublinCoreRecord = field(default_factory=DublinCoreRecord)


@dataclass
class ProviderFixture:
    records: list[FixtureRecord] = field(default_factory=list)
    repository_name: str = "Fixture Repo"
    protocol_version: str = "2.0"
    admin_emails: tuple[str, ...] = ("admin@example.org",)
    earliest_datestamp: str = "1794-01-01"
    granularity: str = "YYYY-MM-DD"
    deleted_record: str = "transient"
    formats: tuple[str, ...] = ("oai_dc",)
    sets: tuple[tuple[str, str], ...] = ()

    @classmethod
    def from_json(cls, obj: dict) -> "ProviderFixture":
        records = [
            FixtureRecord(
                identifier=r["identifier"],
                datestamp=r.get("datestamp", "2017-03-13"),
                set_specs=tuple(r.get("set_specs", ())),
                deleted=bool(r.get("deleted", False)),
                metadata=DublinCoreRecord.from_mapping(r.get("metadata", {})),
            )
            for r in obj.get("records", [])
        ]
        kwargs = {
            k: obj[k]
            for k in ("repository_name", "protocol_version", "earliest_datestamp", "granularity", "deleted_record")
            if k in obj
        }
        if "admin_emails" in obj:
            kwargs["admin_emails"] = tuple(obj["admin_emails"])
        if "formats" in obj:
            kwargs["formats"] = tuple(obj["formats"])
        if "sets" in obj:
            kwargs["sets"] = tuple(tuple(s) for s in obj["sets"])
        return cls(records=records, **kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ProviderFixture":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def from_corpus(cls, corpus: Corpus, repo_id: str, **kwargs) -> "ProviderFixture":
        records = [
            FixtureRecord(r.header.identifier, r.header.datestamp, r.header.set_specs, False, r.metadata)
            for r in corpus.by_repo.get(repo_id, ())
        ]
        return cls(records=records, **kwargs)

    def to_json(self) -> dict:
        return {
            "repository_name": self.repository_name,
            "protocol_version": self.protocol_version,
            "admin_emails": list(self.admin_emails),
            "earliest_datestamp": self.earliest_datestamp,
            "granularity": self.granularity,
            "deleted_record": self.deleted_record,
            "formats": list(self.formats),
            "sets": [list(s) for s in self.sets],
            "records": [
                {
                    "identifier": r.identifier,
                    "datestamp": r.datestamp,
                    "set_specs": list(r.set_specs),
                    "deleted": r.deleted,
                    "metadata": r.metadata.to_mapping(),
                }
                for r in self.records
            ],
        }


# -- fault injection --------------------------------------------------------

FAULT_KINDS = ("503", "500", "malformed", "html", "expire")


@dataclass
class Fault:
    kind: str
    target: int | str
    remaining: int = 1
    retry_after: int | None = None


class FaultScript:
    def __init__(self, faults: Iterable[Fault] = ()):
        self.faults = list(faults)
        self._lock = threading.Lock()

    @classmethod
    def parse(cls, text: str | None) -> "FaultScript":
        faults = []
        for item in (text or "").split(","):
            item = item.strip()
            if not item:
                continue
            try:
                kind, rest = item.split("@", 1)
                retry_after = None
                if "=" in rest:
                    rest, ra = rest.split("=", 1)
                    retry_after = int(ra)
                times = 1
                if "*" in rest:
                    rest, t = rest.split("*", 1)
                    times = int(t)
                target: int | str = int(rest) if rest.isdigit() else OaiVerb(rest).value
            except ValueError:
                raise ValueError(f"bad fault spec {item!r}") from None
            if kind not in FAULT_KINDS or times < 1:
                raise ValueError(f"bad fault spec {item!r}")
            if kind == "503" and retry_after is None:
                retry_after = 1
            faults.append(Fault(kind, target, times, retry_after))
        return cls(faults)

    def take(self, verb: str, page: int | None) -> Fault | None:
        with self._lock:
            for fault in self.faults:
                if fault.remaining and (fault.target == verb or (page is not None and fault.target == page)):
                    fault.remaining -= 1
                    return fault
        return None


# -- XML rendering ----------------------------------------------------------


def _response_date() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _esc(text: str) -> str:
    return escape(text, _ENTITIES)


def render_envelope(body: str, base_url: str, request_args: dict[str, str] | None = None) -> bytes:
    attrs = "".join(f" {k}={quoteattr(v)}" for k, v in (request_args or {}).items())
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<OAI-PMH xmlns="{OAI_NS}" xmlns:xsi="{_XSI}" '
        f'xsi:schemaLocation="{OAI_NS} http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd">\n'
        f"<responseDate>{_response_date()}</responseDate>\n"
        f"<request{attrs}>{_esc(base_url)}</request>\n"
        f"{body}\n</OAI-PMH>\n"
    ).encode("utf-8")


def render_error(code: str, message: str, base_url: str, request_args: dict[str, str] | None = None) -> bytes:
    return render_envelope(f'<error code="{code}">{_esc(message)}</error>', base_url, request_args)


def render_header(rec: FixtureRecord) -> str:
    status = ' status="deleted"' if rec.deleted else ""
    sets = "".join(f"<setSpec>{_esc(s)}</setSpec>" for s in rec.set_specs)
    return (
        f"<header{status}><identifier>{_esc(rec.identifier)}</identifier>"
        f"<datestamp>{_esc(rec.datestamp)}</datestamp>{sets}</header>"
    )


def render_dc(metadata: DublinCoreRecord) -> str:
    parts = [
        f"<dc:{e.value}>{_esc(v)}</dc:{e.value}>" for e in DC_ELEMENTS for v in metadata.get(e)
    ]
    return (
        f'<oai_dc:dc xmlns:oai_dc="{OAI_DC_NS}" xmlns:dc="{DC_NS}" xmlns:xsi="{_XSI}" '
        f'xsi:schemaLocation="{OAI_DC_NS} http://www.openarchives.org/OAI/2.0/oai_dc.xsd">'
        + "".join(parts)
        + "</oai_dc:dc>"
    )


def render_record(rec: FixtureRecord, prefix: str = "oai_dc") -> str:
    if rec.deleted:
        return f"<record>{render_header(rec)}</record>"
    payload = render_dc(rec.metadata) if prefix == "oai_dc" else '<placeholder xmlns="urn:dcqual:placeholder"/>'
    return f"<record>{render_header(rec)}<metadata>{payload}</metadata></record>"


def render_token(token: str, cursor: int, size: int) -> str:
    return f'<resumptionToken completeListSize="{size}" cursor="{cursor}">{_esc(token)}</resumptionToken>'


def page_count(n_records: int, page_size: int) -> int:
    return max(1, math.ceil(n_records / page_size))


def render_page(
    records: Sequence[FixtureRecord],
    page: int,
    page_size: int,
    *,
    verb: str = "ListRecords",
    base_url: str = "http://localhost/oai",
    prefix: str = "oai_dc",
    token_suffix: str = "",
    request_args: dict[str, str] | None = None,
) -> bytes:
    """One page (1-based) of a ListRecords/ListIdentifiers response."""
    pages = page_count(len(records), page_size)
    start = (page - 1) * page_size
    chunk = records[start:start + page_size]
    if verb == "ListIdentifiers":
        items = "".join(render_header(r) for r in chunk)
    else:
        items = "".join(render_record(r, prefix) for r in chunk)
    token = ""
    if pages > 1:
        next_token = f"page:{page + 1}{token_suffix}" if page < pages else ""
        token = render_token(next_token, start, len(records))
    return render_envelope(f"<{verb}>{items}{token}</{verb}>", base_url, request_args)


# -- request handling -------------------------------------------------------


class MockProvider:
    """OAI-PMH endpoint backed by a :class:`ProviderFixture`.

    ``handle`` maps a query string to ``(status, headers, body)`` and can be
    used without a socket; ``start`` serves it over HTTP on a background
    thread.
    """

    def __init__(
        self,
        fixture: ProviderFixture,
        page_size: int = 100,
        faults: FaultScript | str | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        if page_size < 1:
            raise ValueError("page_size must be >= 1")
        self.fixture = fixture
        self.page_size = page_size
        self.faults = faults if isinstance(faults, FaultScript) else FaultScript.parse(faults)
        self.host = host
        self.port = port
        self.request_log: list[dict[str, str]] = []
        self._log_lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self._by_id = {r.identifier: r for r in fixture.records}

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}/oai"

    # HTTP plumbing

    def bind(self) -> "MockProvider":
        provider = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                status, headers, body = provider.handle(urlsplit(self.path).query)
                self.send_response(status)
                for k, v in headers.items():
                    self.send_header(k, v)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, format, *args):
                logger.debug("%s - %s", self.address_string(), format % args)

        try:
            self._server = ThreadingHTTPServer((self.host, self.port), Handler)
        except OSError as exc:
            raise BindError(f"cannot bind {self.host}:{self.port}: {exc}") from exc
        self._server.daemon_threads = True
        self.port = self._server.server_address[1]
        return self

    def start(self) -> "MockProvider":
        if self._server is None:
            self.bind()
        self._thread = threading.Thread(target=self._server.serve_forever, args=(0.05,), daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        if self._server is None:
            self.bind()
        self._server.serve_forever()

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    def __enter__(self) -> "MockProvider":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # protocol

    def list_requests(self, verb: str = "ListRecords", with_token: bool | None = None) -> list[dict[str, str]]:
        with self._log_lock:
            log = list(self.request_log)
        return [
            r for r in log
            if r.get("verb") == verb and (with_token is None or ("resumptionToken" in r) == with_token)
        ]

    def handle(self, query: str) -> tuple[int, dict[str, str], bytes]:
        raw = parse_qs(query, keep_blank_values=True)
        args = {k: v[0] for k, v in raw.items()}
        with self._log_lock:
            self.request_log.append(dict(args))
        xml = {"Content-Type": "text/xml; charset=utf-8"}
        verb = args.pop("verb", None)
        base = self.base_url

        if any(len(v) > 1 for v in raw.values()):
            return 200, xml, render_error("badArgument", "repeated argument", base)
        try:
            oai_verb = OaiVerb(verb)
        except ValueError:
            return 200, xml, render_error("badVerb", f"illegal verb {verb!r}", base)

        illegal = set(args) - LEGAL_ARGS[oai_verb]
        if illegal:
            return 200, xml, render_error("badArgument", f"illegal arguments {sorted(illegal)}", base)
        if "resumptionToken" in args:
            if len(args) > 1:
                return 200, xml, render_error("badArgument", "resumptionToken is exclusive", base)
        elif REQUIRED_ARGS.get(oai_verb, frozenset()) - set(args):
            return 200, xml, render_error("badArgument", "missing required argument", base)

        request_args = {"verb": oai_verb.value, **args}
        page = None
        if oai_verb.value in _LIST_VERBS:
            page = self._page_number(args.get("resumptionToken"))

        fault = self.faults.take(oai_verb.value, page)
        if fault is not None:
            if fault.kind in ("503", "500"):
                headers = {"Content-Type": "text/plain"}
                if fault.kind == "503" and fault.retry_after is not None:
                    headers["Retry-After"] = str(fault.retry_after)
                return int(fault.kind), headers, b"temporarily unavailable"
            if fault.kind == "malformed":
                return 200, xml, b'<?xml version="1.0"?><OAI-PMH><ListRecords><record>'
            if fault.kind == "html":
                return 200, {"Content-Type": "text/html"}, b"<!DOCTYPE html><html><body>Not here</body></html>"
            if fault.kind == "expire":
                return 200, xml, render_error("badResumptionToken", "token expired", base, request_args)

        method = getattr(self, "_" + oai_verb.value)
        return 200, xml, method(args, request_args)

    def _page_number(self, token: str | None) -> int | None:
        if token is None:
            return 1
        head = token.split("|", 1)[0]
        if head.startswith("page:") and head[5:].isdigit():
            return int(head[5:])
        return None

    def _Identify(self, args, request_args) -> bytes:
        f = self.fixture
        emails = "".join(f"<adminEmail>{_esc(e)}</adminEmail>" for e in f.admin_emails)
        body = (
            f"<Identify><repositoryName>{_esc(f.repository_name)}</repositoryName>"
            f"<baseURL>{_esc(self.base_url)}</baseURL>"
            f"<protocolVersion>{_esc(f.protocol_version)}</protocolVersion>{emails}"
            f"<earliestDatestamp>{_esc(f.earliest_datestamp)}</earliestDatestamp>"
            f"<deletedRecord>{_esc(f.deleted_record)}</deletedRecord>"
            f"<granularity>{_esc(f.granularity)}</granularity></Identify>"
        )
        return render_envelope(body, self.base_url, request_args)

    def _ListMetadataFormats(self, args, request_args) -> bytes:
        if "identifier" in args and args["identifier"] not in self._by_id:
            return render_error("idDoesNotExist", args["identifier"], self.base_url, request_args)
        if not self.fixture.formats:
            return render_error("noMetadataFormats", "", self.base_url, request_args)
        items = []
        for prefix in self.fixture.formats:
            schema, ns = _FORMAT_INFO.get(prefix, (f"urn:dcqual:{prefix}.xsd", f"urn:dcqual:{prefix}"))
            items.append(
                f"<metadataFormat><metadataPrefix>{_esc(prefix)}</metadataPrefix>"
                f"<schema>{_esc(schema)}</schema><metadataNamespace>{_esc(ns)}</metadataNamespace></metadataFormat>"
            )
        return render_envelope(f"<ListMetadataFormats>{''.join(items)}</ListMetadataFormats>", self.base_url, request_args)

    def _ListSets(self, args, request_args) -> bytes:
        if "resumptionToken" in args:
            return render_error("badResumptionToken", "sets are not paged", self.base_url, request_args)
        if not self.fixture.sets:
            return render_error("noSetHierarchy", "", self.base_url, request_args)
        items = "".join(
            f"<set><setSpec>{_esc(spec)}</setSpec><setName>{_esc(name)}</setName></set>"
            for spec, name in self.fixture.sets
        )
        return render_envelope(f"<ListSets>{items}</ListSets>", self.base_url, request_args)

    def _GetRecord(self, args, request_args) -> bytes:
        if args["metadataPrefix"] not in self.fixture.formats:
            return render_error("cannotDisseminateFormat", args["metadataPrefix"], self.base_url, request_args)
        rec = self._by_id.get(args["identifier"])
        if rec is None:
            return render_error("idDoesNotExist", args["identifier"], self.base_url, request_args)
        body = f"<GetRecord>{render_record(rec, args['metadataPrefix'])}</GetRecord>"
        return render_envelope(body, self.base_url, request_args)

    def _list(self, verb: str, args: dict[str, str], request_args: dict[str, str]) -> bytes:
        base = self.base_url
        if "resumptionToken" in args:
            token = args["resumptionToken"]
            head, _, suffix = token.partition("|")
            filters = dict(parse_qs(suffix)) if suffix else {}
            filters = {k: v[0] for k, v in filters.items()}
            page = self._page_number(token)
            if page is None or page < 2 or set(filters) - {"metadataPrefix", "set", "from", "until"}:
                return render_error("badResumptionToken", token, base, request_args)
        else:
            filters = dict(args)
            page = 1
        prefix = filters.get("metadataPrefix", "oai_dc")
        if prefix not in self.fixture.formats:
            return render_error("cannotDisseminateFormat", prefix, base, request_args)
        records = [
            r for r in self.fixture.records
            if ("set" not in filters or filters["set"] in r.set_specs)
            and ("from" not in filters or r.datestamp >= filters["from"])
            and ("until" not in filters or r.datestamp <= filters["until"])
        ]
        if not records:
            return render_error("noRecordsMatch", "", base, request_args)
        if page > page_count(len(records), self.page_size):
            return render_error("badResumptionToken", args.get("resumptionToken", ""), base, request_args)
        extra = {k: v for k, v in filters.items() if (k, v) != ("metadataPrefix", "oai_dc")}
        suffix = "|" + urlencode(sorted(extra.items())) if extra else ""
        return render_page(
            records, page, self.page_size,
            verb=verb, base_url=base, prefix=prefix, token_suffix=suffix, request_args=request_args,
        )

    def _ListRecords(self, args, request_args) -> bytes:
        return self._list("ListRecords", args, request_args)

    def _ListIdentifiers(self, args, request_args) -> bytes:
        return self._list("ListIdentifiers", args, request_args)


def serve(fixture: ProviderFixture, page_size: int = 100, fault_script: str | None = None, host: str = "127.0.0.1", port: int = 0) -> MockProvider:
    """Start a provider on a background thread and return it."""
    return MockProvider(fixture, page_size, fault_script, host, port).start()
