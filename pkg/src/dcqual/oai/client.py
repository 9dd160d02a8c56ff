"""HTTP transport for OAI-PMH: retries, politeness and list paging."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from typing import Callable, Iterable

import requests

from dcqual import __version__
from dcqual.errors import (
    DcqualError,
    MissingElement,
    NetworkError,
    OaiProtocolError,
    UnsupportedVersion,
)
from dcqual.oai.protocol import (
    Endpoint,
    FormatList,
    OaiVerb,
    RecordsPage,
    RepositoryIdentity,
    SetList,
    build_request,
    parse_response,
)
from dcqual.records import DublinCoreRecord, HarvestedRecord

logger = logging.getLogger(__name__)

RecordSink = Callable[[HarvestedRecord], None]


@dataclass(frozen=True)
class FetchPolicy:
    """Retry and pacing knobs. Durations are in seconds."""

    max_retries: int = 3
    base_backoff: float = 1.0
    timeout: float = 30.0
    polite_delay: float = 0.25

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if min(self.base_backoff, self.timeout, self.polite_delay) < 0:
            raise ValueError("durations must be non-negative")

    def backoff(self, attempt: int) -> float:
        return self.base_backoff * (2 ** attempt)


@dataclass(frozen=True)
class VerificationResult:
    alive: bool
    supports_oai_dc: bool
    detail: str = ""

    @property
    def usable(self) -> bool:
        return self.alive and self.supports_oai_dc


@dataclass
class HarvestSummary:
    repo_id: str = ""
    pages: int = 0
    records: int = 0
    deleted: int = 0
    duplicates: int = 0
    restarts: int = 0
    complete: bool = False
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def user_agent(contact: str | None = None) -> str:
    contact = contact if contact is not None else os.environ.get("DCQUAL_CONTACT", "")
    return f"dcqual/{__version__} (+{contact})" if contact else f"dcqual/{__version__}"


def _retry_after(value: str | None) -> float | None:
    if not value:
        return None
    value = value.strip()
    if value.isdigit():
        return float(value)
    try:
        when = parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    return max(0.0, (when - datetime.now(timezone.utc)).total_seconds())


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds").replace("+00:00", "Z")


class OaiClient:
    """Talks to one data provider.

    ``sleep`` is injectable so tests can observe backoff and politeness
    delays without waiting for them.
    """

    def __init__(
        self,
        endpoint: Endpoint,
        policy: FetchPolicy | None = None,
        *,
        contact: str | None = None,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.policy = policy or FetchPolicy()
        self.session = session or requests.Session()
        self.session.headers["User-Agent"] = user_agent(contact)
        self.sleep = sleep

    def fetch(self, verb: OaiVerb | str, params: dict[str, str] | None = None) -> bytes:
        url = build_request(self.endpoint, verb, params)
        policy = self.policy
        last: NetworkError | None = None
        for attempt in range(policy.max_retries + 1):
            delay = policy.backoff(attempt)
            try:
                resp = self.session.get(url, timeout=policy.timeout)
            except (requests.Timeout, requests.ConnectionError) as exc:
                last = NetworkError(f"{type(exc).__name__} for {url}: {exc}")
            except requests.RequestException as exc:
                raise NetworkError(f"request failed for {url}: {exc}") from exc
            else:
                if resp.status_code < 400:
                    return resp.content
                if resp.status_code < 500:
                    raise NetworkError(f"HTTP {resp.status_code} for {url}", resp.status_code)
                last = NetworkError(f"HTTP {resp.status_code} for {url}", resp.status_code)
                if resp.status_code == 503:
                    hinted = _retry_after(resp.headers.get("Retry-After"))
                    if hinted is not None:
                        delay = hinted
            if attempt < policy.max_retries:
                logger.info("%s: %s; retrying in %.2fs", self.endpoint.repo_id, last, delay)
                self.sleep(delay)
        assert last is not None
        raise last

    def request(self, verb: OaiVerb | str, params: dict[str, str] | None = None):
        return parse_response(self.fetch(verb, params))

    def identify(self) -> RepositoryIdentity:
        identity = self.request(OaiVerb.IDENTIFY)
        if not isinstance(identity, RepositoryIdentity):
            raise MissingElement("Identify response lacks <Identify>")
        if identity.protocol_version != "2.0":
            raise UnsupportedVersion(f"protocol version {identity.protocol_version!r}")
        return identity

    def list_metadata_formats(self) -> FormatList:
        formats = self.request(OaiVerb.LIST_METADATA_FORMATS)
        if not isinstance(formats, FormatList):
            raise MissingElement("response lacks <ListMetadataFormats>")
        return formats

    def list_sets(self) -> list[tuple[str, str]]:
        sets: list[tuple[str, str]] = []
        params: dict[str, str] = {}
        while True:
            try:
                page = self.request(OaiVerb.LIST_SETS, params)
            except OaiProtocolError as exc:
                if exc.code == "noSetHierarchy":
                    return sets
                raise
            if not isinstance(page, SetList):
                raise MissingElement("response lacks <ListSets>")
            sets.extend(page.sets)
            if page.token is None or page.token.is_final:
                return sets
            self.sleep(self.policy.polite_delay)
            params = {"resumptionToken": page.token.token}

    def verify(self) -> VerificationResult:
        try:
            identity = self.identify()
        except DcqualError as exc:
            return VerificationResult(False, False, f"{type(exc).__name__}: {exc}")
        try:
            formats = self.list_metadata_formats()
        except DcqualError as exc:
            return VerificationResult(True, False, f"{type(exc).__name__}: {exc}")
        supports = "oai_dc" in formats.prefixes
        detail = identity.repository_name
        if not supports:
            detail += f" (formats: {', '.join(formats.prefixes) or 'none'})"
        return VerificationResult(True, supports, detail)

    def harvest_list_records(
        self,
        metadata_prefix: str,
        sink: RecordSink,
        *,
        from_: str | None = None,
        until: str | None = None,
        set_spec: str | None = None,
    ) -> HarvestSummary:
        """Harvest a full ListRecords sequence into ``sink``.

        Remote failures never raise: they end the harvest and are listed in
        ``summary.errors`` with ``complete=False``. A ``badResumptionToken``
        restarts the list from scratch once; records already delivered are
        not delivered again.
        """
        initial = {"metadataPrefix": metadata_prefix}
        for key, value in (("from", from_), ("until", until), ("set", set_spec)):
            if value is not None:
                initial[key] = value

        summary = HarvestSummary(repo_id=self.endpoint.repo_id)
        delivered: set[str] = set()
        deleted: set[str] = set()
        params = dict(initial)
        restarts_left = 1
        first = True
        while True:
            if not first:
                self.sleep(self.policy.polite_delay)
            first = False
            try:
                page = self.request(OaiVerb.LIST_RECORDS, params)
            except OaiProtocolError as exc:
                if exc.code == "noRecordsMatch" and "resumptionToken" not in params:
                    summary.complete = True
                    break
                if exc.code == "badResumptionToken" and restarts_left:
                    restarts_left -= 1
                    summary.restarts += 1
                    logger.warning("%s: resumption token rejected, restarting list", self.endpoint.repo_id)
                    params = dict(initial)
                    continue
                summary.errors.append(f"OaiProtocolError: {exc}")
                break
            except DcqualError as exc:
                summary.errors.append(f"{type(exc).__name__}: {exc}")
                break
            if not isinstance(page, RecordsPage):
                summary.errors.append("MissingElement: response lacks <ListRecords>")
                break

            summary.pages += 1
            for item in page.records:
                ident = item.header.identifier
                if item.header.deleted:
                    if ident not in deleted:
                        deleted.add(ident)
                        summary.deleted += 1
                    continue
                if ident in delivered:
                    summary.duplicates += 1
                    continue
                delivered.add(ident)
                summary.records += 1
                sink(
                    HarvestedRecord(
                        repo_id=self.endpoint.repo_id,
                        header=item.header,
                        metadata=item.metadata or DublinCoreRecord(),
                        harvested_at=_now(),
                    )
                )
            token = page.token
            if token is None or token.is_final:
                summary.complete = True
                break
            params = {"resumptionToken": token.token}
        return summary


def identify(endpoint: Endpoint, policy: FetchPolicy | None = None, **kwargs) -> RepositoryIdentity:
    return OaiClient(endpoint, policy, **kwargs).identify()


def verify_endpoint(endpoint: Endpoint, policy: FetchPolicy | None = None, **kwargs) -> VerificationResult:
    return OaiClient(endpoint, policy, **kwargs).verify()


def harvest_list_records(
    endpoint: Endpoint,
    metadata_prefix: str,
    policy: FetchPolicy | None,
    sink: RecordSink,
    **kwargs,
) -> HarvestSummary:
    filters = {k: kwargs.pop(k) for k in ("from_", "until", "set_spec") if k in kwargs}
    return OaiClient(endpoint, policy, **kwargs).harvest_list_records(metadata_prefix, sink, **filters)


def harvest_many(
    endpoints: Iterable[Endpoint],
    policy: FetchPolicy | None,
    sink_for: Callable[[Endpoint], RecordSink],
    *,
    concurrency: int = 1,
    metadata_prefix: str = "oai_dc",
    **kwargs,
) -> dict[str, HarvestSummary]:
    """Harvest several endpoints, at most ``concurrency`` at a time.

    Each endpoint gets its own sink from ``sink_for`` and is harvested by a
    single task. Results keep the input order.
    """
    endpoints = list(endpoints)

    def run(ep: Endpoint) -> HarvestSummary:
        return harvest_list_records(ep, metadata_prefix, policy, sink_for(ep), **kwargs)

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        summaries = list(pool.map(run, endpoints))
    return {ep.repo_id: s for ep, s in zip(endpoints, summaries)}
