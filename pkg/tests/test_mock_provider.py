from __future__ import annotations

import json
import threading

import pytest
import requests

from dcqual.errors import BindError, OaiProtocolError
from dcqual.mock_provider import FaultScript, FixtureRecord, MockProvider, ProviderFixture
from dcqual.oai.protocol import FormatList, RecordsPage, SetList, parse_response
from dcqual.records import DublinCoreRecord


def fx(n: int, **kw) -> ProviderFixture:
    return ProviderFixture(
        records=[FixtureRecord(f"oai:x:{i}", "2017-01-%02d" % (1 + i % 28), ("a",) if i % 2 else ("b",), False,
                               DublinCoreRecord.from_mapping({"title": [f"T{i}"]})) for i in range(n)],
        **kw,
    )


def ask(provider: MockProvider, query: str):
    status, headers, body = provider.handle(query)
    assert status == 200
    return parse_response(body)


def error_code(provider: MockProvider, query: str) -> str:
    with pytest.raises(OaiProtocolError) as info:
        ask(provider, query)
    return info.value.code


def test_1234_records_make_13_pages_last_token_empty():
    p = MockProvider(fx(1234), page_size=100)
    query = "verb=ListRecords&metadataPrefix=oai_dc"
    pages = []
    while True:
        page = ask(p, query)
        pages.append(page)
        if page.token.is_final:
            break
        query = f"verb=ListRecords&resumptionToken={page.token.token}"
    assert len(pages) == 13
    assert pages[-1].token.token == ""
    assert pages[-1].token.cursor == 1200 and pages[-1].token.complete_list_size == 1234
    assert sum(len(pg.records) for pg in pages) == 1234
    assert pages[1].token.token == "page:3"


def test_single_page_has_no_token():
    assert ask(MockProvider(fx(5)), "verb=ListRecords&metadataPrefix=oai_dc").token is None


@pytest.mark.parametrize("query", ["verb=Bogus", "", "foo=bar"])
def test_bad_verb(query):
    assert error_code(MockProvider(fx(1)), query) == "badVerb"


@pytest.mark.parametrize(
    "query",
    [
        "verb=Identify&metadataPrefix=oai_dc",
        "verb=ListRecords",
        "verb=ListRecords&metadataPrefix=oai_dc&metadataPrefix=oai_dc",
        "verb=ListRecords&resumptionToken=page:2&metadataPrefix=oai_dc",
        "verb=GetRecord&identifier=oai:x:1",
    ],
)
def test_bad_argument(query):
    assert error_code(MockProvider(fx(1)), query) == "badArgument"


def test_protocol_errors():
    p = MockProvider(fx(3), page_size=1)
    assert error_code(MockProvider(fx(0)), "verb=ListRecords&metadataPrefix=oai_dc") == "noRecordsMatch"
    assert error_code(p, "verb=ListRecords&resumptionToken=nonsense") == "badResumptionToken"
    assert error_code(p, "verb=ListRecords&resumptionToken=page:9") == "badResumptionToken"
    assert error_code(p, "verb=ListRecords&metadataPrefix=marcxml") == "cannotDisseminateFormat"
    assert error_code(p, "verb=GetRecord&identifier=nope&metadataPrefix=oai_dc") == "idDoesNotExist"
    assert error_code(p, "verb=ListSets") == "noSetHierarchy"


def test_get_record_and_formats_and_sets():
    p = MockProvider(fx(3, sets=(("a", "Set A"), ("b", "Set B"))))
    page = ask(p, "verb=GetRecord&identifier=oai:x:2&metadataPrefix=oai_dc")
    assert isinstance(page, RecordsPage)
    assert page.records[0].metadata.get("title") == ("T2",)
    formats = ask(p, "verb=ListMetadataFormats")
    assert isinstance(formats, FormatList) and formats.prefixes == ("oai_dc",)
    sets = ask(p, "verb=ListSets")
    assert isinstance(sets, SetList) and [s for s, _ in sets.sets] == ["a", "b"]


def test_list_identifiers_pages():
    p = MockProvider(fx(5), page_size=2)
    page = ask(p, "verb=ListIdentifiers&metadataPrefix=oai_dc")
    assert [r.header.identifier for r in page.records] == ["oai:x:0", "oai:x:1"]
    assert all(r.metadata is None for r in page.records)
    assert page.token.token == "page:2"


def test_set_and_date_filters_survive_paging():
    p = MockProvider(fx(10), page_size=2)
    page = ask(p, "verb=ListRecords&metadataPrefix=oai_dc&set=a")
    ids = [r.header.identifier for r in page.records]
    while not page.token.is_final:
        page = ask(p, f"verb=ListRecords&resumptionToken={requests.utils.quote(page.token.token, safe='')}")
        ids += [r.header.identifier for r in page.records]
    assert ids == ["oai:x:1", "oai:x:3", "oai:x:5", "oai:x:7", "oai:x:9"]
    page = ask(p, "verb=ListRecords&metadataPrefix=oai_dc&from=2017-01-05&until=2017-01-06")
    assert [r.header.identifier for r in page.records] == ["oai:x:4", "oai:x:5"]


def test_fault_503_on_second_page_once():
    p = MockProvider(fx(3), page_size=1, faults="503@2")
    assert p.handle("verb=ListRecords&metadataPrefix=oai_dc")[0] == 200
    status, headers, _ = p.handle("verb=ListRecords&resumptionToken=page:2")
    assert status == 503 and headers["Retry-After"] == "1"
    assert p.handle("verb=ListRecords&resumptionToken=page:2")[0] == 200


def test_fault_kinds():
    p = MockProvider(fx(3), page_size=1, faults="malformed@1,html@2,500@Identify=7,expire@3")
    _, _, body = p.handle("verb=ListRecords&metadataPrefix=oai_dc")
    assert body.endswith(b"<record>")
    _, headers, body = p.handle("verb=ListRecords&resumptionToken=page:2")
    assert headers["Content-Type"] == "text/html"
    status, headers, _ = p.handle("verb=Identify")
    assert status == 500 and "Retry-After" not in headers
    assert error_code(p, "verb=ListRecords&resumptionToken=page:3") == "badResumptionToken"
    assert error_code(p, "verb=ListRecords&resumptionToken=page:4") == "badResumptionToken"


@pytest.mark.parametrize("script", ["boom@2", "503", "503@Nope", "503@2*0", "503@2=x"])
def test_bad_fault_scripts(script):
    with pytest.raises(ValueError):
        FaultScript.parse(script)


def test_faults_consumed_once_under_concurrency():
    p = MockProvider(fx(3), page_size=1, faults="503@Identify*3")
    p.start()
    statuses = []
    lock = threading.Lock()

    def hit():
        r = requests.get(p.base_url + "?verb=Identify", timeout=5)
        with lock:
            statuses.append(r.status_code)

    try:
        threads = [threading.Thread(target=hit) for _ in range(12)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        p.stop()
    assert sorted(statuses) == [200] * 9 + [503] * 3
    assert len(p.request_log) == 12


def test_bind_error_on_occupied_port():
    with MockProvider(fx(1)) as first:
        with pytest.raises(BindError):
            MockProvider(fx(1), port=first.port).start()


def test_page_size_must_be_positive():
    with pytest.raises(ValueError):
        MockProvider(fx(1), page_size=0)


def test_fixture_json_round_trip(tmp_path):
    original = fx(4, sets=(("a", "A"),), repository_name="R")
    path = tmp_path / "f.json"
    path.write_text(json.dumps(original.to_json()), encoding="utf-8")
    assert ProviderFixture.load(path) == original
