"""Record schema: OAI header plus the fifteen simple Dublin Core elements."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping
import xml.etree.ElementTree as ET

from dcqual.errors import MalformedXml

DC_NS = "http://purl.org/dc/elements/1.1/"
OAI_DC_NS = "http://www.openarchives.org/OAI/2.0/oai_dc/"


class DcElement(str, Enum):
    TITLE = "title"
    CREATOR = "creator"
    SUBJECT = "subject"
    DESCRIPTION = "description"
    PUBLISHER = "publisher"
    CONTRIBUTOR = "contributor"
    DATE = "date"
    TYPE = "type"
    FORMAT = "format"
    IDENTIFIER = "identifier"
    SOURCE = "source"
    LANGUAGE = "language"
    RELATION = "relation"
    COVERAGE = "coverage"
    RIGHTS = "rights"

    @property
    def label(self) -> str:
        """Column label used in metric tables.

        The metadata identifier is reported as ``identifier2`` so it cannot be
        confused with the header identifier.
        """
        return "identifier2" if self is DcElement.IDENTIFIER else self.value

    @classmethod
    def from_label(cls, label: str) -> "DcElement":
        if label == "identifier2":
            return cls.IDENTIFIER
        return cls(label)

    def __str__(self) -> str:
        return self.value


DC_ELEMENTS: tuple[DcElement, ...] = tuple(DcElement)
_DC_NAMES = frozenset(e.value for e in DC_ELEMENTS)


@dataclass(frozen=True, slots=True)
class RecordHeader:
    identifier: str
    datestamp: str
    set_specs: tuple[str, ...] = ()
    deleted: bool = False


@dataclass(frozen=True, slots=True)
class ParseDiagnostics:
    unknown_elements: Mapping[str, int] = field(default_factory=dict)
    blank_values: int = 0


@dataclass(frozen=True, slots=True)
class DublinCoreRecord:
    """Multi-valued DC elements in document order.

    Only elements that occurred at least once are kept in ``values``;
    :meth:`get` returns an empty tuple for the rest.
    """

    values: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    diagnostics: ParseDiagnostics = field(
        default_factory=ParseDiagnostics, compare=False, repr=False
    )

    def get(self, element: DcElement | str) -> tuple[str, ...]:
        return self.values.get(str(element), ())

    @classmethod
    def from_mapping(cls, data: Mapping[str, Iterable[str]]) -> "DublinCoreRecord":
        values = {}
        for name, vals in data.items():
            name = str(name)
            if name not in _DC_NAMES:
                raise ValueError(f"not a Dublin Core element: {name!r}")
            vals = tuple(vals)
            if vals:
                values[name] = vals
        return cls(values)

    def to_mapping(self) -> dict[str, list[str]]:
        return {e.value: list(self.values[e.value]) for e in DC_ELEMENTS if e.value in self.values}


@dataclass(frozen=True, slots=True)
class HarvestedRecord:
    repo_id: str
    header: RecordHeader
    metadata: DublinCoreRecord
    harvested_at: str = ""

    @property
    def key(self) -> tuple[str, str]:
        return (self.repo_id, self.header.identifier)


def dc_from_element(container: ET.Element) -> DublinCoreRecord:
    """Collect DC children of an ``<oai_dc:dc>`` (or similar) container."""
    collected: dict[str, list[str]] = {}
    unknown: Counter[str] = Counter()
    blanks = 0
    for child in container:
        if not isinstance(child.tag, str):
            continue  # comments, processing instructions
        ns, local = child.tag[1:].split("}", 1) if child.tag[:1] == "{" else ("", child.tag)
        if ns != DC_NS or local not in _DC_NAMES:
            unknown[child.tag] += 1
            continue
        text = "".join(child.itertext())
        if not text.strip():
            blanks += 1
        collected.setdefault(local, []).append(text)
    return DublinCoreRecord(
        {k: tuple(v) for k, v in collected.items()},
        ParseDiagnostics(dict(unknown), blanks),
    )


def parse_dc(xml_fragment: bytes | str) -> DublinCoreRecord:
    """Parse one ``<oai_dc:dc>`` fragment into a :class:`DublinCoreRecord`."""
    try:
        root = ET.fromstring(xml_fragment)
    except (ET.ParseError, ValueError, LookupError) as exc:
        raise MalformedXml(str(exc)) from exc
    return dc_from_element(root)


def joined_value(record: DublinCoreRecord, element: DcElement | str) -> str:
    """Filled values joined with ``;``, the form one record shows as a variant."""
    return ";".join(filled_values(record, element))


def is_filled(record: DublinCoreRecord, element: DcElement | str) -> bool:
    return any(v.strip() for v in record.get(element))


def filled_values(record: DublinCoreRecord, element: DcElement | str) -> list[str]:
    """Values with non-whitespace content, verbatim."""
    return [v for v in record.get(element) if v.strip()]
