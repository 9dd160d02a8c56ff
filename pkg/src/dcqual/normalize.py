"""Map raw field values onto controlled vocabularies.

Rules live in tab-separated files (``<matcher>\\t<pattern>\\t<canonical>``),
one file per field named ``<field>.tsv``. The shipped files are in the
``rules`` directory of this package. Rule order is significant: the first
matching rule wins.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from dcqual.errors import RuleFileError
from dcqual.records import DcElement, HarvestedRecord, filled_values, is_filled, joined_value
from dcqual.store import Corpus
from dcqual.text import fold, tokens

LANGUAGE_CODES = ("es", "en", "pt", "fr", "it")
TYPE_VOCABULARY = (
    "article", "conferenceObject", "review", "bachelorThesis", "doctoralThesis", "masterThesis",
    "book", "bookPart", "report", "legislation", "image", "text", "other",
)

# IANA top-level media types; anything else before a "/" is not a MIME type.
_MIME = re.compile(
    r"(?<![\w.+-])(application|audio|example|font|haptics|image|message|model|multipart|text|video)"
    r"/([A-Za-z0-9][A-Za-z0-9.+-]*)",
    re.IGNORECASE,
)


class Matcher(str, Enum):
    EXACT = "exact"
    CASE_INSENSITIVE = "case-insensitive"
    TOKEN_CONTAINS = "token-contains"


@dataclass(frozen=True)
class Rule:
    matcher: Matcher
    pattern: str
    canonical: str
    _folded: str = field(default="", init=False, repr=False, compare=False)
    _tokens: tuple[str, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_folded", fold(self.pattern.strip()))
        object.__setattr__(self, "_tokens", tuple(tokens(self.pattern)))

    def matches(self, value: str, value_tokens: tuple[str, ...] | None = None) -> bool:
        if self.matcher is Matcher.EXACT:
            return value == self.pattern
        if self.matcher is Matcher.CASE_INSENSITIVE:
            return fold(value.strip()) == self._folded
        toks = value_tokens if value_tokens is not None else tuple(tokens(value))
        n = len(self._tokens)
        if not n:
            return False
        return any(toks[i:i + n] == self._tokens for i in range(len(toks) - n + 1))


@dataclass(frozen=True)
class MappingRuleSet:
    field: DcElement
    rules: tuple[Rule, ...] = ()

    def resolve(self, value: str) -> str | None:
        """Canonical term for ``value``, or ``None`` when no rule matches."""
        value_tokens = None
        for rule in self.rules:
            if rule.matcher is Matcher.TOKEN_CONTAINS and value_tokens is None:
                value_tokens = tuple(tokens(value))
            if rule.matches(value, value_tokens):
                return rule.canonical
        return None


def parse_rules(text: str, field: DcElement | str, source: str = "<string>") -> MappingRuleSet:
    rules = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise RuleFileError(source, line_no, f"expected 3 tab-separated fields, got {len(parts)}")
        matcher, pattern, canonical = (p.strip() for p in parts)
        try:
            matcher = Matcher(matcher)
        except ValueError:
            raise RuleFileError(source, line_no, f"unknown matcher {matcher!r}") from None
        if not pattern or not canonical:
            raise RuleFileError(source, line_no, "empty pattern or canonical term")
        rules.append(Rule(matcher, pattern, canonical))
    return MappingRuleSet(DcElement(field), tuple(rules))


def load_rules(path: str | Path, field: DcElement | str | None = None) -> MappingRuleSet:
    path = Path(path)
    if field is None:
        field = path.stem
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise RuleFileError(str(path), 0, f"cannot read rule file: {exc}") from exc
    return parse_rules(text, field, str(path))


def load_rule_dir(directory: str | Path) -> dict[DcElement, MappingRuleSet]:
    """Every ``<field>.tsv`` in ``directory``; other files are ignored."""
    directory = Path(directory)
    if not directory.is_dir():
        raise RuleFileError(str(directory), 0, "rules directory does not exist")
    names = {e.value for e in DcElement}
    return {
        DcElement(p.stem): load_rules(p)
        for p in sorted(directory.glob("*.tsv"))
        if p.stem in names
    }


@lru_cache(maxsize=None)
def _shipped(name: str) -> MappingRuleSet:
    text = (resources.files("dcqual") / "rules" / f"{name}.tsv").read_text(encoding="utf-8")
    return parse_rules(text, name, f"dcqual/rules/{name}.tsv")


def shipped_rules() -> dict[DcElement, MappingRuleSet]:
    return {DcElement(name): _shipped(name) for name in ("language", "type", "format")}


def shipped_rules_dir() -> Path:
    return Path(str(resources.files("dcqual") / "rules"))


def _default(field: DcElement) -> MappingRuleSet:
    return _shipped(field.value)


# -- single-value operations ------------------------------------------------


def split_multivalue(value: str) -> list[str]:
    return [part.strip() for part in value.split(";") if part.strip()]


def normalize_language(value: str, rules: MappingRuleSet | None = None) -> str | None:
    return (rules or _default(DcElement.LANGUAGE)).resolve(value)


def normalize_type(value: str, rules: MappingRuleSet | None = None) -> str | None:
    """Controlled type for a raw (possibly compound) type string.

    The shipped rules are ordered by precedence, so in a compound value the
    most specific kind wins: thesis kinds, then article, conference object,
    review, book part, book, report, legislation, image, text.
    """
    return (rules or _default(DcElement.TYPE)).resolve(value)


@dataclass(frozen=True)
class FormatResult:
    mime_types: tuple[str, ...]
    residue: str


def normalize_format(value: str, rules: MappingRuleSet | None = None) -> FormatResult:
    """Pull MIME types out of a free-text format value.

    Explicit ``type/subtype`` strings are extracted first. Each remaining
    ``;``-separated part may then resolve through a synonym rule (``pdf`` ->
    ``application/pdf``). A synonym for ``text/plain`` only applies when it is
    the whole value: ``"text"`` is ``text/plain`` but the ``text`` in
    ``"text; pdf"`` stays in the residue.
    """
    rules = rules or _default(DcElement.FORMAT)
    found: list[str] = []
    for m in _MIME.finditer(value):
        mime = f"{m.group(1)}/{m.group(2)}".lower()
        if mime not in found:
            found.append(mime)
    leftover = _MIME.sub(";", value)
    parts = split_multivalue(leftover)
    whole = len(parts) == 1 and not found
    residue = []
    for part in parts:
        mime = rules.resolve(part)
        if mime and (whole or mime != "text/plain"):
            if mime not in found:
                found.append(mime)
        else:
            residue.append(part)
    return FormatResult(tuple(found), ";".join(residue))


# -- corpus-wide ------------------------------------------------------------


@dataclass(frozen=True)
class NormalizationReport:
    """Resolution coverage for one field.

    Units differ by field: language counts ``;``-split tokens, type counts
    one joined value per filled record, other fields count individual
    values (split on ``;`` unless the field is format).
    """

    field: DcElement
    total_values: int
    resolved: int
    unresolved_values: tuple[tuple[str, int], ...]
    canonical_distribution: dict[str, int]

    @property
    def resolved_pct(self) -> float:
        return 100.0 * self.resolved / self.total_values if self.total_values else 0.0


@dataclass(frozen=True)
class NormalizedField:
    raw: tuple[str, ...]
    canonical: tuple[str, ...]
    unresolved: tuple[str, ...]


class NormalizedCorpus:
    """Canonical values alongside the raw ones; the corpus is not modified."""

    def __init__(self, corpus: Corpus, fields: dict[tuple[str, str], dict[DcElement, NormalizedField]]):
        self.corpus = corpus
        self._fields = fields

    def get(self, record: HarvestedRecord, element: DcElement) -> NormalizedField | None:
        return self._fields.get(record.key, {}).get(element)

    def rows(self) -> Iterable[tuple[HarvestedRecord, dict[DcElement, NormalizedField]]]:
        for rec in self.corpus:
            yield rec, self._fields.get(rec.key, {})


def _units(record: HarvestedRecord, element: DcElement) -> list[str]:
    md = record.metadata
    if element is DcElement.TYPE:
        return [joined_value(md, element)] if is_filled(md, element) else []
    if element is DcElement.FORMAT:
        return filled_values(md, element)
    return [part for v in filled_values(md, element) for part in split_multivalue(v)]


def _resolve_unit(element: DcElement, rules: MappingRuleSet, unit: str) -> list[str]:
    if element is DcElement.FORMAT:
        return list(normalize_format(unit, rules).mime_types)
    canonical = rules.resolve(unit)
    return [canonical] if canonical is not None else []


def apply_normalization(
    corpus: Corpus, rule_sets: Mapping[DcElement, MappingRuleSet] | Iterable[MappingRuleSet]
) -> tuple[NormalizedCorpus, list[NormalizationReport]]:
    if not isinstance(rule_sets, Mapping):
        rule_sets = {rs.field: rs for rs in rule_sets}
    rule_sets = {DcElement(k): v for k, v in rule_sets.items()}
    fields: dict[tuple[str, str], dict[DcElement, NormalizedField]] = {}
    if not len(corpus):
        return NormalizedCorpus(corpus, fields), []

    reports = []
    for element in sorted(rule_sets, key=lambda e: list(DcElement).index(e)):
        rules = rule_sets[element]
        cache: dict[str, list[str]] = {}
        total = resolved = 0
        unresolved: Counter[str] = Counter()
        distribution: Counter[str] = Counter()
        for rec in corpus:
            units = _units(rec, element)
            if not units:
                continue
            canon_out: list[str] = []
            unresolved_out: list[str] = []
            for unit in units:
                result = cache.get(unit)
                if result is None:
                    result = cache[unit] = _resolve_unit(element, rules, unit)
                total += 1
                if result:
                    resolved += 1
                    distribution.update(result)
                    canon_out.extend(result)
                else:
                    unresolved[unit] += 1
                    unresolved_out.append(unit)
            fields.setdefault(rec.key, {})[element] = NormalizedField(
                raw=rec.metadata.get(element), canonical=tuple(canon_out), unresolved=tuple(unresolved_out)
            )
        reports.append(
            NormalizationReport(
                field=element,
                total_values=total,
                resolved=resolved,
                unresolved_values=tuple(sorted(unresolved.items(), key=lambda kv: (-kv[1], kv[0]))),
                canonical_distribution=dict(sorted(distribution.items(), key=lambda kv: (-kv[1], kv[0]))),
            )
        )
    return NormalizedCorpus(corpus, fields), reports
