"""Quality metrics over a harvested corpus.

All functions are pure and deterministic. Percentages are kept unrounded;
use :func:`pct_rounded` (half-up) when presenting them.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Iterable, Sequence

from dcqual.errors import EmptyCorpus
from dcqual.records import DcElement, HarvestedRecord, filled_values, is_filled, joined_value
from dcqual.store import Corpus
from dcqual.text import fold

# Column order of the per-repository completeness grid, then the header field.
GRID_LABELS: tuple[str, ...] = (
    "title", "creator", "subject", "description", "publisher", "contributor", "date",
    "type", "format", "source", "language", "relation", "coverage", "rights", "identifier2",
)
FIELD_LABELS: tuple[str, ...] = GRID_LABELS + ("setSpec",)

DESCRIPTION_BUCKETS: tuple[tuple[int, int | None], ...] = ((1, 999), (1000, 10000), (10001, None))
TITLE_BUCKETS: tuple[tuple[int, int | None], ...] = ((1, 100), (101, 200), (201, 300), (301, 400), (401, None))
AUTHOR_BUCKETS: tuple[str, ...] = tuple(str(i) for i in range(1, 11)) + ("+ de 10",)


class Mode(str, Enum):
    """How multi-valued elements become variants."""

    JOINED = "joined"
    INDIVIDUAL = "individual"


def pct(count: int, total: int) -> float:
    return 100.0 * count / total if total else 0.0


def pct_rounded(count: int, total: int, places: int = 2) -> Decimal:
    """Exact percentage rounded half-up; ``places=0`` gives an integer Decimal."""
    if not total:
        return Decimal(0).quantize(Decimal(1).scaleb(-places))
    exact = Decimal(count) * 100 / Decimal(total)
    return exact.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def _require(corpus: Corpus) -> None:
    if not len(corpus):
        raise EmptyCorpus("corpus contains no records")


def filled_labels(record: HarvestedRecord) -> set[str]:
    """Completeness labels this record fills."""
    labels = {
        ("identifier2" if name == "identifier" else name)
        for name, vals in record.metadata.values.items()
        if any(v.strip() for v in vals)
    }
    if any(s.strip() for s in record.header.set_specs):
        labels.add("setSpec")
    return labels


# -- repository sizes -------------------------------------------------------


@dataclass(frozen=True)
class RepoShare:
    repo_id: str
    record_count: int
    share_pct: float


def repo_size_summary(corpus: Corpus) -> list[RepoShare]:
    """Repositories by record count (descending, ties by id) with their share."""
    _require(corpus)
    total = len(corpus)
    sizes = sorted(((len(recs), repo) for repo, recs in corpus.by_repo.items()), key=lambda t: (-t[0], t[1]))
    return [RepoShare(repo, n, pct(n, total)) for n, repo in sizes]


# -- completeness -----------------------------------------------------------


@dataclass(frozen=True)
class CompletenessMatrix:
    """Filled-record counts per repository and corpus-wide.

    ``repo_sizes`` is ordered by descending size, which is also the row
    order of the rendered grid.
    """

    labels: tuple[str, ...]
    repo_sizes: dict[str, int]
    per_repo_counts: dict[str, dict[str, int]]
    absolute_counts: dict[str, int]
    total: int

    @property
    def per_repo(self) -> dict[str, dict[str, float]]:
        return {
            repo: {lab: pct(counts[lab], self.repo_sizes[repo]) for lab in self.labels}
            for repo, counts in self.per_repo_counts.items()
        }

    @property
    def absolute(self) -> dict[str, float]:
        return {lab: pct(self.absolute_counts[lab], self.total) for lab in self.labels}

    def per_repo_rounded(self) -> dict[str, dict[str, int]]:
        return {
            repo: {lab: int(pct_rounded(counts[lab], self.repo_sizes[repo], 0)) for lab in self.labels}
            for repo, counts in self.per_repo_counts.items()
        }

    def absolute_rounded(self) -> dict[str, Decimal]:
        return {lab: pct_rounded(self.absolute_counts[lab], self.total, 2) for lab in self.labels}


def completeness_matrix(corpus: Corpus) -> CompletenessMatrix:
    _require(corpus)
    repo_sizes: dict[str, int] = {}
    per_repo: dict[str, dict[str, int]] = {}
    absolute = dict.fromkeys(FIELD_LABELS, 0)
    for repo, records in corpus.by_repo.items():
        counts = dict.fromkeys(FIELD_LABELS, 0)
        for rec in records:
            for lab in filled_labels(rec):
                counts[lab] += 1
        repo_sizes[repo] = len(records)
        per_repo[repo] = counts
        for lab, n in counts.items():
            absolute[lab] += n
    order = sorted(repo_sizes, key=lambda r: (-repo_sizes[r], r))
    return CompletenessMatrix(
        labels=FIELD_LABELS,
        repo_sizes={r: repo_sizes[r] for r in order},
        per_repo_counts={r: per_repo[r] for r in order},
        absolute_counts=absolute,
        total=len(corpus),
    )


def relative_completeness(corpus: Corpus) -> dict[str, dict[str, float]]:
    """Percentage of each repository's records filling each field."""
    return completeness_matrix(corpus).per_repo


def absolute_completeness(corpus: Corpus) -> dict[str, float]:
    """Percentage of all records filling each field."""
    return completeness_matrix(corpus).absolute


# -- variants ---------------------------------------------------------------


@dataclass(frozen=True)
class VariantRow:
    value: str
    count: int
    pct: float


@dataclass(frozen=True)
class VariantTable:
    field: DcElement
    mode: Mode
    total_records: int
    rows: tuple[VariantRow, ...]
    empty_row: VariantRow
    other_row: VariantRow
    other_distinct: int
    distinct_count: int


def _variant_counts(records: Iterable[HarvestedRecord], element: DcElement, mode: Mode) -> tuple[Counter, int]:
    counts: Counter[str] = Counter()
    empty = 0
    for rec in records:
        md = rec.metadata
        if not is_filled(md, element):
            empty += 1
            continue
        if mode is Mode.JOINED:
            counts[joined_value(md, element)] += 1
        else:
            counts.update(filled_values(md, element))
    return counts, empty


def _ranked(counts: Counter) -> list[tuple[str, int]]:
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def variant_table(corpus: Corpus, field: DcElement | str, mode: Mode | str = Mode.JOINED, top_k: int = 10) -> VariantTable:
    """Distinct raw values of ``field`` with counts, compared verbatim.

    Shares are relative to the number of records in the corpus. The empty
    row counts records where the field is not filled.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    element, mode = DcElement(field), Mode(mode)
    total = len(corpus)
    counts, empty = _variant_counts(corpus, element, mode)
    ranked = _ranked(counts)
    head, tail = ranked[:top_k], ranked[top_k:]
    other = sum(n for _, n in tail)
    return VariantTable(
        field=element,
        mode=mode,
        total_records=total,
        rows=tuple(VariantRow(v, n, pct(n, total)) for v, n in head),
        empty_row=VariantRow("", empty, pct(empty, total)),
        other_row=VariantRow("", other, pct(other, total)),
        other_distinct=len(tail),
        distinct_count=len(counts),
    )


def distinct_variant_count(corpus: Corpus, field: DcElement | str, mode: Mode | str = Mode.JOINED) -> int:
    counts, _ = _variant_counts(corpus, DcElement(field), Mode(mode))
    return len(counts)


@dataclass(frozen=True)
class PatternCount:
    pattern: tuple[str, ...]
    distinct: int
    records: int
    per_repo: dict[str, int] = field(default_factory=dict)


def pattern_variant_count(
    corpus: Corpus,
    field: DcElement | str,
    pattern: str | Sequence[str],
    mode: Mode | str = Mode.JOINED,
) -> PatternCount:
    """Count distinct variants mentioning any of ``pattern``.

    Matching is a substring test on case- and accent-folded text, so
    ``"articulo"`` matches ``"Artículo científico"``. ``records`` is the
    number of records (or values, in individual mode) carrying a matching
    variant; ``per_repo`` counts distinct matching variants per repository.
    """
    element, mode = DcElement(field), Mode(mode)
    needles = (pattern,) if isinstance(pattern, str) else tuple(pattern)
    folded = [fold(p) for p in needles if p]
    matches: dict[str, bool] = {}
    per_repo: dict[str, set[str]] = {}
    records = 0
    for rec in corpus:
        md = rec.metadata
        if not is_filled(md, element):
            continue
        values = [joined_value(md, element)] if mode is Mode.JOINED else filled_values(md, element)
        for value in values:
            hit = matches.get(value)
            if hit is None:
                fv = fold(value)
                hit = matches[value] = any(p in fv for p in folded)
            if hit:
                records += 1
                per_repo.setdefault(rec.repo_id, set()).add(value)
    return PatternCount(
        pattern=needles,
        distinct=sum(matches.values()),
        records=records,
        per_repo={repo: len(vals) for repo, vals in sorted(per_repo.items())},
    )


# -- lengths ----------------------------------------------------------------


@dataclass(frozen=True)
class LengthBucket:
    low: int
    high: int | None  # None: open-ended
    count: int
    pct: float  # of filled records

    @property
    def label(self) -> str:
        return f"{self.low}+" if self.high is None else f"{self.low}-{self.high}"


@dataclass(frozen=True)
class LengthHistogram:
    field: DcElement
    filled: int
    buckets: tuple[LengthBucket, ...]
    top_lengths: tuple[tuple[int, int], ...]


def _check_buckets(spec: Sequence[tuple[int, int | None]]) -> None:
    if not spec:
        raise ValueError("bucket_spec is empty")
    expected = 1
    for i, (low, high) in enumerate(spec):
        if low != expected:
            raise ValueError(f"bucket {i} starts at {low}, expected {expected}")
        if high is None:
            if i != len(spec) - 1:
                raise ValueError("only the last bucket may be open-ended")
            return
        if high < low:
            raise ValueError(f"bucket {i} is empty")
        expected = high + 1
    raise ValueError("last bucket must be open-ended so every length is covered")


def length_histogram(
    corpus: Corpus,
    field: DcElement | str,
    bucket_spec: Sequence[tuple[int, int | None]] = DESCRIPTION_BUCKETS,
    top_n: int = 10,
) -> LengthHistogram:
    """Distribution of joined-value lengths (in code points) over filled records."""
    _check_buckets(bucket_spec)
    element = DcElement(field)
    lengths: Counter[int] = Counter()
    for rec in corpus:
        if is_filled(rec.metadata, element):
            lengths[len(joined_value(rec.metadata, element))] += 1
    filled = sum(lengths.values())
    buckets = []
    for low, high in bucket_spec:
        n = sum(c for length, c in lengths.items() if length >= low and (high is None or length <= high))
        buckets.append(LengthBucket(low, high, n, pct(n, filled)))
    top = sorted(lengths.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    return LengthHistogram(element, filled, tuple(buckets), tuple(top))


# -- descriptors ------------------------------------------------------------


@dataclass(frozen=True)
class DescriptorStats:
    records_with_descriptors: int
    records_without: int
    total_uses: int
    distinct_count: int
    per_record_counts: dict[int, int]
    mean_per_record: float
    max_per_record: int
    in_title: dict[int, int]
    in_description: dict[int, int]
    top_descriptors: tuple[tuple[str, int], ...]


def descriptor_stats(corpus: Corpus, top_n: int = 10) -> DescriptorStats:
    """Subject usage, and how often descriptors reappear in titles/descriptions.

    A descriptor appears in a title when its folded, trimmed form is a
    substring of the folded joined title. No word boundaries are required.
    """
    uses: Counter[str] = Counter()
    per_k: Counter[int] = Counter()
    in_title: Counter[int] = Counter()
    in_desc: Counter[int] = Counter()
    folded_cache: dict[str, str] = {}
    without = 0
    for rec in corpus:
        md = rec.metadata
        descriptors = filled_values(md, DcElement.SUBJECT)
        k = len(descriptors)
        if not k:
            without += 1
            continue
        uses.update(descriptors)
        per_k[k] += 1
        folded = []
        for d in descriptors:
            f = folded_cache.get(d)
            if f is None:
                f = folded_cache[d] = fold(d.strip())
            folded.append(f)
        title = fold(joined_value(md, DcElement.TITLE))
        if any(f in title for f in folded):
            in_title[k] += 1
        description = fold(joined_value(md, DcElement.DESCRIPTION))
        if any(f in description for f in folded):
            in_desc[k] += 1
    keys = sorted(per_k)
    with_desc = sum(per_k.values())
    return DescriptorStats(
        records_with_descriptors=with_desc,
        records_without=without,
        total_uses=sum(uses.values()),
        distinct_count=len(uses),
        per_record_counts={k: per_k[k] for k in keys},
        mean_per_record=sum(uses.values()) / with_desc if with_desc else 0.0,
        max_per_record=keys[-1] if keys else 0,
        in_title={k: in_title[k] for k in keys},
        in_description={k: in_desc[k] for k in keys},
        top_descriptors=tuple(_ranked(uses)[:top_n]),
    )


# -- authors ----------------------------------------------------------------


@dataclass(frozen=True)
class AuthorStats:
    per_record_counts: dict[str, int]
    without_creator: int
    distinct_authors: int
    surname_first: int
    surname_first_pct: float
    max_per_record: int


def is_surname_first(name: str) -> bool:
    """``"Apellidos, Nombres"``: a comma with non-blank text on both sides."""
    before, comma, after = name.partition(",")
    return bool(comma) and bool(before.strip()) and bool(after.strip())


def author_stats(corpus: Corpus) -> AuthorStats:
    buckets = dict.fromkeys(AUTHOR_BUCKETS, 0)
    distinct: set[str] = set()
    without = 0
    most = 0
    for rec in corpus:
        creators = filled_values(rec.metadata, DcElement.CREATOR)
        n = len(creators)
        if not n:
            without += 1
            continue
        most = max(most, n)
        buckets[str(n) if n <= 10 else "+ de 10"] += 1
        distinct.update(creators)
    surname_first = sum(1 for a in distinct if is_surname_first(a))
    return AuthorStats(
        per_record_counts=buckets,
        without_creator=without,
        distinct_authors=len(distinct),
        surname_first=surname_first,
        surname_first_pct=pct(surname_first, len(distinct)),
        max_per_record=most,
    )


# -- everything -------------------------------------------------------------


@dataclass(frozen=True)
class CorpusAnalysis:
    total_records: int
    repo_sizes: list[RepoShare]
    completeness: CompletenessMatrix
    description_lengths: LengthHistogram
    title_lengths: LengthHistogram
    language_variants: VariantTable
    descriptors: DescriptorStats
    type_variants: VariantTable
    type_patterns: dict[str, PatternCount]
    format_variants: VariantTable
    format_patterns: dict[str, PatternCount]
    authors: AuthorStats


TYPE_PATTERNS = {"article": ("artículo", "article")}
FORMAT_PATTERNS = {"pdf": ("pdf",), "html": ("html",)}


def analyze(corpus: Corpus) -> CorpusAnalysis:
    """Run every metric, in the order the report presents them."""
    _require(corpus)
    return CorpusAnalysis(
        total_records=len(corpus),
        repo_sizes=repo_size_summary(corpus),
        completeness=completeness_matrix(corpus),
        description_lengths=length_histogram(corpus, DcElement.DESCRIPTION, DESCRIPTION_BUCKETS),
        title_lengths=length_histogram(corpus, DcElement.TITLE, TITLE_BUCKETS),
        language_variants=variant_table(corpus, DcElement.LANGUAGE, Mode.JOINED, top_k=21),
        descriptors=descriptor_stats(corpus),
        type_variants=variant_table(corpus, DcElement.TYPE, Mode.JOINED, top_k=20),
        type_patterns={k: pattern_variant_count(corpus, DcElement.TYPE, p) for k, p in TYPE_PATTERNS.items()},
        format_variants=variant_table(corpus, DcElement.FORMAT, Mode.JOINED, top_k=20),
        format_patterns={k: pattern_variant_count(corpus, DcElement.FORMAT, p) for k, p in FORMAT_PATTERNS.items()},
        authors=author_stats(corpus),
    )
