"""Deterministic CSV and Markdown rendering of the metrics.

Numbers always use "." as the decimal separator. Percentages are rounded
half-up from exact counts: integers for the per-repository grid, two
decimals elsewhere.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum

from dcqual.errors import EmptyInput
from dcqual.metrics import (
    GRID_LABELS,
    CompletenessMatrix,
    CorpusAnalysis,
    DescriptorStats,
    LengthHistogram,
    VariantTable,
    analyze,
    pct_rounded,
)
from dcqual.store import Corpus


class Format(str, Enum):
    CSV = "csv"
    MARKDOWN = "md"


class Style(str, Enum):
    RELATIVE_GRID = "grid"
    ABSOLUTE_LIST = "list"


@dataclass
class Table:
    headers: list[str]
    rows: list[list] = field(default_factory=list)


def _cell(value) -> str:
    if isinstance(value, float):
        return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))
    return str(value)


def _md_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\r", " ").replace("\n", " ")


def table_text(table: Table, fmt: Format | str) -> str:
    fmt = Format(fmt)
    rows = [[_cell(c) for c in row] for row in table.rows]
    if fmt is Format.CSV:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(table.headers)
        writer.writerows(rows)
        return buf.getvalue()
    lines = ["| " + " | ".join(_md_escape(h) for h in table.headers) + " |"]
    lines.append("|" + "|".join(" --- " for _ in table.headers) + "|")
    lines.extend("| " + " | ".join(_md_escape(c) for c in row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


# -- individual tables ------------------------------------------------------


def completeness_table(matrix: CompletenessMatrix, style: Style | str) -> Table:
    style = Style(style)
    if not matrix.repo_sizes or not matrix.labels:
        raise EmptyInput("completeness matrix is empty")
    if style is Style.RELATIVE_GRID:
        labels = [lab for lab in GRID_LABELS if lab in matrix.labels]
        if not labels:
            raise EmptyInput("no grid columns in completeness matrix")
        rounded = matrix.per_repo_rounded()
        return Table(["repository"] + labels, [[repo] + [rounded[repo][lab] for lab in labels] for repo in matrix.repo_sizes])
    values = matrix.absolute_rounded()
    order = sorted(matrix.labels, key=lambda lab: (-matrix.absolute_counts[lab], lab))
    return Table(["attribute", "percentage"], [[lab, values[lab]] for lab in order])


def variant_rows(table: VariantTable) -> Table:
    total = table.total_records
    out = Table([f"{table.field.value} variant", "records", "percentage"])
    for row in table.rows:
        out.rows.append([row.value, row.count, pct_rounded(row.count, total)])
    out.rows.append(["otros", table.other_row.count, pct_rounded(table.other_row.count, total)])
    out.rows.append(["vacíos", table.empty_row.count, pct_rounded(table.empty_row.count, total)])
    return out


def repo_size_table(analysis: CorpusAnalysis) -> Table:
    total = analysis.total_records
    return Table(
        ["repository", "records", "share"],
        [[r.repo_id, r.record_count, pct_rounded(r.record_count, total)] for r in analysis.repo_sizes],
    )


def length_tables(hist: LengthHistogram) -> tuple[Table, Table]:
    buckets = Table(
        ["length", "records", "percentage_of_filled"],
        [[b.label, b.count, pct_rounded(b.count, hist.filled)] for b in hist.buckets],
    )
    top = Table(["length", "records"], [[length, n] for length, n in hist.top_lengths])
    return buckets, top


def descriptor_tables(stats: DescriptorStats) -> tuple[Table, Table, Table]:
    summary = Table(
        ["metric", "value"],
        [
            ["records_with_descriptors", stats.records_with_descriptors],
            ["records_without_descriptors", stats.records_without],
            ["distinct_descriptors", stats.distinct_count],
            ["descriptor_uses", stats.total_uses],
            ["mean_per_record", stats.mean_per_record],
            ["max_per_record", stats.max_per_record],
        ],
    )
    per_k = Table(
        ["descriptors", "records", "in_title", "in_description"],
        [[k, n, stats.in_title[k], stats.in_description[k]] for k, n in stats.per_record_counts.items()],
    )
    top = Table(["descriptor", "uses"], [list(t) for t in stats.top_descriptors])
    return summary, per_k, top


def author_tables(analysis: CorpusAnalysis) -> tuple[Table, Table]:
    a = analysis.authors
    buckets = Table(["authors", "records"], [[k, v] for k, v in a.per_record_counts.items()])
    summary = Table(
        ["metric", "value"],
        [
            ["records_without_creator", a.without_creator],
            ["distinct_authors", a.distinct_authors],
            ["surname_first_authors", a.surname_first],
            ["surname_first_pct", pct_rounded(a.surname_first, a.distinct_authors)],
            ["max_per_record", a.max_per_record],
        ],
    )
    return buckets, summary


def pattern_table(analysis: CorpusAnalysis, which: str) -> Table:
    patterns = analysis.type_patterns if which == "type" else analysis.format_patterns
    return Table(
        ["pattern", "distinct_variants", "records", "percentage"],
        [
            [name, p.distinct, p.records, pct_rounded(p.records, analysis.total_records)]
            for name, p in patterns.items()
        ],
    )


# -- public renderers -------------------------------------------------------


def render_completeness(matrix: CompletenessMatrix, style: Style | str = Style.ABSOLUTE_LIST, fmt: Format | str = Format.CSV) -> bytes:
    return table_text(completeness_table(matrix, style), fmt).encode("utf-8")


def render_variant_table(table: VariantTable, fmt: Format | str = Format.CSV) -> bytes:
    return table_text(variant_rows(table), fmt).encode("utf-8")


def _distinct(table: VariantTable) -> Table:
    return Table(
        ["metric", "value"],
        [["distinct_variants", table.distinct_count], ["other_distinct", table.other_distinct]],
    )


def report_sections(analysis: CorpusAnalysis) -> list[tuple[str, list[tuple[str, Table]]]]:
    """Report content as (section title, [(caption, table)]) in report order."""
    desc_b, desc_top = length_tables(analysis.description_lengths)
    title_b, title_top = length_tables(analysis.title_lengths)
    d_summary, d_per_k, d_top = descriptor_tables(analysis.descriptors)
    a_buckets, a_summary = author_tables(analysis)
    return [
        ("Repository sizes", [("", repo_size_table(analysis))]),
        ("Relative completeness", [("", completeness_table(analysis.completeness, Style.RELATIVE_GRID))]),
        ("Absolute completeness", [("", completeness_table(analysis.completeness, Style.ABSOLUTE_LIST))]),
        (
            "Length histograms",
            [
                (f"description ({analysis.description_lengths.filled} filled records, joined values)", desc_b),
                ("description: most frequent lengths", desc_top),
                (f"title ({analysis.title_lengths.filled} filled records, joined values)", title_b),
                ("title: most frequent lengths", title_top),
            ],
        ),
        ("Language variants", [("", variant_rows(analysis.language_variants)), ("", _distinct(analysis.language_variants))]),
        (
            "Descriptor statistics",
            [("", d_summary), ("descriptors per record", d_per_k), ("most used descriptors", d_top)],
        ),
        (
            "Type variants",
            [("", variant_rows(analysis.type_variants)), ("", _distinct(analysis.type_variants)), ("pattern matches", pattern_table(analysis, "type"))],
        ),
        (
            "Format variants",
            [("", variant_rows(analysis.format_variants)), ("", _distinct(analysis.format_variants)), ("pattern matches", pattern_table(analysis, "format"))],
        ),
        ("Author statistics", [("authors per record", a_buckets), ("", a_summary)]),
    ]


def render_full_report(
    corpus: Corpus | None = None,
    analysis: CorpusAnalysis | None = None,
    fmt: Format | str = Format.MARKDOWN,
) -> bytes:
    """All sections in one document.

    In CSV form each section starts with a one-cell ``# <title>`` row and
    tables are separated by blank lines.
    """
    fmt = Format(fmt)
    if analysis is None:
        if corpus is None or not len(corpus):
            raise EmptyInput("empty corpus")
        analysis = analyze(corpus)
    sections = report_sections(analysis)
    out: list[str] = []
    if fmt is Format.MARKDOWN:
        out.append("# Metadata quality report\n\n")
        out.append(f"Records: {analysis.total_records}. Repositories: {len(analysis.repo_sizes)}.\n")
        for title, tables in sections:
            out.append(f"\n## {title}\n")
            for caption, table in tables:
                out.append(f"\n{caption}\n\n" if caption else "\n")
                out.append(table_text(table, fmt))
    else:
        for title, tables in sections:
            for caption, table in tables:
                head = f"# {title}" + (f": {caption}" if caption else "")
                out.append(table_text(Table([head]), fmt))
                out.append(table_text(table, fmt))
                out.append("\r\n")
    return "".join(out).encode("utf-8")


def report_files(analysis: CorpusAnalysis) -> dict[str, Table]:
    """Standalone tables written next to the full report, keyed by file stem."""
    desc_b, _ = length_tables(analysis.description_lengths)
    title_b, _ = length_tables(analysis.title_lengths)
    _, d_per_k, d_top = descriptor_tables(analysis.descriptors)
    a_buckets, _ = author_tables(analysis)
    return {
        "repo_sizes": repo_size_table(analysis),
        "completeness_relative": completeness_table(analysis.completeness, Style.RELATIVE_GRID),
        "completeness_absolute": completeness_table(analysis.completeness, Style.ABSOLUTE_LIST),
        "lengths_description": desc_b,
        "lengths_title": title_b,
        "variants_language": variant_rows(analysis.language_variants),
        "variants_type": variant_rows(analysis.type_variants),
        "variants_format": variant_rows(analysis.format_variants),
        "descriptors": d_per_k,
        "descriptors_top": d_top,
        "authors": a_buckets,
    }
