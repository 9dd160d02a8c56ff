"""Command line entry point: ``dcqual <command> [options]``.

Exit codes: 0 success, 1 degraded (some endpoint unusable or partial,
empty corpus), 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from dcqual import __version__
from dcqual.errors import BindError, DcqualError, RuleFileError, StoreError
from dcqual.metrics import analyze
from dcqual.mock_provider import MockProvider, ProviderFixture
from dcqual.normalize import MappingRuleSet, apply_normalization, load_rule_dir, shipped_rules_dir
from dcqual.oai.client import FetchPolicy, harvest_many, verify_endpoint
from dcqual.oai.protocol import Endpoint
from dcqual.records import DcElement
from dcqual.report import Format, Table, render_full_report, report_files, table_text
from dcqual.store import CorpusStore, load_corpus

logger = logging.getLogger("dcqual")

EXIT_OK, EXIT_DEGRADED, EXIT_USAGE = 0, 1, 2
NORMALIZED_FIELDS = (DcElement.LANGUAGE, DcElement.TYPE, DcElement.FORMAT)


class UsageError(Exception):
    """Bad input from the operator; reported and mapped to exit code 2."""


def read_config(path: str | Path) -> list[Endpoint]:
    """Parse ``<repo_id>TAB<base_url>`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    endpoints: list[Endpoint] = []
    seen: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise UsageError(f"{path}:{line_no}: expected <repo_id>TAB<base_url>")
        repo_id, url = (p.strip() for p in parts)
        try:
            endpoint = Endpoint(repo_id, url)
        except ValueError as exc:
            raise UsageError(f"{path}:{line_no}: {exc}") from exc
        if repo_id in seen:
            raise UsageError(f"{path}:{line_no}: duplicate repo_id {repo_id!r}")
        seen.add(repo_id)
        endpoints.append(endpoint)
    if not endpoints:
        raise UsageError(f"config {path} lists no endpoints")
    return endpoints


def _policy(args) -> FetchPolicy:
    try:
        return FetchPolicy(
            max_retries=args.max_retries,
            timeout=args.timeout,
            polite_delay=args.polite_delay / 1000.0,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _print_table(table: Table, fmt: str) -> None:
    sys.stdout.write(table_text(table, fmt))
    sys.stdout.flush()


def _verify_all(endpoints, policy):
    return [(ep, verify_endpoint(ep, policy)) for ep in endpoints]


def cmd_verify(args) -> int:
    endpoints = read_config(args.config)
    results = _verify_all(endpoints, _policy(args))
    _print_table(
        Table(
            ["repository", "alive", "supports_oai_dc", "usable", "detail"],
            [[ep.repo_id, r.alive, r.supports_oai_dc, r.usable, r.detail] for ep, r in results],
        ),
        args.format,
    )
    usable = sum(r.usable for _, r in results)
    print(f"{usable} of {len(results)} endpoints usable", file=sys.stderr)
    return EXIT_OK if usable else EXIT_DEGRADED


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def cmd_harvest(args) -> int:
    endpoints = read_config(args.config)
    policy = _policy(args)
    if args.concurrency < 1:
        raise UsageError("--concurrency must be >= 1")
    results = _verify_all(endpoints, policy)
    usable = [ep for ep, r in results if r.usable]
    for ep, r in results:
        if not r.usable:
            logger.warning("%s: skipped, not usable (%s)", ep.repo_id, r.detail)

    with CorpusStore(args.store) as store:
        writers = {ep.repo_id: store.writer(ep.repo_id) for ep in usable}
        started = _now()
        summaries = harvest_many(
            usable, policy, lambda ep: writers[ep.repo_id], concurrency=args.concurrency
        )
        finished = _now()
        for repo_id, summary in summaries.items():
            writers[repo_id].flush()
            store.record_harvest(repo_id, summary.to_dict(), started, finished)

    rows = []
    for ep, r in results:
        s = summaries.get(ep.repo_id)
        if s is None:
            rows.append([ep.repo_id, "skipped", 0, 0, 0, r.detail])
        else:
            status = "complete" if s.complete else "partial"
            rows.append([ep.repo_id, status, s.records, s.pages, s.restarts, "; ".join(s.errors)])
    _print_table(Table(["repository", "status", "records", "pages", "restarts", "errors"], rows), args.format)

    total = sum(s.records for s in summaries.values())
    partial = [rid for rid, s in summaries.items() if not s.complete]
    print(f"harvested {total} records from {len(summaries)} endpoints", file=sys.stderr)
    if not usable:
        print("no usable endpoints", file=sys.stderr)
        return EXIT_DEGRADED
    if partial:
        print(f"partial harvest: {', '.join(partial)}", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def _write(path: Path, data: bytes) -> None:
    path.write_bytes(data)


def cmd_analyze(args) -> int:
    corpus = load_corpus(args.store)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    diagnostics = {
        "records": len(corpus),
        "corrupt_lines": [{"file": c.path, "line": c.line_no, "error": c.message} for c in corpus.corrupt],
    }
    _write(out / "diagnostics.json", (json.dumps(diagnostics, indent=2, ensure_ascii=False) + "\n").encode("utf-8"))
    for c in corpus.corrupt:
        logger.warning("%s:%d: skipped corrupt line (%s)", c.path, c.line_no, c.message)
    if not len(corpus):
        print("empty corpus", file=sys.stderr)
        return EXIT_DEGRADED

    analysis = analyze(corpus)
    fmt = Format(args.format)
    _write(out / f"report.{fmt.value}", render_full_report(analysis=analysis, fmt=fmt))
    for stem, table in report_files(analysis).items():
        _write(out / f"{stem}.csv", table_text(table, Format.CSV).encode("utf-8"))
    print(f"analyzed {len(corpus)} records from {len(analysis.repo_sizes)} repositories into {out}", file=sys.stderr)
    return EXIT_OK


def cmd_normalize(args) -> int:
    rules_dir = Path(args.rules) if args.rules else shipped_rules_dir()
    loaded = load_rule_dir(rules_dir)
    rule_sets = {f: MappingRuleSet(f) for f in NORMALIZED_FIELDS}
    rule_sets.update(loaded)

    corpus = load_corpus(args.store)
    if not len(corpus):
        print("empty corpus", file=sys.stderr)
        return EXIT_DEGRADED
    view, reports = apply_normalization(corpus, rule_sets)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = [
        {
            "field": r.field.value,
            "total_values": r.total_values,
            "resolved": r.resolved,
            "resolved_pct": round(r.resolved_pct, 2),
            "canonical_distribution": r.canonical_distribution,
            "unresolved_values": [list(u) for u in r.unresolved_values],
        }
        for r in reports
    ]
    _write(out / "normalization.json", (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8"))
    lines = []
    for rec, fields in view.rows():
        entry = {
            "repo_id": rec.repo_id,
            "identifier": rec.header.identifier,
            "fields": {
                e.value: {"raw": list(nf.raw), "canonical": list(nf.canonical), "unresolved": list(nf.unresolved)}
                for e, nf in fields.items()
            },
        }
        lines.append(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
    _write(out / "normalized.ndjson", "".join(lines).encode("utf-8"))
    _print_table(
        Table(
            ["field", "values", "resolved", "resolved_pct", "canonical_terms"],
            [[r.field.value, r.total_values, r.resolved, r.resolved_pct, len(r.canonical_distribution)] for r in reports],
        ),
        args.format,
    )
    return EXIT_OK


def cmd_serve_fixture(args) -> int:
    try:
        fixture = ProviderFixture.load(args.fixture)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot load fixture {args.fixture}: {exc}") from exc
    if args.page_size < 1:
        raise UsageError("--page-size must be >= 1")
    try:
        provider = MockProvider(fixture, args.page_size, args.faults, host=args.host, port=args.port)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    provider.bind()
    print(f"serving {len(fixture.records)} records at {provider.base_url}", flush=True)
    try:
        provider.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        provider.stop()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcqual", description="Harvest OAI-PMH Dublin Core metadata and measure its quality.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")

    net = argparse.ArgumentParser(add_help=False)
    net.add_argument("--config", required=True, help="endpoint list: <repo_id>TAB<base_url> per line")
    net.add_argument("--max-retries", type=int, default=3)
    net.add_argument("--timeout", type=float, default=30.0, help="request timeout in seconds")
    net.add_argument("--polite-delay", type=float, default=250, help="pause between list pages in milliseconds")

    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=[f.value for f in Format], default="md")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[net, fmt], help="check which endpoints answer and offer oai_dc")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("harvest", parents=[net, fmt], help="harvest usable endpoints into a store")
    p.add_argument("--store", required=True)
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("analyze", parents=[fmt], help="write quality report and tables")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("normalize", parents=[fmt], help="map values onto controlled vocabularies")
    p.add_argument("--store", required=True)
    p.add_argument("--rules", help="directory of <field>.tsv rule files (default: shipped rules)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("serve-fixture", help="serve a JSON fixture as an OAI-PMH endpoint")
    p.add_argument("--fixture", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--page-size", type=int, default=100)
    p.add_argument("--faults", help="fault script, e.g. 503@2,expire@3")
    p.set_defaults(func=cmd_serve_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, RuleFileError, StoreError, BindError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DcqualError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
