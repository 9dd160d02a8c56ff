"""Corpus builders shared by the tests: random corpora and paper-shaped fixtures."""

from __future__ import annotations

import random
import string

from dcqual.records import DublinCoreRecord, HarvestedRecord, RecordHeader
from dcqual.store import Corpus


def rec(repo: str, ident: str, metadata=None, *, datestamp="2017-03-13", sets=("s",), harvested_at="") -> HarvestedRecord:
    md = metadata if isinstance(metadata, DublinCoreRecord) else DublinCoreRecord.from_mapping(metadata or {})
    return HarvestedRecord(repo, RecordHeader(ident, datestamp, tuple(sets)), md, harvested_at)


# -- random corpora ---------------------------------------------------------

_POOL = {
    "language": ["spa", "es", "Español", "ES ", "eng", "en", "spa;spa", "por", "  ", "", "Inglés", "fr"],
    "type": ["article", "Artículo científico", "ARTICULO", "info:eu-repo/semantics/article", "text", "Imagen", "tesis", " "],
    "format": ["application/pdf", "pdf", "text/html", "text/html;application/pdf", "PDF", "html", "", "4 p."],
    "creator": ["Pérez, Juan", "Juan Pérez", "Gómez, Ana", ", x", "x ,", "Smith, J.", "Lopez,Maria", " "],
    "subject": ["Educación", "EDUCACION SUPERIOR", "historia", "Ciencias Informáticas", "fisica", "ñandú", ""],
}
_ALPHABET = string.ascii_letters + "áéíóúñÁÉÍÓÚÑüÜ ,;.-" + "çÇãõ"


def _text(rng: random.Random, max_len: int) -> str:
    return "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(0, max_len)))


def _values(rng: random.Random, name: str) -> list[str]:
    n = rng.choice([0, 0, 1, 1, 1, 2, 3] + ([12] if name in ("creator", "subject") else []))
    pool = _POOL.get(name)
    out = []
    for _ in range(n):
        if pool and rng.random() < 0.7:
            out.append(rng.choice(pool))
        elif name == "description" and rng.random() < 0.05:
            out.append("d" * rng.choice([999, 1000, 10000, 10001, 12000]))
        elif name == "title" and rng.random() < 0.1:
            out.append("t" * rng.choice([100, 101, 200, 201, 300, 301, 400, 401, 450]))
        else:
            out.append(_text(rng, 30))
    return out


FIELDS = ("title", "creator", "subject", "description", "publisher", "contributor", "date", "type",
          "format", "identifier", "source", "language", "relation", "coverage", "rights")


def random_records(rng: random.Random, n: int, repos: int = 4) -> list[HarvestedRecord]:
    records = []
    for i in range(n):
        md = {}
        for name in FIELDS:
            if rng.random() < 0.6:
                md[name] = _values(rng, name)
        sets = rng.choice([(), ("a",), (" ",), ("a", "b")])
        records.append(rec(f"repo{rng.randrange(repos)}", f"oai:r:{i}", md, sets=sets))
    return records


def random_corpus(seed: int, max_records: int = 1000) -> Corpus:
    rng = random.Random(seed)
    return Corpus(random_records(rng, rng.randint(1, max_records), repos=rng.randint(1, 6)))


# -- Tabla 1: absolute completeness ----------------------------------------

TABLA1_COUNTS = {
    "setSpec": 10000, "identifier2": 9995, "type": 9632, "title": 7169, "date": 7121, "subject": 6900,
    "creator": 6591, "language": 6475, "description": 5340, "rights": 5293, "relation": 4345,
    "format": 4297, "publisher": 3221, "source": 2220, "contributor": 882, "coverage": 861,
}
TABLA1_PCT = {
    "setSpec": "100.00", "identifier2": "99.95", "type": "96.32", "title": "71.69", "date": "71.21",
    "subject": "69.00", "creator": "65.91", "language": "64.75", "description": "53.40", "rights": "52.93",
    "relation": "43.45", "format": "42.97", "publisher": "32.21", "source": "22.20", "contributor": "8.82",
    "coverage": "8.61",
}


def tabla1_corpus() -> Corpus:
    """10000 records; record i fills a field when i is below that field's count.

    Records are spread over three repositories and the ones that fill fewer
    fields carry whitespace-only values for some of the rest, which must not
    count as filled.
    """
    records = []
    for i in range(10000):
        md = {}
        for label, count in TABLA1_COUNTS.items():
            if label == "setSpec":
                continue
            name = "identifier" if label == "identifier2" else label
            if i < count:
                md[name] = [f"{name} {i}"]
            elif i % 3 == 0:
                md[name] = ["   "]
        sets = ("col_1",) if i < TABLA1_COUNTS["setSpec"] else ()
        records.append(rec(f"repo{i % 3}", f"oai:t1:{i:05d}", md, sets=sets))
    return Corpus(records)


# -- Tabla 2: language variants ---------------------------------------------

TABLA2_TOTAL = 275162
TABLA2_ROWS = [
    ("spa", 78314, "28.46"), ("es", 71674, "26.05"), ("eng", 8450, "3.07"), ("Español", 6837, "2.48"),
    ("en", 4055, "1.47"), ("spa;spa", 2808, "1.02"), ("por", 1842, "0.67"), ("pt", 1380, "0.50"),
    ("es;spa", 1337, "0.49"), ("Inglés", 555, "0.20"), ("fr", 86, "0.03"), ("fre", 80, "0.03"),
    ("fra", 73, "0.03"), ("Por;Spa", 72, "0.03"), ("Spa;Por", 72, "0.03"), ("eng;eng", 68, "0.02"),
    ("Portugués", 60, "0.02"), ("spa;eng", 57, "0.02"), ("ita", 48, "0.02"), ("spa;spa;spa;spa", 29, "0.01"),
    ("eng;spa", 27, "0.01"),
]
TABLA2_OTHER = (252, "0.09")
TABLA2_EMPTY = (96986, "35.25")
TABLA2_DISTINCT = 91

_OTHER_TOKENS = ["spa", "es", "eng", "en", "por", "pt", "fre", "fr", "ita", "it", "Español", "Inglés",
                 "Portugués", "Francés", "Italiano", "English", "es_AR", "pt-BR", "en-US", "fra"]


def tabla2_other_variants() -> list[tuple[str, int]]:
    """70 further variants built from recognisable codes, 252 records in all."""
    named = {v for v, _, _ in TABLA2_ROWS}
    variants = []
    for a in _OTHER_TOKENS:
        for b in _OTHER_TOKENS:
            v = f"{a};{b}"
            if a != b and v not in named and len(variants) < 70:
                variants.append(v)
    return [(v, 4 if i < 42 else 3) for i, v in enumerate(variants)]


def tabla2_corpus() -> Corpus:
    """Language values at their published counts over 275162 records.

    Empty rows alternate between no element, an empty element and a
    whitespace-only element. Records share metadata objects to keep memory
    down.
    """
    records = []
    n = 0

    def add(md: DublinCoreRecord, count: int):
        nonlocal n
        for _ in range(count):
            records.append(HarvestedRecord(f"repo{n % 26:02d}", RecordHeader(f"oai:t2:{n:06d}", "2017-01-01", ("s",)), md))
            n += 1

    for value, count, _ in TABLA2_ROWS:
        add(DublinCoreRecord.from_mapping({"language": [value], "title": ["x"]}), count)
    for value, count in tabla2_other_variants():
        add(DublinCoreRecord.from_mapping({"language": [value]}), count)
    empties = [DublinCoreRecord.from_mapping({"title": ["x"]}),
               DublinCoreRecord.from_mapping({"language": [""]}),
               DublinCoreRecord.from_mapping({"language": ["  "]})]
    total_empty = TABLA2_EMPTY[0]
    for i, md in enumerate(empties):
        add(md, total_empty // 3 + (1 if i < total_empty % 3 else 0))
    assert n == TABLA2_TOTAL
    return Corpus(records)


# -- Tabla 3: type variants -------------------------------------------------

TABLA3_ROWS = [
    ("info:eu-repo/semantics/article;info:ar-repo/semantics/artículo;info:eu-repo/semantics/publishedVersion", "article"),
    ("info:eu-repo/semantics/conferenceObject;info:ar-repo/semantics/documento de conferencia;info:eu-repo/semantics/publishedVersion", "conferenceObject"),
    ("info:eu-repo/semantics/article;info:eu-repo/semantics/publishedVersion", "article"),
    ("Objeto de conferencia;Objeto de conferencia", "conferenceObject"),
    ("Artículo científico", "article"),
    ("Articulo;Articulo", "article"),
    ("Article", "article"),
    ("legislation", "legislation"),
    ("text", "text"),
    ("Imagen", "image"),
    ("info:eu-repo/semantics/review;info:ar-repo/semantics/revisión literaria; info:eu-repo/semantics/publishedVersion", "review"),
    ("article;info:ar-repo/semantics/artículo;info:eu-repo/semantics/article;info:eu-repo/semantics/publishedVersion", "article"),
    ("Tesis;Tesis de doctorado", "doctoralThesis"),
    ("info:eu-repo/semantics/article;info:eu-repo/semantics/publishedVersion;Artículo revisado por pares", "article"),
    ("Reseña", "review"),
    ("Text;draft;Capítulo de Libro", "bookPart"),
    ("info:eu-repo/semantics/bachelorThesis;info:ar-repo/semantics/tesis de grado;info:eu-repo/semantics/acceptedVersion", "bachelorThesis"),
    ("info:eu-repo/semantics/article;artículo;info:eu-repo/semantics/publishedVersion", "article"),
    ("Artículo", "article"),
    ("Articulo;Revision", "article"),
]


# -- Tabla 4: authors per record ---------------------------------------------

TABLA4_COUNTS = {
    "1": 122020, "2": 22711, "3": 14046, "4": 8611, "5": 4855, "6": 3181, "7": 1825,
    "8": 1199, "9": 764, "10": 553, "+ de 10": 1587,
}


def tabla4_corpus(without_creator: int = 1000) -> Corpus:
    """Creator lists sized to the table; the open bucket spans 11 to 32 authors."""
    shared: dict[int, DublinCoreRecord] = {}

    def md(k: int) -> DublinCoreRecord:
        if k not in shared:
            shared[k] = DublinCoreRecord.from_mapping({"creator": [f"Apellido{j}, Nombre{j}" for j in range(k)]})
        return shared[k]

    records = []
    n = 0
    for label, count in TABLA4_COUNTS.items():
        for i in range(count):
            k = 11 + i % 22 if label == "+ de 10" else int(label)
            records.append(HarvestedRecord("r", RecordHeader(f"oai:t4:{n:06d}", "2017-01-01"), md(k)))
            n += 1
    blank = DublinCoreRecord.from_mapping({"creator": [" "], "title": ["sin autor"]})
    for i in range(without_creator):
        records.append(HarvestedRecord("r", RecordHeader(f"oai:t4:{n:06d}", "2017-01-01"), blank if i % 2 else DublinCoreRecord()))
        n += 1
    return Corpus(records)


# -- Figura 2: descriptors in titles and descriptions ------------------------

FIG2_K, FIG2_RECORDS, FIG2_IN_TITLE, FIG2_IN_DESCRIPTION = 6, 18715, 11911, 13398


def figura2_corpus() -> Corpus:
    """k=6 records with the published title/description overlap, plus noise at other k.

    Title matches need case and accent folding ("CIENCIAS INFORMATICAS" in
    "Estudio de ciencias informáticas"); non-matching records use words that
    share no descriptor.
    """
    subjects = ["CIENCIAS INFORMATICAS", "Humanidades", "Educación", "HISTORIA", "Literatura", "Plan de estudios"]
    desc_from = FIG2_RECORDS - FIG2_IN_DESCRIPTION
    records = []
    for i in range(FIG2_RECORDS):
        md = {
            "subject": subjects,
            "title": ["Estudio de ciencias informáticas" if i < FIG2_IN_TITLE else "Un trabajo sin relación"],
            "description": ["Texto sobre la educacion publica" if i >= desc_from else "Nada que ver aquí"],
        }
        records.append(rec("r", f"oai:f2:{i:06d}", md))
    for i in range(500):
        k = 1 + i % 5
        md = {"subject": subjects[:k], "title": ["Humanidades"], "description": ["HISTORIA"]}
        records.append(rec("r", f"oai:f2:noise{i:04d}", md))
    return Corpus(records)


# -- large synthetic corpus --------------------------------------------------


def synthetic_records(n: int, seed: int = 7) -> list[HarvestedRecord]:
    """Cheap-to-build corpus with realistic field mixes for scale tests."""
    rng = random.Random(seed)
    langs = [v for v, _, _ in TABLA2_ROWS] + ["", "xx"]
    types = [v for v, _ in TABLA3_ROWS]
    formats = ["application/pdf", "text/html;application/pdf", "text; pdf", "pdf", "application/pdf;4 p."]
    words = ["agua", "educación", "historia", "Argentina", "suelo", "política", "salud", "arte", "física", "datos"]
    records = []
    for i in range(n):
        md = {
            "title": [" ".join(rng.choices(words, k=rng.randint(1, 30)))],
            "creator": [f"Autor{rng.randrange(50000)}, N." for _ in range(rng.choice([0, 1, 1, 2, 3, 12]))],
            "subject": rng.sample(words, rng.randint(0, 8)),
            "language": [rng.choice(langs)],
            "type": [rng.choice(types)],
            "date": ["2016"],
            "identifier": [f"http://example.org/{i}"],
        }
        if rng.random() < 0.5:
            md["description"] = [" ".join(rng.choices(words, k=rng.randint(1, 400)))]
        if rng.random() < 0.4:
            md["format"] = [rng.choice(formats)]
        records.append(rec(f"repo{i % 26:02d}", f"oai:s:{i:07d}", md, harvested_at="2017-03-13T00:00:00Z"))
    return records
