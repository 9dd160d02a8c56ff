"""Case- and accent-insensitive comparison helpers."""

from __future__ import annotations

import re
import unicodedata

# Combining diacritical blocks (basic, extended, supplement, for symbols, half marks).
_COMBINING = re.compile("[̀-ͯ᪰-᫿᷀-᷿⃐-⃿︠-︯]")
_TOKEN = re.compile(r"[^\W_]+")


def fold(text: str) -> str:
    """Casefold and strip diacritics: ``"Artículo"`` -> ``"articulo"``."""
    if text.isascii():
        return text.lower()
    return _COMBINING.sub("", unicodedata.normalize("NFKD", text)).casefold()


def tokens(text: str) -> list[str]:
    """Folded alphanumeric runs; punctuation and ``_`` separate tokens."""
    return _TOKEN.findall(fold(text))
