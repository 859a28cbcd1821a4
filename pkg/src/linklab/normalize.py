"""Canonicalization of titles and person names, and matching-key derivation.

Titles are usable for matching only when the raw form has at least five
whitespace tokens; accepted titles are ASCII-folded, stripped of
non-alphabetic characters, lowercased, and whitespace-collapsed.

Person names yield two keys: the blocking key (surname plus first
forename initial) and the finer name key (surname plus all forename
initials). Equal name keys always imply equal blocking keys.
"""

from __future__ import annotations

import unicodedata
from typing import NamedTuple

from .errors import ParseError

# Transliterations for letters that do not decompose under NFKD.
_FOLD = {
    "ß": "ss",
    "ẞ": "SS",
    "æ": "ae",
    "Æ": "AE",
    "œ": "oe",
    "Œ": "OE",
    "ø": "o",
    "Ø": "O",
    "đ": "d",
    "Đ": "D",
    "ð": "d",
    "Ð": "D",
    "þ": "th",
    "Þ": "Th",
    "ł": "l",
    "Ł": "L",
    "ı": "i",
    "ħ": "h",
    "Ħ": "H",
    "ŋ": "n",
    "Ŋ": "N",
    "ĸ": "k",
}


def ascii_fold(text: str) -> str:
    """Transliterate to ASCII; characters with no mapping are dropped."""
    out: list[str] = []
    for ch in unicodedata.normalize("NFKD", text):
        mapped = _FOLD.get(ch)
        if mapped is not None:
            out.append(mapped)
        elif unicodedata.combining(ch):
            continue
        elif ch.isascii():
            out.append(ch)
    return "".join(out)


class NormTitle(NamedTuple):
    """A matchable title: lowercase alphabetic words with single spaces."""

    text: str
    word_count_raw: int


def normalize_title(raw: str, *, nonalpha: str = "delete") -> NormTitle | None:
    """Canonicalize a title, or return None when it is too short to match.

    Rejection is a filter outcome, not an error: titles with fewer than
    five raw whitespace tokens are skipped, as are titles left with
    fewer than five words once non-alphabetic characters are gone (the
    second check keeps normalization idempotent).

    nonalpha: "delete" removes non-alphabetic characters in place
    ("Cancer-Risk" becomes "cancerrisk"); "space" turns them into token
    breaks instead, for sensitivity checks.
    """
    if nonalpha not in ("delete", "space"):
        raise ValueError(f"nonalpha must be 'delete' or 'space', got {nonalpha!r}")
    raw_tokens = raw.split()
    if len(raw_tokens) < 5:
        return None
    folded = ascii_fold(raw).lower()
    if nonalpha == "delete":
        cleaned = "".join(ch for ch in folded if ch.isalpha() or ch.isspace())
    else:
        cleaned = "".join(ch if ch.isalpha() else " " for ch in folded)
    words = cleaned.split()
    if len(words) < 5:
        return None
    return NormTitle(text=" ".join(words), word_count_raw=len(raw_tokens))


class PersonName(NamedTuple):
    """A parsed byline or profile name with normalized parts."""

    raw: str
    surname: str
    forenames: tuple[str, ...]
    first_initial: str
    all_initials: str


class BlockKey(NamedTuple):
    """Blocking key: surname plus first forename initial."""

    surname: str
    first_initial: str


class NameKey(NamedTuple):
    """Refined key: surname plus all forename initials."""

    surname: str
    all_initials: str


def _clean_tokens(text: str) -> list[str]:
    """Fold, lowercase, and strip each whitespace token to its letters."""
    tokens = []
    for token in ascii_fold(text).lower().split():
        letters = "".join(ch for ch in token if ch.isalpha())
        if letters:
            tokens.append(letters)
    return tokens


def parse_name(raw: str) -> PersonName:
    """Parse a raw name string.

    The "Surname, Forenames" comma form is preferred; multi-token
    surnames before the comma are preserved. Without a comma the last
    whitespace token is taken as the surname. Initials come from the
    first letter of each forename token, so a hyphenated forename
    yields one initial.
    """
    head, comma, tail = raw.partition(",")
    if comma:
        surname_part, forename_part = head, tail
    else:
        tokens = raw.split()
        if len(tokens) <= 1:
            surname_part, forename_part = raw, ""
        else:
            surname_part, forename_part = tokens[-1], " ".join(tokens[:-1])
    surname_tokens = _clean_tokens(surname_part)
    if not surname_tokens:
        raise ParseError(f"name {raw!r}: surname is empty after normalization")
    forename_tokens = _clean_tokens(forename_part)
    all_initials = "".join(token[0] for token in forename_tokens)
    return PersonName(
        raw=raw,
        surname=" ".join(surname_tokens),
        forenames=tuple(forename_tokens),
        first_initial=all_initials[:1],
        all_initials=all_initials,
    )


def fini_key(name: PersonName) -> BlockKey:
    """Blocking key of a name; the initial is empty for mononyms."""
    return BlockKey(surname=name.surname, first_initial=name.first_initial)


def aini_key(name: PersonName) -> NameKey:
    return NameKey(surname=name.surname, all_initials=name.all_initials)


def is_keyed(name: PersonName) -> bool:
    """True when the name carries at least one forename initial.

    Mononyms are never matched against anything: their sentinel empty
    initial is excluded from linkage and baseline grouping.
    """
    return name.first_initial != ""
