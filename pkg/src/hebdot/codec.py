"""Character-level codec for dotted Hebrew text.

Converts between raw UTF-8 text and sequences of :class:`MarkedChar`, where
each character carries up to three independent diacritic labels: a vowel mark
(niqqud), a dagesh/mappiq dot, and the shin/sin dot.  Also home to the
character-class predicates (``can_dagesh``, ``can_niqqud``, ``is_shin``) that
the rest of the pipeline uses to decide which classification slots exist for
a given letter.
"""

from __future__ import annotations

import dataclasses
import string
import unicodedata
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable, NamedTuple

__all__ = [
    "CharClass",
    "Niqqud",
    "Dagesh",
    "Sin",
    "VowelClass",
    "MarkedChar",
    "VocalSignature",
    "LeadingMarkError",
    "InvariantViolation",
    "HEBREW_LETTERS",
    "PUNCT_WHITELIST",
    "DIGIT_SYMBOL",
    "LATIN_SYMBOL",
    "DAGESH_CAPABLE",
    "NIQQUD_CAPABLE",
    "BKP_LETTERS",
    "char_class",
    "normalize",
    "normalize_mapped",
    "decompose",
    "compose",
    "marks_of",
    "strip_diacritics",
    "can_dagesh",
    "can_niqqud",
    "is_shin",
    "is_hebrew_letter",
    "vocalization_signature",
    "validate",
    "drop_invalid_marks",
]


class LeadingMarkError(ValueError):
    """A combining mark appeared before any base character."""


class InvariantViolation(ValueError):
    """A MarkedChar sequence breaks the label invariants."""


# The 27 letter forms (22 letters + 5 finals), U+05D0..U+05EA.
HEBREW_LETTERS = "".join(chr(c) for c in range(0x05D0, 0x05EB))
_HEBREW_SET = frozenset(HEBREW_LETTERS)

GERESH = "׳"
GERSHAYIM = "״"
MAQAF = "־"

# Placeholder identities for digits and Latin letters in the normalized
# stream.  They are carved out of the ASCII punctuation whitelist so the
# normalized alphabet stays unambiguous: a literal '#'/'@' in the input is
# treated as a digit/Latin occurrence rather than as punctuation.
DIGIT_SYMBOL = "#"
LATIN_SYMBOL = "@"

_ASCII_PUNCT = frozenset(string.punctuation) - {DIGIT_SYMBOL, LATIN_SYMBOL}
_HEBREW_PUNCT = frozenset({GERESH, GERSHAYIM, MAQAF})

# Canonical ordering of the kept punctuation, used by the vocabulary.
PUNCT_WHITELIST = tuple(sorted(_ASCII_PUNCT | _HEBREW_PUNCT))

# Typographic quotes/dashes are punctuation, normalized to ASCII equivalents.
_TYPOGRAPHIC_MAP = {
    "‘": "'",
    "’": "'",
    "‚": "'",
    "‛": "'",
    "′": "'",
    "“": '"',
    "”": '"',
    "„": '"',
    "″": '"',
    "‐": "-",
    "‑": "-",
    "‒": "-",
    "–": "-",
    "—": "-",
    "―": "-",
}


class CharClass(Enum):
    """Partition of Unicode scalars as seen by the normalizer."""

    HEBREW_LETTER = "hebrew_letter"
    NIQQUD_MARK = "niqqud_mark"
    DAGESH_MARK = "dagesh_mark"
    SIN_SHIN_MARK = "sin_shin_mark"
    DROPPED_MARK = "dropped_mark"
    SPACE = "space"
    PUNCT = "punct"
    DIGIT = "digit"
    LATIN = "latin"
    OTHER = "other"


class Niqqud(IntEnum):
    """Vowel-mark labels.  Values double as label indices for the model."""

    NONE = 0
    SHEVA = 1
    HATAF_SEGOL = 2
    HATAF_PATAH = 3
    HATAF_QAMATS = 4
    HIRIQ = 5
    TSERE = 6
    SEGOL = 7
    PATAH = 8
    QAMATS = 9
    HOLAM = 10
    QUBUTS = 11


class Dagesh(IntEnum):
    NONE = 0
    DAGESH = 1


class Sin(IntEnum):
    NONE = 0
    SHIN_DOT = 1
    SIN_DOT = 2


_NIQQUD_CHARS = {
    Niqqud.SHEVA: "ְ",
    Niqqud.HATAF_SEGOL: "ֱ",
    Niqqud.HATAF_PATAH: "ֲ",
    Niqqud.HATAF_QAMATS: "ֳ",
    Niqqud.HIRIQ: "ִ",
    Niqqud.TSERE: "ֵ",
    Niqqud.SEGOL: "ֶ",
    Niqqud.PATAH: "ַ",
    Niqqud.QAMATS: "ָ",
    Niqqud.HOLAM: "ֹ",
    Niqqud.QUBUTS: "ֻ",
}

# Folds: qamats qatan and holam-haser-for-vav are encoding variants that never
# survive as labels; meteg, rafe and the cantillation range are outside the
# label space entirely.
_CHAR_TO_NIQQUD = {c: n for n, c in _NIQQUD_CHARS.items()}
_CHAR_TO_NIQQUD["ׇ"] = Niqqud.QAMATS
_CHAR_TO_NIQQUD["ֺ"] = Niqqud.HOLAM

DAGESH_CHAR = "ּ"
SHIN_DOT_CHAR = "ׁ"
SIN_DOT_CHAR = "ׂ"
_SIN_CHARS = {Sin.SHIN_DOT: SHIN_DOT_CHAR, Sin.SIN_DOT: SIN_DOT_CHAR}

_DROPPED_MARKS = frozenset({"ֽ", "ֿ", "ׄ", "ׅ"}) | frozenset(
    chr(c) for c in range(0x0591, 0x05B0)
)

SHIN = "ש"

# Letters that may carry a dagesh or mappiq.  The gutturals, resh and most
# finals never do; he takes a mappiq and final kaf appears with niqqud in
# suffixed forms, so both stay in.
DAGESH_CAPABLE = _HEBREW_SET - frozenset("אחערםןףץ")

# Every letter form may carry a vowel mark (finals do take sheva/qamats).
NIQQUD_CAPABLE = _HEBREW_SET

# Letters where a dagesh changes the pronounced consonant (b/v, k/kh, p/f).
BKP_LETTERS = frozenset("בכפ")


_CLASS_CACHE: dict[str, CharClass] = {}


def char_class(ch: str) -> CharClass:
    """Classify a single character.  Total: every scalar gets one class."""
    cached = _CLASS_CACHE.get(ch)
    if cached is not None:
        return cached
    cls = _classify(ch)
    _CLASS_CACHE[ch] = cls
    return cls


def _classify(ch: str) -> CharClass:
    if ch in _HEBREW_SET:
        return CharClass.HEBREW_LETTER
    if ch in _CHAR_TO_NIQQUD:
        return CharClass.NIQQUD_MARK
    if ch == DAGESH_CHAR:
        return CharClass.DAGESH_MARK
    if ch == SHIN_DOT_CHAR or ch == SIN_DOT_CHAR:
        return CharClass.SIN_SHIN_MARK
    if ch in _DROPPED_MARKS:
        return CharClass.DROPPED_MARK
    if ch.isspace():
        return CharClass.SPACE
    if ch in _ASCII_PUNCT or ch in _HEBREW_PUNCT or ch in _TYPOGRAPHIC_MAP:
        return CharClass.PUNCT
    if ch == DIGIT_SYMBOL or unicodedata.category(ch) == "Nd":
        return CharClass.DIGIT
    if ch == LATIN_SYMBOL or _is_latin_letter(ch):
        return CharClass.LATIN
    return CharClass.OTHER


def _is_latin_letter(ch: str) -> bool:
    cp = ord(ch)
    if 0x41 <= cp <= 0x5A or 0x61 <= cp <= 0x7A:
        return True
    # Latin-1 supplement and Extended-A/B letters count as Latin too.
    return 0xC0 <= cp <= 0x24F and unicodedata.category(ch).startswith("L")


def _candidate(ch: str) -> str | None:
    """Normalized form of one raw character, or None if it is removed."""
    cls = char_class(ch)
    if cls is CharClass.HEBREW_LETTER:
        return ch
    if cls in (CharClass.NIQQUD_MARK, CharClass.DAGESH_MARK, CharClass.SIN_SHIN_MARK):
        return ch
    if cls is CharClass.SPACE:
        return " "
    if cls is CharClass.PUNCT:
        return _TYPOGRAPHIC_MAP.get(ch, ch)
    if cls is CharClass.DIGIT:
        return DIGIT_SYMBOL
    if cls is CharClass.LATIN:
        return LATIN_SYMBOL
    return None  # DROPPED_MARK and OTHER


def normalize_mapped(
    raw: str,
) -> tuple[str, list[tuple[int, int]], list[tuple[int, int]]]:
    """Normalize and report where every output character came from.

    Returns ``(normalized, spans, removed)`` where ``spans[i]`` is the
    half-open raw span that produced output position ``i`` and ``removed``
    lists the raw spans deleted outright (ordered; together with ``spans``
    they cover the input exactly).
    """
    out: list[str] = []
    spans: list[tuple[int, int]] = []
    removed: list[tuple[int, int]] = []

    def remove(start: int, end: int) -> None:
        if removed and removed[-1][1] == start:
            removed[-1] = (removed[-1][0], end)
        else:
            removed.append((start, end))

    for i, ch in enumerate(raw):
        cand = _candidate(ch)
        if cand is None:
            remove(i, i + 1)
        elif cand == " ":
            if out and out[-1] != " ":
                out.append(" ")
                spans.append((i, i + 1))
            else:
                remove(i, i + 1)
        else:
            out.append(cand)
            spans.append((i, i + 1))

    while out and out[-1] == " ":
        out.pop()
        start, end = spans.pop()
        # re-merge with neighbours in positional order
        removed.append((start, end))
        removed.sort()
        merged: list[tuple[int, int]] = []
        for s, e in removed:
            if merged and merged[-1][1] >= s:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((s, e))
        removed = merged

    return "".join(out), spans, removed


def normalize(raw: str) -> str:
    """Reduce text to the model alphabet.

    Keeps Hebrew letters, their diacritic marks, single spaces and
    whitelisted punctuation; digits and Latin letters become one placeholder
    symbol each; everything else is removed.  Runs of whitespace collapse to
    one space and the result carries no leading/trailing space.
    """
    return normalize_mapped(raw)[0]


@dataclass(frozen=True, slots=True)
class MarkedChar:
    """One base character with its three diacritic labels.

    Invariants (checked by :func:`validate`, enforced by :func:`compose`):
    only Hebrew letters carry labels, a sin/shin dot requires the letter
    shin, and a dagesh requires a dagesh-capable letter.
    """

    letter: str
    niqqud: Niqqud = Niqqud.NONE
    dagesh: Dagesh = Dagesh.NONE
    sin: Sin = Sin.NONE

    def violation(self) -> str | None:
        """Describe the first broken invariant, or None if the char is valid."""
        if len(self.letter) != 1:
            return f"letter must be a single character, got {self.letter!r}"
        if self.letter not in _HEBREW_SET:
            if self.niqqud or self.dagesh or self.sin:
                return f"marks on non-Hebrew character {self.letter!r}"
            return None
        if self.sin != Sin.NONE and self.letter != SHIN:
            return f"sin/shin dot on {self.letter!r}"
        if self.dagesh != Dagesh.NONE and self.letter not in DAGESH_CAPABLE:
            return f"dagesh on {self.letter!r}"
        return None


def is_hebrew_letter(ch: str) -> bool:
    return ch in _HEBREW_SET


def is_shin(ch: str) -> bool:
    return ch == SHIN


def can_dagesh(ch: str, capable: frozenset[str] | None = None) -> bool:
    return ch in (DAGESH_CAPABLE if capable is None else capable)


def can_niqqud(ch: str, capable: frozenset[str] | None = None) -> bool:
    return ch in (NIQQUD_CAPABLE if capable is None else capable)


def decompose(dotted: str) -> list[MarkedChar]:
    """Split dotted text into one MarkedChar per base character.

    Marks attach to the nearest preceding base character, whatever their
    order after it; duplicate marks of one category keep the last
    occurrence; folded codepoints (qamats qatan, holam haser for vav) are
    mapped to their label, and meteg/rafe/cantillation are dropped.

    Illegal combinations (a sin dot on bet, say) are NOT rejected here: they
    are representable and surfaced later by :func:`validate`.

    Raises LeadingMarkError if a combining mark precedes any base character.
    """
    chars: list[MarkedChar] = []
    for i, ch in enumerate(dotted):
        cls = char_class(ch)
        if cls in (
            CharClass.NIQQUD_MARK,
            CharClass.DAGESH_MARK,
            CharClass.SIN_SHIN_MARK,
            CharClass.DROPPED_MARK,
        ):
            if not chars:
                raise LeadingMarkError(
                    f"combining mark U+{ord(ch):04X} at position {i} precedes any base character"
                )
            if cls is CharClass.DROPPED_MARK:
                continue
            last = chars[-1]
            if cls is CharClass.NIQQUD_MARK:
                chars[-1] = dataclasses.replace(last, niqqud=_CHAR_TO_NIQQUD[ch])
            elif cls is CharClass.DAGESH_MARK:
                chars[-1] = dataclasses.replace(last, dagesh=Dagesh.DAGESH)
            else:
                sin = Sin.SHIN_DOT if ch == SHIN_DOT_CHAR else Sin.SIN_DOT
                chars[-1] = dataclasses.replace(last, sin=sin)
        else:
            chars.append(MarkedChar(letter=ch))
    return chars


def marks_of(c: MarkedChar) -> str:
    """Mark string for one character in canonical order: dagesh, sin dot, niqqud."""
    parts = []
    if c.dagesh != Dagesh.NONE:
        parts.append(DAGESH_CHAR)
    if c.sin != Sin.NONE:
        parts.append(_SIN_CHARS[c.sin])
    if c.niqqud != Niqqud.NONE:
        parts.append(_NIQQUD_CHARS[c.niqqud])
    return "".join(parts)


def compose(chars: Iterable[MarkedChar]) -> str:
    """Inverse of :func:`decompose`; marks come out in the canonical order.

    Raises InvariantViolation if any input MarkedChar breaks its invariants.
    """
    parts: list[str] = []
    for i, c in enumerate(chars):
        problem = c.violation()
        if problem is not None:
            raise InvariantViolation(f"position {i}: {problem}")
        parts.append(c.letter)
        parts.append(marks_of(c))
    return "".join(parts)


_MARK_CLASSES = (
    CharClass.NIQQUD_MARK,
    CharClass.DAGESH_MARK,
    CharClass.SIN_SHIN_MARK,
    CharClass.DROPPED_MARK,
)

_STRIP_TABLE = {
    cp: None
    for cp in range(0x0591, 0x05C8)
    if char_class(chr(cp)) in _MARK_CLASSES
}


def strip_diacritics(text: str) -> str:
    """Remove every diacritic codepoint; all other characters pass through."""
    return text.translate(_STRIP_TABLE)


class VowelClass(Enum):
    A = "a"
    E = "e"
    I = "i"
    O = "o"
    U = "u"
    NULL = "null"


_VOWEL_CLASS = {
    Niqqud.NONE: VowelClass.NULL,
    Niqqud.SHEVA: VowelClass.NULL,
    Niqqud.PATAH: VowelClass.A,
    Niqqud.QAMATS: VowelClass.A,
    Niqqud.HATAF_PATAH: VowelClass.A,
    Niqqud.TSERE: VowelClass.E,
    Niqqud.SEGOL: VowelClass.E,
    Niqqud.HATAF_SEGOL: VowelClass.E,
    Niqqud.HIRIQ: VowelClass.I,
    Niqqud.HOLAM: VowelClass.O,
    Niqqud.HATAF_QAMATS: VowelClass.O,
    Niqqud.QUBUTS: VowelClass.U,
}


class VocalSignature(NamedTuple):
    """What a reader would pronounce: vowel set, sin dot, and dagesh on b/k/p."""

    vowel: VowelClass
    sin: Sin | None
    bkp_dagesh: bool | None


def vocalization_signature(c: MarkedChar) -> VocalSignature:
    """Pronunciation-relevant reduction of one character's labels.

    The vowel collapses to its a/e/i/o/u/null class (sheva counts as null);
    the sin field matters only on shin, and the dagesh only on the b/k/p
    letters where it selects the consonant.
    """
    if c.letter not in _HEBREW_SET:
        raise ValueError(f"vocalization signature of non-Hebrew {c.letter!r}")
    return VocalSignature(
        vowel=_VOWEL_CLASS[c.niqqud],
        sin=c.sin if c.letter == SHIN else None,
        bkp_dagesh=(c.dagesh != Dagesh.NONE) if c.letter in BKP_LETTERS else None,
    )


def validate(doc: Iterable[MarkedChar]) -> list[tuple[int, str]]:
    """Report every invariant violation as (position, message).  Pure."""
    problems = []
    for i, c in enumerate(doc):
        problem = c.violation()
        if problem is not None:
            problems.append((i, problem))
    return problems


def drop_invalid_marks(doc: Iterable[MarkedChar]) -> list[MarkedChar]:
    """Repair a sequence by stripping whichever marks break the invariants."""
    repaired = []
    for c in doc:
        if c.violation() is None:
            repaired.append(c)
            continue
        if c.letter not in _HEBREW_SET:
            repaired.append(MarkedChar(letter=c.letter))
            continue
        sin = c.sin if c.letter == SHIN else Sin.NONE
        dagesh = c.dagesh if c.letter in DAGESH_CAPABLE else Dagesh.NONE
        repaired.append(dataclasses.replace(c, sin=sin, dagesh=dagesh))
    return repaired
