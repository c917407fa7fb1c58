"""Corpus loading, tokenization, chunking and batch assembly.

A corpus lives on disk as ``<root>/<split>/**/*.txt`` with splits
``premodern``, ``modern``, ``validation`` and ``test``.  Files are read as
UTF-8, normalized to the model alphabet, and repaired where the source data
carries marks that break the label invariants (noisy scans do).  Everything
downstream works on :class:`Document` values, so loading order and repairs
are decided here, once.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codec import (
    DAGESH_CAPABLE,
    DIGIT_SYMBOL,
    GERESH,
    GERSHAYIM,
    HEBREW_LETTERS,
    LATIN_SYMBOL,
    NIQQUD_CAPABLE,
    PUNCT_WHITELIST,
    CharClass,
    MarkedChar,
    char_class,
    compose,
    decompose,
    drop_invalid_marks,
    is_shin,
    normalize,
    validate,
)

__all__ = [
    "SPLITS",
    "Document",
    "EmptyCorpus",
    "Vocabulary",
    "Chunk",
    "Batch",
    "SplitStats",
    "load_file",
    "load_dir",
    "load_corpus",
    "hebrew_token_count",
    "token_spans",
    "chunk_spans",
    "encode_document",
    "make_batches",
    "split_stats",
]

log = logging.getLogger(__name__)

SPLITS = ("premodern", "modern", "validation", "test")

MAX_CHUNK_LEN = 80

_MARK_CLASSES = (
    CharClass.NIQQUD_MARK,
    CharClass.DAGESH_MARK,
    CharClass.SIN_SHIN_MARK,
    CharClass.DROPPED_MARK,
)


class EmptyCorpus(Exception):
    """A corpus directory yielded no usable documents."""


@dataclass(frozen=True)
class Document:
    """One loaded text: id (relative path without suffix), split it came
    from, the per-character label sequence, and the canonical dotted text
    recomposed from it."""

    id: str
    source: str
    chars: tuple[MarkedChar, ...]
    text: str

    @property
    def letters(self) -> str:
        return "".join(c.letter for c in self.chars)


def _from_normalized(norm: str, doc_id: str, source: str) -> Document | None:
    lead = 0
    while lead < len(norm) and char_class(norm[lead]) in _MARK_CLASSES:
        lead += 1
    if lead:
        log.warning("%s: dropped %d leading mark(s)", doc_id, lead)
        norm = normalize(norm[lead:])
    if not norm:
        return None
    chars = decompose(norm)
    problems = validate(chars)
    if problems:
        log.warning(
            "%s: repaired %d invalid mark placement(s), first at %d: %s",
            doc_id,
            len(problems),
            problems[0][0],
            problems[0][1],
        )
        chars = drop_invalid_marks(chars)
    return Document(id=doc_id, source=source, chars=tuple(chars), text=compose(chars))


def load_file(path: Path, doc_id: str, source: str) -> Document | None:
    """Load one text file; None if nothing usable remains after normalizing."""
    raw = path.read_text(encoding="utf-8")
    return _from_normalized(normalize(raw), doc_id, source)


def load_dir(directory: Path, source: str) -> list[Document]:
    """Load every ``*.txt`` under a directory, sorted by relative path.

    Raises EmptyCorpus if the directory is missing or contributes nothing.
    """
    directory = Path(directory)
    docs: list[Document] = []
    if directory.is_dir():
        for path in sorted(directory.rglob("*.txt")):
            doc_id = path.relative_to(directory).with_suffix("").as_posix()
            doc = load_file(path, doc_id=doc_id, source=source)
            if doc is None:
                log.warning("%s: empty after normalization, skipped", path)
                continue
            docs.append(doc)
    if not docs:
        raise EmptyCorpus(f"no usable documents under {directory}")
    return docs


def load_corpus(root: Path, split: str) -> list[Document]:
    """Load one named split from a corpus root."""
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}, expected one of {SPLITS}")
    return load_dir(Path(root) / split, source=split)


# A token is a maximal run of Hebrew letters, allowing geresh, gershayim or
# their ASCII stand-ins between letters (acronyms and abbreviations).
_TOKEN_RE = re.compile(
    "[{heb}]+(?:[{join}][{heb}]+)*".format(
        heb=HEBREW_LETTERS, join=re.escape(GERESH + GERSHAYIM + "'\"")
    )
)


def hebrew_token_count(text: str) -> int:
    """Count Hebrew tokens in (normalized or plain-letter) text."""
    return sum(1 for _ in _TOKEN_RE.finditer(text))


def token_spans(letters: str) -> list[tuple[int, int]]:
    """Half-open spans of every Hebrew token in a letter stream."""
    return [m.span() for m in _TOKEN_RE.finditer(letters)]


def chunk_spans(letters: str, max_len: int = MAX_CHUNK_LEN) -> list[tuple[int, int]]:
    """Partition a letter stream into model-sized windows.

    Greedy left to right: each chunk is as long as possible up to
    ``max_len``, ending at the last space inside the window so words stay
    whole; the boundary space belongs to the earlier chunk.  A single run
    longer than ``max_len`` with no space is split mid-run.
    """
    if max_len < 1:
        raise ValueError("max_len must be positive")
    spans: list[tuple[int, int]] = []
    start = 0
    n = len(letters)
    while start < n:
        if n - start <= max_len:
            spans.append((start, n))
            break
        window = letters[start : start + max_len]
        cut = window.rfind(" ")
        end = start + (cut + 1 if cut != -1 else max_len)
        spans.append((start, end))
        start = end
    return spans


class Vocabulary:
    """Fixed, closed character inventory for the encoder.

    Index 0 is padding and index 1 the out-of-alphabet fallback; the rest is
    the normalized alphabet in a deterministic order.  The inventory never
    depends on the training data, so checkpoints built anywhere agree.
    """

    PAD = 0
    UNK = 1

    def __init__(self, extra: Sequence[str] = ()) -> None:
        alphabet = (
            [" "]
            + list(PUNCT_WHITELIST)
            + [DIGIT_SYMBOL, LATIN_SYMBOL]
            + list(HEBREW_LETTERS)
            + list(extra)
        )
        self.id_to_char: list[str | None] = [None, None] + alphabet
        self.char_to_id: dict[str, int] = {
            ch: i + 2 for i, ch in enumerate(alphabet)
        }
        if len(self.char_to_id) != len(alphabet):
            raise ValueError("duplicate characters in vocabulary")

    @property
    def size(self) -> int:
        return len(self.id_to_char)

    def id(self, ch: str) -> int:
        return self.char_to_id.get(ch, self.UNK)

    def encode(self, letters: str) -> np.ndarray:
        return np.fromiter(
            (self.char_to_id.get(ch, self.UNK) for ch in letters),
            dtype=np.int32,
            count=len(letters),
        )

    def to_json(self) -> dict:
        return {"alphabet": "".join(self.id_to_char[2:])}

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        vocab = cls.__new__(cls)
        alphabet = list(data["alphabet"])
        vocab.id_to_char = [None, None] + alphabet
        vocab.char_to_id = {ch: i + 2 for i, ch in enumerate(alphabet)}
        return vocab


@dataclass(frozen=True)
class Chunk:
    """One encoded window of a document.

    ``golds`` hold codec label values per category; ``masks`` are True
    exactly where the letter admits a decision in that category.  ``offset``
    locates the window in the source document's letter stream.
    """

    doc_id: str
    offset: int
    letter_ids: np.ndarray  # (L,) int32
    golds: dict[str, np.ndarray]  # category -> (L,) int8
    masks: dict[str, np.ndarray]  # category -> (L,) bool

    @property
    def length(self) -> int:
        return int(self.letter_ids.shape[0])


CATEGORIES = ("niqqud", "dagesh", "sin")


def encode_document(
    doc: Document,
    vocab: Vocabulary,
    max_len: int = MAX_CHUNK_LEN,
    dagesh_capable: frozenset[str] = DAGESH_CAPABLE,
    niqqud_capable: frozenset[str] = NIQQUD_CAPABLE,
) -> list[Chunk]:
    """Chunk and encode one document into model inputs and training targets."""
    letters = doc.letters
    niq = np.fromiter((c.niqqud for c in doc.chars), dtype=np.int8, count=len(letters))
    dag = np.fromiter((c.dagesh for c in doc.chars), dtype=np.int8, count=len(letters))
    sin = np.fromiter((c.sin for c in doc.chars), dtype=np.int8, count=len(letters))
    m_niq = np.fromiter(
        (ch in niqqud_capable for ch in letters), dtype=bool, count=len(letters)
    )
    m_dag = np.fromiter(
        (ch in dagesh_capable for ch in letters), dtype=bool, count=len(letters)
    )
    m_sin = np.fromiter((is_shin(ch) for ch in letters), dtype=bool, count=len(letters))

    chunks = []
    for start, end in chunk_spans(letters, max_len):
        # The boundary space belongs to this window for partition purposes
        # but carries no decisions; keeping it out of the model input makes
        # predictions identical whether a document is fed whole or split at
        # chunk boundaries (the split piece would lose the space to
        # normalization anyway).
        if letters[end - 1] == " ":
            end -= 1
        if end == start:
            continue
        chunks.append(
            Chunk(
                doc_id=doc.id,
                offset=start,
                letter_ids=vocab.encode(letters[start:end]),
                golds={
                    "niqqud": niq[start:end],
                    "dagesh": dag[start:end],
                    "sin": sin[start:end],
                },
                masks={
                    "niqqud": m_niq[start:end],
                    "dagesh": m_dag[start:end],
                    "sin": m_sin[start:end],
                },
            )
        )
    return chunks


@dataclass(frozen=True)
class Batch:
    """Right-padded stack of chunks.  Padding ids are 0 and every mask is
    False past each row's length, so padded positions never carry decisions."""

    letter_ids: np.ndarray  # (B, T) int32
    golds: dict[str, np.ndarray]  # category -> (B, T) int8
    masks: dict[str, np.ndarray]  # category -> (B, T) bool
    lengths: np.ndarray  # (B,) int32
    doc_ids: tuple[str, ...]
    offsets: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(self.letter_ids.shape[0])


def _stack(chunks: Sequence[Chunk]) -> Batch:
    width = max(c.length for c in chunks)
    b = len(chunks)
    ids = np.zeros((b, width), dtype=np.int32)
    golds = {k: np.zeros((b, width), dtype=np.int8) for k in CATEGORIES}
    masks = {k: np.zeros((b, width), dtype=bool) for k in CATEGORIES}
    lengths = np.zeros(b, dtype=np.int32)
    for i, c in enumerate(chunks):
        ids[i, : c.length] = c.letter_ids
        lengths[i] = c.length
        for k in CATEGORIES:
            golds[k][i, : c.length] = c.golds[k]
            masks[k][i, : c.length] = c.masks[k]
    return Batch(
        letter_ids=ids,
        golds=golds,
        masks=masks,
        lengths=lengths,
        doc_ids=tuple(c.doc_id for c in chunks),
        offsets=tuple(c.offset for c in chunks),
    )


def make_batches(
    chunks: Sequence[Chunk],
    batch_size: int = 64,
    seed: int | None = None,
) -> list[Batch]:
    """Group chunks into batches; a seed gives a deterministic shuffle,
    None keeps the input order (inference)."""
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    order = list(range(len(chunks)))
    if seed is not None:
        rng = np.random.Generator(np.random.PCG64(seed))
        order = list(rng.permutation(len(chunks)))
    return [
        _stack([chunks[j] for j in order[i : i + batch_size]])
        for i in range(0, len(order), batch_size)
    ]


@dataclass(frozen=True)
class SplitStats:
    documents: int
    tokens: int
    chars: int
    decisions: dict[str, int] = field(default_factory=dict)


def split_stats(docs: Iterable[Document]) -> SplitStats:
    """Document/token/character counts plus per-category decision totals."""
    n_docs = n_tokens = n_chars = 0
    decisions = {k: 0 for k in CATEGORIES}
    for doc in docs:
        n_docs += 1
        letters = doc.letters
        n_tokens += hebrew_token_count(letters)
        n_chars += len(letters)
        decisions["niqqud"] += sum(ch in NIQQUD_CAPABLE for ch in letters)
        decisions["dagesh"] += sum(ch in DAGESH_CAPABLE for ch in letters)
        decisions["sin"] += sum(is_shin(ch) for ch in letters)
    return SplitStats(
        documents=n_docs, tokens=n_tokens, chars=n_chars, decisions=decisions
    )
