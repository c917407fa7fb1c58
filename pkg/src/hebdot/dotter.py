"""Inference: turn undotted text into dotted text with a trained model.

The raw input is never altered beyond diacritics: every non-mark codepoint
passes through byte for byte, existing marks are dropped, and predicted
marks are inserted after their letters.  Internally the text is reduced to
the model alphabet; an alignment from normalized positions back to raw
positions carries the predictions home.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import codec
from .codec import Dagesh, MarkedChar, Niqqud, Sin, marks_of, strip_diacritics
from .corpus import (
    MAX_CHUNK_LEN,
    Batch,
    Document,
    Vocabulary,
    encode_document,
    make_batches,
)
from .network import Checkpoint, ModelConfig, forward, load_checkpoint

__all__ = ["AlignmentMap", "Dotter", "decode_labels"]

_MARK_CLASSES = (
    codec.CharClass.NIQQUD_MARK,
    codec.CharClass.DAGESH_MARK,
    codec.CharClass.SIN_SHIN_MARK,
    codec.CharClass.DROPPED_MARK,
)


@dataclass(frozen=True)
class AlignmentMap:
    """Where each normalized position came from in the raw string.

    ``spans[i]`` is the half-open raw span behind normalized position ``i``;
    ``removed`` lists raw spans with no normalized counterpart.  Ordered and
    non-overlapping, together they cover the raw string exactly.
    """

    spans: tuple[tuple[int, int], ...]
    removed: tuple[tuple[int, int], ...]

    @classmethod
    def build(cls, raw: str) -> tuple[str, "AlignmentMap"]:
        norm, spans, removed = codec.normalize_mapped(raw)
        return norm, cls(spans=tuple(spans), removed=tuple(removed))


def decode_labels(
    logits: dict[str, np.ndarray], masks: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Argmax decode into codec label space.

    Positions outside a category's mask get the null label; the sin head's
    two-way argmax shifts up by one so 0 stays "no decision".  Ties resolve
    to the lower label index.
    """
    niq = logits["niqqud"].argmax(axis=-1).astype(np.int8)
    dag = logits["dagesh"].argmax(axis=-1).astype(np.int8)
    sin = (logits["sin"].argmax(axis=-1) + 1).astype(np.int8)
    return {
        "niqqud": np.where(masks["niqqud"], niq, np.int8(0)),
        "dagesh": np.where(masks["dagesh"], dag, np.int8(0)),
        "sin": np.where(masks["sin"], sin, np.int8(0)),
    }


class Dotter:
    """Wraps a trained checkpoint for dotting strings and documents."""

    def __init__(self, checkpoint: Checkpoint, batch_size: int = 64) -> None:
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        self.params = checkpoint.params
        self.config: ModelConfig = checkpoint.config
        self.vocab: Vocabulary = checkpoint.vocab
        self.dagesh_capable = checkpoint.dagesh_capable
        self.niqqud_capable = checkpoint.niqqud_capable
        self.batch_size = batch_size

    @classmethod
    def load(cls, path: Path | str, batch_size: int = 64) -> "Dotter":
        return cls(load_checkpoint(path), batch_size=batch_size)

    def _label(self, letters: str) -> list[MarkedChar]:
        """Predict marks for a bare letter stream (no diacritics inside)."""
        doc = Document(
            id="<input>",
            source="input",
            chars=tuple(MarkedChar(letter=ch) for ch in letters),
            text=letters,
        )
        chunks = encode_document(
            doc,
            self.vocab,
            max_len=MAX_CHUNK_LEN,
            dagesh_capable=self.dagesh_capable,
            niqqud_capable=self.niqqud_capable,
        )
        niq = np.zeros(len(letters), dtype=np.int8)
        dag = np.zeros(len(letters), dtype=np.int8)
        sin = np.zeros(len(letters), dtype=np.int8)
        for batch in make_batches(chunks, self.batch_size, seed=None):
            labels = self._decode_batch(batch)
            for row in range(batch.size):
                n = int(batch.lengths[row])
                at = batch.offsets[row]
                niq[at : at + n] = labels["niqqud"][row, :n]
                dag[at : at + n] = labels["dagesh"][row, :n]
                sin[at : at + n] = labels["sin"][row, :n]
        return [
            MarkedChar(
                letter=ch,
                niqqud=Niqqud(int(niq[i])),
                dagesh=Dagesh(int(dag[i])),
                sin=Sin(int(sin[i])),
            )
            for i, ch in enumerate(letters)
        ]

    def _decode_batch(self, batch: Batch) -> dict[str, np.ndarray]:
        logits, _ = forward(
            self.params, self.config, batch.letter_ids, batch.lengths
        )
        return decode_labels(logits, batch.masks)

    def dot(self, text: str, keep_existing: bool = False) -> str:
        """Dot a string.

        Existing diacritics are stripped before prediction, so dotting is
        insensitive to whatever marks the input carried; with
        ``keep_existing`` an input mark wins over the prediction in its own
        category.  Characters outside the model alphabet (digits, Latin,
        anything else) are preserved untouched in place.
        """
        stripped = strip_diacritics(text)
        raw_of_stripped = [
            i for i, ch in enumerate(text) if codec.char_class(ch) not in _MARK_CLASSES
        ]
        norm, alignment = AlignmentMap.build(stripped)
        if not any(codec.is_hebrew_letter(ch) for ch in norm):
            return stripped
        predicted = self._label(norm)
        if keep_existing:
            predicted = _apply_overrides(predicted, text)

        marks_after: dict[int, str] = {}
        for pos, mc in enumerate(predicted):
            mark = marks_of(mc)
            if not mark:
                continue
            start, _ = alignment.spans[pos]
            marks_after[raw_of_stripped[start]] = mark

        out: list[str] = []
        for i, ch in enumerate(text):
            if codec.char_class(ch) in _MARK_CLASSES:
                continue
            out.append(ch)
            mark = marks_after.get(i)
            if mark is not None:
                out.append(mark)
        return "".join(out)

    def dot_stream(self, lines: Iterable[str]) -> Iterator[str]:
        """Dot line by line; newlines pass through like any other non-mark."""
        for line in lines:
            yield self.dot(line)

    def dot_document(self, doc: Document) -> Document:
        """Re-dot a loaded document, keeping its id; for evaluation runs."""
        predicted = self._label(doc.letters)
        return Document(
            id=doc.id,
            source="dotted",
            chars=tuple(predicted),
            text=codec.compose(predicted),
        )


def _apply_overrides(predicted: list[MarkedChar], raw: str) -> list[MarkedChar]:
    """Replace predictions with input marks wherever the input had any."""
    existing = codec.decompose(codec.normalize(raw))
    if len(existing) != len(predicted):
        # normalization of the marked and stripped text must agree on letters
        raise codec.InvariantViolation(
            "input marks do not align with the letter stream"
        )
    merged = []
    for have, pred in zip(existing, predicted):
        merged.append(
            MarkedChar(
                letter=pred.letter,
                niqqud=have.niqqud if have.niqqud != Niqqud.NONE else pred.niqqud,
                dagesh=have.dagesh if have.dagesh != Dagesh.NONE else pred.dagesh,
                sin=have.sin if have.sin != Sin.NONE else pred.sin,
            )
        )
    return codec.drop_invalid_marks(merged)
