"""Accuracy metrics for dotted text, scored at four granularities.

DEC counts every single classification decision; CHA requires all decisions
on a character to agree; WOR requires every character of a token to agree;
VOC relaxes WOR to pronunciation, so marks that read identically (qamats
versus patah, sheva versus nothing) do not count as errors.

Gold and prediction are compared strictly position by position, which only
makes sense when their letter streams are identical; any divergence raises
rather than producing a silently shifted score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .codec import (
    MarkedChar,
    can_dagesh,
    can_niqqud,
    is_hebrew_letter,
    is_shin,
    vocalization_signature,
)
from .corpus import Document, token_spans

__all__ = [
    "LetterStreamMismatch",
    "Counts",
    "DocScores",
    "Report",
    "METRIC_NAMES",
    "align",
    "dec",
    "cha",
    "wor",
    "voc",
    "score_document",
    "evaluate",
    "render_report",
]

log = logging.getLogger(__name__)

METRIC_NAMES = ("dec", "cha", "wor", "voc")


class LetterStreamMismatch(Exception):
    """Gold and prediction disagree on the undotted text itself."""


@dataclass(frozen=True)
class Counts:
    correct: int
    total: int

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.correct + other.correct, self.total + other.total)

    @property
    def ratio(self) -> float:
        if self.total == 0:
            raise ZeroDivisionError("no decisions to score")
        return self.correct / self.total


def align(gold: Document, pred: Document) -> list[tuple[MarkedChar, MarkedChar]]:
    """Pair up characters, or pinpoint where the letter streams diverge."""
    a, b = gold.letters, pred.letters
    if a != b:
        limit = min(len(a), len(b))
        at = next((i for i in range(limit) if a[i] != b[i]), limit)
        ga = a[at] if at < len(a) else "<end>"
        pb = b[at] if at < len(b) else "<end>"
        raise LetterStreamMismatch(
            f"{gold.id}: letter streams diverge at position {at}: "
            f"gold {ga!r} vs prediction {pb!r}"
        )
    return list(zip(gold.chars, pred.chars))


def _decisions(g: MarkedChar, p: MarkedChar) -> list[bool]:
    """Outcome of each decision slot the letter admits."""
    if not is_hebrew_letter(g.letter):
        return []
    out = []
    if can_niqqud(g.letter):
        out.append(g.niqqud == p.niqqud)
    if can_dagesh(g.letter):
        out.append(g.dagesh == p.dagesh)
    if is_shin(g.letter):
        out.append(g.sin == p.sin)
    return out


def dec(gold: Document, pred: Document) -> Counts:
    """Every decision scored independently."""
    correct = total = 0
    for g, p in align(gold, pred):
        outcomes = _decisions(g, p)
        total += len(outcomes)
        correct += sum(outcomes)
    return Counts(correct, total)


def cha(gold: Document, pred: Document) -> Counts:
    """Characters with at least one decision, all of which must agree."""
    correct = total = 0
    for g, p in align(gold, pred):
        outcomes = _decisions(g, p)
        if not outcomes:
            continue
        total += 1
        correct += all(outcomes)
    return Counts(correct, total)


def _token_scores(
    gold: Document, pred: Document, char_ok
) -> Counts:
    pairs = align(gold, pred)
    spans = token_spans(gold.letters)
    correct = 0
    for start, end in spans:
        correct += all(char_ok(*pairs[i]) for i in range(start, end))
    return Counts(correct, len(spans))


def wor(gold: Document, pred: Document) -> Counts:
    """Whole tokens: every decision on every character must agree."""
    return _token_scores(gold, pred, lambda g, p: all(_decisions(g, p)))


def _same_pronunciation(g: MarkedChar, p: MarkedChar) -> bool:
    if not is_hebrew_letter(g.letter):
        return True
    return vocalization_signature(g) == vocalization_signature(p)


def voc(gold: Document, pred: Document) -> Counts:
    """Whole tokens up to pronunciation.  Never below WOR: exact label
    agreement implies equal signatures."""
    return _token_scores(gold, pred, _same_pronunciation)


@dataclass(frozen=True)
class DocScores:
    doc_id: str
    dec: Counts
    cha: Counts
    wor: Counts
    voc: Counts

    def by_name(self, name: str) -> Counts:
        return getattr(self, name)


def score_document(gold: Document, pred: Document) -> DocScores:
    return DocScores(
        doc_id=gold.id,
        dec=dec(gold, pred),
        cha=cha(gold, pred),
        wor=wor(gold, pred),
        voc=voc(gold, pred),
    )


@dataclass(frozen=True)
class Report:
    docs: tuple[DocScores, ...]
    macro: dict[str, float]
    skipped: tuple[str, ...]


def evaluate(golds: list[Document], preds: list[Document]) -> Report:
    """Score predictions against gold, macro-averaging over documents.

    Documents pair by id and every gold document must have a prediction.
    Documents with no decisions at all sit outside the average and are
    reported as skipped.  The macro average weighs every document equally,
    whatever its size.
    """
    by_id = {p.id: p for p in preds}
    missing = [g.id for g in golds if g.id not in by_id]
    if missing:
        raise ValueError(f"no prediction for document(s): {', '.join(missing)}")

    scored: list[DocScores] = []
    skipped: list[str] = []
    for g in golds:
        s = score_document(g, by_id[g.id])
        if s.dec.total == 0:
            skipped.append(g.id)
            log.warning("%s: no decisions, excluded from the average", g.id)
            continue
        if s.voc.correct < s.wor.correct:
            raise AssertionError(
                f"{g.id}: VOC below WOR, the relaxation is broken"
            )
        scored.append(s)
    if not scored:
        raise ValueError("no scorable documents")

    macro = {
        name: sum(s.by_name(name).ratio for s in scored) / len(scored)
        for name in METRIC_NAMES
    }
    return Report(docs=tuple(scored), macro=macro, skipped=tuple(skipped))


def render_report(report: Report, counts: bool = False) -> str:
    """Tab-separated rows per document plus a MACRO line, percentages with
    two decimals; ``counts`` appends raw correct/total pairs."""
    lines = ["doc_id\tdec\tcha\twor\tvoc"]
    for s in report.docs:
        cells = [s.doc_id]
        for name in METRIC_NAMES:
            c = s.by_name(name)
            cell = f"{100.0 * c.ratio:.2f}"
            if counts:
                cell += f" ({c.correct}/{c.total})"
            cells.append(cell)
        lines.append("\t".join(cells))
    macro_cells = ["MACRO"] + [
        f"{100.0 * report.macro[name]:.2f}" for name in METRIC_NAMES
    ]
    lines.append("\t".join(macro_cells))
    for doc_id in report.skipped:
        lines.append(f"# skipped {doc_id}: no decisions")
    return "\n".join(lines)
