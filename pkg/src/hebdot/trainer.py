"""Training loop: Adam with a cyclical learning rate over two corpus phases.

Training first passes over the premodern split, then the modern one; the
optimizer state carries across but the learning-rate cycle restarts per
phase, sized to that phase's epoch length.  Every run is bitwise
reproducible from the plan seed: shuffles and dropout masks derive from it,
and nothing reads entropy elsewhere.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .codec import DAGESH_CAPABLE, NIQQUD_CAPABLE
from .corpus import (
    Chunk,
    Document,
    EmptyCorpus,
    Vocabulary,
    encode_document,
    load_corpus,
    make_batches,
)
from .dotter import Dotter, decode_labels
from .metrics import evaluate
from .network import (
    Checkpoint,
    ModelConfig,
    NonFiniteActivation,
    NonFiniteLoss,
    forward,
    init_params,
    loss_and_grads,
    make_dropout_masks,
    save_checkpoint,
)

__all__ = [
    "LRSchedule",
    "AdamState",
    "adam_step",
    "TrainPlan",
    "StepLog",
    "TrainResult",
    "train",
    "validation_wor",
    "dec_accuracy",
    "ProbeResult",
    "overfit_probe",
    "parse_config_file",
]

log = logging.getLogger(__name__)

_POLICIES = ("triangular", "triangular2", "exp_range")


@dataclass(frozen=True)
class LRSchedule:
    """Cyclical learning rate: linear ramp base -> max -> base.

    ``step_size_up`` is the step count of the ramp's rising half.  The
    triangular2 policy halves the amplitude every full cycle and exp_range
    decays it by ``gamma`` per step.
    """

    base_lr: float = 3e-4
    max_lr: float = 3e-3
    step_size_up: int = 1
    policy: str = "triangular"
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.policy not in _POLICIES:
            raise ValueError(f"policy must be one of {_POLICIES}")
        if self.step_size_up < 1:
            raise ValueError("step_size_up must be positive")
        if not 0.0 < self.base_lr <= self.max_lr:
            raise ValueError("need 0 < base_lr <= max_lr")

    def lr_at(self, step: int) -> float:
        if step < 0:
            raise ValueError("step must be non-negative")
        # integer modulo first, so every cycle evaluates on bitwise-identical
        # inputs and the schedule is exactly periodic
        x = (step % (2 * self.step_size_up)) / self.step_size_up
        pos = 1.0 - abs(x - 1.0)  # 0 at the valleys, 1 at the peaks
        top = self.max_lr
        if self.policy == "triangular2":
            cycle = step // (2 * self.step_size_up)
            top = self.base_lr + (self.max_lr - self.base_lr) / 2.0**cycle
        elif self.policy == "exp_range":
            top = self.base_lr + (self.max_lr - self.base_lr) * self.gamma**step
        # interpolation written so the valleys return base_lr exactly and
        # the peaks return the cycle's top exactly
        return self.base_lr * (1.0 - pos) + top * pos


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def init(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam update with bias correction; eps sits outside the
    square root."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


@dataclass(frozen=True)
class TrainPlan:
    seed: int = 0
    premodern_epochs: int = 1
    modern_epochs: int = 5
    batch_size: int = 64
    base_lr: float = 3e-4
    max_lr: float = 3e-3
    lr_policy: str = "triangular"
    lr_gamma: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    checkpoint_every: int = 500
    log_every: int = 50

    def __post_init__(self) -> None:
        if self.premodern_epochs < 0 or self.modern_epochs < 0:
            raise ValueError("epoch counts must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


class StepLog(NamedTuple):
    step: int
    lr: float
    loss: float
    split: str


@dataclass
class TrainResult:
    checkpoint_path: Path
    steps: int
    history: list[StepLog] = field(default_factory=list)
    val_history: list[tuple[str, int, float]] = field(default_factory=list)
    best_path: Path | None = None
    best_wor: float | None = None


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def _load_chunks(root: Path, split: str, vocab: Vocabulary) -> list[Chunk]:
    docs = load_corpus(root, split)
    return [c for d in docs for c in encode_document(d, vocab)]


def train(
    root: Path | str,
    out_path: Path | str,
    config: ModelConfig | None = None,
    plan: TrainPlan = TrainPlan(),
) -> TrainResult:
    """Run the two-phase schedule and leave a checkpoint at ``out_path``.

    A step log lands next to it at ``<out_path>.log`` and, when a
    validation split exists, the epoch with the best validation word
    accuracy is kept at ``<out_path>.best``.  On a non-finite loss the run
    raises after logging; the last periodically saved checkpoint survives.
    """
    root = Path(root)
    out_path = Path(out_path)
    vocab = Vocabulary()
    if config is None:
        config = ModelConfig(vocab_size=vocab.size)
    if config.vocab_size != vocab.size:
        raise ValueError(
            f"config.vocab_size {config.vocab_size} != vocabulary size {vocab.size}"
        )
    params = init_params(config, plan.seed)
    adam = AdamState.init(params)

    try:
        val_docs: list[Document] | None = load_corpus(root, "validation")
    except EmptyCorpus:
        val_docs = None
        log.info("no validation split; best-checkpoint tracking disabled")

    result = TrainResult(checkpoint_path=out_path, steps=0)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    log_path = out_path.with_name(out_path.name + ".log")

    def snapshot(path: Path, **meta) -> None:
        save_checkpoint(
            path,
            params,
            config,
            vocab,
            meta={"seed": plan.seed, "step": result.steps, **meta},
        )

    global_step = 0
    with log_path.open("w", encoding="utf-8") as log_file:
        phases = [
            (0, "premodern", plan.premodern_epochs),
            (1, "modern", plan.modern_epochs),
        ]
        for phase_idx, split, epochs in phases:
            if epochs == 0:
                continue
            chunks = _load_chunks(root, split, vocab)
            steps_per_epoch = math.ceil(len(chunks) / plan.batch_size)
            sched = LRSchedule(
                base_lr=plan.base_lr,
                max_lr=plan.max_lr,
                step_size_up=steps_per_epoch,
                policy=plan.lr_policy,
                gamma=plan.lr_gamma,
            )
            log.info(
                "phase %s: %d chunks, %d steps/epoch, %d epoch(s)",
                split,
                len(chunks),
                steps_per_epoch,
                epochs,
            )
            phase_step = 0
            for epoch in range(epochs):
                batches = make_batches(
                    chunks,
                    plan.batch_size,
                    seed=_derived_seed(plan.seed, phase_idx, epoch, 1),
                )
                drop_rng = np.random.Generator(
                    np.random.PCG64(
                        np.random.SeedSequence((plan.seed, phase_idx, epoch, 2))
                    )
                )
                for batch in batches:
                    lr = sched.lr_at(phase_step)
                    masks = make_dropout_masks(
                        config, batch.size, batch.letter_ids.shape[1], drop_rng
                    )
                    try:
                        loss, grads = loss_and_grads(
                            params,
                            config,
                            batch.letter_ids,
                            batch.lengths,
                            batch.golds,
                            batch.masks,
                            masks,
                        )
                    except (NonFiniteActivation, NonFiniteLoss):
                        log.error(
                            "non-finite at step %d; aborting, the last saved "
                            "checkpoint remains on disk",
                            global_step,
                        )
                        raise
                    adam_step(
                        params, grads, adam, lr, plan.beta1, plan.beta2, plan.eps
                    )
                    global_step += 1
                    phase_step += 1
                    result.steps = global_step
                    entry = StepLog(global_step, lr, loss, split)
                    result.history.append(entry)
                    log_file.write(
                        f"{entry.step}\t{entry.lr:.8g}\t{entry.loss:.6f}\t{split}\n"
                    )
                    if global_step % plan.log_every == 0 or global_step == 1:
                        log.info(
                            "step %d lr %.5f loss %.4f (%s)",
                            global_step,
                            lr,
                            loss,
                            split,
                        )
                    if (
                        plan.checkpoint_every
                        and global_step % plan.checkpoint_every == 0
                    ):
                        snapshot(out_path, phase=split, epoch=epoch)
                if val_docs is not None:
                    score = validation_wor(params, config, vocab, val_docs)
                    result.val_history.append((split, epoch, score))
                    log.info(
                        "phase %s epoch %d: validation WOR %.4f", split, epoch, score
                    )
                    if result.best_wor is None or score > result.best_wor:
                        result.best_wor = score
                        result.best_path = out_path.with_name(out_path.name + ".best")
                        snapshot(
                            result.best_path,
                            phase=split,
                            epoch=epoch,
                            validation_wor=score,
                        )
    snapshot(out_path, final=True)
    return result


def validation_wor(
    params: dict[str, np.ndarray],
    config: ModelConfig,
    vocab: Vocabulary,
    docs: list[Document],
    batch_size: int = 64,
) -> float:
    """Macro word accuracy of the current parameters over held-out docs."""
    dotter = Dotter(
        Checkpoint(
            params=params,
            config=config,
            vocab=vocab,
            dagesh_capable=DAGESH_CAPABLE,
            niqqud_capable=NIQQUD_CAPABLE,
            meta={},
        ),
        batch_size=batch_size,
    )
    preds = [dotter.dot_document(d) for d in docs]
    return evaluate(docs, preds).macro["wor"]


def dec_accuracy(
    params: dict[str, np.ndarray], config: ModelConfig, batches
) -> float:
    """Fraction of all decisions the current parameters get right."""
    correct = 0
    total = 0
    for batch in batches:
        logits, _ = forward(params, config, batch.letter_ids, batch.lengths)
        labels = decode_labels(logits, batch.masks)
        for k, m in batch.masks.items():
            correct += int((labels[k][m] == batch.golds[k][m]).sum())
            total += int(m.sum())
    return correct / total if total else 0.0


@dataclass(frozen=True)
class ProbeResult:
    reached: bool
    epochs: int
    final_dec: float
    dec_history: tuple[float, ...]
    loss_history: tuple[float, ...]


def overfit_probe(
    doc: Document,
    embed_dim: int = 64,
    hidden_dim: int = 64,
    dropout: float = 0.1,
    max_epochs: int = 200,
    target: float = 0.995,
    seed: int = 0,
    batch_size: int = 8,
    lr: float = 2e-3,
) -> ProbeResult:
    """Sanity check that the whole learning stack can memorize one document.

    Trains a small model on the document alone and measures decision
    accuracy (inference mode) after every epoch, stopping early once the
    target is reached.
    """
    vocab = Vocabulary()
    config = ModelConfig(
        vocab_size=vocab.size,
        embed_dim=embed_dim,
        hidden_dim=hidden_dim,
        dropout=dropout,
    )
    params = init_params(config, seed)
    adam = AdamState.init(params)
    chunks = encode_document(doc, vocab)
    eval_batches = make_batches(chunks, batch_size, seed=None)
    dec_history: list[float] = []
    loss_history: list[float] = []
    for epoch in range(max_epochs):
        drop_rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, epoch, 2)))
        )
        epoch_losses = []
        for batch in make_batches(
            chunks, batch_size, seed=_derived_seed(seed, epoch, 1)
        ):
            masks = make_dropout_masks(
                config, batch.size, batch.letter_ids.shape[1], drop_rng
            )
            loss, grads = loss_and_grads(
                params,
                config,
                batch.letter_ids,
                batch.lengths,
                batch.golds,
                batch.masks,
                masks,
            )
            adam_step(params, grads, adam, lr)
            epoch_losses.append(loss)
        loss_history.append(float(np.mean(epoch_losses)))
        acc = dec_accuracy(params, config, eval_batches)
        dec_history.append(acc)
        if acc >= target:
            return ProbeResult(
                reached=True,
                epochs=epoch + 1,
                final_dec=acc,
                dec_history=tuple(dec_history),
                loss_history=tuple(loss_history),
            )
    return ProbeResult(
        reached=False,
        epochs=max_epochs,
        final_dec=dec_history[-1] if dec_history else 0.0,
        dec_history=tuple(dec_history),
        loss_history=tuple(loss_history),
    )


def parse_config_file(path: Path | str) -> dict[str, object]:
    """Read ``key = value`` lines; '#' starts a comment, blanks are skipped.

    Values parse as int, then float, then true/false, else stay strings.
    """
    out: dict[str, object] = {}
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ValueError(f"{path}:{lineno}: empty key or value")
        out[key] = _parse_value(value)
    return out


def _parse_value(value: str) -> object:
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    return value
