"""Character BiLSTM tagger with three classification heads, in plain numpy.

The model embeds characters, runs them through stacked bidirectional LSTM
layers with inter-layer dropout, projects the top features through one
shared linear map, and scores each diacritic category with its own linear
head.  Forward, loss and analytic gradients are implemented here directly;
:func:`gradient_check` compares those gradients against central finite
differences and is wired into both the test suite and the CLI.

Everything is deterministic given the seeds: parameter init draws in a
fixed order, and dropout masks are created outside the forward pass so the
same masks can be replayed.
"""

from __future__ import annotations

import dataclasses
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import DAGESH_CAPABLE, NIQQUD_CAPABLE, Dagesh, Niqqud, Sin
from .corpus import CATEGORIES, Vocabulary

__all__ = [
    "HEAD_SIZES",
    "ModelConfig",
    "ShapeMismatch",
    "NonFiniteActivation",
    "NonFiniteLoss",
    "CorruptCheckpoint",
    "VersionMismatch",
    "Checkpoint",
    "init_params",
    "make_dropout_masks",
    "forward",
    "effective_targets",
    "masked_loss",
    "compute_loss",
    "loss_and_grads",
    "gradient_check",
    "GradCheckReport",
    "make_synthetic_batch",
    "save_checkpoint",
    "load_checkpoint",
]

# Sin head scores only the two dot kinds; a bare shin never occurs in fully
# dotted text, so the no-dot case is excluded from the loss instead of being
# a class.
HEAD_SIZES = {
    "niqqud": len(Niqqud),
    "dagesh": len(Dagesh),
    "sin": len(Sin) - 1,
}


class ShapeMismatch(ValueError):
    """Model inputs disagree with the configuration."""


class NonFiniteActivation(FloatingPointError):
    """A hidden state went inf/nan during the forward pass."""


class NonFiniteLoss(FloatingPointError):
    """The loss value is not finite."""


class CorruptCheckpoint(ValueError):
    """Checkpoint bytes do not parse as the expected format."""


class VersionMismatch(ValueError):
    """Checkpoint was written by an incompatible format version."""


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int = 400
    hidden_dim: int = 400
    num_layers: int = 2
    dropout: float = 0.1
    residual: bool = False

    def __post_init__(self) -> None:
        if self.vocab_size < 2:
            raise ValueError("vocab_size must cover padding and fallback ids")
        if self.embed_dim < 1 or self.hidden_dim < 1 or self.num_layers < 1:
            raise ValueError("model dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.residual and self.num_layers < 2:
            raise ValueError("residual sums the top two layers; need num_layers >= 2")


_DIRECTIONS = ("fwd", "bwd")


def init_params(
    config: ModelConfig, seed: int, dtype: np.dtype = np.float32
) -> dict[str, np.ndarray]:
    """Fresh parameters.  Weights are Xavier-uniform, biases zero except the
    forget-gate slice, which starts at 1 so early gradients flow."""
    rng = np.random.Generator(np.random.PCG64(seed))
    h = config.hidden_dim

    def xavier(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)

    params: dict[str, np.ndarray] = {}
    params["embedding"] = xavier(config.vocab_size, config.embed_dim)
    in_dim = config.embed_dim
    for layer in range(config.num_layers):
        for direction in _DIRECTIONS:
            prefix = f"lstm{layer}_{direction}"
            params[f"{prefix}_Wx"] = xavier(in_dim, 4 * h)
            params[f"{prefix}_Wh"] = xavier(h, 4 * h)
            b = np.zeros(4 * h, dtype=dtype)
            b[h : 2 * h] = 1.0  # gate layout: input | forget | cell | output
            params[f"{prefix}_b"] = b
        in_dim = 2 * h
    params["proj_W"] = xavier(2 * h, 2 * h)
    params["proj_b"] = np.zeros(2 * h, dtype=dtype)
    for k in CATEGORIES:
        params[f"head_{k}_W"] = xavier(2 * h, HEAD_SIZES[k])
        params[f"head_{k}_b"] = np.zeros(HEAD_SIZES[k], dtype=dtype)
    return params


def make_dropout_masks(
    config: ModelConfig, batch: int, width: int, rng: np.random.Generator
) -> list[np.ndarray] | None:
    """Per-layer keep masks for one training step; None when dropout is off."""
    if config.dropout == 0.0:
        return None
    shape = (batch, width, 2 * config.hidden_dim)
    return [rng.random(shape) >= config.dropout for _ in range(config.num_layers)]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # two-branch form keeps exp() away from large positive arguments
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _reversal_index(lengths: np.ndarray, width: int) -> np.ndarray:
    """Per-row time flip that leaves padding slots in place.

    idx[b, t] = lengths[b]-1-t for real positions and t past them.  The map
    is its own inverse, and because real positions stay in a contiguous
    prefix, states at real positions never depend on batch width.
    """
    t = np.arange(width)[None, :]
    flipped = lengths[:, None] - 1 - t
    return np.where(t < lengths[:, None], flipped, t)


@dataclass
class _DirCache:
    u: np.ndarray  # (B, T, in) input in this direction's time order
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray  # (B, T, H) each
    h: np.ndarray


@dataclass
class ForwardCache:
    embedded: np.ndarray
    rev_idx: np.ndarray
    directions: list[dict[str, _DirCache]]
    layer_out: list[np.ndarray]  # concat(fwd, bwd) per layer, document order
    dropped: list[np.ndarray]  # layer_out after dropout scaling
    feats: np.ndarray
    proj: np.ndarray
    dropout_masks: list[np.ndarray] | None


def _run_direction(
    u: np.ndarray, Wx: np.ndarray, Wh: np.ndarray, b: np.ndarray
) -> _DirCache:
    B, T, _ = u.shape
    H = Wh.shape[0]
    dtype = u.dtype
    i_s = np.empty((B, T, H), dtype)
    f_s = np.empty((B, T, H), dtype)
    g_s = np.empty((B, T, H), dtype)
    o_s = np.empty((B, T, H), dtype)
    c_s = np.empty((B, T, H), dtype)
    h_s = np.empty((B, T, H), dtype)
    h = np.zeros((B, H), dtype)
    c = np.zeros((B, H), dtype)
    for t in range(T):
        z = u[:, t] @ Wx + h @ Wh + b
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = _sigmoid(z[:, 3 * H :])
        c = f * c + i * g
        h = o * np.tanh(c)
        i_s[:, t], f_s[:, t], g_s[:, t], o_s[:, t] = i, f, g, o
        c_s[:, t], h_s[:, t] = c, h
    return _DirCache(u=u, i=i_s, f=f_s, g=g_s, o=o_s, c=c_s, h=h_s)


def forward(
    params: dict[str, np.ndarray],
    config: ModelConfig,
    ids: np.ndarray,
    lengths: np.ndarray,
    dropout_masks: list[np.ndarray] | None = None,
) -> tuple[dict[str, np.ndarray], ForwardCache]:
    """Score every position.  Returns per-category logits (B, T, n_labels)
    and the cache that :func:`loss_and_grads` consumes."""
    if ids.ndim != 2:
        raise ShapeMismatch(f"ids must be (batch, time), got shape {ids.shape}")
    B, T = ids.shape
    if lengths.shape != (B,):
        raise ShapeMismatch(f"lengths shape {lengths.shape} does not match batch {B}")
    if T == 0 or np.any(lengths < 1) or np.any(lengths > T):
        raise ShapeMismatch("row lengths must lie in [1, width]")
    if np.any(ids < 0) or np.any(ids >= config.vocab_size):
        raise ShapeMismatch("character ids outside the vocabulary")
    if dropout_masks is not None and len(dropout_masks) != config.num_layers:
        raise ShapeMismatch("need one dropout mask per layer")

    emb = params["embedding"]
    dtype = emb.dtype
    E = emb[ids]
    rev = _reversal_index(np.asarray(lengths, dtype=np.int64), T)
    rows = np.arange(B)[:, None]

    u = E
    directions: list[dict[str, _DirCache]] = []
    layer_out: list[np.ndarray] = []
    dropped: list[np.ndarray] = []
    inv_keep = 1.0 / (1.0 - config.dropout) if config.dropout else 1.0
    for layer in range(config.num_layers):
        per_dir: dict[str, _DirCache] = {}
        outs = []
        for direction in _DIRECTIONS:
            prefix = f"lstm{layer}_{direction}"
            u_dir = u if direction == "fwd" else u[rows, rev]
            cache = _run_direction(
                u_dir,
                params[f"{prefix}_Wx"],
                params[f"{prefix}_Wh"],
                params[f"{prefix}_b"],
            )
            per_dir[direction] = cache
            outs.append(cache.h if direction == "fwd" else cache.h[rows, rev])
        H_layer = np.concatenate(outs, axis=2)
        if not np.all(np.isfinite(H_layer)):
            raise NonFiniteActivation(f"layer {layer} produced non-finite states")
        if dropout_masks is not None:
            D = H_layer * dropout_masks[layer] * inv_keep
        else:
            D = H_layer
        directions.append(per_dir)
        layer_out.append(H_layer)
        dropped.append(D)
        u = D

    feats = dropped[-1]
    if config.residual:
        feats = feats + dropped[-2]
    P = feats @ params["proj_W"] + params["proj_b"]
    logits = {k: P @ params[f"head_{k}_W"] + params[f"head_{k}_b"] for k in CATEGORIES}
    cache = ForwardCache(
        embedded=E,
        rev_idx=rev,
        directions=directions,
        layer_out=layer_out,
        dropped=dropped,
        feats=feats,
        proj=P,
        dropout_masks=dropout_masks,
    )
    assert dtype == feats.dtype
    return logits, cache


def effective_targets(
    golds: dict[str, np.ndarray], masks: dict[str, np.ndarray]
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Head-space targets and loss masks per category.

    Sin decisions whose gold carries no dot (undotted source) drop out of
    the loss, and the remaining sin golds shift down by one to index the
    two-way head.
    """
    out = {}
    for k in CATEGORIES:
        g = golds[k]
        m = masks[k]
        if k == "sin":
            m = m & (g > 0)
            g = np.where(m, g - 1, 0).astype(g.dtype)
        out[k] = (g, m)
    return out


def _nll_and_softmax(
    sel: np.ndarray, gold: np.ndarray
) -> tuple[np.float64, np.ndarray]:
    m = sel.max(axis=1, keepdims=True)
    shifted = sel - m
    exp = np.exp(shifted)
    denom = exp.sum(axis=1, keepdims=True)
    # summed, not averaged; accumulate in float64 regardless of model dtype
    nll = np.sum(
        np.log(denom[:, 0]) - shifted[np.arange(sel.shape[0]), gold],
        dtype=np.float64,
    )
    return nll, exp / denom


def masked_loss(
    logits: dict[str, np.ndarray],
    golds: dict[str, np.ndarray],
    masks: dict[str, np.ndarray],
) -> float:
    """Masked cross-entropy from raw logits.

    Summed over every live decision in every category and divided by the
    total number of live decisions; zero live decisions give exactly 0.
    Masked positions are never gathered, so their logit values cannot move
    the result even by rounding.
    """
    targets = effective_targets(golds, masks)
    total = np.float64(0.0)
    count = 0
    for k in CATEGORIES:
        g, m = targets[k]
        if not m.any():
            continue
        nll, _ = _nll_and_softmax(logits[k][m], g[m])
        total += nll
        count += int(m.sum())
    if count == 0:
        return 0.0
    loss = float(total / count)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss}")
    return loss


def compute_loss(
    params: dict[str, np.ndarray],
    config: ModelConfig,
    ids: np.ndarray,
    lengths: np.ndarray,
    golds: dict[str, np.ndarray],
    masks: dict[str, np.ndarray],
    dropout_masks: list[np.ndarray] | None = None,
) -> float:
    """Forward pass followed by :func:`masked_loss`."""
    logits, _ = forward(params, config, ids, lengths, dropout_masks)
    return masked_loss(logits, golds, masks)


def _zeros_like_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


def loss_and_grads(
    params: dict[str, np.ndarray],
    config: ModelConfig,
    ids: np.ndarray,
    lengths: np.ndarray,
    golds: dict[str, np.ndarray],
    masks: dict[str, np.ndarray],
    dropout_masks: list[np.ndarray] | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss plus analytic gradients for every parameter.

    Masked positions contribute exactly zero: their rows are never gathered
    into the loss, so no rounding residue from them can reach a gradient.
    """
    logits, cache = forward(params, config, ids, lengths, dropout_masks)
    targets = effective_targets(golds, masks)
    count = sum(int(m.sum()) for _, m in targets.values())
    grads = _zeros_like_params(params)
    if count == 0:
        return 0.0, grads

    dtype = cache.feats.dtype
    B, T = ids.shape
    H2 = 2 * config.hidden_dim
    total = np.float64(0.0)
    P_flat = cache.proj.reshape(B * T, H2)
    dP = np.zeros_like(cache.proj)
    for k in CATEGORIES:
        g, m = targets[k]
        if not m.any():
            continue
        nll, soft = _nll_and_softmax(logits[k][m], g[m])
        total += nll
        soft[np.arange(soft.shape[0]), g[m]] -= 1.0
        dlog = np.zeros_like(logits[k])
        dlog[m] = (soft / count).astype(dtype)
        dlog_flat = dlog.reshape(B * T, -1)
        grads[f"head_{k}_W"] += P_flat.T @ dlog_flat
        grads[f"head_{k}_b"] += dlog_flat.sum(axis=0)
        dP += dlog @ params[f"head_{k}_W"].T
    loss = float(total / count)
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss}")

    dP_flat = dP.reshape(B * T, H2)
    grads["proj_W"] += cache.feats.reshape(B * T, H2).T @ dP_flat
    grads["proj_b"] += dP_flat.sum(axis=0)
    dfeats = dP @ params["proj_W"].T

    d_dropped = [np.zeros_like(d) for d in cache.dropped]
    d_dropped[-1] += dfeats
    if config.residual:
        d_dropped[-2] += dfeats

    inv_keep = 1.0 / (1.0 - config.dropout) if config.dropout else 1.0
    rows = np.arange(B)[:, None]
    rev = cache.rev_idx
    for layer in range(config.num_layers - 1, -1, -1):
        dD = d_dropped[layer]
        if cache.dropout_masks is not None:
            dH = dD * cache.dropout_masks[layer] * inv_keep
        else:
            dH = dD
        H = config.hidden_dim
        dU_total: np.ndarray | None = None
        for di, direction in enumerate(_DIRECTIONS):
            prefix = f"lstm{layer}_{direction}"
            dc_cache = cache.directions[layer][direction]
            dh_doc = dH[:, :, di * H : (di + 1) * H]
            dh_local = dh_doc if direction == "fwd" else dh_doc[rows, rev]
            dU_local = _backprop_direction(
                dc_cache,
                dh_local,
                params[f"{prefix}_Wx"],
                params[f"{prefix}_Wh"],
                grads[f"{prefix}_Wx"],
                grads[f"{prefix}_Wh"],
                grads[f"{prefix}_b"],
            )
            dU_doc = dU_local if direction == "fwd" else dU_local[rows, rev]
            dU_total = dU_doc if dU_total is None else dU_total + dU_doc
        assert dU_total is not None
        if layer > 0:
            d_dropped[layer - 1] += dU_total
        else:
            dE = dU_total
    np.add.at(grads["embedding"], ids, dE)
    return loss, grads


def _backprop_direction(
    cache: _DirCache,
    dh_seq: np.ndarray,
    Wx: np.ndarray,
    Wh: np.ndarray,
    gWx: np.ndarray,
    gWh: np.ndarray,
    gb: np.ndarray,
) -> np.ndarray:
    """Reverse-time pass for one direction, accumulating into the provided
    gradient buffers.  Returns the gradient w.r.t. this direction's input."""
    B, T, H = dh_seq.shape
    dtype = dh_seq.dtype
    dU = np.empty_like(cache.u)
    dh_next = np.zeros((B, H), dtype)
    dc_next = np.zeros((B, H), dtype)
    zeros = np.zeros((B, H), dtype)
    for t in range(T - 1, -1, -1):
        i, f, g, o = cache.i[:, t], cache.f[:, t], cache.g[:, t], cache.o[:, t]
        c = cache.c[:, t]
        c_prev = cache.c[:, t - 1] if t > 0 else zeros
        h_prev = cache.h[:, t - 1] if t > 0 else zeros
        tc = np.tanh(c)
        dh = dh_seq[:, t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        gWx += cache.u[:, t].T @ dz
        gWh += h_prev.T @ dz
        gb += dz.sum(axis=0)
        dU[:, t] = dz @ Wx.T
        dh_next = dz @ Wh.T
        dc_next = dc * f
    return dU


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    per_array: dict[str, float]
    samples: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance


def gradient_check(
    config: ModelConfig,
    ids: np.ndarray,
    lengths: np.ndarray,
    golds: dict[str, np.ndarray],
    masks: dict[str, np.ndarray],
    seed: int = 0,
    step: float = 1e-3,
    samples_per_array: int = 500,
    tolerance: float = 1e-4,
    dropout_masks: list[np.ndarray] | None = None,
) -> GradCheckReport:
    """Compare analytic gradients with central finite differences.

    Runs the whole computation in float64; the same dropout masks are
    replayed on every evaluation so the loss stays a deterministic function
    of the parameters.  Relative error uses a small floor so near-zero
    entries compare by absolute difference.
    """
    params = init_params(config, seed=seed, dtype=np.float64)
    _, grads = loss_and_grads(
        params, config, ids, lengths, golds, masks, dropout_masks
    )
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    floor = 1e-8
    per_array: dict[str, float] = {}
    total_samples = 0
    for name in sorted(params):
        arr = params[name]
        n = min(samples_per_array, arr.size)
        flat_idx = rng.choice(arr.size, size=n, replace=False)
        total_samples += n
        worst = 0.0
        flat = arr.reshape(-1)
        for j in flat_idx:
            orig = flat[j]
            flat[j] = orig + step
            up = compute_loss(params, config, ids, lengths, golds, masks, dropout_masks)
            flat[j] = orig - step
            down = compute_loss(
                params, config, ids, lengths, golds, masks, dropout_masks
            )
            flat[j] = orig
            fd = (up - down) / (2.0 * step)
            an = grads[name].reshape(-1)[j]
            rel = abs(an - fd) / max(abs(an), abs(fd), floor)
            worst = max(worst, rel)
        per_array[name] = worst
    return GradCheckReport(
        max_rel_err=max(per_array.values()),
        per_array=per_array,
        samples=total_samples,
        tolerance=tolerance,
    )


def make_synthetic_batch(
    config: ModelConfig, batch: int, width: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Random but well-formed model inputs for gradient checking.

    Rows get varied lengths (the first spans the full width), masks are off
    past each row's length, and sin golds include the no-dot case so the
    loss exclusion path gets exercised too.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    ids = rng.integers(2, config.vocab_size, size=(batch, width), dtype=np.int32)
    lengths = rng.integers(
        max(1, width // 2), width + 1, size=batch, dtype=np.int32
    )
    lengths[0] = width
    golds = {
        "niqqud": rng.integers(0, HEAD_SIZES["niqqud"], size=(batch, width)).astype(
            np.int8
        ),
        "dagesh": rng.integers(0, HEAD_SIZES["dagesh"], size=(batch, width)).astype(
            np.int8
        ),
        "sin": rng.integers(0, 3, size=(batch, width)).astype(np.int8),
    }
    masks = {
        "niqqud": rng.random((batch, width)) < 0.7,
        "dagesh": rng.random((batch, width)) < 0.6,
        "sin": rng.random((batch, width)) < 0.2,
    }
    live = np.arange(width)[None, :] < lengths[:, None]
    for k in CATEGORIES:
        masks[k] &= live
        ids[~live] = 0
        golds[k][~masks[k]] = 0
    return ids, lengths, golds, masks


CHECKPOINT_MAGIC = b"NKDM"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    params: dict[str, np.ndarray]
    config: ModelConfig
    vocab: Vocabulary
    dagesh_capable: frozenset[str]
    niqqud_capable: frozenset[str]
    meta: dict


def save_checkpoint(
    path: Path | str,
    params: dict[str, np.ndarray],
    config: ModelConfig,
    vocab: Vocabulary,
    dagesh_capable: frozenset[str] = DAGESH_CAPABLE,
    niqqud_capable: frozenset[str] = NIQQUD_CAPABLE,
    meta: dict | None = None,
) -> None:
    """Write a self-describing binary checkpoint.

    Layout: magic, u32 version, length-prefixed JSON header (config,
    vocabulary, capability sets, free-form metadata), then each array as a
    length-prefixed name, u32 rank, u32 dims and row-major float32 bytes.
    All integers little-endian.  Arrays are written in sorted name order so
    equal models produce identical bytes.
    """
    header = {
        "config": dataclasses.asdict(config),
        "vocab": vocab.to_json(),
        "dagesh_capable": "".join(sorted(dagesh_capable)),
        "niqqud_capable": "".join(sorted(niqqud_capable)),
        "meta": meta or {},
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    buf.write(struct.pack("<I", len(params)))
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        name_b = name.encode("utf-8")
        buf.write(struct.pack("<I", len(name_b)))
        buf.write(name_b)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes(order="C"))
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: Path | str) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises VersionMismatch for a future format version and CorruptCheckpoint
    for anything that does not parse cleanly.
    """
    data = Path(path).read_bytes()
    view = memoryview(data)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise CorruptCheckpoint(f"{path}: truncated at byte {pos}")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    def take_u32() -> int:
        return struct.unpack("<I", take(4))[0]

    if bytes(take(4)) != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint(f"{path}: bad magic, not a model checkpoint")
    version = take_u32()
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch(
            f"{path}: format version {version}, this build reads {CHECKPOINT_VERSION}"
        )
    try:
        header = json.loads(bytes(take(take_u32())).decode("utf-8"))
        config = ModelConfig(**header["config"])
        vocab = Vocabulary.from_json(header["vocab"])
        n_arrays = take_u32()
        params: dict[str, np.ndarray] = {}
        for _ in range(n_arrays):
            name = bytes(take(take_u32())).decode("utf-8")
            rank = take_u32()
            shape = struct.unpack(f"<{rank}I", take(4 * rank))
            n_items = int(np.prod(shape)) if rank else 1
            arr = np.frombuffer(take(4 * n_items), dtype="<f4").reshape(shape)
            params[name] = arr.astype(np.float32)  # owned, writable copy
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, (CorruptCheckpoint, VersionMismatch)):
            raise
        raise CorruptCheckpoint(f"{path}: malformed checkpoint ({exc})") from exc
    if pos != len(view):
        raise CorruptCheckpoint(f"{path}: {len(view) - pos} trailing bytes")
    return Checkpoint(
        params=params,
        config=config,
        vocab=vocab,
        dagesh_capable=frozenset(header["dagesh_capable"]),
        niqqud_capable=frozenset(header["niqqud_capable"]),
        meta=header.get("meta", {}),
    )
