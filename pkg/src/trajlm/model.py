"""Causal-attention autoregressive network over token ids, in plain numpy.

The network is a standard decoder stack: token + learned positional
embeddings, N pre-norm blocks (masked multi-head attention, then a two-layer
ReLU feed-forward, each wrapped with a residual connection), a final layer
norm, and a linear projection to vocabulary logits. Forward, loss, and the
full analytic backward pass are implemented here directly so gradients can be
verified against finite differences; float64 is the default precision.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, DomainError

LN_EPS = 1e-5
INIT_STD = 0.02

_PRECISIONS = {"float64": np.float64, "float32": np.float32}


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256
    max_seq_len: int = 64
    dropout_rate: float = 0.0
    seed: int = 0
    precision: str = "float64"

    def __post_init__(self) -> None:
        if self.vocab_size < 4:
            raise ConfigError(f"vocab_size must cover the specials, got {self.vocab_size}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.max_seq_len < 2:
            raise ConfigError(f"max_seq_len must be >= 2, got {self.max_seq_len}")
        if self.precision not in _PRECISIONS:
            raise ConfigError(f"precision must be one of {sorted(_PRECISIONS)}, got {self.precision}")

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(_PRECISIONS[self.precision])

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    def to_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            lines.append(f"{f.name}={getattr(self, f.name)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep or key not in types:
                raise ConfigError(f"bad model config line {line!r}")
            if key == "precision":
                kwargs[key] = value.strip("'\"")
            elif key == "dropout_rate":
                kwargs[key] = float(value)
            else:
                kwargs[key] = int(value)
        return cls(**kwargs)


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter order and shapes for init, checkpoints, and optimizers."""
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (cfg.vocab_size, cfg.d_model),
        "pos_emb": (cfg.max_seq_len, cfg.d_model),
    }
    for i in range(cfg.n_layers):
        p = f"layers.{i}"
        shapes[f"{p}.ln1.g"] = (cfg.d_model,)
        shapes[f"{p}.ln1.b"] = (cfg.d_model,)
        shapes[f"{p}.attn.wq"] = (cfg.d_model, cfg.d_model)
        shapes[f"{p}.attn.wk"] = (cfg.d_model, cfg.d_model)
        shapes[f"{p}.attn.wv"] = (cfg.d_model, cfg.d_model)
        shapes[f"{p}.attn.wo"] = (cfg.d_model, cfg.d_model)
        shapes[f"{p}.ln2.g"] = (cfg.d_model,)
        shapes[f"{p}.ln2.b"] = (cfg.d_model,)
        shapes[f"{p}.ffn.w1"] = (cfg.d_model, cfg.d_ff)
        shapes[f"{p}.ffn.b1"] = (cfg.d_ff,)
        shapes[f"{p}.ffn.w2"] = (cfg.d_ff, cfg.d_model)
        shapes[f"{p}.ffn.b2"] = (cfg.d_model,)
    shapes["final_ln.g"] = (cfg.d_model,)
    shapes["final_ln.b"] = (cfg.d_model,)
    shapes["w_out"] = (cfg.d_model, cfg.vocab_size)
    return shapes


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, np.ndarray]
    vocab_hash: str = ""

    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "Model":
        return Model(self.config, {k: v.copy() for k, v in self.params.items()}, self.vocab_hash)


def init_model(cfg: ModelConfig, vocab_hash: str = "") -> Model:
    """Zero-mean normal(0.02) weights, zero biases/offsets, unit layer-norm scales."""
    rng = np.random.default_rng(cfg.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("b", "b1", "b2"):
            params[name] = np.zeros(shape, dtype=cfg.dtype)
        elif leaf == "g":
            params[name] = np.ones(shape, dtype=cfg.dtype)
        else:
            params[name] = rng.normal(0.0, INIT_STD, size=shape).astype(cfg.dtype)
    return Model(cfg, params, vocab_hash)


# ---------------------------------------------------------------------------
# Building-block operations
# ---------------------------------------------------------------------------

def causal_mask(seq_len: int) -> np.ndarray:
    """Lower-triangular visibility mask: position i may attend to j <= i."""
    return np.tril(np.ones((seq_len, seq_len), dtype=bool))


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-subtracted softmax; -inf entries come out as exact zeros."""
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    return e / np.sum(e, axis=axis, keepdims=True)


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Scaled dot-product attention over (seq, d_k) matrices.

    mask is boolean (seq, seq) with True where attention is allowed; masked
    scores are forced to -inf before the softmax, so each attention row is a
    probability distribution over visible positions only.
    """
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2 or q.shape[1] != k.shape[1]:
        raise DomainError(f"attention expects (seq, d_k) inputs, got q{q.shape} k{k.shape}")
    if v.shape[0] != k.shape[0]:
        raise DomainError(f"keys and values disagree on sequence length: {k.shape} vs {v.shape}")
    d_k = q.shape[1]
    scores = q @ k.T / np.sqrt(np.asarray(d_k, dtype=q.dtype))
    if mask is not None:
        scores = np.where(mask, scores, -np.inf)
    return softmax(scores, axis=-1) @ v


def multi_head(
    x: np.ndarray,
    wq: np.ndarray,
    wk: np.ndarray,
    wv: np.ndarray,
    wo: np.ndarray,
    n_heads: int,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Multi-head attention over a (seq, d_model) input: project, split heads,
    attend independently, concatenate, and mix with the output projection."""
    seq, d_model = x.shape
    if d_model % n_heads != 0:
        raise DomainError(f"d_model {d_model} not divisible by n_heads {n_heads}")
    if wq.shape != (d_model, d_model):
        raise DomainError(f"projection shape mismatch: {wq.shape} vs ({d_model}, {d_model})")
    d_head = d_model // n_heads
    q, k, v = x @ wq, x @ wk, x @ wv
    heads = []
    for h in range(n_heads):
        sl = slice(h * d_head, (h + 1) * d_head)
        heads.append(attention(q[:, sl], k[:, sl], v[:, sl], mask))
    return np.concatenate(heads, axis=1) @ wo


def ffn(x: np.ndarray, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """Position-wise feed-forward: max(0, x W1 + b1) W2 + b2."""
    if x.shape[-1] != w1.shape[0] or w1.shape[1] != w2.shape[0] or w2.shape[1] != b2.shape[-1]:
        raise DomainError(f"ffn shape mismatch: x{x.shape} w1{w1.shape} w2{w2.shape}")
    return np.maximum(0.0, x @ w1 + b1) @ w2 + b2


def layernorm(x: np.ndarray, g: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, tuple]:
    """Row-wise layer norm over the last axis; returns (y, cache-for-backward)."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv, g)


def _layernorm_backward(dy: np.ndarray, cache: tuple) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat, inv, g = cache
    dg = np.sum(dy * xhat, axis=tuple(range(dy.ndim - 1)))
    db = np.sum(dy, axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
    )
    return dx, dg, db


# ---------------------------------------------------------------------------
# Full network forward / loss / backward
# ---------------------------------------------------------------------------

def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _dropout_mask(rng: np.random.Generator, shape: tuple, rate: float, dtype) -> np.ndarray:
    keep = (rng.random(shape) >= rate).astype(dtype)
    return keep / dtype.type(1.0 - rate)


def forward_batch(
    model: Model,
    ids: np.ndarray,
    collect: bool = False,
    dropout_rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict | None]:
    """Run the network over an (n_seq, seq_len) id batch.

    Returns logits of shape (n_seq, seq_len, vocab_size) and, when collect is
    set, the intermediate activations needed by backward(). Dropout is applied
    only when a dropout_rng is supplied (training mode).
    """
    cfg = model.config
    p = model.params
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise DomainError(f"expected (n_seq, seq_len) ids, got shape {ids.shape}")
    n_seq, seq_len = ids.shape
    if seq_len > cfg.max_seq_len:
        raise DomainError(f"sequence length {seq_len} exceeds max_seq_len {cfg.max_seq_len}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise DomainError(f"token ids must lie in [0, {cfg.vocab_size})")

    rate = cfg.dropout_rate if dropout_rng is not None else 0.0
    cache: dict | None = {"ids": ids, "layers": []} if collect else None

    x = p["tok_emb"][ids] + p["pos_emb"][:seq_len]
    if rate > 0.0:
        m = _dropout_mask(dropout_rng, x.shape, rate, cfg.dtype)
        x = x * m
        if collect:
            cache["drop_emb"] = m
    visible = causal_mask(seq_len)
    scale = np.sqrt(np.asarray(cfg.d_head, dtype=cfg.dtype))

    for i in range(cfg.n_layers):
        pre = f"layers.{i}"
        a, ln1_cache = layernorm(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
        qh = _split_heads(a @ p[f"{pre}.attn.wq"], cfg.n_heads)
        kh = _split_heads(a @ p[f"{pre}.attn.wk"], cfg.n_heads)
        vh = _split_heads(a @ p[f"{pre}.attn.wv"], cfg.n_heads)
        scores = np.where(visible, qh @ kh.transpose(0, 1, 3, 2) / scale, -np.inf)
        attn = softmax(scores, axis=-1)
        ctx = _merge_heads(attn @ vh)
        attn_out = ctx @ p[f"{pre}.attn.wo"]
        layer_cache: dict = {}
        if rate > 0.0:
            m = _dropout_mask(dropout_rng, attn_out.shape, rate, cfg.dtype)
            attn_out = attn_out * m
            layer_cache["drop_attn"] = m
        x_mid = x + attn_out
        f, ln2_cache = layernorm(x_mid, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        pre_act = f @ p[f"{pre}.ffn.w1"] + p[f"{pre}.ffn.b1"]
        relu = np.maximum(0.0, pre_act)
        ffn_out = relu @ p[f"{pre}.ffn.w2"] + p[f"{pre}.ffn.b2"]
        if rate > 0.0:
            m = _dropout_mask(dropout_rng, ffn_out.shape, rate, cfg.dtype)
            ffn_out = ffn_out * m
            layer_cache["drop_ffn"] = m
        x_out = x_mid + ffn_out
        if collect:
            layer_cache.update(
                ln1=ln1_cache, a=a, qh=qh, kh=kh, vh=vh, attn=attn, ctx=ctx,
                ln2=ln2_cache, f=f, pre_act=pre_act, relu=relu,
            )
            cache["layers"].append(layer_cache)
        x = x_out

    hf, final_cache = layernorm(x, p["final_ln.g"], p["final_ln.b"])
    logits = hf @ p["w_out"]
    if collect:
        cache["final_ln"] = final_cache
        cache["hf"] = hf
    return logits, cache


def forward(model: Model, ids) -> np.ndarray:
    """Logits for one id sequence, shape (seq_len, vocab_size); inference mode."""
    logits, _ = forward_batch(model, np.asarray(ids, dtype=np.int64)[None, :])
    return logits[0]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    m = np.max(logits, axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def nll_loss(logits: np.ndarray, targets: np.ndarray, pad_mask: np.ndarray) -> float:
    """Mean negative log-likelihood of targets under logits, over unmasked positions.

    logits: (..., seq, vocab); targets and pad_mask: (..., seq) with True where
    the position is scored.
    """
    targets = np.asarray(targets)
    pad_mask = np.asarray(pad_mask, dtype=bool)
    if logits.shape[:-1] != targets.shape or targets.shape != pad_mask.shape:
        raise DomainError(
            f"shape mismatch: logits {logits.shape}, targets {targets.shape}, mask {pad_mask.shape}"
        )
    n_scored = int(pad_mask.sum())
    if n_scored == 0:
        raise DomainError("all positions are masked; loss is undefined")
    logp = log_softmax(logits)
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    return float(-(picked * pad_mask).sum() / n_scored)


def backward(
    model: Model,
    ids: np.ndarray,
    pad_mask: np.ndarray | None = None,
    dropout_rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact analytic gradients for next-token prediction on an id batch.

    ids: (n_seq, seq_len); position t predicts ids[:, t + 1]. pad_mask marks
    which of those targets are scored, shape (n_seq, seq_len - 1); by default
    every non-PAD target is scored (PAD id is 0).
    """
    ids = np.asarray(ids)
    if ids.ndim != 2 or ids.shape[1] < 2:
        raise DomainError(f"need an (n_seq, seq_len>=2) batch, got {ids.shape}")
    inputs_len = ids.shape[1] - 1
    targets = ids[:, 1:]
    if pad_mask is None:
        pad_mask = targets != 0
    pad_mask = np.asarray(pad_mask, dtype=bool)
    if pad_mask.shape != targets.shape:
        raise DomainError(f"pad_mask shape {pad_mask.shape} != targets shape {targets.shape}")
    n_scored = int(pad_mask.sum())
    if n_scored == 0:
        raise DomainError("all positions are masked; nothing to learn from")

    cfg = model.config
    p = model.params
    logits, cache = forward_batch(model, ids[:, :-1], collect=True, dropout_rng=dropout_rng)

    logp = log_softmax(logits)
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = float(-(picked * pad_mask).sum() / n_scored)

    # d loss / d logits = (softmax - onehot) * mask / n_scored
    dlogits = np.exp(logp)
    rows = np.arange(targets.shape[0])[:, None]
    cols = np.arange(targets.shape[1])[None, :]
    dlogits[rows, cols, targets] -= 1.0
    dlogits *= (pad_mask / n_scored)[..., None]

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    d = cfg.d_model
    scale = np.sqrt(np.asarray(cfg.d_head, dtype=cfg.dtype))

    hf = cache["hf"]
    grads["w_out"] += hf.reshape(-1, d).T @ dlogits.reshape(-1, cfg.vocab_size)
    d_hf = dlogits @ p["w_out"].T
    dx, dg, db = _layernorm_backward(d_hf, cache["final_ln"])
    grads["final_ln.g"] += dg
    grads["final_ln.b"] += db

    for i in reversed(range(cfg.n_layers)):
        pre = f"layers.{i}"
        lc = cache["layers"][i]
        # feed-forward residual branch
        d_ffn_out = dx * lc["drop_ffn"] if "drop_ffn" in lc else dx
        flat = d_ffn_out.reshape(-1, d)
        grads[f"{pre}.ffn.w2"] += lc["relu"].reshape(-1, cfg.d_ff).T @ flat
        grads[f"{pre}.ffn.b2"] += flat.sum(axis=0)
        d_relu = d_ffn_out @ p[f"{pre}.ffn.w2"].T
        d_pre = d_relu * (lc["pre_act"] > 0)
        grads[f"{pre}.ffn.w1"] += lc["f"].reshape(-1, d).T @ d_pre.reshape(-1, cfg.d_ff)
        grads[f"{pre}.ffn.b1"] += d_pre.reshape(-1, cfg.d_ff).sum(axis=0)
        d_f = d_pre @ p[f"{pre}.ffn.w1"].T
        d_x_mid_ln, dg, db = _layernorm_backward(d_f, lc["ln2"])
        grads[f"{pre}.ln2.g"] += dg
        grads[f"{pre}.ln2.b"] += db
        d_x_mid = dx + d_x_mid_ln
        # attention residual branch
        d_attn_out = d_x_mid * lc["drop_attn"] if "drop_attn" in lc else d_x_mid
        grads[f"{pre}.attn.wo"] += lc["ctx"].reshape(-1, d).T @ d_attn_out.reshape(-1, d)
        d_ctx = _split_heads(d_attn_out @ p[f"{pre}.attn.wo"].T, cfg.n_heads)
        attn, vh, qh, kh = lc["attn"], lc["vh"], lc["qh"], lc["kh"]
        d_attn = d_ctx @ vh.transpose(0, 1, 3, 2)
        d_vh = attn.transpose(0, 1, 3, 2) @ d_ctx
        d_scores = attn * (d_attn - np.sum(d_attn * attn, axis=-1, keepdims=True))
        d_qh = d_scores @ kh / scale
        d_kh = d_scores.transpose(0, 1, 3, 2) @ qh / scale
        d_q, d_k, d_v = _merge_heads(d_qh), _merge_heads(d_kh), _merge_heads(d_vh)
        a_flat = lc["a"].reshape(-1, d)
        grads[f"{pre}.attn.wq"] += a_flat.T @ d_q.reshape(-1, d)
        grads[f"{pre}.attn.wk"] += a_flat.T @ d_k.reshape(-1, d)
        grads[f"{pre}.attn.wv"] += a_flat.T @ d_v.reshape(-1, d)
        d_a = d_q @ p[f"{pre}.attn.wq"].T + d_k @ p[f"{pre}.attn.wk"].T + d_v @ p[f"{pre}.attn.wv"].T
        d_x_in_ln, dg, db = _layernorm_backward(d_a, lc["ln1"])
        grads[f"{pre}.ln1.g"] += dg
        grads[f"{pre}.ln1.b"] += db
        dx = d_x_mid + d_x_in_ln

    if "drop_emb" in cache:
        dx = dx * cache["drop_emb"]
    grads["pos_emb"][:inputs_len] += dx.sum(axis=0)
    np.add.at(grads["tok_emb"], cache["ids"], dx)
    return loss, grads
