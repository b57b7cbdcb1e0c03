"""Incremental trajectory scoring with per-layer key/value caches.

A session consumes one token at a time. For each new token only one attention
query row is computed per layer against the cached keys/values of the prefix,
so scoring a whole stream costs O(n^2 d) instead of the O(n^3 d) of re-running
a full forward pass per prefix. Per-token results match the batch scorer to
within floating-point summation-order differences (1e-9 relative in float64).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, SessionFullError
from .model import LN_EPS, Model, log_softmax
from .scoring import ScoreReport, ThresholdTable, classify


def _ln_row(x: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    mu = x.mean()
    xc = x - mu
    var = np.mean(xc * xc)
    return g * (xc / np.sqrt(var + LN_EPS)) + b


class Session:
    """Single-owner incremental scorer over one immutable model.

    The caches hold the post-projection key and value rows of every pushed
    token, one (max_seq_len, d_model) buffer per layer; pushes append one row
    per layer and never touch earlier rows.
    """

    def __init__(self, model: Model):
        cfg = model.config
        self.model = model
        self._k = [np.zeros((cfg.max_seq_len, cfg.d_model), dtype=cfg.dtype) for _ in range(cfg.n_layers)]
        self._v = [np.zeros((cfg.max_seq_len, cfg.d_model), dtype=cfg.dtype) for _ in range(cfg.n_layers)]
        self.pushed_ids: list[int] = []
        self.surprisal_sum = 0.0
        self.scored_count = 0
        self._last_logits: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.pushed_ids)

    @property
    def full(self) -> bool:
        return len(self.pushed_ids) >= self.model.config.max_seq_len

    def cached_kv(self, layer: int) -> tuple[np.ndarray, np.ndarray]:
        """Views of the key/value rows cached so far for one layer."""
        t = len(self.pushed_ids)
        return self._k[layer][:t], self._v[layer][:t]

    @property
    def running_perplexity(self) -> float:
        if self.scored_count == 0:
            raise DomainError("no scored positions yet")
        return math.exp(self.surprisal_sum / self.scored_count)

    def _advance(self, token_id: int) -> None:
        """Feed one token through the network, extending each layer's cache."""
        cfg = self.model.config
        p = self.model.params
        if self.full:
            raise SessionFullError(f"session already holds max_seq_len={cfg.max_seq_len} tokens")
        if not 0 <= token_id < cfg.vocab_size:
            raise DomainError(f"token id {token_id} out of range [0, {cfg.vocab_size})")
        pos = len(self.pushed_ids)
        n_heads, d_head = cfg.n_heads, cfg.d_head
        scale = np.sqrt(np.asarray(d_head, dtype=cfg.dtype))

        x = p["tok_emb"][token_id] + p["pos_emb"][pos]
        for i in range(cfg.n_layers):
            pre = f"layers.{i}"
            a = _ln_row(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
            self._k[i][pos] = a @ p[f"{pre}.attn.wk"]
            self._v[i][pos] = a @ p[f"{pre}.attn.wv"]
            qh = (a @ p[f"{pre}.attn.wq"]).reshape(n_heads, d_head)
            kh = self._k[i][: pos + 1].reshape(pos + 1, n_heads, d_head)
            vh = self._v[i][: pos + 1].reshape(pos + 1, n_heads, d_head)
            scores = np.einsum("hd,thd->ht", qh, kh) / scale
            scores -= scores.max(axis=1, keepdims=True)
            e = np.exp(scores)
            attn = e / e.sum(axis=1, keepdims=True)
            ctx = np.einsum("ht,thd->hd", attn, vh).reshape(cfg.d_model)
            x = x + ctx @ p[f"{pre}.attn.wo"]
            f = _ln_row(x, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
            x = x + np.maximum(0.0, f @ p[f"{pre}.ffn.w1"] + p[f"{pre}.ffn.b1"]) @ p[f"{pre}.ffn.w2"] + p[f"{pre}.ffn.b2"]
        hf = _ln_row(x, p["final_ln.g"], p["final_ln.b"])
        self._last_logits = hf @ p["w_out"]
        self.pushed_ids.append(token_id)

    def push(self, token_id: int) -> tuple[float, float]:
        """Score one arriving token; returns (its surprisal, running perplexity).

        The surprisal comes from the logits of the previous position, i.e.
        -log P(token | everything pushed so far). Raises SessionFullError with
        the session unchanged when the model's context window is exhausted.
        """
        if self._last_logits is None:
            raise DomainError("session has no conditioning context; use open_session first")
        if self.full:
            raise SessionFullError(
                f"session already holds max_seq_len={self.model.config.max_seq_len} tokens"
            )
        logp = log_softmax(self._last_logits)
        if not 0 <= token_id < self.model.config.vocab_size:
            raise DomainError(f"token id {token_id} out of range [0, {self.model.config.vocab_size})")
        s = float(-logp[token_id])
        self._advance(token_id)
        self.surprisal_sum += s
        self.scored_count += 1
        return s, self.running_perplexity


def open_session(model: Model, conditioning_ids: list[int]) -> Session:
    """Start a session from conditioning tokens (agent/weekday prefix or SOT).

    The conditioning tokens populate the caches but are not scored; the first
    push is scored against the distribution they induce.
    """
    if not conditioning_ids:
        raise DomainError("conditioning must contain at least one token")
    if len(conditioning_ids) > model.config.max_seq_len:
        raise DomainError(
            f"conditioning length {len(conditioning_ids)} exceeds max_seq_len {model.config.max_seq_len}"
        )
    session = Session(model)
    for token_id in conditioning_ids:
        session._advance(int(token_id))
    return session


def partial_verdict(
    session: Session,
    table: ThresholdTable,
    scope: str = "global",
    agent: str | None = None,
    traj_id: str | None = None,
) -> ScoreReport:
    """Classify the running perplexity of a partially observed trajectory."""
    if session.scored_count < 1:
        raise DomainError("cannot classify before any location has been scored")
    return classify(traj_id, session.running_perplexity, table, scope=scope, agent=agent)
