"""Token vocabulary: building, encoding to id sequences, decoding, persistence.

Tokens are (kind, value) pairs; the three specials PAD/SOT/EOT always occupy
ids 0/1/2, and the remaining ids are assigned deterministically by sorting on
(kind, value). There is deliberately no UNK token: an unseen token during
encoding is a data bug and raises.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DomainError, VocabError

TOKEN_KINDS = ("activity", "agent_id", "cell", "duration_bucket", "special", "staypoint", "weekday")

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")

PAD_VALUE = "PAD"
SOT_VALUE = "SOT"
EOT_VALUE = "EOT"
SPECIAL_VALUES = (PAD_VALUE, SOT_VALUE, EOT_VALUE)

PAD_ID = 0
SOT_ID = 1
EOT_ID = 2


@dataclass(frozen=True, order=True)
class Token:
    kind: str
    value: str

    def __post_init__(self) -> None:
        if self.kind not in TOKEN_KINDS:
            raise DomainError(f"unknown token kind {self.kind!r}")
        if self.kind == "special" and self.value not in SPECIAL_VALUES:
            raise DomainError(f"special token value must be one of {SPECIAL_VALUES}, got {self.value!r}")
        if self.kind == "weekday" and self.value not in WEEKDAYS:
            raise DomainError(f"weekday must be one of {WEEKDAYS}, got {self.value!r}")
        if self.kind == "duration_bucket" and (not self.value.isdigit()):
            raise DomainError(f"duration bucket value must be a non-negative integer, got {self.value!r}")

    def __str__(self) -> str:
        return f"{self.kind}:{self.value}"

    @classmethod
    def parse(cls, text: str) -> "Token":
        """Parse the 'kind:value' string form used in corpus files."""
        kind, sep, value = text.partition(":")
        if not sep:
            raise DomainError(f"token string must look like 'kind:value', got {text!r}")
        return cls(kind, value)


PAD = Token("special", PAD_VALUE)
SOT = Token("special", SOT_VALUE)
EOT = Token("special", EOT_VALUE)
_SPECIALS = (PAD, SOT, EOT)


class Vocab:
    """Immutable bijection between tokens and dense integer ids."""

    def __init__(self, tokens: Sequence[Token]):
        if tuple(tokens[:3]) != _SPECIALS:
            raise DomainError("vocab must start with PAD, SOT, EOT")
        self._id_to_token: tuple[Token, ...] = tuple(tokens)
        self._token_to_id: dict[Token, int] = {t: i for i, t in enumerate(tokens)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise DomainError("vocab contains duplicate tokens")

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: Token) -> bool:
        return token in self._token_to_id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocab) and self._id_to_token == other._id_to_token

    def id(self, token: Token) -> int:
        try:
            return self._token_to_id[token]
        except KeyError:
            raise VocabError(f"token {str(token)!r} is not in the vocabulary") from None

    def token(self, token_id: int) -> Token:
        if not 0 <= token_id < len(self._id_to_token):
            raise VocabError(f"token id {token_id} out of range [0, {len(self)})")
        return self._id_to_token[token_id]

    def counts_by_kind(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for t in self._id_to_token:
            counts[t.kind] = counts.get(t.kind, 0) + 1
        return counts

    def serialize(self) -> str:
        return "".join(f"{t.kind}\t{t.value}\n" for t in self._id_to_token)

    def hash(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.serialize())

    @classmethod
    def load(cls, path) -> "Vocab":
        tokens = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh):
                line = line.rstrip("\n")
                if not line:
                    continue
                kind, sep, value = line.partition("\t")
                if not sep:
                    raise DomainError(f"{path}:{lineno + 1}: expected 'kind<TAB>value'")
                tokens.append(Token(kind, value))
        return cls(tokens)


def build_vocab(corpus: Iterable[Sequence[Token]]) -> Vocab:
    """Collect every distinct token, prepend specials, assign deterministic ids."""
    seen: set[Token] = set()
    n_sequences = 0
    for seq in corpus:
        n_sequences += 1
        seen.update(seq)
    if n_sequences == 0:
        raise DomainError("corpus is empty; cannot build a vocabulary")
    seen.difference_update(_SPECIALS)
    return Vocab(list(_SPECIALS) + sorted(seen))


@dataclass
class EncodedTrajectory:
    """Integer id sequence plus bookkeeping for scoring and evaluation.

    prefix_len counts the conditioning tokens at the head of the sequence
    (agent id / weekday tokens, or SOT); these are context only and are never
    themselves scored as predictions of earlier context.
    """

    ids: list[int]
    prefix_len: int
    traj_id: str | None = None
    agent: str | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.ids:
            raise DomainError("encoded trajectory must contain at least one id")
        if not 0 < self.prefix_len < len(self.ids):
            raise DomainError(
                f"prefix_len must be in (0, {len(self.ids)}), got {self.prefix_len}"
            )
        if PAD_ID in self.ids:
            raise DomainError("PAD must not appear inside an encoded trajectory")


def encode(
    tokens: Sequence[Token],
    vocab: Vocab,
    with_sot: bool = False,
    with_eot: bool = True,
    traj_id: str | None = None,
    agent: str | None = None,
    label: str | None = None,
) -> EncodedTrajectory:
    """Encode tokens to ids, optionally framed by SOT/EOT.

    Raises VocabError naming the first unknown token; there is no UNK fallback.
    """
    ids: list[int] = [SOT_ID] if with_sot else []
    prefix_len = 1 if with_sot else 0
    in_prefix = True
    for t in tokens:
        ids.append(vocab.id(t))
        if in_prefix and t.kind in ("agent_id", "weekday"):
            prefix_len += 1
        else:
            in_prefix = False
    if with_eot:
        ids.append(EOT_ID)
    # The sequence head conditions everything else and is itself never scored,
    # so even a bare location sequence has a conditioning prefix of one.
    return EncodedTrajectory(
        ids=ids, prefix_len=max(prefix_len, 1), traj_id=traj_id, agent=agent, label=label
    )


def decode(ids: Sequence[int], vocab: Vocab) -> list[Token]:
    """Inverse of encode: map ids back to tokens (specials included)."""
    return [vocab.token(i) for i in ids]


def bucket_duration(seconds: float, max_bucket: int = 12) -> Token:
    """Discretize a dwell time into 1-hour buckets, capped at max_bucket."""
    if seconds < 0:
        raise DomainError(f"duration must be >= 0 seconds, got {seconds}")
    if max_bucket < 0:
        raise DomainError(f"max_bucket must be >= 0, got {max_bucket}")
    return Token("duration_bucket", str(min(int(math.floor(seconds / 3600.0)), max_bucket)))
