"""File formats shared across the pipeline.

Corpora are line-delimited JSON records
    {"id": str, "agent": str?, "weekday": str?, "tokens": [str], "label": str}
where each token string is "kind:value". An optional first record {"_meta":
{...}} carries the config hash and tool version; readers skip it. CSV
artifacts start with a '#' comment line carrying the same provenance.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass

from .errors import DataError
from .scoring import ScoreReport, ThresholdTable
from .vocab import EncodedTrajectory, Token, Vocab, encode

TOOL_VERSION = "0.1.0"


@dataclass
class CorpusRecord:
    traj_id: str
    tokens: list[Token]
    agent: str | None = None
    weekday: str | None = None
    label: str = "normal"


@dataclass
class TruthRecord:
    traj_id: str
    label: str
    kind: str = ""
    ratio: float | None = None
    dist: int | None = None
    pos: int | None = None  # planted slot index, for localization checks


def full_tokens(rec: CorpusRecord) -> list[Token]:
    """Conditioning tokens plus locations, in model order (no specials)."""
    prefix: list[Token] = []
    if rec.agent is not None:
        prefix.append(Token("agent_id", rec.agent))
    if rec.weekday is not None:
        prefix.append(Token("weekday", rec.weekday))
    return prefix + rec.tokens


def encode_record(rec: CorpusRecord, vocab: Vocab) -> EncodedTrajectory:
    """Agent-conditioned records use [agent, weekday, ...] with no SOT; bare
    location records get SOT framing. EOT is always appended."""
    if rec.agent is not None:
        return encode(
            full_tokens(rec), vocab, with_sot=False, with_eot=True,
            traj_id=rec.traj_id, agent=rec.agent, label=rec.label,
        )
    return encode(
        rec.tokens, vocab, with_sot=True, with_eot=True,
        traj_id=rec.traj_id, agent=None, label=rec.label,
    )


def provenance(config_hash: str = "") -> dict[str, str]:
    return {"config_hash": config_hash, "tool_version": TOOL_VERSION}


def write_corpus(path, records: list[CorpusRecord], config_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_meta": provenance(config_hash)}, sort_keys=True) + "\n")
        for rec in records:
            obj: dict = {"id": rec.traj_id}
            if rec.agent is not None:
                obj["agent"] = rec.agent
            if rec.weekday is not None:
                obj["weekday"] = rec.weekday
            obj["tokens"] = [str(t) for t in rec.tokens]
            obj["label"] = rec.label
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def read_corpus(path) -> list[CorpusRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: invalid JSON: {e}") from e
            if "_meta" in obj:
                continue
            try:
                records.append(
                    CorpusRecord(
                        traj_id=str(obj["id"]),
                        tokens=[Token.parse(t) for t in obj["tokens"]],
                        agent=obj.get("agent"),
                        weekday=obj.get("weekday"),
                        label=obj.get("label", "normal"),
                    )
                )
            except (KeyError, TypeError) as e:
                raise DataError(f"{path}:{lineno}: bad corpus record: {e}") from e
    return records


def _comment(config_hash: str) -> str:
    meta = provenance(config_hash)
    return f"# config_hash={meta['config_hash']} tool_version={meta['tool_version']}\n"


def write_truth(path, records: list[TruthRecord], config_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment(config_hash))
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "kind", "ratio", "dist", "pos"])
        for r in records:
            writer.writerow([
                r.traj_id, r.label, r.kind,
                "" if r.ratio is None else r.ratio,
                "" if r.dist is None else r.dist,
                "" if r.pos is None else r.pos,
            ])


def read_truth(path) -> dict[str, TruthRecord]:
    out: dict[str, TruthRecord] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header is None or header[:2] != ["id", "label"]:
            raise DataError(f"{path}: expected truth CSV header starting id,label")
        for row in rows:
            rec = TruthRecord(
                traj_id=row[0],
                label=row[1],
                kind=row[2] if len(row) > 2 else "",
                ratio=float(row[3]) if len(row) > 3 and row[3] else None,
                dist=int(row[4]) if len(row) > 4 and row[4] else None,
                pos=int(row[5]) if len(row) > 5 and row[5] else None,
            )
            out[rec.traj_id] = rec
    return out


def truth_labels(truth: dict[str, TruthRecord]) -> dict[str, str]:
    return {k: v.label for k, v in truth.items()}


def write_scores(path, reports: list[ScoreReport], config_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment(config_hash))
        writer = csv.writer(fh)
        writer.writerow(["id", "agent", "perplexity", "threshold", "verdict"])
        for r in reports:
            writer.writerow([
                r.traj_id, r.agent or "", repr(r.perplexity), repr(r.threshold), r.verdict,
            ])


def read_scores(path) -> list[ScoreReport]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header != ["id", "agent", "perplexity", "threshold", "verdict"]:
            raise DataError(f"{path}: unexpected score CSV header {header}")
        for row in rows:
            out.append(
                ScoreReport(
                    traj_id=row[0],
                    agent=row[1] or None,
                    perplexity=float(row[2]),
                    threshold=float(row[3]),
                    verdict=row[4],
                )
            )
    return out


def write_surprisals(path, reports: list[ScoreReport], vocab: Vocab,
                     encoded: dict[str, EncodedTrajectory], config_hash: str = "") -> None:
    """Per-position dump: id,pos,token,surprisal (one row per scored token)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment(config_hash))
        writer = csv.writer(fh)
        writer.writerow(["id", "pos", "token", "surprisal"])
        for r in reports:
            if r.surprisal is None:
                continue
            ids = encoded[r.traj_id].ids
            for value, pos in zip(r.surprisal.values, r.surprisal.target_positions):
                writer.writerow([r.traj_id, pos, str(vocab.token(ids[pos])), repr(float(value))])


def write_thresholds(path, table: ThresholdTable, config_hash: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment(config_hash))
        writer = csv.writer(fh)
        writer.writerow(["scope", "agent", "threshold", "mean", "std", "count"])
        if table.global_threshold is not None:
            mean, std, n = table.provenance["global"]
            writer.writerow(["global", "", repr(table.global_threshold), repr(mean), repr(std), n])
        for agent in sorted(table.per_agent):
            mean, std, n = table.provenance[agent]
            writer.writerow(["per_agent", agent, repr(table.per_agent[agent]), repr(mean), repr(std), n])


def read_thresholds(path) -> ThresholdTable:
    table = ThresholdTable(global_threshold=None)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header != ["scope", "agent", "threshold", "mean", "std", "count"]:
            raise DataError(f"{path}: unexpected thresholds CSV header {header}")
        for row in rows:
            scope, agent, threshold, mean, std, count = row
            prov = (float(mean), float(std), int(count))
            if scope == "global":
                table.global_threshold = float(threshold)
                table.provenance["global"] = prov
            else:
                table.per_agent[agent] = float(threshold)
                table.provenance[agent] = prov
    return table


def config_hash_of(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
