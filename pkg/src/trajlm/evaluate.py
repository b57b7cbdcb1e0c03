"""Detection metrics and experiment protocols.

PR-AUC is computed as average precision (the step-wise sum over the
descending-score sweep), never by trapezoidal interpolation, with the
anomalous class as positive. F1 always scores the fixed mean+std threshold
verdicts rather than the best threshold in hindsight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .model import Model
from .online import open_session
from .scoring import ScoreReport, ThresholdTable, classify, perplexity
from .vocab import EncodedTrajectory


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float


@dataclass
class EvalReport:
    scope: str
    f1: float
    pr_auc: float
    tp: int
    fp: int
    fn: int
    tn: int
    config: dict = field(default_factory=dict)


def _as_binary(values: Sequence, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind in "UO":  # allow "anomalous"/"normal" strings
        arr = np.asarray([v == "anomalous" for v in values])
    arr = arr.astype(np.int64)
    if not np.isin(arr, (0, 1)).all():
        raise DomainError(f"{what} must be binary")
    return arr


def confusion_counts(labels: Sequence, verdicts: Sequence) -> tuple[int, int, int, int]:
    y = _as_binary(labels, "labels")
    v = _as_binary(verdicts, "verdicts")
    if len(y) != len(v):
        raise DomainError(f"length mismatch: {len(y)} labels vs {len(v)} verdicts")
    tp = int(np.sum((y == 1) & (v == 1)))
    fp = int(np.sum((y == 0) & (v == 1)))
    fn = int(np.sum((y == 1) & (v == 0)))
    tn = int(np.sum((y == 0) & (v == 0)))
    return tp, fp, fn, tn


def f1(labels: Sequence, verdicts: Sequence) -> float:
    """2PR/(P+R) with anomalous as the positive class; 0 when degenerate."""
    tp, fp, fn, _ = confusion_counts(labels, verdicts)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def pr_curve(labels: Sequence, scores: Sequence) -> list[PRPoint]:
    """One point per distinct score, swept from the highest score down.

    At each threshold tau, everything scoring >= tau is predicted anomalous;
    tied scores enter together. Points come out ordered by increasing recall.
    """
    y = _as_binary(labels, "labels")
    s = np.asarray(scores, dtype=np.float64)
    if len(y) != len(s):
        raise DomainError(f"length mismatch: {len(y)} labels vs {len(s)} scores")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DomainError("precision-recall needs at least one positive label")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tp_cum = np.cumsum(y_sorted)
    pred_cum = np.arange(1, len(s) + 1)
    last_of_group = np.ones(len(s), dtype=bool)
    last_of_group[:-1] = s_sorted[:-1] != s_sorted[1:]
    points = [
        PRPoint(
            threshold=float(s_sorted[i]),
            precision=float(tp_cum[i] / pred_cum[i]),
            recall=float(tp_cum[i] / n_pos),
        )
        for i in np.flatnonzero(last_of_group)
    ]
    return points


def pr_auc(labels: Sequence, scores: Sequence) -> float:
    """Average precision: sum of (R_k - R_{k-1}) * P_k over the descending sweep."""
    points = pr_curve(labels, scores)
    auc = 0.0
    prev_recall = 0.0
    for pt in points:
        auc += (pt.recall - prev_recall) * pt.precision
        prev_recall = pt.recall
    return auc


def per_agent_eval(
    reports: list[ScoreReport], truth: dict[str, str]
) -> dict[str, EvalReport]:
    """Metrics within each agent's trajectory set only.

    Verdicts carry each agent's own threshold; perplexities are the PR-AUC
    scores. Agents whose trajectories contain no true anomaly are left out of
    the table, since anomaly detection is undefined for them.
    """
    by_agent: dict[str, list[ScoreReport]] = {}
    for r in reports:
        if r.agent is None:
            raise DomainError(f"report {r.traj_id!r} has no agent; per-agent evaluation impossible")
        if r.traj_id not in truth:
            raise DomainError(f"trajectory {r.traj_id!r} missing from ground truth")
        by_agent.setdefault(r.agent, []).append(r)
    out: dict[str, EvalReport] = {}
    for agent in sorted(by_agent):
        rs = by_agent[agent]
        labels = [truth[r.traj_id] for r in rs]
        if not any(lbl == "anomalous" for lbl in labels):
            continue
        verdicts = [r.verdict for r in rs]
        scores = [r.perplexity for r in rs]
        tp, fp, fn, tn = confusion_counts(labels, verdicts)
        out[agent] = EvalReport(
            scope=f"agent:{agent}",
            f1=f1(labels, verdicts),
            pr_auc=pr_auc(labels, scores),
            tp=tp, fp=fp, fn=fn, tn=tn,
        )
    return out


def global_eval(reports: list[ScoreReport], truth: dict[str, str]) -> EvalReport:
    """Metrics over the whole report set, anomalous as positive."""
    for r in reports:
        if r.traj_id not in truth:
            raise DomainError(f"trajectory {r.traj_id!r} missing from ground truth")
    labels = [truth[r.traj_id] for r in reports]
    verdicts = [r.verdict for r in reports]
    scores = [r.perplexity for r in reports]
    tp, fp, fn, tn = confusion_counts(labels, verdicts)
    return EvalReport(
        scope="global",
        f1=f1(labels, verdicts),
        pr_auc=pr_auc(labels, scores),
        tp=tp, fp=fp, fn=fn, tn=tn,
    )


def prefix_perplexity(model: Model, traj: EncodedTrajectory, ratio: float) -> float:
    """Perplexity of the first ceil(ratio * n_locations) locations.

    The conditioning prefix is always kept; at ratio 1.0 this routes through
    the batch scorer and is exactly the full-trajectory perplexity, while
    partial ratios stream through an incremental session.
    """
    if not 0.0 < ratio <= 1.0:
        raise DomainError(f"ratio must be in (0, 1], got {ratio}")
    if ratio == 1.0:
        return perplexity(model, traj)
    n_loc = len(traj.ids) - traj.prefix_len
    cut = traj.prefix_len + math.ceil(ratio * n_loc)
    session = open_session(model, traj.ids[:1])
    for token_id in traj.ids[1:cut]:
        session.push(int(token_id))
    return session.running_perplexity


def completion_ratio_eval(
    model: Model,
    corpus: list[EncodedTrajectory],
    truth: dict[str, str],
    ratios: Sequence[float],
    table: ThresholdTable,
    scope: str = "global",
) -> dict[float, tuple[float, float]]:
    """(F1, PR-AUC) per completion ratio, scoring only each trajectory's prefix."""
    for traj in corpus:
        if traj.traj_id not in truth:
            raise DomainError(f"trajectory {traj.traj_id!r} missing from ground truth")
    out: dict[float, tuple[float, float]] = {}
    for ratio in ratios:
        labels, verdicts, scores = [], [], []
        for traj in corpus:
            if len(traj.ids) - traj.prefix_len < 1:
                warnings.warn(f"trajectory {traj.traj_id!r} has no scorable prefix; skipped")
                continue
            ppl = prefix_perplexity(model, traj, ratio)
            report = classify(traj.traj_id, ppl, table, scope=scope, agent=traj.agent)
            labels.append(truth[traj.traj_id])
            verdicts.append(report.verdict)
            scores.append(ppl)
        out[float(ratio)] = (f1(labels, verdicts), pr_auc(labels, scores))
    return out


@dataclass
class AblationEntry:
    per_agent: dict[str, EvalReport]
    average_f1: float
    average_pr_auc: float


def ablation_eval(
    corpora_by_config: dict[str, list],
    pipeline: Callable[[list], dict[str, EvalReport]],
) -> dict[str, AblationEntry]:
    """Run one full train/score/eval cycle per location configuration.

    Every configuration must tokenize the same underlying trajectories (same
    ids); each entry carries the per-agent table plus the across-agents
    average, mirroring a per-configuration summary row.
    """
    if not corpora_by_config:
        raise DomainError("no configurations given")
    id_sets = {
        name: tuple(getattr(t, "traj_id", None) for t in corpus)
        for name, corpus in corpora_by_config.items()
    }
    reference = next(iter(id_sets.values()))
    for name, ids in id_sets.items():
        if ids != reference:
            raise DomainError(f"configuration {name!r} covers different trajectory ids")
    out: dict[str, AblationEntry] = {}
    for name in corpora_by_config:
        per_agent = pipeline(corpora_by_config[name])
        if not per_agent:
            raise DomainError(f"configuration {name!r} produced no per-agent results")
        out[name] = AblationEntry(
            per_agent=per_agent,
            average_f1=float(np.mean([r.f1 for r in per_agent.values()])),
            average_pr_auc=float(np.mean([r.pr_auc for r in per_agent.values()])),
        )
    return out
