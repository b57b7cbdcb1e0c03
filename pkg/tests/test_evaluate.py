import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajlm.errors import DomainError
from trajlm.evaluate import (
    ablation_eval,
    completion_ratio_eval,
    f1,
    global_eval,
    per_agent_eval,
    pr_auc,
    pr_curve,
    prefix_perplexity,
)
from trajlm.model import ModelConfig, init_model
from trajlm.scoring import ScoreReport, classify, compute_thresholds, perplexity
from trajlm.vocab import EncodedTrajectory


def brute_force_pr(labels, scores):
    """Exhaustive threshold enumeration oracle for the descending sweep."""
    n_pos = sum(labels)
    points = []
    for tau in sorted(set(scores), reverse=True):
        preds = [s >= tau for s in scores]
        tp = sum(1 for p, l in zip(preds, labels) if p and l)
        pp = sum(preds)
        points.append((tau, tp / pp, tp / n_pos))
    ap = 0.0
    prev_r = 0.0
    for _tau, p, r in points:
        ap += (r - prev_r) * p
        prev_r = r
    return points, ap


# --- F1 ----------------------------------------------------------------------

def test_f1_perfect():
    assert f1([1, 0, 1], [1, 0, 1]) == 1.0


def test_f1_no_predicted_positives():
    assert f1([1, 1, 0], [0, 0, 0]) == 0.0


def test_f1_closed_form():
    labels = [1, 1, 1, 0, 0]
    verdicts = [1, 1, 0, 1, 0]  # TP=2 FP=1 FN=1
    assert math.isclose(f1(labels, verdicts), 2 / 3, rel_tol=1e-12)


def test_f1_accepts_string_labels():
    assert f1(["anomalous", "normal"], ["anomalous", "normal"]) == 1.0


def test_f1_length_mismatch():
    with pytest.raises(DomainError):
        f1([1, 0], [1])


# --- PR curve / AUC ------------------------------------------------------------

def test_pr_curve_hand_case_frozen():
    labels, scores = [1, 0, 1, 0], [0.9, 0.8, 0.7, 0.1]
    points = pr_curve(labels, scores)
    expected = [(0.9, 1.0, 0.5), (0.8, 0.5, 0.5), (0.7, 2 / 3, 1.0), (0.1, 0.5, 1.0)]
    assert [(p.threshold, p.precision, p.recall) for p in points] == pytest.approx(expected)
    assert math.isclose(pr_auc(labels, scores), 5 / 6, rel_tol=1e-12)
    oracle_points, oracle_ap = brute_force_pr(labels, scores)
    assert [(p.threshold, p.precision, p.recall) for p in points] == pytest.approx(oracle_points)
    assert math.isclose(pr_auc(labels, scores), oracle_ap, rel_tol=1e-12)


def test_pr_auc_inverted_two_sample():
    assert math.isclose(pr_auc([1, 0], [0.1, 0.9]), 0.5, rel_tol=1e-12)


def test_pr_perfect_separation():
    labels = [1, 1, 0, 0]
    scores = [4.0, 3.0, 2.0, 1.0]
    points = pr_curve(labels, scores)
    assert any(p.recall == 1.0 and p.precision == 1.0 for p in points)
    assert pr_auc(labels, scores) == 1.0


def test_pr_all_scores_equal_single_point():
    points = pr_curve([1, 0, 0, 1], [2.0, 2.0, 2.0, 2.0])
    assert len(points) == 1
    assert points[0].precision == 0.5  # prevalence
    assert points[0].recall == 1.0


def test_pr_needs_a_positive():
    with pytest.raises(DomainError):
        pr_curve([0, 0], [1.0, 2.0])


def test_pr_points_ordered_by_recall():
    rng = np.random.default_rng(0)
    labels = [1, 0, 1, 1, 0, 0, 1]
    scores = list(rng.normal(size=7))
    recalls = [p.recall for p in pr_curve(labels, scores)]
    assert recalls == sorted(recalls)


def test_pr_auc_matches_brute_force_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        labels = rng.integers(0, 2, size=n).tolist()
        if sum(labels) == 0:
            labels[int(rng.integers(0, n))] = 1
        scores = rng.choice([0.1, 0.25, 0.5, 0.75, 1.0], size=n).tolist()
        _, oracle = brute_force_pr(labels, scores)
        assert math.isclose(pr_auc(labels, scores), oracle, rel_tol=1e-12, abs_tol=1e-12)


@given(st.lists(st.tuples(st.integers(0, 1), st.floats(-5, 5, allow_nan=False)), min_size=2, max_size=20),
       st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_metrics_invariant_under_permutation(pairs, shuffle_seed):
    labels = [l for l, _ in pairs]
    scores = [s for _, s in pairs]
    if sum(labels) == 0:
        labels[0] = 1
    order = np.random.default_rng(shuffle_seed).permutation(len(pairs))
    plabels = [labels[i] for i in order]
    pscores = [scores[i] for i in order]
    assert math.isclose(pr_auc(labels, scores), pr_auc(plabels, pscores), rel_tol=1e-12)
    assert f1(labels, [s > 0 for s in scores]) == f1(plabels, [s > 0 for s in pscores])


def test_pr_auc_invariant_under_monotone_transform():
    rng = np.random.default_rng(1)
    labels = [1, 0, 1, 0, 0, 1]
    scores = rng.normal(size=6).tolist()
    base = pr_auc(labels, scores)
    assert math.isclose(pr_auc(labels, [math.exp(s) for s in scores]), base, rel_tol=1e-12)
    assert math.isclose(pr_auc(labels, [3 * s + 7 for s in scores]), base, rel_tol=1e-12)


# --- per-agent evaluation -------------------------------------------------------

def report(tid, agent, ppl, threshold):
    return ScoreReport(traj_id=tid, agent=agent,
                       perplexity=ppl, threshold=threshold,
                       verdict="anomalous" if ppl > threshold else "normal")


def test_per_agent_eval_excludes_agents_without_anomalies():
    reports = [report("a1", "a", 5.0, 2.0), report("b1", "b", 1.0, 2.0)]
    truth = {"a1": "anomalous", "b1": "normal"}
    out = per_agent_eval(reports, truth)
    assert set(out) == {"a"}


def test_per_agent_eval_perfect_agent():
    reports = [report("a1", "a", 5.0, 2.0), report("a2", "a", 1.0, 2.0)]
    truth = {"a1": "anomalous", "a2": "normal"}
    out = per_agent_eval(reports, truth)
    assert out["a"].f1 == 1.0 and out["a"].pr_auc == 1.0
    assert (out["a"].tp, out["a"].fp, out["a"].fn, out["a"].tn) == (1, 0, 0, 1)


def test_per_agent_eval_isolates_agent_context():
    # identical perplexities, different ground truth per agent
    reports = [
        report("a1", "a", 5.0, 2.0), report("a2", "a", 1.0, 2.0),
        report("b1", "b", 5.0, 2.0), report("b2", "b", 1.0, 2.0),
    ]
    truth = {"a1": "anomalous", "a2": "normal", "b1": "normal", "b2": "anomalous"}
    out = per_agent_eval(reports, truth)
    assert out["a"].f1 == 1.0
    assert out["b"].f1 == 0.0
    assert out["a"].pr_auc != out["b"].pr_auc


def test_per_agent_eval_requires_agents_and_truth():
    with pytest.raises(DomainError):
        per_agent_eval([report("x", None, 1.0, 2.0)], {"x": "normal"})
    with pytest.raises(DomainError):
        per_agent_eval([report("x", "a", 1.0, 2.0)], {})


# --- completion-ratio protocol ---------------------------------------------------

@pytest.fixture(scope="module")
def ratio_setup():
    cfg = ModelConfig(vocab_size=20, d_model=16, n_heads=2, n_layers=2, d_ff=32, max_seq_len=24, seed=3)
    model = init_model(cfg)
    rng = np.random.default_rng(7)
    corpus = []
    truth = {}
    for i in range(12):
        n = int(rng.integers(6, 16))
        ids = [1] + [int(x) for x in rng.integers(3, 20, size=n)] + [2]
        corpus.append(EncodedTrajectory(ids=ids, prefix_len=1, traj_id=f"t{i}"))
        truth[f"t{i}"] = "anomalous" if i % 4 == 0 else "normal"
    table = compute_thresholds([perplexity(model, t) for t in corpus])
    return model, corpus, truth, table


def test_completion_ratio_one_reproduces_batch_bit_for_bit(ratio_setup):
    model, corpus, truth, table = ratio_setup
    result = completion_ratio_eval(model, corpus, truth, [1.0], table)
    labels = [truth[t.traj_id] for t in corpus]
    ppls = [perplexity(model, t) for t in corpus]
    verdicts = [classify(t.traj_id, p, table).verdict for t, p in zip(corpus, ppls)]
    assert result[1.0] == (f1(labels, verdicts), pr_auc(labels, ppls))
    for t in corpus:
        assert prefix_perplexity(model, t, 1.0) == perplexity(model, t)


def test_completion_ratio_table_shape(ratio_setup):
    model, corpus, truth, table = ratio_setup
    ratios = [0.2, 0.5, 0.8, 1.0]
    result = completion_ratio_eval(model, corpus, truth, ratios, table)
    assert sorted(result) == ratios


def test_prefix_perplexity_uses_ceil(ratio_setup):
    model, corpus, _, _ = ratio_setup
    t = corpus[0]
    n_loc = len(t.ids) - t.prefix_len
    # smallest ratio still scores ceil(r * n_loc) >= 1 location
    ppl = prefix_perplexity(model, t, 0.01)
    sub = EncodedTrajectory(ids=t.ids[: t.prefix_len + 1], prefix_len=t.prefix_len)
    assert abs(ppl - perplexity(model, sub)) / ppl < 1e-9
    with pytest.raises(DomainError):
        prefix_perplexity(model, t, 0.0)


# --- ablation harness -------------------------------------------------------------

class Rec:
    def __init__(self, traj_id):
        self.traj_id = traj_id


def test_ablation_identical_corpora_identical_metrics():
    from trajlm.evaluate import EvalReport

    def pipeline(corpus):
        return {"a": EvalReport(scope="agent:a", f1=0.5, pr_auc=0.6, tp=1, fp=1, fn=1, tn=1)}

    corpora = {"x": [Rec("1")], "y": [Rec("1")]}
    out = ablation_eval(corpora, pipeline)
    assert out["x"].average_f1 == out["y"].average_f1 == 0.5
    assert out["x"].average_pr_auc == 0.6


def test_ablation_mismatched_ids_error():
    def pipeline(corpus):
        raise AssertionError("should not run")

    with pytest.raises(DomainError):
        ablation_eval({"x": [Rec("1")], "y": [Rec("2")]}, pipeline)


def test_global_eval_counts():
    reports = [report("a", None, 5.0, 2.0), report("b", None, 1.0, 2.0)]
    rep = global_eval(reports, {"a": "anomalous", "b": "normal"})
    assert rep.f1 == 1.0 and (rep.tp, rep.tn) == (1, 1)
