import io
import sys

import pytest

from trajlm import dataio
from trajlm.checkpoint import read_checkpoint
from trajlm.cli import main
from trajlm.scoring import token_log_probs
from trajlm.vocab import Vocab

POL_TINY = """\
[run]
preset = pol
seed = 3

[world]
n_agents = 4
n_days = 8
n_anomalous_agents = 1
anomalous_days = 2
configurations = staypoint

[model]
d_model = 16
n_heads = 2
n_layers = 1
d_ff = 32
max_seq_len = 16

[train]
epochs = 2
batch_size = 16
learning_rate = 0.003

[score]
scope = per_agent

[eval]
ratios = 0.5,1.0
"""

PORTO_TINY = """\
[run]
preset = porto
seed = 5

[grid]
origin_x = 0
origin_y = 0
cell_size = 100
n_cols = 16
n_rows = 16

[routes]
n_od_pairs = 2
routes_per_pair = 8
noise = 0.1

[anomaly]
fraction = 0.125
ratio = 0.3
dist = 2
kinds = random_shift,detour

[model]
d_model = 16
n_heads = 2
n_layers = 1
d_ff = 32
max_seq_len = 48

[train]
epochs = 2
batch_size = 8
learning_rate = 0.003

[score]
scope = global

[eval]
ratios = 0.5,1.0
"""


@pytest.fixture
def pol_config(tmp_path):
    path = tmp_path / "pol.ini"
    path.write_text(POL_TINY)
    return path


@pytest.fixture
def porto_config(tmp_path):
    path = tmp_path / "porto.ini"
    path.write_text(PORTO_TINY)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_data_pol_counts_and_determinism(pol_config, tmp_path):
    d1, d2 = tmp_path / "d1", tmp_path / "d2"
    assert run("gen-data", "--config", pol_config, "--out-dir", d1) == 0
    assert run("gen-data", "--config", pol_config, "--out-dir", d2) == 0
    records = dataio.read_corpus(d1 / "corpus_staypoint.jsonl")
    assert len(records) == 32
    assert sum(1 for r in records if r.label == "anomalous") == 2
    assert (d1 / "corpus_staypoint.jsonl").read_bytes() == (d2 / "corpus_staypoint.jsonl").read_bytes()
    assert (d1 / "truth.csv").read_bytes() == (d2 / "truth.csv").read_bytes()
    truth = dataio.read_truth(d1 / "truth.csv")
    planted = [t for t in truth.values() if t.label == "anomalous"]
    assert len(planted) == 2 and all(t.kind == "skip_routine" and t.pos is not None for t in planted)


def test_gen_data_porto_layout(porto_config, tmp_path):
    out = tmp_path / "porto"
    assert run("gen-data", "--config", porto_config, "--out-dir", out) == 0
    train = dataio.read_corpus(out / "train.jsonl")
    assert len(train) == 14  # 16 routes - 2 held out
    assert all(r.label == "normal" for r in train)
    for kind in ("random_shift", "detour"):
        ev = dataio.read_corpus(out / f"eval_{kind}.jsonl")
        assert len(ev) == 16
        assert sum(1 for r in ev if r.label == "anomalous") == 2
        truth = dataio.read_truth(out / f"truth_{kind}.csv")
        assert sum(1 for t in truth.values() if t.label == "anomalous") == 2


@pytest.fixture
def pol_pipeline(pol_config, tmp_path):
    """gen-data + build-vocab + train, shared by the downstream command tests."""
    d = tmp_path / "data"
    run("gen-data", "--config", pol_config, "--out-dir", d)
    corpus = d / "corpus_staypoint.jsonl"
    vocab = tmp_path / "vocab.tsv"
    ckpt = tmp_path / "model.ckpt"
    loss = tmp_path / "loss.csv"
    assert run("build-vocab", "--inputs", corpus, "--out", vocab) == 0
    assert run("train", "--config", pol_config, "--corpus", corpus, "--vocab", vocab,
               "--out", ckpt, "--loss-log", loss) == 0
    return dict(config=pol_config, data=d, corpus=corpus, vocab=vocab, ckpt=ckpt, loss=loss, tmp=tmp_path)


def test_train_outputs_and_reproducibility(pol_pipeline):
    p = pol_pipeline
    assert read_checkpoint(p["ckpt"]).vocab_hash == Vocab.load(p["vocab"]).hash()
    lines = [l for l in p["loss"].read_text().splitlines() if l and not l.startswith("#")]
    assert lines[0] == "epoch,loss" and len(lines) == 3  # header + 2 epochs
    ckpt2 = p["tmp"] / "model2.ckpt"
    assert run("train", "--config", p["config"], "--corpus", p["corpus"], "--vocab", p["vocab"],
               "--out", ckpt2) == 0
    assert p["ckpt"].read_bytes() == ckpt2.read_bytes()


def test_train_resume_continues_loss_log(pol_pipeline):
    p = pol_pipeline
    assert run("train", "--config", p["config"], "--corpus", p["corpus"], "--vocab", p["vocab"],
               "--out", p["ckpt"], "--loss-log", p["loss"], "--resume") == 0
    rows = [l for l in p["loss"].read_text().splitlines() if l and not l.startswith(("#", "epoch"))]
    assert len(rows) == 4
    assert [int(r.split(",")[0]) for r in rows] == [0, 1, 2, 3]


def test_score_fit_thresholds_and_eval_composability(pol_pipeline):
    p = pol_pipeline
    scores = p["tmp"] / "scores.csv"
    thresholds = p["tmp"] / "thresholds.csv"
    per_pos = p["tmp"] / "surprisals.csv"
    assert run("score", "--config", p["config"], "--checkpoint", p["ckpt"], "--vocab", p["vocab"],
               "--corpus", p["corpus"], "--out", scores,
               "--fit-thresholds", "--thresholds-out", thresholds,
               "--per-position", per_pos) == 0
    table = dataio.read_thresholds(thresholds)
    assert table.global_threshold is not None
    assert len(table.per_agent) == 4
    reports = dataio.read_scores(scores)
    assert len(reports) == 32
    assert per_pos.read_text().count("\n") > 33  # at least one row per trajectory

    eval_a = p["tmp"] / "eval_a.csv"
    eval_b = p["tmp"] / "eval_b.csv"
    truth = p["data"] / "truth.csv"
    assert run("eval", "--scores", scores, "--truth", truth, "--out", eval_a, "--per-agent") == 0
    assert run("eval", "--checkpoint", p["ckpt"], "--vocab", p["vocab"], "--corpus", p["corpus"],
               "--thresholds", thresholds, "--scope", "per_agent",
               "--truth", truth, "--out", eval_b, "--per-agent") == 0
    strip = lambda path: [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert strip(eval_a) == strip(eval_b)
    rows = strip(eval_a)
    assert rows[0] == "agent,f1,pr_auc,tp,fp,fn,tn"
    assert len(rows) == 2  # only the one agent with true anomalies


def test_stream_matches_batch_scorer(pol_pipeline, monkeypatch, capsys):
    p = pol_pipeline
    thresholds = p["tmp"] / "thr.csv"
    run("score", "--config", p["config"], "--checkpoint", p["ckpt"], "--vocab", p["vocab"],
        "--corpus", p["corpus"], "--out", p["tmp"] / "s.csv",
        "--fit-thresholds", "--thresholds-out", thresholds)
    records = dataio.read_corpus(p["corpus"])
    rec = records[0]
    vocab = Vocab.load(p["vocab"])
    model = read_checkpoint(p["ckpt"])
    enc = dataio.encode_record(rec, vocab)
    batch = token_log_probs(model, enc)

    tokens = [str(t) for t in dataio.full_tokens(rec)][1:] + ["special:EOT"]
    monkeypatch.setattr(sys, "stdin", io.StringIO("\n".join(tokens) + "\n"))
    conditioning = str(dataio.full_tokens(rec)[0])
    assert run("stream", "--checkpoint", p["ckpt"], "--vocab", p["vocab"],
               "--thresholds", thresholds, "--conditioning", conditioning) == 0
    out_lines = [l for l in capsys.readouterr().out.splitlines() if l.count(",") >= 4]
    assert len(out_lines) == len(batch)
    for line, lp in zip(out_lines, batch):
        surprisal = float(line.split(",")[2])
        assert abs(surprisal + lp) <= 1e-9 * abs(lp)
    last = out_lines[-1].split(",")
    assert last[4] in ("normal", "anomalous")


def test_report_ablation_row_count(pol_config, tmp_path):
    text = POL_TINY.replace("configurations = staypoint", "configurations = staypoint,gps,duration")
    cfg = tmp_path / "ablate.ini"
    cfg.write_text(text)
    out = tmp_path / "rep"
    assert run("report", "--kind", "ablation", "--config", cfg, "--out-dir", out) == 0
    rows = [l for l in (out / "ablation.csv").read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 3 + 1  # one per configuration plus the header
    for name in ("staypoint", "gps", "duration"):
        detail = out / f"ablation_{name}.csv"
        assert detail.exists()
        assert [l for l in detail.read_text().splitlines() if not l.startswith("#")][-1].startswith("average,")


def test_report_completion(porto_config, tmp_path):
    out = tmp_path / "porto"
    run("gen-data", "--config", porto_config, "--out-dir", out)
    vocab = tmp_path / "v.tsv"
    ckpt = tmp_path / "m.ckpt"
    run("build-vocab", "--inputs", out / "train.jsonl", out / "eval_random_shift.jsonl",
        out / "eval_detour.jsonl", "--out", vocab)
    run("train", "--config", porto_config, "--corpus", out / "train.jsonl", "--vocab", vocab, "--out", ckpt)
    thr = tmp_path / "thr.csv"
    run("score", "--config", porto_config, "--checkpoint", ckpt, "--vocab", vocab,
        "--corpus", out / "train.jsonl", "--out", tmp_path / "s.csv",
        "--fit-thresholds", "--thresholds-out", thr)
    rep = tmp_path / "rep"
    assert run("report", "--kind", "completion", "--config", porto_config, "--out-dir", rep,
               "--checkpoint", ckpt, "--vocab", vocab, "--corpus", out / "eval_random_shift.jsonl",
               "--thresholds", thr, "--truth", out / "truth_random_shift.csv") == 0
    rows = [l for l in (rep / "completion.csv").read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "ratio,f1,pr_auc" and len(rows) == 3  # header + 2 ratios


def test_exit_codes(pol_config, tmp_path):
    assert run("train", "--config", pol_config, "--corpus", tmp_path / "missing.jsonl",
               "--vocab", tmp_path / "missing.tsv", "--out", tmp_path / "x.ckpt") == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\npreset = nonsense\nseed = 1\n")
    assert run("gen-data", "--config", bad, "--out-dir", tmp_path / "o") == 1
    assert run("no-such-command") == 1
    assert run("score") == 1  # missing required arguments


def test_vocab_hash_mismatch_is_a_model_error(pol_pipeline, tmp_path):
    p = pol_pipeline
    other = tmp_path / "other_vocab.tsv"
    other.write_text("special\tPAD\nspecial\tSOT\nspecial\tEOT\nstaypoint\tzzz\n")
    code = run("score", "--checkpoint", p["ckpt"], "--vocab", other, "--corpus", p["corpus"],
               "--out", tmp_path / "s.csv", "--fit-thresholds")
    assert code == 2


def test_shipped_pol_preset_counts(tmp_path):
    from trajlm.cli import POL_PRESET

    cfg = tmp_path / "pol.ini"
    cfg.write_text(POL_PRESET)
    out = tmp_path / "data"
    assert run("gen-data", "--config", cfg, "--out-dir", out) == 0
    records = dataio.read_corpus(out / "corpus_staypoint.jsonl")
    assert len(records) == 50 * 100
    assert sum(1 for r in records if r.label == "anomalous") == 5 * 14


def test_shipped_porto_preset_od_groups(tmp_path):
    from trajlm.cli import PORTO_PRESET
    from trajlm.grid import CellId, filter_od_groups, group_by_od

    cfg = tmp_path / "porto.ini"
    cfg.write_text(PORTO_PRESET)
    out = tmp_path / "data"
    assert run("gen-data", "--config", cfg, "--out-dir", out) == 0
    for name in ("train.jsonl", "eval_random_shift.jsonl", "eval_detour.jsonl"):
        records = dataio.read_corpus(out / name)
        routes = [
            [CellId(*map(int, t.value.split(","))) for t in r.tokens] for r in records
        ]
        groups = filter_od_groups(group_by_od(routes), 25)
        # every route sits in a surviving group: no endpoint group falls under 25
        assert sum(len(v) for v in groups.values()) == len(routes)


def test_artifacts_embed_config_hash(pol_pipeline):
    p = pol_pipeline
    corpus_first_line = p["corpus"].read_text().splitlines()[0]
    assert "_meta" in corpus_first_line and "tool_version" in corpus_first_line
    loss_head = p["loss"].read_text().splitlines()[0]
    assert loss_head.startswith("# config_hash=")
    assert b"config_hash" in p["ckpt"].read_bytes()
