"""Command-line pipeline: gen-data, build-vocab, train, score, stream, eval, report.

Every experiment is fully determined by (config file, root seed). The root
seed lives in the config's [run] section and each component draws from its own
stream derived as sha256(root_seed, component name); per-unit streams inside
the generators split further by XORing the unit index. Artifacts embed the
config hash and tool version. Exit codes: 0 success, 1 usage/config error,
2 data or model error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .checkpoint import read_checkpoint, write_checkpoint
from .errors import ConfigError, DataError, TrajLMError
from .evaluate import ablation_eval, completion_ratio_eval, global_eval, per_agent_eval
from .grid import GridSpec
from .model import Model, ModelConfig, init_model
from .online import open_session, partial_verdict
from .scoring import ThresholdTable, compute_thresholds, perplexity, score_trajectory
from .synth import (
    AnomalySpec,
    WorldConfig,
    gen_pol_corpus,
    gen_route_corpus,
    inject_detour,
    inject_random_shift,
    pol_location_tokens,
)
from .training import TrainConfig, train
from .vocab import Token, Vocab, build_vocab

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


def derive_seed(root: int, name: str) -> int:
    """Stable per-component seed: low 8 bytes of sha256("{root}:{name}")."""
    digest = hashlib.sha256(f"{root}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

POL_PRESET = """\
[run]
preset = pol
seed = 7

[world]
n_agents = 50
n_days = 100
n_anomalous_agents = 5
anomalous_days = 14
alt_prob = 0.35
configurations = staypoint

[model]
d_model = 64
n_heads = 4
n_layers = 2
d_ff = 128
max_seq_len = 24
dropout = 0.0
precision = float64

[train]
epochs = 30
batch_size = 100
learning_rate = 0.003
clip_norm = 1.0

[score]
scope = per_agent

[eval]
ratios = 0.2,0.4,0.6,0.8,1.0
"""

PORTO_PRESET = """\
[run]
preset = porto
seed = 11

[grid]
origin_x = 0
origin_y = 0
cell_size = 100
n_cols = 24
n_rows = 24

[routes]
n_od_pairs = 20
routes_per_pair = 40
noise = 0.08

[anomaly]
fraction = 0.05
ratio = 0.3
dist = 3
kinds = random_shift,detour

[model]
d_model = 64
n_heads = 4
n_layers = 4
d_ff = 256
max_seq_len = 96
dropout = 0.0
precision = float64

[train]
epochs = 30
batch_size = 64
learning_rate = 0.003
clip_norm = 1.0

[score]
scope = global

[eval]
ratios = 0.2,0.4,0.6,0.8,1.0
"""

PRESETS = {"pol": POL_PRESET, "porto": PORTO_PRESET}


class RunConfig:
    """Config file wrapper: typed getters plus the text hash embedded in artifacts."""

    def __init__(self, text: str):
        self.text = text
        self.hash = dataio.config_hash_of(text)
        self.parser = configparser.ConfigParser()
        try:
            self.parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"cannot parse config: {e}") from e

    @classmethod
    def from_path(cls, path) -> "RunConfig":
        return cls(Path(path).read_text(encoding="utf-8"))

    def get(self, section: str, key: str, cast=str, default=None):
        if not self.parser.has_option(section, key):
            if default is None:
                raise ConfigError(f"config is missing [{section}] {key}")
            return default
        raw = self.parser.get(section, key)
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except ValueError as e:
            raise ConfigError(f"config [{section}] {key}={raw!r}: {e}") from e

    @property
    def seed(self) -> int:
        return self.get("run", "seed", int, 0)

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(
            vocab_size=vocab_size,
            d_model=self.get("model", "d_model", int, 64),
            n_heads=self.get("model", "n_heads", int, 4),
            n_layers=self.get("model", "n_layers", int, 2),
            d_ff=self.get("model", "d_ff", int, 256),
            max_seq_len=self.get("model", "max_seq_len", int, 64),
            dropout_rate=self.get("model", "dropout", float, 0.0),
            seed=derive_seed(self.seed, "model-init"),
            precision=self.get("model", "precision", str, "float64"),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            n_epochs=self.get("train", "epochs", int, 50),
            batch_size=self.get("train", "batch_size", int, 64),
            learning_rate=self.get("train", "learning_rate", float, 3e-4),
            beta1=self.get("train", "beta1", float, 0.9),
            beta2=self.get("train", "beta2", float, 0.999),
            eps=self.get("train", "eps", float, 1e-8),
            clip_norm=self.get("train", "clip_norm", float, 1.0),
            seed=derive_seed(self.seed, "train"),
        )

    def grid(self) -> GridSpec:
        return GridSpec(
            origin_x=self.get("grid", "origin_x", float, 0.0),
            origin_y=self.get("grid", "origin_y", float, 0.0),
            cell_size=self.get("grid", "cell_size", float, 100.0),
            n_cols=self.get("grid", "n_cols", int, 24),
            n_rows=self.get("grid", "n_rows", int, 24),
        )

    def world_config(self) -> WorldConfig:
        return WorldConfig(
            n_agents=self.get("world", "n_agents", int),
            n_days=self.get("world", "n_days", int),
            n_anomalous_agents=self.get("world", "n_anomalous_agents", int),
            anomalous_days=self.get("world", "anomalous_days", int),
            alt_prob=self.get("world", "alt_prob", float, 0.35),
            seed=derive_seed(self.seed, "world"),
        )

    def ratios(self) -> list[float]:
        raw = self.get("eval", "ratios", str, "0.2,0.4,0.6,0.8,1.0")
        return [float(x) for x in raw.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# Data generation
# ---------------------------------------------------------------------------

def _pol_records(corpus, configuration: str) -> list[dataio.CorpusRecord]:
    return [
        dataio.CorpusRecord(
            traj_id=traj.traj_id,
            tokens=pol_location_tokens(traj, configuration, corpus.config.gps_grid),
            agent=traj.agent,
            weekday=traj.weekday,
            label=traj.label,
        )
        for traj in corpus.trajectories
    ]


def _gen_pol(cfg: RunConfig, out_dir: Path) -> None:
    corpus = gen_pol_corpus(cfg.world_config())
    configurations = [
        c.strip() for c in cfg.get("world", "configurations", str, "staypoint").split(",") if c.strip()
    ]
    n_anom = sum(1 for t in corpus.trajectories if t.label == "anomalous")
    truth = [
        dataio.TruthRecord(
            traj_id=t.traj_id,
            label=t.label,
            kind="skip_routine" if t.label == "anomalous" else "",
            pos=t.anomaly_pos,
        )
        for t in corpus.trajectories
    ]
    dataio.write_truth(out_dir / "truth.csv", truth, cfg.hash)
    for configuration in configurations:
        records = _pol_records(corpus, configuration)
        dataio.write_corpus(out_dir / f"corpus_{configuration}.jsonl", records, cfg.hash)
        vocab = build_vocab([dataio.full_tokens(r) for r in records])
        print(
            f"[gen-data] {configuration}: {len(records)} trajectories, "
            f"{n_anom} anomalous, vocab size {len(vocab)}"
        )


def _gen_porto(cfg: RunConfig, out_dir: Path) -> None:
    grid = cfg.grid()
    root = cfg.seed
    routes = gen_route_corpus(
        grid,
        cfg.get("routes", "n_od_pairs", int),
        cfg.get("routes", "routes_per_pair", int),
        cfg.get("routes", "noise", float, 0.08),
        seed=derive_seed(root, "routes"),
    )
    per_pair = cfg.get("routes", "routes_per_pair", int)
    ids = [f"od{r // per_pair:02d}_r{r % per_pair:03d}" for r in range(len(routes))]
    fraction = cfg.get("anomaly", "fraction", float, 0.05)
    ratio = cfg.get("anomaly", "ratio", float, 0.3)
    dist = cfg.get("anomaly", "dist", int, 3)
    kinds = [k.strip() for k in cfg.get("anomaly", "kinds", str, "random_shift,detour").split(",")]
    n_anom = round(fraction * len(routes))
    sel_rng = np.random.default_rng(derive_seed(root, "anomaly-select"))
    selected = set(int(i) for i in sel_rng.choice(len(routes), size=n_anom, replace=False))

    def cell_tokens(cells) -> list[Token]:
        return [Token("cell", f"{c.col},{c.row}") for c in cells]

    train_records = [
        dataio.CorpusRecord(ids[i], cell_tokens(routes[i]))
        for i in range(len(routes))
        if i not in selected
    ]
    dataio.write_corpus(out_dir / "train.jsonl", train_records, cfg.hash)
    print(f"[gen-data] train: {len(train_records)} routes ({n_anom} held out for anomalies)")
    injectors = {"random_shift": inject_random_shift, "detour": inject_detour}
    for kind in kinds:
        spec = AnomalySpec(kind, ratio, dist)
        records, truth = [], []
        for i, route in enumerate(routes):
            if i in selected:
                cells = injectors[kind](route, spec, grid, seed=derive_seed(root, f"inject-{kind}-{i}"))
                records.append(dataio.CorpusRecord(ids[i], cell_tokens(cells), label="anomalous"))
                truth.append(dataio.TruthRecord(ids[i], "anomalous", kind, ratio, dist))
            else:
                records.append(dataio.CorpusRecord(ids[i], cell_tokens(route)))
                truth.append(dataio.TruthRecord(ids[i], "normal"))
        dataio.write_corpus(out_dir / f"eval_{kind}.jsonl", records, cfg.hash)
        dataio.write_truth(out_dir / f"truth_{kind}.csv", truth, cfg.hash)
        vocab = build_vocab([r.tokens for r in records])
        print(
            f"[gen-data] eval_{kind}: {len(records)} routes, {n_anom} anomalous, "
            f"vocab size {len(vocab)}"
        )


def cmd_gen_data(args) -> int:
    cfg = RunConfig.from_path(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    preset = cfg.get("run", "preset", str)
    if preset == "pol":
        _gen_pol(cfg, out_dir)
    elif preset == "porto":
        _gen_porto(cfg, out_dir)
    else:
        raise ConfigError(f"unknown preset {preset!r}; expected 'pol' or 'porto'")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Vocab / training / scoring
# ---------------------------------------------------------------------------

def cmd_build_vocab(args) -> int:
    sequences = []
    for path in args.inputs:
        for rec in dataio.read_corpus(path):
            sequences.append(dataio.full_tokens(rec))
    vocab = build_vocab(sequences)
    vocab.save(args.out)
    print(f"[build-vocab] {len(vocab)} tokens ({vocab.hash()[:12]}) -> {args.out}")
    return EXIT_OK


def _load_encoded(path, vocab: Vocab):
    records = dataio.read_corpus(path)
    return records, [dataio.encode_record(r, vocab) for r in records]


def cmd_train(args) -> int:
    cfg = RunConfig.from_path(args.config)
    vocab = Vocab.load(args.vocab)
    _, encoded = _load_encoded(args.corpus, vocab)
    loss_path = Path(args.loss_log) if args.loss_log else None
    start_epoch = 0
    if args.resume:
        model = read_checkpoint(args.checkpoint_in or args.out, expected_vocab_hash=vocab.hash())
        if loss_path is not None and loss_path.exists():
            start_epoch = sum(
                1 for line in loss_path.read_text().splitlines() if line and not line.startswith(("#", "epoch"))
            )
    else:
        model = init_model(cfg.model_config(len(vocab)), vocab_hash=vocab.hash())
    tc = cfg.train_config()
    mode = "a" if args.resume and loss_path is not None and loss_path.exists() else "w"
    log_fh = None
    if loss_path is not None:
        log_fh = open(loss_path, mode, encoding="utf-8")
        if mode == "w":
            log_fh.write(f"# config_hash={cfg.hash} tool_version={dataio.TOOL_VERSION}\n")
            log_fh.write("epoch,loss\n")

    def log_fn(epoch: int, loss: float) -> None:
        if log_fh is not None:
            log_fh.write(f"{start_epoch + epoch},{loss!r}\n")
            log_fh.flush()

    try:
        losses = train(model, encoded, tc, log_fn=log_fn)
    finally:
        if log_fh is not None:
            log_fh.close()
    write_checkpoint(model, args.out, metadata={"config_hash": cfg.hash, "tool_version": dataio.TOOL_VERSION})
    final = losses[-1] if losses else float("nan")
    print(f"[train] {len(encoded)} trajectories, {tc.n_epochs} epochs, final loss {final:.4f} -> {args.out}")
    return EXIT_OK


def _fit_threshold_table(model: Model, encoded, scope: str) -> ThresholdTable:
    ppls = [perplexity(model, t) for t in encoded]
    agents = [t.agent for t in encoded]
    group = scope == "per_agent" and any(a is not None for a in agents)
    return compute_thresholds(ppls, agents, group_by_agent=group)


def cmd_score(args) -> int:
    cfg = RunConfig.from_path(args.config) if args.config else None
    config_hash = cfg.hash if cfg else "-"
    scope = args.scope or (cfg.get("score", "scope", str, "global") if cfg else "global")
    vocab = Vocab.load(args.vocab)
    model = read_checkpoint(args.checkpoint, expected_vocab_hash=vocab.hash())
    _, encoded = _load_encoded(args.corpus, vocab)
    if args.fit_thresholds:
        table = _fit_threshold_table(model, encoded, scope)
        out = args.thresholds_out or args.thresholds
        if out:
            dataio.write_thresholds(out, table, config_hash)
            print(f"[score] fitted thresholds -> {out}")
    else:
        if not args.thresholds:
            raise ConfigError("either --thresholds or --fit-thresholds is required")
        table = dataio.read_thresholds(args.thresholds)
    reports = [
        score_trajectory(model, t, table, scope=scope, with_surprisal=bool(args.per_position))
        for t in encoded
    ]
    dataio.write_scores(args.out, reports, config_hash)
    if args.per_position:
        dataio.write_surprisals(
            args.per_position, reports, vocab, {t.traj_id: t for t in encoded}, config_hash
        )
    n_anom = sum(1 for r in reports if r.verdict == "anomalous")
    print(f"[score] {len(reports)} trajectories scored ({scope}); {n_anom} anomalous -> {args.out}")
    return EXIT_OK


def cmd_stream(args) -> int:
    vocab = Vocab.load(args.vocab)
    model = read_checkpoint(args.checkpoint, expected_vocab_hash=vocab.hash())
    table = dataio.read_thresholds(args.thresholds)
    conditioning = [vocab.id(Token.parse(t.strip())) for t in args.conditioning.split(",") if t.strip()]
    agent = None
    for t in args.conditioning.split(","):
        tok = Token.parse(t.strip())
        if tok.kind == "agent_id":
            agent = tok.value
    session = open_session(model, conditioning)
    scope = args.scope
    out = sys.stdout
    for line in sys.stdin:
        text = line.strip()
        if not text:
            continue
        token = Token.parse(text)
        s, ppl = session.push(vocab.id(token))
        verdict = partial_verdict(session, table, scope=scope, agent=agent).verdict
        out.write(f"{len(session) - 1},{token},{s!r},{ppl!r},{verdict}\n")
        out.flush()
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = RunConfig.from_path(args.config) if args.config else None
    config_hash = cfg.hash if cfg else "-"
    truth = dataio.truth_labels(dataio.read_truth(args.truth))
    if args.scores:
        reports = dataio.read_scores(args.scores)
    else:
        if not (args.checkpoint and args.vocab and args.corpus and args.thresholds):
            raise ConfigError(
                "eval needs either --scores or all of --checkpoint/--vocab/--corpus/--thresholds"
            )
        vocab = Vocab.load(args.vocab)
        model = read_checkpoint(args.checkpoint, expected_vocab_hash=vocab.hash())
        _, encoded = _load_encoded(args.corpus, vocab)
        table = dataio.read_thresholds(args.thresholds)
        scope = args.scope or (cfg.get("score", "scope", str, "global") if cfg else "global")
        reports = [score_trajectory(model, t, table, scope=scope) for t in encoded]
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={config_hash} tool_version={dataio.TOOL_VERSION}\n")
        if args.per_agent:
            fh.write("agent,f1,pr_auc,tp,fp,fn,tn\n")
            for agent, rep in per_agent_eval(reports, truth).items():
                fh.write(f"{agent},{rep.f1!r},{rep.pr_auc!r},{rep.tp},{rep.fp},{rep.fn},{rep.tn}\n")
        else:
            rep = global_eval(reports, truth)
            fh.write("scope,f1,pr_auc,tp,fp,fn,tn\n")
            fh.write(f"global,{rep.f1!r},{rep.pr_auc!r},{rep.tp},{rep.fp},{rep.fn},{rep.tn}\n")
    print(f"[eval] wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Experiment reports (ablation, completion-ratio)
# ---------------------------------------------------------------------------

def _train_eval_pipeline(cfg: RunConfig):
    """Train/score/eval one tokenized corpus; returns the per-agent table."""

    def pipeline(records: list[dataio.CorpusRecord]):
        vocab = build_vocab([dataio.full_tokens(r) for r in records])
        model = init_model(cfg.model_config(len(vocab)), vocab_hash=vocab.hash())
        encoded = [dataio.encode_record(r, vocab) for r in records]
        train(model, encoded, cfg.train_config())
        table = _fit_threshold_table(model, encoded, "per_agent")
        reports = [score_trajectory(model, t, table, scope="per_agent") for t in encoded]
        truth = {r.traj_id: r.label for r in records}
        return per_agent_eval(reports, truth)

    return pipeline


def cmd_report(args) -> int:
    cfg = RunConfig.from_path(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "ablation":
        corpus = gen_pol_corpus(cfg.world_config())
        configurations = [
            c.strip()
            for c in cfg.get("world", "configurations", str, "staypoint,gps,duration").split(",")
            if c.strip()
        ]
        corpora = {name: _pol_records(corpus, name) for name in configurations}
        result = ablation_eval(corpora, _train_eval_pipeline(cfg))
        summary = out_dir / "ablation.csv"
        with open(summary, "w", encoding="utf-8") as fh:
            fh.write(f"# config_hash={cfg.hash} tool_version={dataio.TOOL_VERSION}\n")
            fh.write("configuration,average_f1,average_pr_auc\n")
            for name, entry in result.items():
                fh.write(f"{name},{entry.average_f1!r},{entry.average_pr_auc!r}\n")
        for name, entry in result.items():
            detail = out_dir / f"ablation_{name}.csv"
            with open(detail, "w", encoding="utf-8") as fh:
                fh.write(f"# config_hash={cfg.hash} tool_version={dataio.TOOL_VERSION}\n")
                fh.write("agent,f1,pr_auc\n")
                for agent, rep in entry.per_agent.items():
                    fh.write(f"{agent},{rep.f1!r},{rep.pr_auc!r}\n")
                fh.write(f"average,{entry.average_f1!r},{entry.average_pr_auc!r}\n")
        best = max(result, key=lambda name: result[name].average_f1)
        print(f"[report] ablation -> {summary} (best average F1: {best})")
    elif args.kind == "completion":
        if not (args.checkpoint and args.vocab and args.corpus and args.thresholds and args.truth):
            raise ConfigError(
                "completion report needs --checkpoint/--vocab/--corpus/--thresholds/--truth"
            )
        vocab = Vocab.load(args.vocab)
        model = read_checkpoint(args.checkpoint, expected_vocab_hash=vocab.hash())
        _, encoded = _load_encoded(args.corpus, vocab)
        table = dataio.read_thresholds(args.thresholds)
        truth = dataio.truth_labels(dataio.read_truth(args.truth))
        result = completion_ratio_eval(model, encoded, truth, cfg.ratios(), table, scope="global")
        out = out_dir / "completion.csv"
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(f"# config_hash={cfg.hash} tool_version={dataio.TOOL_VERSION}\n")
            fh.write("ratio,f1,pr_auc\n")
            for ratio in sorted(result):
                f1_v, auc = result[ratio]
                fh.write(f"{ratio},{f1_v!r},{auc!r}\n")
        print(f"[report] completion -> {out}")
    else:
        raise ConfigError(f"unknown report kind {args.kind!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trajlm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a labeled synthetic corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("build-vocab", help="build a vocabulary from corpus files")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_vocab)

    p = sub.add_parser("train", help="train a model on an encoded corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--loss-log")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--checkpoint-in", help="checkpoint to resume from (defaults to --out)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("score", help="perplexity + verdict per trajectory")
    p.add_argument("--config")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scope", choices=["global", "per_agent"])
    p.add_argument("--thresholds")
    p.add_argument("--fit-thresholds", action="store_true")
    p.add_argument("--thresholds-out")
    p.add_argument("--per-position", help="also write per-position surprisals CSV")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("stream", help="score tokens from stdin incrementally")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--thresholds", required=True)
    p.add_argument("--conditioning", required=True, help="comma list of kind:value tokens")
    p.add_argument("--scope", choices=["global", "per_agent"], default="global")
    p.set_defaults(fn=cmd_stream)

    p = sub.add_parser("eval", help="detection metrics from scores (or end to end)")
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scores")
    p.add_argument("--config")
    p.add_argument("--checkpoint")
    p.add_argument("--vocab")
    p.add_argument("--corpus")
    p.add_argument("--thresholds")
    p.add_argument("--scope", choices=["global", "per_agent"])
    p.add_argument("--per-agent", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="multi-run experiment tables")
    p.add_argument("--kind", choices=["ablation", "completion"], required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--vocab")
    p.add_argument("--corpus")
    p.add_argument("--thresholds")
    p.add_argument("--truth")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit as e:
        return int(e.code or 0)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TrajLMError, DataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
