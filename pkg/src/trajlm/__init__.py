"""Trajectory anomaly detection with an autoregressive token model.

Trajectories (grid cells, staypoints, dwell-time buckets, activities) are
tokenized and modeled with a causal-attention network; anomalies are flagged
by perplexity against mean+std thresholds, localized by per-token surprisal,
and scored online through key/value-cached incremental sessions.
"""

from .errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointVersionError,
    CheckpointVocabError,
    ConfigError,
    DataError,
    DomainError,
    SessionFullError,
    TrajLMError,
    VocabError,
)
from .grid import CellId, GridSpec, RawTrajectory, cell_center, discretize, filter_od_groups, group_by_od, shift_cell, to_cell
from .model import Model, ModelConfig, attention, backward, ffn, forward, init_model, multi_head, nll_loss
from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint
from .online import Session, open_session, partial_verdict
from .scoring import (
    ScoreReport,
    ThresholdTable,
    classify,
    compute_thresholds,
    dataset_perplexity,
    perplexity,
    surprisal,
    token_log_probs,
)
from .synth import (
    AnomalySpec,
    WorldConfig,
    gen_pol_corpus,
    gen_route_corpus,
    inject_detour,
    inject_random_shift,
)
from .training import TrainConfig, train
from .vocab import EncodedTrajectory, Token, Vocab, bucket_duration, build_vocab, decode, encode
from .evaluate import EvalReport, PRPoint, ablation_eval, completion_ratio_eval, f1, per_agent_eval, pr_auc, pr_curve

__version__ = "0.1.0"
