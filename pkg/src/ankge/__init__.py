"""Knowledge-graph embedding toolkit with analogical inference enhancement.

Train TransE / RotatE / HAKE / PairRE base models, retrieve per-triple
analogical objects, fit analogy projections on top of the frozen base, and
evaluate interpolated scores under the filtered link-prediction protocol.
"""

__version__ = "0.1.0"

from .analogy import (
    AnalogyParams,
    AnalogyTrainConfig,
    aggregate_entity,
    aggregate_relation,
    aggregate_triple,
    beta_weights,
    f_ent,
    f_rel,
    f_trp,
    init_params,
    level_loss,
    load_params,
    prepare_targets,
    save_params,
    total_loss,
    train_analogy,
)
from .checkpoint import load_model, read_container, save_model, sha256_file, write_container
from .config import PRESETS, RunConfig, parse_config_text
from .data import (
    CountIndex,
    FilterIndex,
    REVERSE_MARKER,
    TripleStore,
    augment_reverse,
    build_count_index,
    build_filter_index,
    build_store,
    load_store,
    load_triples,
)
from .evaluation import (
    EvalReport,
    InferenceConfig,
    adaptive_weights,
    ankge_score,
    evaluate,
    metrics_text,
    rank_tail,
    write_metrics_report,
    write_ranks_csv,
)
from .exceptions import (
    AnkgeError,
    CheckpointError,
    ConfigError,
    DataError,
    DigestMismatchError,
    DivergenceError,
    ParseError,
)
from .families import FAMILIES, KGEFamily, ModelFamily, get_family
from .model import EmbeddingModel, init_model
from .retriever import (
    AnalogyCache,
    Candidates,
    PairCandidates,
    RetrieverConfig,
    build_cache,
    load_cache,
    retrieve_entity_level,
    retrieve_relation_level,
    retrieve_triple_level,
    save_cache,
)
from .toygen import ToyConfig, generate_toy_kg, write_toy_kg
from .training import BaseTrainConfig, sample_negatives, self_adversarial_loss, train_base

__all__ = [
    "AnalogyCache",
    "AnalogyParams",
    "AnalogyTrainConfig",
    "AnkgeError",
    "BaseTrainConfig",
    "Candidates",
    "CheckpointError",
    "ConfigError",
    "CountIndex",
    "DataError",
    "DigestMismatchError",
    "DivergenceError",
    "EmbeddingModel",
    "EvalReport",
    "FAMILIES",
    "FilterIndex",
    "InferenceConfig",
    "KGEFamily",
    "ModelFamily",
    "PairCandidates",
    "ParseError",
    "PRESETS",
    "REVERSE_MARKER",
    "RetrieverConfig",
    "RunConfig",
    "ToyConfig",
    "TripleStore",
    "adaptive_weights",
    "aggregate_entity",
    "aggregate_relation",
    "aggregate_triple",
    "ankge_score",
    "augment_reverse",
    "beta_weights",
    "build_cache",
    "build_count_index",
    "build_filter_index",
    "build_store",
    "evaluate",
    "f_ent",
    "f_rel",
    "f_trp",
    "generate_toy_kg",
    "get_family",
    "init_model",
    "init_params",
    "level_loss",
    "load_cache",
    "load_model",
    "load_params",
    "load_store",
    "load_triples",
    "metrics_text",
    "parse_config_text",
    "prepare_targets",
    "rank_tail",
    "read_container",
    "retrieve_entity_level",
    "retrieve_relation_level",
    "retrieve_triple_level",
    "sample_negatives",
    "save_cache",
    "save_model",
    "save_params",
    "self_adversarial_loss",
    "sha256_file",
    "total_loss",
    "train_analogy",
    "train_base",
    "write_container",
    "write_metrics_report",
    "write_ranks_csv",
    "write_toy_kg",
]
