"""Interpolated scoring, filtered ranking, and link-prediction metrics.

The enhanced score of a candidate triple is

    f(h,r,t) + lam_E*f(h_a,r,t) + lam_R*f(h,r_a,t) + lam_T*f(h_a,r_a,t)

with the analogy embeddings computed on the fly from trained projections.
The weights lam are fixed per test query: each alpha hyper-parameter is
scaled by a capped train-set co-occurrence count, so queries with no
analogical support in train fall back to the plain base score.

Ranking follows the filtered protocol.  Ties share the average rank:
rank = 1 + #strictly-greater + #equal-others / 2.
"""

import io
from dataclasses import dataclass

import numpy as np

from .analogy import AnalogyParams, f_ent, f_rel
from .data import CountIndex, FilterIndex, TripleStore, build_count_index, build_filter_index
from .exceptions import DataError
from .model import EmbeddingModel


@dataclass(frozen=True)
class InferenceConfig:
    alpha_entity: float
    alpha_relation: float
    alpha_triple: float
    n_entity: int
    n_relation: int
    n_triple: int
    adaptive: bool = True

    def __post_init__(self):
        for label, value in (
            ("alpha_entity", self.alpha_entity),
            ("alpha_relation", self.alpha_relation),
            ("alpha_triple", self.alpha_triple),
        ):
            if value < 0:
                raise ValueError(f"{label} must be >= 0")
        for label, value in (
            ("n_entity", self.n_entity),
            ("n_relation", self.n_relation),
            ("n_triple", self.n_triple),
        ):
            if value < 1:
                raise ValueError(f"{label} must be a positive denominator")


def adaptive_weights(counts: CountIndex, triple, config: InferenceConfig) -> np.ndarray:
    """(lam_E, lam_R, lam_T) for one query triple."""
    if not config.adaptive:
        return np.array([config.alpha_entity, config.alpha_relation, config.alpha_triple])
    h, r, t = (int(x) for x in triple)
    lam_e = min(counts.rt(r, t) / config.n_entity, 1.0) * config.alpha_entity
    lam_r = min(counts.ht(h, t) / config.n_relation, 1.0) * config.alpha_relation
    lam_t = min(counts.t(t) / config.n_triple, 1.0) * config.alpha_triple
    return np.array([lam_e, lam_r, lam_t])


def _tail_scores(
    model: EmbeddingModel, params: AnalogyParams | None, h: int, r: int, lam
) -> np.ndarray:
    """Enhanced scores of (h, r, t') for every entity t'.

    Zero-weight terms are skipped entirely, so lam = (0,0,0) returns the
    base score array bit for bit.
    """
    fam = model.family
    total = model.score_all_tails(h, r)
    if params is None:
        return total
    ent = model.entity_emb
    r_emb = model.relation_emb[r][None, :]
    if lam[0] != 0.0 or lam[2] != 0.0:
        h_a = f_ent(params, h, r, model)[None, :]
    if lam[0] != 0.0:
        total = total + lam[0] * fam.score(h_a, r_emb, ent, model.mix)
    if lam[1] != 0.0 or lam[2] != 0.0:
        r_a = f_rel(params, r, model)[None, :]
    if lam[1] != 0.0:
        total = total + lam[1] * fam.score(model.entity_emb[h][None, :], r_a, ent, model.mix)
    if lam[2] != 0.0:
        total = total + lam[2] * fam.score(h_a, r_a, ent, model.mix)
    return total


def ankge_score(model: EmbeddingModel, params: AnalogyParams | None, triple, lam) -> float:
    """Interpolated score of one triple under fixed weights."""
    h, r, t = (int(x) for x in triple)
    fam = model.family
    h_emb = model.entity_emb[h]
    r_emb = model.relation_emb[r]
    t_emb = model.entity_emb[t]
    total = fam.score(h_emb[None, :], r_emb[None, :], t_emb[None, :], model.mix)[0]
    if params is None:
        return float(total)
    if lam[0] != 0.0 or lam[2] != 0.0:
        h_a = f_ent(params, h, r, model)[None, :]
    if lam[0] != 0.0:
        total = total + lam[0] * fam.score(h_a, r_emb[None, :], t_emb[None, :], model.mix)[0]
    if lam[1] != 0.0 or lam[2] != 0.0:
        r_a = f_rel(params, r, model)[None, :]
    if lam[1] != 0.0:
        total = total + lam[1] * fam.score(h_emb[None, :], r_a, t_emb[None, :], model.mix)[0]
    if lam[2] != 0.0:
        total = total + lam[2] * fam.score(h_a, r_a, t_emb[None, :], model.mix)[0]
    return float(total)


def _rank_from_scores(scores: np.ndarray, gold: int, filtered_tails: np.ndarray) -> float:
    keep = np.ones(scores.shape[0], dtype=bool)
    keep[filtered_tails] = False
    keep[gold] = True
    kept = scores[keep]
    gold_score = scores[gold]
    greater = int(np.count_nonzero(kept > gold_score))
    equal_others = int(np.count_nonzero(kept == gold_score)) - 1
    return 1.0 + greater + equal_others / 2.0


def rank_tail(
    model: EmbeddingModel,
    params: AnalogyParams | None,
    triple,
    filter_index: FilterIndex,
    counts: CountIndex,
    config: InferenceConfig,
) -> float:
    """Filtered average-tie rank of the gold tail under enhanced scoring."""
    h, r, t = (int(x) for x in triple)
    lam = adaptive_weights(counts, triple, config) if params is not None else np.zeros(3)
    scores = _tail_scores(model, params, h, r, lam)
    return _rank_from_scores(scores, t, filter_index.tails(h, r))


@dataclass
class EvalReport:
    mrr: float
    hits1: float
    hits3: float
    hits10: float
    triples: np.ndarray  # (T, 3) test triples in order
    base_ranks: np.ndarray  # (T,)
    ankge_ranks: np.ndarray  # (T,) equals base_ranks for base-only runs
    lambdas: np.ndarray  # (T, 3)


def _metrics(ranks: np.ndarray) -> tuple[float, float, float, float]:
    mrr = float(np.mean(1.0 / ranks))
    hits = tuple(float(np.mean(ranks <= k)) for k in (1, 3, 10))
    return (mrr, *hits)


def evaluate(
    model: EmbeddingModel,
    params: AnalogyParams | None,
    store: TripleStore,
    config: InferenceConfig,
    filter_index: FilterIndex | None = None,
    counts: CountIndex | None = None,
) -> EvalReport:
    """Tail prediction over the augmented test split; reports enhanced metrics.

    Base-model ranks are always computed alongside for per-triple
    comparison; with params=None the two rank columns coincide.
    """
    if store.test.shape[0] == 0:
        raise DataError("test split is empty")
    if not store.augmented:
        raise DataError("evaluate requires a reverse-augmented store")
    fi = filter_index if filter_index is not None else build_filter_index(store)
    ci = counts if counts is not None else build_count_index(store)
    n = store.test.shape[0]
    base_ranks = np.empty(n)
    enh_ranks = np.empty(n)
    lambdas = np.zeros((n, 3))
    for i, triple in enumerate(store.test):
        h, r, t = (int(x) for x in triple)
        base_scores = _tail_scores(model, None, h, r, np.zeros(3))
        filtered = fi.tails(h, r)
        base_ranks[i] = _rank_from_scores(base_scores, t, filtered)
        if params is None:
            enh_ranks[i] = base_ranks[i]
        else:
            lam = adaptive_weights(ci, triple, config)
            lambdas[i] = lam
            scores = _tail_scores(model, params, h, r, lam)
            enh_ranks[i] = _rank_from_scores(scores, t, filtered)
    mrr, h1, h3, h10 = _metrics(enh_ranks)
    return EvalReport(
        mrr=mrr,
        hits1=h1,
        hits3=h3,
        hits10=h10,
        triples=store.test.copy(),
        base_ranks=base_ranks,
        ankge_ranks=enh_ranks,
        lambdas=lambdas,
    )


def metrics_text(report: EvalReport, meta: dict | None = None) -> str:
    """Deterministic key = value report body, metrics at 6 decimals."""
    buf = io.StringIO()
    buf.write(f"mrr = {report.mrr:.6f}\n")
    buf.write(f"hits1 = {report.hits1:.6f}\n")
    buf.write(f"hits3 = {report.hits3:.6f}\n")
    buf.write(f"hits10 = {report.hits10:.6f}\n")
    buf.write(f"test_triples = {report.triples.shape[0]}\n")
    if meta:
        for key in sorted(meta):
            buf.write(f"{key} = {meta[key]}\n")
    return buf.getvalue()


def write_metrics_report(path, report: EvalReport, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(metrics_text(report, meta))


def _format_rank(rank: float) -> str:
    return str(int(rank)) if rank == int(rank) else f"{rank:.1f}"


def write_ranks_csv(path, report: EvalReport) -> None:
    """Per-triple comparison: ids, both ranks, and the applied weights."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("head,relation,tail,base_rank,ankge_rank,lambda_e,lambda_r,lambda_t\n")
        for (h, r, t), base, enh, lam in zip(
            report.triples, report.base_ranks, report.ankge_ranks, report.lambdas
        ):
            fh.write(
                f"{h},{r},{t},{_format_rank(base)},{_format_rank(enh)},"
                f"{lam[0]:.10g},{lam[1]:.10g},{lam[2]:.10g}\n"
            )
