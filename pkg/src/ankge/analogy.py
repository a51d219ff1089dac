"""Analogy functions, aggregation targets, and analogy-function training.

The trainable objects are three projections applied to frozen base
embeddings:

    f_rel(r)    = v_R[r] o r
    f_ent(h, r) = v_E[h] o h + ent_rel_weight * M_trans @ f_rel(r)
    f_trp(h, r) = compose(f_ent(h, r), f_rel(r))

Training pulls each projected embedding toward an aggregated target built
from the retrieval cache: a softmax over the cached candidate scores gives
convex weights, and the weighted sum of candidate embeddings is the target.
Per level the loss is log sigmoid(gamma * dist - s) with s the score of the
analogy triple, and the three level losses are combined with constant
weights beta derived from the aggregate scores.  Base tables never receive
gradients.
"""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import read_container, write_container
from .data import TripleStore
from .exceptions import CheckpointError, DataError, DivergenceError
from .families import log_sigmoid, sigmoid
from .model import EmbeddingModel
from .optim import Adam, accumulate_rows
from .retriever import AnalogyCache

SIMILARITIES = ("euclidean", "cosine")


@dataclass
class AnalogyParams:
    v_entity: np.ndarray  # (|E|, d_e)
    v_relation: np.ndarray  # (|R|, d_r)
    m_trans: np.ndarray  # (d_e, d_r)
    ent_rel_weight: float

    def __post_init__(self):
        d_e = self.v_entity.shape[1]
        d_r = self.v_relation.shape[1]
        if self.m_trans.shape != (d_e, d_r):
            raise ValueError(
                f"m_trans shape {self.m_trans.shape} does not match ({d_e}, {d_r})"
            )


@dataclass(frozen=True)
class AnalogyTrainConfig:
    learning_rate: float
    epochs: int
    seed: int
    batch_size: int = 256
    gamma: float = 10.0
    similarity: str = "euclidean"
    ent_rel_weight: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.similarity not in SIMILARITIES:
            raise ValueError(f"similarity must be one of {SIMILARITIES}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def init_params(model: EmbeddingModel, ent_rel_weight: float) -> AnalogyParams:
    """Identity start: projections leave base embeddings unchanged."""
    d_e = model.entity_emb.shape[1]
    d_r = model.relation_emb.shape[1]
    return AnalogyParams(
        v_entity=np.ones((model.num_entities, d_e)),
        v_relation=np.ones((model.num_relations, d_r)),
        m_trans=np.zeros((d_e, d_r)),
        ent_rel_weight=float(ent_rel_weight),
    )


def f_rel(params: AnalogyParams, r_id, model: EmbeddingModel) -> np.ndarray:
    r_ids = np.asarray(r_id, dtype=np.int64)
    return params.v_relation[r_ids] * model.relation_emb[r_ids]


def f_ent(params: AnalogyParams, h_id, r_id, model: EmbeddingModel) -> np.ndarray:
    h_ids = np.asarray(h_id, dtype=np.int64)
    h_a = params.v_entity[h_ids] * model.entity_emb[h_ids]
    return h_a + params.ent_rel_weight * (f_rel(params, r_id, model) @ params.m_trans.T)


def f_trp(params: AnalogyParams, h_id, r_id, model: EmbeddingModel) -> np.ndarray:
    return model.compose(f_ent(params, h_id, r_id, model), f_rel(params, r_id, model))


def _softmax_last(scores: np.ndarray) -> np.ndarray:
    z = scores - np.max(scores, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def aggregate_entity(cache: AnalogyCache, index: int, model: EmbeddingModel) -> np.ndarray:
    """h+ : softmax-weighted sum of cached entity candidates."""
    w = _softmax_last(cache.entity_scores[index])
    return w @ model.entity_emb[cache.entity_ids[index]]


def aggregate_relation(cache: AnalogyCache, index: int, model: EmbeddingModel) -> np.ndarray:
    w = _softmax_last(cache.relation_scores[index])
    return w @ model.relation_emb[cache.relation_ids[index]]


def aggregate_triple(
    cache: AnalogyCache, index: int, model: EmbeddingModel
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(z_e+, z_r+, z+); one softmax weights both component sums."""
    w = _softmax_last(cache.pair_scores[index])
    ze = w @ model.entity_emb[cache.pair_entity_ids[index]]
    zr = w @ model.relation_emb[cache.pair_relation_ids[index]]
    return ze, zr, model.compose(ze, zr)


def beta_weights(
    model: EmbeddingModel, triple, h_plus, r_plus, ze_plus, zr_plus
) -> np.ndarray:
    """Constant level weights: first three of a 4-way score softmax.

    The fourth slot is the original triple's own score, so a strong
    original triple drives all three weights toward zero.
    """
    h, r, t = (int(x) for x in triple)
    h_emb = model.entity_emb[h]
    r_emb = model.relation_emb[r]
    t_emb = model.entity_emb[t]
    scores = np.stack(
        [
            model.score(h_plus, r_emb, t_emb),
            model.score(h_emb, r_plus, t_emb),
            model.score(ze_plus, zr_plus, t_emb),
            model.score(h_emb, r_emb, t_emb),
        ]
    )
    z = np.exp(scores - np.max(scores))
    return z[:3] / np.sum(z)


@dataclass
class Targets:
    """Per-triple constants: aggregated embeddings and beta weights."""

    h_plus: np.ndarray  # (T, d_e)
    r_plus: np.ndarray  # (T, d_r)
    ze_plus: np.ndarray  # (T, d_e)
    zr_plus: np.ndarray  # (T, d_r)
    z_plus: np.ndarray  # (T, compose width)
    beta: np.ndarray  # (T, 3)


def prepare_targets(model: EmbeddingModel, cache: AnalogyCache) -> Targets:
    """Precomputes aggregates and beta for every cached triple at once."""
    w_e = _softmax_last(cache.entity_scores)
    h_plus = np.einsum("tn,tnd->td", w_e, model.entity_emb[cache.entity_ids])
    w_r = _softmax_last(cache.relation_scores)
    r_plus = np.einsum("tn,tnd->td", w_r, model.relation_emb[cache.relation_ids])
    w_p = _softmax_last(cache.pair_scores)
    ze_plus = np.einsum("tn,tnd->td", w_p, model.entity_emb[cache.pair_entity_ids])
    zr_plus = np.einsum("tn,tnd->td", w_p, model.relation_emb[cache.pair_relation_ids])
    z_plus = model.compose(ze_plus, zr_plus)

    triples = cache.triples
    h_emb = model.entity_emb[triples[:, 0]]
    r_emb = model.relation_emb[triples[:, 1]]
    t_emb = model.entity_emb[triples[:, 2]]
    scores = np.stack(
        [
            model.score(h_plus, r_emb, t_emb),
            model.score(h_emb, r_plus, t_emb),
            model.score(ze_plus, zr_plus, t_emb),
            model.score(h_emb, r_emb, t_emb),
        ],
        axis=1,
    )  # (T, 4)
    z = np.exp(scores - np.max(scores, axis=1, keepdims=True))
    beta = z[:, :3] / np.sum(z, axis=1, keepdims=True)
    return Targets(h_plus, r_plus, ze_plus, zr_plus, z_plus, beta)


def _l2_last(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


def _euclidean_dist_grad(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """dist = |a - b|_2 and its gradient in a (zero at the kink)."""
    diff = a - b
    norm = _l2_last(diff)
    denom = np.where(norm > 0.0, norm, 1.0)
    scale = np.where(norm > 0.0, 1.0 / denom, 0.0)
    return norm, diff * scale[..., None]


def _cosine_dist_grad(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """dist = 1 - cos(a, b) and its gradient in a (zero at zero norms)."""
    na = _l2_last(a)
    nb = _l2_last(b)
    denom = na * nb
    ok = denom > 0.0
    safe = np.where(ok, denom, 1.0)
    dot = np.sum(a * b, axis=-1)
    cos = np.where(ok, dot / safe, 0.0)
    na2 = np.where(na > 0.0, na * na, 1.0)
    grad_cos = np.where(ok[..., None], b / safe[..., None] - cos[..., None] * a / na2[..., None], 0.0)
    return 1.0 - cos, -grad_cos


_DIST_GRADS = {"euclidean": _euclidean_dist_grad, "cosine": _cosine_dist_grad}


def level_loss(x_a, x_plus, score, gamma: float, similarity: str = "euclidean") -> np.ndarray:
    """log sigmoid(gamma * dist(x_a, x_plus) - score); broadcasts over rows."""
    dist, _ = _DIST_GRADS[similarity](np.asarray(x_a, dtype=np.float64), np.asarray(x_plus, dtype=np.float64))
    return log_sigmoid(gamma * dist - np.asarray(score, dtype=np.float64))


@dataclass
class ParamGrads:
    v_entity_ids: np.ndarray
    v_entity_grads: np.ndarray
    v_relation_ids: np.ndarray
    v_relation_grads: np.ndarray
    m_trans_grad: np.ndarray


def _batch_total_loss(
    model: EmbeddingModel,
    params: AnalogyParams,
    cache: AnalogyCache,
    targets: Targets,
    idx: np.ndarray,
    config: AnalogyTrainConfig,
) -> tuple[float, ParamGrads]:
    """Mean weighted loss over the indexed cache rows, with param gradients."""
    fam = model.family
    dist_grad = _DIST_GRADS[config.similarity]
    triples = cache.triples[idx]
    h_ids, r_ids, t_ids = triples[:, 0], triples[:, 1], triples[:, 2]
    h_emb = model.entity_emb[h_ids]
    r_emb = model.relation_emb[r_ids]
    t_emb = model.entity_emb[t_ids]
    beta = targets.beta[idx]

    q = params.v_relation[r_ids] * r_emb  # f_rel rows
    r_a = q
    h_a = params.v_entity[h_ids] * h_emb + params.ent_rel_weight * (q @ params.m_trans.T)
    z_a = fam.compose(h_a, r_a, model.mix)

    s_e, gh_e, _, _, _ = fam.score_grads(h_a, r_emb, t_emb, model.mix)
    s_r, _, gr_r, _, _ = fam.score_grads(h_emb, r_a, t_emb, model.mix)
    s_t, gh_t, gr_t, _, _ = fam.score_grads(h_a, r_a, t_emb, model.mix)

    d_e, gd_e = dist_grad(h_a, targets.h_plus[idx])
    d_r, gd_r = dist_grad(r_a, targets.r_plus[idx])
    d_t, gd_t = dist_grad(z_a, targets.z_plus[idx])

    g = config.gamma
    u_e = g * d_e - s_e
    u_r = g * d_r - s_r
    u_t = g * d_t - s_t
    loss_rows = beta[:, 0] * log_sigmoid(u_e) + beta[:, 1] * log_sigmoid(u_r) + beta[:, 2] * log_sigmoid(u_t)
    loss = float(np.mean(loss_rows))

    scale = 1.0 / idx.shape[0]
    c_e = (beta[:, 0] * sigmoid(-u_e) * scale)[:, None]
    c_r = (beta[:, 1] * sigmoid(-u_r) * scale)[:, None]
    c_t = (beta[:, 2] * sigmoid(-u_t) * scale)[:, None]

    g_ha = c_e * (g * gd_e - gh_e)
    g_ra = c_r * (g * gd_r - gr_r)
    dz = c_t * (g * gd_t)
    dh_c, dr_c = fam.compose_grads(h_a, r_a, dz, model.mix)
    g_ha = g_ha + dh_c - c_t * gh_t
    g_ra = g_ra + dr_c - c_t * gr_t

    grad_ve_rows = g_ha * h_emb
    g_q = params.ent_rel_weight * (g_ha @ params.m_trans)
    grad_vr_rows = (g_q + g_ra) * r_emb
    grad_m = params.ent_rel_weight * (g_ha.T @ q)

    ve_ids, ve_grads = accumulate_rows(h_ids, grad_ve_rows)
    vr_ids, vr_grads = accumulate_rows(r_ids, grad_vr_rows)
    return loss, ParamGrads(ve_ids, ve_grads, vr_ids, vr_grads, grad_m)


def total_loss(
    model: EmbeddingModel,
    params: AnalogyParams,
    cache: AnalogyCache,
    index: int,
    config: AnalogyTrainConfig,
    targets: Targets | None = None,
) -> tuple[float, ParamGrads]:
    """Weighted three-level loss for one cached triple.

    Gradients cover v_entity rows, v_relation rows, and m_trans only; the
    base model is frozen.  Passing precomputed targets avoids rebuilding
    them per call.
    """
    if targets is None:
        targets = prepare_targets(model, cache)
    return _batch_total_loss(model, params, cache, targets, np.asarray([index]), config)


def train_analogy(
    model: EmbeddingModel,
    store: TripleStore,
    cache: AnalogyCache,
    config: AnalogyTrainConfig,
    log_path=None,
    verbose: bool = True,
) -> AnalogyParams:
    """Trains the analogy projections against the cached targets."""
    if cache.triples.shape[0] != store.train.shape[0] or not np.array_equal(
        cache.triples, store.train
    ):
        raise DataError("cache triples do not match the store's train split")
    params = init_params(model, config.ent_rel_weight)
    if config.epochs == 0:
        return params
    targets = prepare_targets(model, cache)
    rng = np.random.default_rng(config.seed)
    opt_ve = Adam(params.v_entity.shape, config.learning_rate)
    opt_vr = Adam(params.v_relation.shape, config.learning_rate)
    opt_m = Adam(params.m_trans.shape, config.learning_rate)

    n = cache.triples.shape[0]
    log_fh = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log_fh = open(log_path, "w", encoding="utf-8")
        log_fh.write("epoch,loss,wall_time\n")
    start_time = time.perf_counter()
    try:
        for epoch in range(1, config.epochs + 1):
            perm = rng.permutation(n)
            total = 0.0
            for lo in range(0, n, config.batch_size):
                idx = perm[lo : lo + config.batch_size]
                loss, grads = _batch_total_loss(model, params, cache, targets, idx, config)
                if not np.isfinite(loss):
                    raise DivergenceError(
                        f"non-finite analogy loss {loss} at epoch {epoch}, batch offset {lo}"
                    )
                opt_ve.step_rows(params.v_entity, grads.v_entity_ids, grads.v_entity_grads)
                opt_vr.step_rows(params.v_relation, grads.v_relation_ids, grads.v_relation_grads)
                opt_m.step_dense(params.m_trans, grads.m_trans_grad)
                total += loss * idx.shape[0]
            mean_loss = total / n
            elapsed = time.perf_counter() - start_time
            if verbose:
                print(f"epoch {epoch}/{config.epochs} analogy loss {mean_loss:.6f}")
            if log_fh is not None:
                log_fh.write(f"{epoch},{mean_loss:.10g},{elapsed:.3f}\n")
    finally:
        if log_fh is not None:
            log_fh.close()
    return params


def save_params(path, params: AnalogyParams, meta: dict | None = None) -> str:
    full_meta = {
        "d_entity": params.v_entity.shape[1],
        "d_relation": params.v_relation.shape[1],
        "ent_rel_weight": params.ent_rel_weight,
        "kind": "analogy",
        "num_entities": params.v_entity.shape[0],
        "num_relations": params.v_relation.shape[0],
    }
    if meta:
        overlap = set(full_meta) & set(meta)
        if overlap:
            raise CheckpointError(f"meta keys {sorted(overlap)} are reserved")
        full_meta.update(meta)
    arrays = {
        "v_entity": params.v_entity,
        "v_relation": params.v_relation,
        "m_trans": params.m_trans,
    }
    return write_container(path, full_meta, arrays)


def load_params(path) -> tuple[AnalogyParams, dict]:
    meta, arrays = read_container(path)
    if meta.get("kind") != "analogy":
        raise CheckpointError(f"{path}: expected analogy params, found {meta.get('kind')!r}")
    params = AnalogyParams(
        v_entity=arrays["v_entity"],
        v_relation=arrays["v_relation"],
        m_trans=arrays["m_trans"],
        ent_rel_weight=float(meta["ent_rel_weight"]),
    )
    return params, meta
