"""Base model training with self-adversarial negative sampling.

The training loss for one positive triple with negatives (h'_i, r, t'_i) is

    L = log sigmoid(margin - f(h,r,t))
        + sum_i p_i * log sigmoid(f(h'_i,r,t'_i) - margin)

where p is the softmax of the negative scores scaled by the adversarial
temperature, treated as a constant weight (no gradient flows through p).
Mini-batches minimize the mean of L over the batch.  Corruption replaces
tails only; accidental true triples are kept and left to the adversarial
weighting.

All gradients are analytic.  Relation parameters are trained in their raw
(pre-activation) form and the model's canonical table is refreshed after
each step, so constraint invariants hold at every step boundary.
"""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import TripleStore
from .exceptions import DataError, DivergenceError
from .families import log_sigmoid, sigmoid
from .model import EmbeddingModel, init_model
from .optim import Adam, accumulate_rows


@dataclass(frozen=True)
class BaseTrainConfig:
    margin: float
    adversarial_temperature: float
    negative_samples: int
    batch_size: int
    learning_rate: float
    epochs: int
    dim: int
    seed: int

    def __post_init__(self):
        if self.negative_samples < 1:
            raise ValueError("negative_samples must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TouchedGrads:
    """Accumulated gradients for the parameter rows a loss term touched."""

    entity_ids: np.ndarray  # (u,) unique ascending
    entity_grads: np.ndarray  # (u, entity_width)
    relation_ids: np.ndarray
    relation_grads: np.ndarray  # canonical-space gradients
    mix_grad: np.ndarray | None


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def self_adversarial_loss(
    model: EmbeddingModel,
    positive,
    negatives,
    config: BaseTrainConfig,
) -> tuple[float, TouchedGrads]:
    """Loss and per-row gradients for one positive and its negatives."""
    positive = np.asarray(positive, dtype=np.int64).reshape(3)
    negatives = np.atleast_2d(np.asarray(negatives, dtype=np.int64))
    if negatives.shape[0] < 1 or negatives.shape[1] != 3:
        raise DataError("negatives must be a non-empty (n, 3) id array")
    fam = model.family
    h = model.entity_emb[positive[0]]
    r = model.relation_emb[positive[1]]
    t = model.entity_emb[positive[2]]
    f_pos, gh, gr, gt, gmix_pos = fam.score_grads(h, r, t, model.mix)
    hn = model.entity_emb[negatives[:, 0]]
    rn = model.relation_emb[negatives[:, 1]]
    tn = model.entity_emb[negatives[:, 2]]
    f_neg, ghn, grn, gtn, gmix_neg = fam.score_grads(hn, rn, tn, model.mix)

    p = _softmax_rows(config.adversarial_temperature * f_neg)
    loss = float(
        log_sigmoid(config.margin - f_pos)
        + np.sum(p * log_sigmoid(f_neg - config.margin))
    )
    d_pos = -sigmoid(f_pos - config.margin)
    d_neg = p * sigmoid(config.margin - f_neg)  # (n,)

    ent_ids = np.concatenate(
        [positive[[0]], positive[[2]], negatives[:, 0], negatives[:, 2]]
    )
    ent_grads = np.concatenate(
        [
            (d_pos * gh)[None, :],
            (d_pos * gt)[None, :],
            d_neg[:, None] * ghn,
            d_neg[:, None] * gtn,
        ]
    )
    rel_ids = np.concatenate([positive[[1]], negatives[:, 1]])
    rel_grads = np.concatenate([(d_pos * gr)[None, :], d_neg[:, None] * grn])
    ent_ids, ent_grads = accumulate_rows(ent_ids, ent_grads)
    rel_ids, rel_grads = accumulate_rows(rel_ids, rel_grads)
    mix_grad = None
    if fam.uses_mix:
        mix_grad = d_pos * gmix_pos + np.sum(d_neg[:, None] * gmix_neg, axis=0)
    return loss, TouchedGrads(ent_ids, ent_grads, rel_ids, rel_grads, mix_grad)


def sample_negatives(store: TripleStore, triple, n: int, rng: np.random.Generator) -> np.ndarray:
    """Returns (n, 3) tail-corrupted copies of the triple."""
    if n < 1:
        raise ValueError("n must be >= 1")
    triple = np.asarray(triple, dtype=np.int64).reshape(3)
    out = np.tile(triple, (n, 1))
    out[:, 2] = rng.integers(0, store.num_entities, size=n)
    return out


def _batch_loss_and_grads(
    model: EmbeddingModel,
    batch: np.ndarray,
    neg_tails: np.ndarray,
    config: BaseTrainConfig,
) -> tuple[float, TouchedGrads]:
    """Mean loss over a batch of positives with (B, K) corrupted tails."""
    fam = model.family
    h = model.entity_emb[batch[:, 0]]
    r = model.relation_emb[batch[:, 1]]
    t = model.entity_emb[batch[:, 2]]
    f_pos, gh, gr, gt, gmix_pos = fam.score_grads(h, r, t, model.mix)
    tn = model.entity_emb[neg_tails]  # (B, K, W)
    f_neg, ghn, grn, gtn, gmix_neg = fam.score_grads(h[:, None, :], r[:, None, :], tn, model.mix)

    p = _softmax_rows(config.adversarial_temperature * f_neg)
    loss_vec = log_sigmoid(config.margin - f_pos) + np.sum(
        p * log_sigmoid(f_neg - config.margin), axis=1
    )
    loss = float(np.mean(loss_vec))
    scale = 1.0 / batch.shape[0]
    d_pos = -sigmoid(f_pos - config.margin) * scale  # (B,)
    d_neg = p * sigmoid(config.margin - f_neg) * scale  # (B, K)

    head_grad = d_pos[:, None] * gh + np.sum(d_neg[:, :, None] * ghn, axis=1)
    tail_grad = d_pos[:, None] * gt
    neg_tail_grad = (d_neg[:, :, None] * gtn).reshape(-1, gtn.shape[-1])
    rel_grad = d_pos[:, None] * gr + np.sum(d_neg[:, :, None] * grn, axis=1)

    ent_ids = np.concatenate([batch[:, 0], batch[:, 2], neg_tails.reshape(-1)])
    ent_grads = np.concatenate([head_grad, tail_grad, neg_tail_grad])
    ent_ids, ent_grads = accumulate_rows(ent_ids, ent_grads)
    rel_ids, rel_grads = accumulate_rows(batch[:, 1], rel_grad)
    mix_grad = None
    if fam.uses_mix:
        mix_grad = np.sum(d_pos[:, None] * gmix_pos, axis=0) + np.sum(
            d_neg[:, :, None] * gmix_neg, axis=(0, 1)
        )
    return loss, TouchedGrads(ent_ids, ent_grads, rel_ids, rel_grads, mix_grad)


def train_base(
    store: TripleStore,
    family: str,
    config: BaseTrainConfig,
    log_path=None,
    verbose: bool = True,
    on_step=None,
) -> EmbeddingModel:
    """Trains a base model on the store's train split; returns the model.

    ``on_step(model)``, when given, runs after each batch's optimizer
    updates, with the canonical relation table already refreshed.
    """
    if not store.augmented:
        raise DataError("train_base requires a reverse-augmented store")
    if len(store.train) == 0:
        raise DataError("train split is empty")
    rng = np.random.default_rng(config.seed)
    # init range follows the margin so scores start inside the loss's
    # responsive band; with an unscaled init the sigmoid factors saturate
    bound = (abs(config.margin) + 2.0) / config.dim
    model, raw_rel = init_model(
        family, store.num_entities, store.num_relations, config.dim, rng, bound
    )
    fam = model.family
    opt_ent = Adam(model.entity_emb.shape, config.learning_rate)
    opt_rel = Adam(raw_rel.shape, config.learning_rate)
    opt_mix = Adam(model.mix.shape, config.learning_rate) if fam.uses_mix else None

    triples = store.train
    log_fh = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log_fh = open(log_path, "w", encoding="utf-8")
        log_fh.write("epoch,loss,wall_time\n")
    start_time = time.perf_counter()
    try:
        for epoch in range(1, config.epochs + 1):
            perm = rng.permutation(len(triples))
            total = 0.0
            for lo in range(0, len(triples), config.batch_size):
                idx = perm[lo : lo + config.batch_size]
                batch = triples[idx]
                neg_tails = rng.integers(
                    0, store.num_entities, size=(batch.shape[0], config.negative_samples)
                )
                loss, grads = _batch_loss_and_grads(model, batch, neg_tails, config)
                if not np.isfinite(loss):
                    raise DivergenceError(
                        f"non-finite loss {loss} at epoch {epoch}, batch offset {lo}; "
                        "lower the learning rate"
                    )
                opt_ent.step_rows(model.entity_emb, grads.entity_ids, grads.entity_grads)
                raw_grads = fam.relation_emb_grad_to_raw(
                    raw_rel[grads.relation_ids], grads.relation_grads
                )
                opt_rel.step_rows(raw_rel, grads.relation_ids, raw_grads)
                model.relation_emb[grads.relation_ids] = fam.relation_raw_to_emb(
                    raw_rel[grads.relation_ids]
                )
                if opt_mix is not None:
                    opt_mix.step_dense(model.mix, grads.mix_grad)
                if on_step is not None:
                    on_step(model)
                total += loss * batch.shape[0]
            mean_loss = total / len(triples)
            elapsed = time.perf_counter() - start_time
            if verbose:
                print(f"epoch {epoch}/{config.epochs} loss {mean_loss:.6f}")
            if log_fh is not None:
                log_fh.write(f"{epoch},{mean_loss:.10g},{elapsed:.3f}\n")
    finally:
        if log_fh is not None:
            log_fh.close()
    return model
