"""Three-level analogical object retrieval over a trained model.

For a triple (h, r, t):

- entity level ranks every replacement head h_i by f(h_i, r, t),
- relation level ranks every replacement relation r_i by f(h, r_i, t),
- triple level pre-selects the top-m heads and top-n relations, then ranks
  the m*n replacement pairs by f(h_i, r_i, t).

Lists are sorted by score descending with ties broken by ascending id
(entity id before relation id for pairs), which keeps results identical
across platforms.  By default the original element is excluded so the
top candidates carry genuinely analogical signal.
"""

from dataclasses import dataclass

import numpy as np

from .checkpoint import read_container, write_container
from .data import TripleStore
from .exceptions import CheckpointError, DataError
from .model import EmbeddingModel


@dataclass(frozen=True)
class RetrieverConfig:
    n_entity: int  # N_e
    n_relation: int  # N_r
    n_triple: int  # N_t
    m: int | None = None  # entity pre-selection size; None -> min(|E|, 50)
    n: int | None = None  # relation pre-selection size; None -> min(|R|, 50)
    exclude_original: bool = True

    def __post_init__(self):
        for label, value in (
            ("n_entity", self.n_entity),
            ("n_relation", self.n_relation),
            ("n_triple", self.n_triple),
        ):
            if value < 1:
                raise ValueError(f"{label} must be >= 1")
        for label, value in (("m", self.m), ("n", self.n)):
            if value is not None and value < 1:
                raise ValueError(f"{label} must be >= 1 when given")

    def resolve_mn(self, num_entities: int, num_relations: int) -> tuple[int, int]:
        m = min(num_entities, 50) if self.m is None else self.m
        n = min(num_relations, 50) if self.n is None else self.n
        if m > num_entities:
            raise DataError(f"m={m} exceeds entity count {num_entities}")
        if n > num_relations:
            raise DataError(f"n={n} exceeds relation count {num_relations}")
        if self.n_triple > m * n:
            raise DataError(f"n_triple={self.n_triple} exceeds m*n={m * n}")
        return m, n


@dataclass(frozen=True)
class Candidates:
    """Top-k ids with their scores, best first."""

    ids: np.ndarray
    scores: np.ndarray

    def as_list(self) -> list[tuple[int, float]]:
        return [(int(i), float(s)) for i, s in zip(self.ids, self.scores)]


@dataclass(frozen=True)
class PairCandidates:
    entity_ids: np.ndarray
    relation_ids: np.ndarray
    scores: np.ndarray

    def as_list(self) -> list[tuple[tuple[int, int], float]]:
        return [
            ((int(e), int(r)), float(s))
            for e, r, s in zip(self.entity_ids, self.relation_ids, self.scores)
        ]


def _top_ids(scores: np.ndarray, k: int, exclude: int | None) -> tuple[np.ndarray, np.ndarray]:
    """Top-k by score desc, id asc; optionally drops one id first."""
    ids = np.arange(scores.shape[0], dtype=np.int64)
    if exclude is not None:
        keep = ids != exclude
        ids = ids[keep]
        scores = scores[keep]
    if k > ids.shape[0]:
        raise DataError(f"requested top-{k} but only {ids.shape[0]} candidates are available")
    order = np.lexsort((ids, -scores))[:k]
    return ids[order], scores[order]


def retrieve_entity_level(model: EmbeddingModel, triple, config: RetrieverConfig) -> Candidates:
    h, r, t = (int(x) for x in triple)
    scores = model.score_all_heads(r, t)
    ids, top = _top_ids(scores, config.n_entity, h if config.exclude_original else None)
    return Candidates(ids, top)


def retrieve_relation_level(model: EmbeddingModel, triple, config: RetrieverConfig) -> Candidates:
    h, r, t = (int(x) for x in triple)
    scores = model.score_all_relations(h, t)
    ids, top = _top_ids(scores, config.n_relation, r if config.exclude_original else None)
    return Candidates(ids, top)


def retrieve_triple_level(
    model: EmbeddingModel, triple, config: RetrieverConfig
) -> PairCandidates:
    h, r, t = (int(x) for x in triple)
    m, n = config.resolve_mn(model.num_entities, model.num_relations)
    ent_pool, _ = _top_ids(model.score_all_heads(r, t), m, None)
    rel_pool, _ = _top_ids(model.score_all_relations(h, t), n, None)
    grid = model.score_grid(ent_pool, rel_pool, t)  # (m, n)
    ent_ids = np.repeat(ent_pool, rel_pool.shape[0])
    rel_ids = np.tile(rel_pool, ent_pool.shape[0])
    scores = grid.reshape(-1)
    if config.exclude_original:
        keep = ~((ent_ids == h) & (rel_ids == r))
        ent_ids, rel_ids, scores = ent_ids[keep], rel_ids[keep], scores[keep]
    if config.n_triple > scores.shape[0]:
        raise DataError(
            f"requested top-{config.n_triple} pairs but only {scores.shape[0]} are available"
        )
    order = np.lexsort((rel_ids, ent_ids, -scores))[: config.n_triple]
    return PairCandidates(ent_ids[order], rel_ids[order], scores[order])


@dataclass
class AnalogyCache:
    """Retrieved analogical objects for every train triple, in train order."""

    config: RetrieverConfig
    triples: np.ndarray  # (T, 3) echo of the train split
    entity_ids: np.ndarray  # (T, N_e)
    entity_scores: np.ndarray
    relation_ids: np.ndarray  # (T, N_r)
    relation_scores: np.ndarray
    pair_entity_ids: np.ndarray  # (T, N_t)
    pair_relation_ids: np.ndarray
    pair_scores: np.ndarray

    def __len__(self):
        return self.triples.shape[0]


def build_cache(model: EmbeddingModel, store: TripleStore, config: RetrieverConfig) -> AnalogyCache:
    """Runs all three retrievers over every train triple."""
    if not store.augmented:
        raise DataError("build_cache requires a reverse-augmented store")
    if model.num_entities != store.num_entities or model.num_relations != store.num_relations:
        raise DataError("model and store vocabulary sizes disagree")
    config.resolve_mn(store.num_entities, store.num_relations)
    avail_e = store.num_entities - (1 if config.exclude_original else 0)
    avail_r = store.num_relations - (1 if config.exclude_original else 0)
    if config.n_entity > avail_e:
        raise DataError(f"n_entity={config.n_entity} exceeds available candidates {avail_e}")
    if config.n_relation > avail_r:
        raise DataError(f"n_relation={config.n_relation} exceeds available candidates {avail_r}")

    T = store.train.shape[0]
    ent_ids = np.empty((T, config.n_entity), dtype=np.int64)
    ent_scores = np.empty((T, config.n_entity))
    rel_ids = np.empty((T, config.n_relation), dtype=np.int64)
    rel_scores = np.empty((T, config.n_relation))
    pe_ids = np.empty((T, config.n_triple), dtype=np.int64)
    pr_ids = np.empty((T, config.n_triple), dtype=np.int64)
    p_scores = np.empty((T, config.n_triple))
    for i, triple in enumerate(store.train):
        ent = retrieve_entity_level(model, triple, config)
        rel = retrieve_relation_level(model, triple, config)
        pair = retrieve_triple_level(model, triple, config)
        ent_ids[i], ent_scores[i] = ent.ids, ent.scores
        rel_ids[i], rel_scores[i] = rel.ids, rel.scores
        pe_ids[i], pr_ids[i], p_scores[i] = pair.entity_ids, pair.relation_ids, pair.scores
    return AnalogyCache(
        config=config,
        triples=store.train.copy(),
        entity_ids=ent_ids,
        entity_scores=ent_scores,
        relation_ids=rel_ids,
        relation_scores=rel_scores,
        pair_entity_ids=pe_ids,
        pair_relation_ids=pr_ids,
        pair_scores=p_scores,
    )


def save_cache(path, cache: AnalogyCache, model_digest: str) -> str:
    cfg = cache.config
    meta = {
        "exclude_original": cfg.exclude_original,
        "kind": "cache",
        "m": cfg.m,
        "model_digest": model_digest,
        "n": cfg.n,
        "n_entity": cfg.n_entity,
        "n_relation": cfg.n_relation,
        "n_triple": cfg.n_triple,
        "triple_count": int(cache.triples.shape[0]),
    }
    arrays = {
        "triples": cache.triples,
        "entity_ids": cache.entity_ids,
        "entity_scores": cache.entity_scores,
        "relation_ids": cache.relation_ids,
        "relation_scores": cache.relation_scores,
        "pair_entity_ids": cache.pair_entity_ids,
        "pair_relation_ids": cache.pair_relation_ids,
        "pair_scores": cache.pair_scores,
    }
    return write_container(path, meta, arrays)


def load_cache(path) -> tuple[AnalogyCache, dict]:
    meta, arrays = read_container(path)
    if meta.get("kind") != "cache":
        raise CheckpointError(f"{path}: expected a cache file, found {meta.get('kind')!r}")
    config = RetrieverConfig(
        n_entity=int(meta["n_entity"]),
        n_relation=int(meta["n_relation"]),
        n_triple=int(meta["n_triple"]),
        m=meta["m"],
        n=meta["n"],
        exclude_original=bool(meta["exclude_original"]),
    )
    cache = AnalogyCache(
        config=config,
        triples=arrays["triples"],
        entity_ids=arrays["entity_ids"],
        entity_scores=arrays["entity_scores"],
        relation_ids=arrays["relation_ids"],
        relation_scores=arrays["relation_scores"],
        pair_entity_ids=arrays["pair_entity_ids"],
        pair_relation_ids=arrays["pair_relation_ids"],
        pair_scores=arrays["pair_scores"],
    )
    return cache, meta
