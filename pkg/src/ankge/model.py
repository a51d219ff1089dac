"""Embedding model container and batched scoring paths.

The model stores entity and relation tables in float64.  Relation rows are
kept in the canonical (effective) parameterization described in
``families``; training code that needs the raw pre-activation form handles
the transform itself.

Scoring helpers are thin gathers over the tables followed by one call into
the family's vectorized score, so scoring a batch of triples and scoring the
same triples one by one produce bitwise identical floats.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .families import KGEFamily, ModelFamily, get_family


@dataclass
class EmbeddingModel:
    family: KGEFamily
    dim: int
    entity_emb: np.ndarray  # (num_entities, entity_width)
    relation_emb: np.ndarray  # (num_relations, relation_width)
    mix: np.ndarray = field(default_factory=lambda: np.empty(0))  # family extras (HAKE lambda)

    def __post_init__(self):
        if self.entity_emb.dtype != np.float64 or self.relation_emb.dtype != np.float64:
            raise TypeError("embedding tables must be float64")
        if self.entity_emb.shape[1] != self.family.entity_width(self.dim):
            raise ValueError(
                f"entity table width {self.entity_emb.shape[1]} does not match "
                f"{self.family.name} dim {self.dim}"
            )
        if self.relation_emb.shape[1] != self.family.relation_width(self.dim):
            raise ValueError(
                f"relation table width {self.relation_emb.shape[1]} does not match "
                f"{self.family.name} dim {self.dim}"
            )

    @property
    def num_entities(self) -> int:
        return self.entity_emb.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation_emb.shape[0]

    def entity_vecs(self, ids) -> np.ndarray:
        return self.entity_emb[np.asarray(ids, dtype=np.int64)]

    def relation_vecs(self, ids) -> np.ndarray:
        return self.relation_emb[np.asarray(ids, dtype=np.int64)]

    def score(self, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Scores embedding vectors directly; broadcasts over leading axes."""
        return self.family.score(h, r, t, self.mix)

    def compose(self, h: np.ndarray, r: np.ndarray) -> np.ndarray:
        return self.family.compose(h, r, self.mix)

    def score_triple_ids(self, triples: np.ndarray) -> np.ndarray:
        """Scores an (n, 3) id array; returns (n,) scores."""
        triples = np.atleast_2d(np.asarray(triples, dtype=np.int64))
        h = self.entity_emb[triples[:, 0]]
        r = self.relation_emb[triples[:, 1]]
        t = self.entity_emb[triples[:, 2]]
        return self.score(h, r, t)

    def score_all_tails(self, head: int, relation: int) -> np.ndarray:
        """Scores (head, relation, t) against every entity t."""
        h = self.entity_emb[int(head)][None, :]
        r = self.relation_emb[int(relation)][None, :]
        return self.score(h, r, self.entity_emb)

    def score_all_heads(self, relation: int, tail: int) -> np.ndarray:
        """Scores (h, relation, tail) against every entity h."""
        r = self.relation_emb[int(relation)][None, :]
        t = self.entity_emb[int(tail)][None, :]
        return self.score(self.entity_emb, r, t)

    def score_all_relations(self, head: int, tail: int) -> np.ndarray:
        """Scores (head, r, tail) against every relation r."""
        h = self.entity_emb[int(head)][None, :]
        t = self.entity_emb[int(tail)][None, :]
        return self.score(h, self.relation_emb, t)

    def score_grid(self, heads: np.ndarray, relations: np.ndarray, tail: int) -> np.ndarray:
        """Scores the cross product heads x relations against one tail.

        Returns a (len(heads), len(relations)) score matrix.
        """
        heads = np.asarray(heads, dtype=np.int64)
        relations = np.asarray(relations, dtype=np.int64)
        h = self.entity_emb[heads][:, None, :]
        r = self.relation_emb[relations][None, :, :]
        t = self.entity_emb[int(tail)][None, None, :]
        return self.score(h, r, t)

    def digest(self) -> str:
        """sha256 over family name, dim, and the raw table bytes."""
        hasher = hashlib.sha256()
        hasher.update(self.family.name.encode())
        hasher.update(str(self.dim).encode())
        for arr in (self.entity_emb, self.relation_emb, self.mix):
            hasher.update(str(arr.shape).encode())
            hasher.update(np.ascontiguousarray(arr).tobytes())
        return hasher.hexdigest()


def init_model(
    family: str | ModelFamily,
    num_entities: int,
    num_relations: int,
    dim: int,
    rng: np.random.Generator,
    bound: float | None = None,
) -> tuple[EmbeddingModel, np.ndarray]:
    """Initializes a model; returns (model, raw_relation_table).

    The model's relation table holds canonical embeddings; the returned raw
    table is the trainable pre-activation form (identical for families
    without a relation transform).  ``bound`` overrides the default uniform
    init range of 6/sqrt(dim).
    """
    fam = get_family(family)
    if num_entities <= 0 or num_relations <= 0 or dim <= 0:
        raise ValueError("num_entities, num_relations, and dim must be positive")
    entity = fam.init_entity(rng, num_entities, dim, bound)
    raw_rel = fam.init_relation_raw(rng, num_relations, dim, bound)
    mix = fam.init_mix(rng, dim)
    if mix is None:
        mix = np.empty(0)
    model = EmbeddingModel(
        family=fam,
        dim=dim,
        entity_emb=entity,
        relation_emb=fam.relation_raw_to_emb(raw_rel),
        mix=mix,
    )
    return model, raw_rel
