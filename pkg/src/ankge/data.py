"""Triple ingestion, vocabulary construction, and index structures.

Input files are UTF-8 TSV with one ``head<TAB>relation<TAB>tail`` triple per
line.  Reverse augmentation appends, for every raw relation ``r``, a relation
named ``r + "_Reverse"`` and mirrors each triple ``(h, r, t)`` as
``(t, r_Reverse, h)`` within its split, so tail-only prediction covers both
query directions.

All structures here are immutable after construction and safe to share
across threads.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataError, ParseError

logger = logging.getLogger(__name__)

REVERSE_MARKER = "_Reverse"

RawTriples = list[tuple[str, str, str]]


def load_triples(path) -> RawTriples:
    """Reads a triple TSV file; raises ParseError on malformed lines."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"triple file not found: {path}")
    triples: RawTriples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            triples.append((fields[0], fields[1], fields[2]))
    if not triples:
        raise ParseError(f"{path}: file contains no triples")
    return triples


@dataclass
class TripleStore:
    """Entity/relation vocabularies plus id-encoded train/valid/test splits."""

    entities: list[str]
    relations: list[str]
    train: np.ndarray  # (n, 3) int64 rows of (head, relation, tail) ids
    valid: np.ndarray
    test: np.ndarray
    augmented: bool = False
    entity_index: dict[str, int] = field(default_factory=dict, repr=False)
    relation_index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.entity_index:
            self.entity_index = {name: i for i, name in enumerate(self.entities)}
        if not self.relation_index:
            self.relation_index = {name: i for i, name in enumerate(self.relations)}

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    def split(self, name: str) -> np.ndarray:
        try:
            return {"train": self.train, "valid": self.valid, "test": self.test}[name]
        except KeyError:
            raise ValueError(f"unknown split {name!r}")

    def dump_vocab(self, out_dir) -> None:
        """Writes entities.tsv and relations.tsv as id<TAB>name files."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for fname, names in (("entities.tsv", self.entities), ("relations.tsv", self.relations)):
            with open(out_dir / fname, "w", encoding="utf-8") as fh:
                for i, name in enumerate(names):
                    fh.write(f"{i}\t{name}\n")

    def write_split_files(self, out_dir) -> None:
        """Writes train/valid/test TSVs in the ingestion format.

        Only defined for raw stores: an augmented store would re-augment on
        reload.
        """
        if self.augmented:
            raise DataError("refusing to serialize an augmented store as raw TSVs")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in ("train", "valid", "test"):
            with open(out_dir / f"{name}.txt", "w", encoding="utf-8") as fh:
                for h, r, t in self.split(name):
                    fh.write(f"{self.entities[h]}\t{self.relations[r]}\t{self.entities[t]}\n")


def _encode_split(raw: RawTriples, ent_idx, rel_idx, split_name: str) -> np.ndarray:
    seen = set()
    rows = []
    dropped = 0
    for h, r, t in raw:
        key = (ent_idx[h], rel_idx[r], ent_idx[t])
        if key in seen:
            dropped += 1
            continue
        seen.add(key)
        rows.append(key)
    if dropped:
        logger.warning("dropped %d duplicate triples from %s split", dropped, split_name)
    if rows:
        return np.asarray(rows, dtype=np.int64)
    return np.empty((0, 3), dtype=np.int64)


def build_store(train: RawTriples, valid: RawTriples = (), test: RawTriples = ()) -> TripleStore:
    """Builds vocabularies over all splits and encodes triples to ids.

    Ids follow first occurrence order, scanning train, then valid, then
    test, which makes rebuilds from the same files bitwise reproducible.
    Entities or relations that appear only in valid/test are retained.
    """
    entities: list[str] = []
    relations: list[str] = []
    ent_idx: dict[str, int] = {}
    rel_idx: dict[str, int] = {}
    for split in (train, valid, test):
        for h, r, t in split:
            for e in (h, t):
                if e not in ent_idx:
                    ent_idx[e] = len(entities)
                    entities.append(e)
            if r not in rel_idx:
                rel_idx[r] = len(relations)
                relations.append(r)
    return TripleStore(
        entities=entities,
        relations=relations,
        train=_encode_split(train, ent_idx, rel_idx, "train"),
        valid=_encode_split(valid, ent_idx, rel_idx, "valid"),
        test=_encode_split(test, ent_idx, rel_idx, "test"),
        entity_index=ent_idx,
        relation_index=rel_idx,
    )


def augment_reverse(store: TripleStore) -> TripleStore:
    """Returns a new store with reverse relations and mirrored triples."""
    if store.augmented:
        raise DataError("store is already reverse-augmented")
    n_rel = store.num_relations
    for name in store.relations:
        if name.endswith(REVERSE_MARKER):
            raise DataError(
                f"relation {name!r} collides with the reverse-relation marker {REVERSE_MARKER!r}"
            )
    relations = list(store.relations) + [name + REVERSE_MARKER for name in store.relations]

    def mirror(split: np.ndarray) -> np.ndarray:
        if len(split) == 0:
            return split.copy()
        rev = split[:, [2, 1, 0]].copy()
        rev[:, 1] += n_rel
        return np.concatenate([split, rev], axis=0)

    return TripleStore(
        entities=list(store.entities),
        relations=relations,
        train=mirror(store.train),
        valid=mirror(store.valid),
        test=mirror(store.test),
        augmented=True,
    )


def load_store(data_dir, augment: bool = True) -> TripleStore:
    """Ingests train.txt/valid.txt/test.txt from a directory."""
    data_dir = Path(data_dir)
    train = load_triples(data_dir / "train.txt")
    valid = load_triples(data_dir / "valid.txt") if (data_dir / "valid.txt").exists() else []
    test = load_triples(data_dir / "test.txt") if (data_dir / "test.txt").exists() else []
    store = build_store(train, valid, test)
    return augment_reverse(store) if augment else store


_EMPTY_IDS = np.empty(0, dtype=np.int64)


class FilterIndex:
    """(head, relation) -> known true tails over train + valid + test."""

    def __init__(self, tails_by_query: dict[tuple[int, int], np.ndarray]):
        self._tails = tails_by_query

    def tails(self, head: int, relation: int) -> np.ndarray:
        return self._tails.get((int(head), int(relation)), _EMPTY_IDS)

    def __len__(self):
        return len(self._tails)


def build_filter_index(store: TripleStore) -> FilterIndex:
    if not store.augmented:
        raise DataError("filter index requires a reverse-augmented store")
    collected: dict[tuple[int, int], set[int]] = {}
    for split in (store.train, store.valid, store.test):
        for h, r, t in split:
            collected.setdefault((int(h), int(r)), set()).add(int(t))
    return FilterIndex(
        {key: np.asarray(sorted(vals), dtype=np.int64) for key, vals in collected.items()}
    )


@dataclass
class CountIndex:
    """Train-only co-occurrence counts used by the adaptive score weights."""

    rt_count: dict[tuple[int, int], int]
    ht_count: dict[tuple[int, int], int]
    t_count: dict[int, int]

    def rt(self, relation: int, tail: int) -> int:
        return self.rt_count.get((int(relation), int(tail)), 0)

    def ht(self, head: int, tail: int) -> int:
        return self.ht_count.get((int(head), int(tail)), 0)

    def t(self, tail: int) -> int:
        return self.t_count.get(int(tail), 0)


def build_count_index(store: TripleStore) -> CountIndex:
    if not store.augmented:
        raise DataError("count index requires a reverse-augmented store")
    rt: dict[tuple[int, int], int] = {}
    ht: dict[tuple[int, int], int] = {}
    tc: dict[int, int] = {}
    for h, r, t in store.train:
        h, r, t = int(h), int(r), int(t)
        rt[(r, t)] = rt.get((r, t), 0) + 1
        ht[(h, t)] = ht.get((h, t), 0) + 1
        tc[t] = tc.get(t, 0) + 1
    return CountIndex(rt_count=rt, ht_count=ht, t_count=tc)
