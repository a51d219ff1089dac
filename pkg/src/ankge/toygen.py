"""Compositional toy knowledge graph generator.

Entities form classes of interchangeable instances.  Every instance of a
class shares the class's value for each attribute relation, so instances of
one class are perfect analogies of each other: whenever a fact
(x, attr, v) is held out for testing, sibling facts (x', attr, v) remain in
train.  Some attributes also have a synonym relation asserting the same
facts, giving relation-level analogies, and intra-class link facts plus
random noise facts keep the graph from being trivially separable.

The generated splits satisfy: every entity and relation occurs in train,
every test fact has at least two train siblings with the same (relation,
value), and test facts are attribute facts only.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import RawTriples


@dataclass(frozen=True)
class ToyConfig:
    classes: int = 10
    instances_per_class: int = 6
    attributes: int = 4
    values_per_attribute: int = 5
    synonym_attributes: int = 2
    intra_class_links: bool = True
    noise_facts: int = 30
    test_fraction: float = 0.25
    valid_fraction: float = 0.05
    seed: int = 7

    def __post_init__(self):
        if self.classes < 2 or self.instances_per_class < 4:
            raise ValueError("need >= 2 classes and >= 4 instances per class")
        if self.attributes < 1 or self.values_per_attribute < 2:
            raise ValueError("need >= 1 attribute and >= 2 values per attribute")
        if not 0 <= self.synonym_attributes <= self.attributes:
            raise ValueError("synonym_attributes must be within [0, attributes]")
        if not 0.0 < self.test_fraction < 0.6:
            raise ValueError("test_fraction must be in (0, 0.6)")
        if not 0.0 <= self.valid_fraction < 0.3:
            raise ValueError("valid_fraction must be in [0, 0.3)")


def generate_toy_kg(config: ToyConfig) -> tuple[RawTriples, RawTriples, RawTriples]:
    """Returns (train, valid, test) raw triple lists."""
    rng = np.random.default_rng(config.seed)
    train: RawTriples = []
    valid: RawTriples = []
    test: RawTriples = []

    def instance(c: int, i: int) -> str:
        return f"x{c:02d}_{i}"

    s = config.instances_per_class
    n_test = max(1, min(int(round(s * config.test_fraction)), s - 3))
    n_valid = min(int(round(s * config.valid_fraction)), s - 3 - n_test)
    forced_valid = n_valid == 0 and config.valid_fraction > 0.0

    for c in range(config.classes):
        for a in range(config.attributes):
            value = f"v{a}_{c % config.values_per_attribute}"
            relation = f"attr{a}"
            order = rng.permutation(s)
            group_valid = n_valid
            if forced_valid and c == 0 and a == 0:
                group_valid = 1
            for pos, i in enumerate(order):
                fact = (instance(c, int(i)), relation, value)
                if pos < n_test:
                    test.append(fact)
                elif pos < n_test + group_valid:
                    valid.append(fact)
                else:
                    train.append(fact)
            if a < config.synonym_attributes:
                # synonym facts stay in train so held-out base facts keep
                # (head, value) support for relation-level analogy
                for i in range(s):
                    train.append((instance(c, i), f"attr{a}_syn", value))
        if config.intra_class_links and s >= 2:
            for i in range(s):
                train.append((instance(c, i), "linked_to", instance(c, (i + 1) % s)))

    n_instances = config.classes * s
    seen = set()
    added = 0
    while added < config.noise_facts:
        a, b = rng.integers(0, n_instances, size=2)
        if a == b or (int(a), int(b)) in seen:
            continue
        seen.add((int(a), int(b)))
        train.append(
            (instance(int(a) // s, int(a) % s), "noise", instance(int(b) // s, int(b) % s))
        )
        added += 1
    return train, valid, test


def write_toy_kg(out_dir, config: ToyConfig) -> dict:
    """Writes train.txt/valid.txt/test.txt; returns split sizes."""
    train, valid, test = generate_toy_kg(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, rows in (("train", train), ("valid", valid), ("test", test)):
        if not rows:
            continue
        with open(out_dir / f"{name}.txt", "w", encoding="utf-8") as fh:
            for h, r, t in rows:
                fh.write(f"{h}\t{r}\t{t}\n")
    return {"train": len(train), "valid": len(valid), "test": len(test)}
