"""Flat key = value run configuration with named presets.

A config file holds one ``key = value`` pair per line; ``#`` starts a
comment.  Key lookup order is: schema default, then the named preset (the
``preset`` key), then file values, then explicit overrides such as CLI
``--set`` pairs.  The canonical echo serializes every key in sorted order,
so equal effective configs always hash to the same digest.
"""

import hashlib
from dataclasses import dataclass

from .analogy import AnalogyTrainConfig
from .evaluation import InferenceConfig
from .exceptions import ConfigError, ParseError
from .retriever import RetrieverConfig
from .training import BaseTrainConfig

# key -> (type tag, default); types: int, float, bool, str, optint, optstr
SCHEMA: dict[str, tuple[str, object]] = {
    "data_dir": ("optstr", None),
    "out_dir": ("optstr", None),
    "family": ("str", "transe"),
    "seed": ("int", 0),
    "threads": ("optint", None),
    "base.dim": ("int", 64),
    "base.margin": ("float", 9.0),
    "base.adversarial_temperature": ("float", 1.0),
    "base.negative_samples": ("int", 64),
    "base.batch_size": ("int", 256),
    "base.learning_rate": ("float", 1e-3),
    "base.epochs": ("int", 100),
    "retriever.n_entity": ("int", 1),
    "retriever.n_relation": ("int", 1),
    "retriever.n_triple": ("int", 3),
    "retriever.m": ("optint", None),
    "retriever.n": ("optint", None),
    "retriever.exclude_original": ("bool", True),
    "analogy.gamma": ("float", 10.0),
    "analogy.learning_rate": ("float", 1e-3),
    "analogy.epochs": ("int", 100),
    "analogy.batch_size": ("int", 256),
    "analogy.similarity": ("str", "euclidean"),
    "analogy.ent_rel_weight": ("float", 1.0),
    "infer.alpha_entity": ("float", 0.05),
    "infer.alpha_relation": ("float", 0.05),
    "infer.alpha_triple": ("float", 0.05),
    "infer.adaptive": ("bool", True),
}

# Published full-scale settings per dataset and family.  The analogy /
# inference entries pair with the matching base row; wn18rr-transe also
# switches to fixed weights with cosine similarity, its documented
# exception.
PRESETS: dict[str, dict[str, str]] = {
    "fb15k237-transe": {
        "family": "transe",
        "base.dim": "500",
        "base.margin": "9.0",
        "base.adversarial_temperature": "1.0",
        "base.negative_samples": "256",
        "base.batch_size": "1024",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "3",
        "infer.alpha_entity": "0.01",
        "infer.alpha_relation": "0.2",
        "infer.alpha_triple": "0.02",
        "analogy.ent_rel_weight": "1.0",
    },
    "fb15k237-rotate": {
        "family": "rotate",
        "base.dim": "500",
        "base.margin": "9.0",
        "base.adversarial_temperature": "1.0",
        "base.negative_samples": "256",
        "base.batch_size": "1024",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "5",
        "infer.alpha_entity": "0.01",
        "infer.alpha_relation": "0.2",
        "infer.alpha_triple": "0.05",
        "analogy.ent_rel_weight": "1.0",
    },
    "fb15k237-hake": {
        "family": "hake",
        "base.dim": "1000",
        "base.margin": "9.0",
        "base.adversarial_temperature": "1.0",
        "base.negative_samples": "512",
        "base.batch_size": "1024",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "5",
        "infer.alpha_entity": "0.05",
        "infer.alpha_relation": "0.3",
        "infer.alpha_triple": "0.1",
        "analogy.ent_rel_weight": "1.0",
    },
    "fb15k237-pairre": {
        "family": "pairre",
        "base.dim": "1500",
        "base.margin": "6.0",
        "base.adversarial_temperature": "1.0",
        "base.negative_samples": "256",
        "base.batch_size": "1024",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "3",
        "infer.alpha_entity": "0.01",
        "infer.alpha_relation": "0.3",
        "infer.alpha_triple": "0.05",
        "analogy.ent_rel_weight": "1.0",
    },
    "wn18rr-transe": {
        "family": "transe",
        "base.dim": "500",
        "base.margin": "6.0",
        "base.adversarial_temperature": "1.0",
        "base.negative_samples": "256",
        "base.batch_size": "2048",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "20",
        "infer.alpha_entity": "0.01",
        "infer.alpha_relation": "0.3",
        "infer.alpha_triple": "0.3",
        "infer.adaptive": "false",
        "analogy.similarity": "cosine",
        "analogy.ent_rel_weight": "0.0",
    },
    "wn18rr-rotate": {
        "family": "rotate",
        "base.dim": "500",
        "base.margin": "6.0",
        "base.adversarial_temperature": "0.5",
        "base.negative_samples": "1024",
        "base.batch_size": "512",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "3",
        "infer.alpha_entity": "0.1",
        "infer.alpha_relation": "0.05",
        "infer.alpha_triple": "0.1",
        "analogy.ent_rel_weight": "0.0",
    },
    "wn18rr-hake": {
        "family": "hake",
        "base.dim": "500",
        "base.margin": "6.0",
        "base.adversarial_temperature": "0.5",
        "base.negative_samples": "1024",
        "base.batch_size": "512",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "3",
        "infer.alpha_entity": "0.1",
        "infer.alpha_relation": "0.05",
        "infer.alpha_triple": "0.1",
        "analogy.ent_rel_weight": "0.0",
    },
    "wn18rr-pairre": {
        "family": "pairre",
        "base.dim": "500",
        "base.margin": "6.0",
        "base.adversarial_temperature": "0.5",
        "base.negative_samples": "1024",
        "base.batch_size": "512",
        "retriever.n_entity": "1",
        "retriever.n_relation": "1",
        "retriever.n_triple": "3",
        "infer.alpha_entity": "0.1",
        "infer.alpha_relation": "0.05",
        "infer.alpha_triple": "0.2",
        "analogy.ent_rel_weight": "0.0",
    },
}

_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(key: str, raw: str):
    tag, _ = SCHEMA[key]
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            word = raw.lower()
            if word not in _BOOL_WORDS:
                raise ValueError(raw)
            return _BOOL_WORDS[word]
        if tag == "optint":
            return None if raw.lower() in ("", "none") else int(raw)
        if tag == "optstr":
            return None if raw.lower() in ("", "none") else raw
        return raw
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {tag}")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parses flat key = value lines into raw string pairs."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = stripped.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


@dataclass(frozen=True)
class RunConfig:
    values: dict

    @classmethod
    def build(
        cls,
        file_text: str | None = None,
        overrides: dict[str, str] | None = None,
        source: str = "<config>",
    ) -> "RunConfig":
        file_pairs = parse_config_text(file_text, source) if file_text else {}
        override_pairs = dict(overrides or {})
        preset_name = override_pairs.pop("preset", file_pairs.pop("preset", None))
        values = {key: default for key, (_, default) in SCHEMA.items()}

        def apply(pairs: dict[str, str], origin: str):
            for key, raw in pairs.items():
                if key not in SCHEMA:
                    known = ", ".join(sorted(SCHEMA))
                    raise ConfigError(f"{origin}: unknown config key {key!r} (known: {known})")
                values[key] = _coerce(key, raw)

        if preset_name is not None:
            if preset_name not in PRESETS:
                raise ConfigError(
                    f"unknown preset {preset_name!r} (known: {', '.join(sorted(PRESETS))})"
                )
            apply(PRESETS[preset_name], f"preset {preset_name}")
        apply(file_pairs, source)
        apply(override_pairs, "override")
        return cls(values=values)

    def __getitem__(self, key: str):
        return self.values[key]

    def base_config(self) -> BaseTrainConfig:
        v = self.values
        return BaseTrainConfig(
            margin=v["base.margin"],
            adversarial_temperature=v["base.adversarial_temperature"],
            negative_samples=v["base.negative_samples"],
            batch_size=v["base.batch_size"],
            learning_rate=v["base.learning_rate"],
            epochs=v["base.epochs"],
            dim=v["base.dim"],
            seed=v["seed"],
        )

    def retriever_config(self) -> RetrieverConfig:
        v = self.values
        return RetrieverConfig(
            n_entity=v["retriever.n_entity"],
            n_relation=v["retriever.n_relation"],
            n_triple=v["retriever.n_triple"],
            m=v["retriever.m"],
            n=v["retriever.n"],
            exclude_original=v["retriever.exclude_original"],
        )

    def analogy_config(self) -> AnalogyTrainConfig:
        v = self.values
        return AnalogyTrainConfig(
            learning_rate=v["analogy.learning_rate"],
            epochs=v["analogy.epochs"],
            seed=v["seed"],
            batch_size=v["analogy.batch_size"],
            gamma=v["analogy.gamma"],
            similarity=v["analogy.similarity"],
            ent_rel_weight=v["analogy.ent_rel_weight"],
        )

    def inference_config(self) -> InferenceConfig:
        v = self.values
        return InferenceConfig(
            alpha_entity=v["infer.alpha_entity"],
            alpha_relation=v["infer.alpha_relation"],
            alpha_triple=v["infer.alpha_triple"],
            n_entity=v["retriever.n_entity"],
            n_relation=v["retriever.n_relation"],
            n_triple=v["retriever.n_triple"],
            adaptive=v["infer.adaptive"],
        )

    def canonical_text(self) -> str:
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if value is None:
                rendered = "none"
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            else:
                rendered = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{key} = {rendered}\n")
        return "".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()
