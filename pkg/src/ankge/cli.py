"""Command-line pipeline driver.

Stages write self-describing artifacts into the output directory, and every
artifact embeds the sha256 digest of its upstream inputs; later stages
refuse inputs whose digests do not match, so a run directory is always
internally consistent.

Subcommands: make-toy, train-base, retrieve, train-ankge, evaluate, info.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .analogy import load_params, save_params, train_analogy
from .checkpoint import load_model, read_container, save_model, sha256_file
from .config import PRESETS, RunConfig
from .data import load_store
from .evaluation import evaluate, write_metrics_report, write_ranks_csv
from .exceptions import ConfigError, DataError, DigestMismatchError, DivergenceError, ParseError
from .retriever import build_cache, load_cache, save_cache
from .toygen import ToyConfig, write_toy_kg
from .training import train_base


def _add_common(sub: argparse.ArgumentParser, needs_data: bool = True):
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable); use preset=NAME to apply a preset",
    )
    sub.add_argument("--out", help="output directory (config key out_dir)")
    sub.add_argument("--seed", type=int, help="override the run seed")
    sub.add_argument("--threads", type=int, help="cap numeric worker threads")
    if needs_data:
        sub.add_argument("--data", help="dataset directory with train/valid/test TSVs")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ankge",
        description="Train KGE base models and enhance them with analogical inference.",
    )
    parser.add_argument("--version", action="version", version=f"ankge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-toy", help="generate a compositional toy dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--instances-per-class", type=int, default=6)
    p.add_argument("--attributes", type=int, default=4)
    p.add_argument("--values-per-attribute", type=int, default=5)
    p.add_argument("--synonym-attributes", type=int, default=2)
    p.add_argument("--noise-facts", type=int, default=30)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--valid-fraction", type=float, default=0.05)

    p = sub.add_parser("train-base", help="train a base embedding model")
    _add_common(p)

    p = sub.add_parser("retrieve", help="build the analogical object cache")
    _add_common(p)
    p.add_argument("--base-checkpoint", required=True)

    p = sub.add_parser("train-ankge", help="train the analogy projections")
    _add_common(p)
    p.add_argument("--base-checkpoint", required=True)
    p.add_argument("--cache", required=True)

    p = sub.add_parser("evaluate", help="filtered link-prediction evaluation")
    _add_common(p)
    p.add_argument("--base-checkpoint", required=True)
    p.add_argument("--analogy-checkpoint", help="omit for base-only evaluation")

    p = sub.add_parser("info", help="print artifact manifests")
    p.add_argument("paths", nargs="+")
    return parser


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _load_run_config(args) -> RunConfig:
    file_text = None
    source = "<config>"
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        file_text = path.read_text(encoding="utf-8")
        source = str(path)
    overrides = _parse_overrides(args.overrides)
    if args.out:
        overrides["out_dir"] = args.out
    if getattr(args, "data", None):
        overrides["data_dir"] = args.data
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.threads is not None:
        overrides["threads"] = str(args.threads)
    cfg = RunConfig.build(file_text=file_text, overrides=overrides, source=source)
    if cfg["threads"] is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(cfg["threads"])
    return cfg


def _require(cfg: RunConfig, key: str) -> str:
    value = cfg[key]
    if value is None:
        raise ConfigError(f"config key {key!r} is required for this command")
    return value


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(_require(cfg, "out_dir"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: RunConfig, out: Path) -> str:
    (out / "config.txt").write_text(cfg.canonical_text(), encoding="utf-8")
    return cfg.digest()


def cmd_make_toy(args) -> int:
    config = ToyConfig(
        classes=args.classes,
        instances_per_class=args.instances_per_class,
        attributes=args.attributes,
        values_per_attribute=args.values_per_attribute,
        synonym_attributes=args.synonym_attributes,
        noise_facts=args.noise_facts,
        test_fraction=args.test_fraction,
        valid_fraction=args.valid_fraction,
        seed=args.seed,
    )
    sizes = write_toy_kg(args.out, config)
    print(f"wrote {args.out}: " + ", ".join(f"{k}={v}" for k, v in sizes.items()))
    return 0


def cmd_train_base(args) -> int:
    cfg = _load_run_config(args)
    out = _out_dir(cfg)
    config_digest = _echo_config(cfg, out)
    store = load_store(_require(cfg, "data_dir"))
    model = train_base(
        store, cfg["family"], cfg.base_config(), log_path=out / "train_log.csv"
    )
    digest = save_model(
        out / "base.ckpt",
        model,
        meta={
            "config_digest": config_digest,
            "seed": cfg["seed"],
            "train_triples": int(store.train.shape[0]),
        },
    )
    print(f"wrote {out / 'base.ckpt'} (sha256 {digest})")
    return 0


def cmd_retrieve(args) -> int:
    cfg = _load_run_config(args)
    out = _out_dir(cfg)
    _echo_config(cfg, out)
    store = load_store(_require(cfg, "data_dir"))
    model, _ = load_model(args.base_checkpoint)
    base_digest = sha256_file(args.base_checkpoint)
    cache = build_cache(model, store, cfg.retriever_config())
    digest = save_cache(out / "cache.bin", cache, model_digest=base_digest)
    print(f"wrote {out / 'cache.bin'} (sha256 {digest}, base {base_digest})")
    return 0


def cmd_train_ankge(args) -> int:
    cfg = _load_run_config(args)
    out = _out_dir(cfg)
    config_digest = _echo_config(cfg, out)
    store = load_store(_require(cfg, "data_dir"))
    model, _ = load_model(args.base_checkpoint)
    base_digest = sha256_file(args.base_checkpoint)
    cache, cache_meta = load_cache(args.cache)
    if cache_meta.get("model_digest") != base_digest:
        raise DigestMismatchError(
            f"cache {args.cache} was built from base digest "
            f"{cache_meta.get('model_digest')}, not {base_digest}"
        )
    params = train_analogy(
        model, store, cache, cfg.analogy_config(), log_path=out / "analogy_log.csv"
    )
    digest = save_params(
        out / "analogy.ckpt",
        params,
        meta={
            "base_digest": base_digest,
            "cache_digest": sha256_file(args.cache),
            "config_digest": config_digest,
            "gamma": cfg["analogy.gamma"],
            "seed": cfg["seed"],
            "similarity": cfg["analogy.similarity"],
        },
    )
    print(f"wrote {out / 'analogy.ckpt'} (sha256 {digest})")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_run_config(args)
    out = _out_dir(cfg)
    config_digest = _echo_config(cfg, out)
    store = load_store(_require(cfg, "data_dir"))
    model, _ = load_model(args.base_checkpoint)
    base_digest = sha256_file(args.base_checkpoint)
    params = None
    analogy_digest = "none"
    if args.analogy_checkpoint:
        params, params_meta = load_params(args.analogy_checkpoint)
        analogy_digest = sha256_file(args.analogy_checkpoint)
        if params_meta.get("base_digest") != base_digest:
            raise DigestMismatchError(
                f"analogy params {args.analogy_checkpoint} were trained on base digest "
                f"{params_meta.get('base_digest')}, not {base_digest}"
            )
    report = evaluate(model, params, store, cfg.inference_config())
    meta = {
        "analogy_digest": analogy_digest,
        "base_digest": base_digest,
        "config_digest": config_digest,
        "mode": "base-only" if params is None else "ankge",
    }
    write_metrics_report(out / "metrics.txt", report, meta)
    write_ranks_csv(out / "ranks.csv", report)
    print(
        f"mrr {report.mrr:.6f} hits1 {report.hits1:.6f} "
        f"hits3 {report.hits3:.6f} hits10 {report.hits10:.6f}"
    )
    print(f"wrote {out / 'metrics.txt'} and {out / 'ranks.csv'}")
    return 0


def cmd_info(args) -> int:
    for path in args.paths:
        meta, arrays = read_container(path)
        summary = {
            "arrays": {name: list(arr.shape) for name, arr in arrays.items()},
            "meta": meta,
            "sha256": sha256_file(path),
        }
        print(f"{path}:")
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "make-toy": cmd_make_toy,
    "train-base": cmd_train_base,
    "retrieve": cmd_retrieve,
    "train-ankge": cmd_train_ankge,
    "evaluate": cmd_evaluate,
    "info": cmd_info,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
