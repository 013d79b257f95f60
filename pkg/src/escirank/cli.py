"""Command-line interface.

Subcommands mirror the pipeline stages (ingest, filter, pad, enrich,
preprocess-queries, embed, rank, evaluate, report) plus `run`, which
executes the whole grid from a config file. Exit codes: 0 success,
1 usage/config error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset_ops import PadConfig, compute_label_stats, filter_by_popularity, pad_with_irrelevant
from .enrichment import EnrichmentCache, PromptSet, enrich_catalog, preprocess_queries
from .errors import ConfigError, DataError, EsciRankError, ProviderError
from .experiment import (
    ApproachContext,
    ExperimentConfig,
    ExperimentReport,
    build_providers,
    compare_preprocessing,
    compare_similarity_backends,
    emit_report,
    rank_dataset,
    run_experiment,
)
from .io import load_dataset, load_judgments, load_products, load_queries, save_dataset
from .metrics import GainScheme, Ranking, ndcg, run_score
from .models import Dataset, validate_dataset

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so usage errors map to exit code 1."""

    def error(self, message: str):  # noqa: D102
        raise ConfigError(message)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file (JSON)")
    parser.add_argument("--seed", type=int, help="base seed override")
    parser.add_argument("--jobs", type=int, help="worker bound for per-query work")
    parser.add_argument("--cache-dir", help="provider output cache directory")
    parser.add_argument("--out-dir", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _build_config(args: argparse.Namespace, dataset_dir: str | None = None) -> ExperimentConfig:
    """Config file (if any) overlaid with CLI flags and dataset-dir paths."""
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
    if dataset_dir is not None:
        d = Path(dataset_dir)
        raw["products_path"] = str(d / "products.jsonl")
        raw["queries_path"] = str(d / "queries.jsonl")
        raw["judgments_path"] = str(d / "judgments.jsonl")
    # --out-dir only selects where files land; it must not leak into the
    # config snapshot or re-running a snapshot elsewhere would never be
    # byte-identical.
    for flag, key in (("seed", "seed"), ("jobs", "jobs"), ("cache_dir", "cache_dir")):
        value = getattr(args, flag, None)
        if value is not None:
            raw[key] = value
    for flag in ("products", "queries", "judgments"):
        value = getattr(args, flag, None)
        if value is not None:
            raw[f"{flag}_path"] = value
    return ExperimentConfig.from_dict(raw)


def _out_dir(args: argparse.Namespace, default: str = "out") -> Path:
    out = Path(args.out_dir or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_stats(dataset: Dataset, out: Path) -> None:
    stats = compute_label_stats(dataset)
    print(stats.as_table())
    (out / "stats.json").write_text(
        json.dumps(stats.as_record(), ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8"
    )


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = _build_config(args)
    catalog = load_products(config.products_path, config.file_format)
    queries = load_queries(config.queries_path, config.file_format)
    judgments = load_judgments(
        config.judgments_path, config.file_format, train_ratio=config.train_ratio, split_salt=config.seed
    )
    report = validate_dataset(catalog, queries, judgments)
    print(report.describe())
    dataset = Dataset.build(catalog, queries, judgments)
    out = _out_dir(args, "dataset")
    save_dataset(dataset, out)
    print(f"ingested {len(dataset.catalog)} products, {len(dataset.queries)} queries, "
          f"{len(dataset.judgments)} judgments -> {out}")
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset_dir)
    filtered = filter_by_popularity(dataset, args.min_occurrences)
    out = _out_dir(args, "dataset_filtered")
    save_dataset(filtered, out)
    _print_stats(filtered, out)
    print(f"filtered to {len(filtered.catalog)} products, {len(filtered.queries)} queries -> {out}")
    return 0


def _cmd_pad(args: argparse.Namespace) -> int:
    config = _build_config(args, dataset_dir=args.dataset_dir)
    dataset = load_dataset(args.dataset_dir)
    source = load_products(args.sample_from) if args.sample_from else None
    padded = pad_with_irrelevant(dataset, PadConfig(args.pad_size, config.seed), source)
    out = _out_dir(args, "dataset_padded")
    save_dataset(padded, out)
    _print_stats(padded, out)
    print(f"padded to >= {args.pad_size} examples per query -> {out}")
    return 0


def _cmd_enrich(args: argparse.Namespace) -> int:
    config = _build_config(args, dataset_dir=args.dataset_dir)
    dataset = load_dataset(args.dataset_dir)
    providers = build_providers(config)
    prompts = PromptSet.load(args.prompt_set) if args.prompt_set else PromptSet()
    both = not args.captions and not args.tags
    result = enrich_catalog(
        dataset.catalog,
        providers["caption"],
        providers["tag"],
        prompts,
        EnrichmentCache(config.cache_dir),
        tag_vocabulary=config.tag_vocabulary,
        tag_top_k=config.tag_top_k,
        captions=args.captions or both,
        tags=args.tags or both,
        failure_threshold=config.failure_threshold,
    )
    out = _out_dir(args, "dataset_enriched")
    save_dataset(Dataset(result.catalog, dataset.queries, dataset.judgments, dataset.processed_queries), out)
    print(
        f"enriched {result.enriched} products ({result.cache_hits} cache hits, "
        f"{len(result.failures)} failures, {result.skipped_no_image} without images) -> {out}"
    )
    return 0


def _cmd_preprocess_queries(args: argparse.Namespace) -> int:
    config = _build_config(args, dataset_dir=args.dataset_dir)
    dataset = load_dataset(args.dataset_dir)
    providers = build_providers(config)
    processed = preprocess_queries(
        list(dataset.queries),
        providers["preprocess"],
        EnrichmentCache(config.cache_dir),
        PromptSet.load(args.prompt_set) if args.prompt_set else PromptSet(),
        failure_threshold=config.failure_threshold,
    )
    out = _out_dir(args, "dataset_preprocessed")
    save_dataset(Dataset(dataset.catalog, dataset.queries, dataset.judgments, processed), out)
    fallbacks = sum(1 for pq in processed.values() if pq.fallback)
    print(f"preprocessed {len(processed)} queries ({fallbacks} fallbacks) -> {out}")
    return 0


def _cmd_embed(args: argparse.Namespace) -> int:
    config = _build_config(args, dataset_dir=args.dataset_dir)
    dataset = load_dataset(args.dataset_dir)
    context = ApproachContext(config, dataset, build_providers(config), EnrichmentCache(config.cache_dir))
    context.prepare([args.approach])
    embedded = sum(len(v) for v in context.doc_vectors.values()) + len(context.image_vectors)
    print(f"cached {embedded} document vectors and {len(context.query_vectors)} query vectors")
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    config = _build_config(args, dataset_dir=args.dataset_dir)
    dataset = load_dataset(args.dataset_dir)
    rankings = rank_dataset(config, dataset, args.approach, config.seed)
    out_path = Path(args.out or "rankings.jsonl")
    with out_path.open("w", encoding="utf-8") as handle:
        for query_id in sorted(rankings):
            ranking = rankings[query_id]
            record = {"query_id": query_id, "items": [[pid, score] for pid, score in ranking.items]}
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"ranked {len(rankings)} queries with {args.approach} -> {out_path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _build_config(args, dataset_dir=args.dataset_dir)
    dataset = load_dataset(args.dataset_dir)
    scheme = GainScheme.from_values(config.gains)
    per_query: dict[str, float | None] = {}
    out = _out_dir(args)
    records = []
    for line in Path(args.rankings).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        ranking = Ranking(raw["query_id"], tuple((pid, float(s)) for pid, s in raw["items"]))
        judgments = [
            j for j in dataset.query_judgments(ranking.query_id) if j.split == config.eval_split
        ]
        score = ndcg(ranking, judgments, scheme, None if config.k <= 0 else config.k)
        per_query[ranking.query_id] = score
        records.append({"query_id": ranking.query_id, "ndcg": score})
    if not per_query:
        raise DataError(f"no rankings found in {args.rankings}")
    (out / "eval.jsonl").write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8"
    )
    mean, skipped = run_score(per_query)
    print(f"mean nDCG {mean:.6f} over {len(per_query) - skipped} queries ({skipped} skipped)")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report = ExperimentReport.from_json(Path(args.report).read_text(encoding="utf-8"))
    written = emit_report(report, _out_dir(args))
    print("\n".join(str(p) for p in written))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if args.mode == "grid":
        report = run_experiment(config)
    elif args.mode == "compare-backends":
        report = compare_similarity_backends(config)
    else:
        report = compare_preprocessing(config)
    written = emit_report(report, args.out_dir or config.out_dir)
    print(Path(written[2]).read_text(encoding="utf-8"))
    print("\n".join(str(p) for p in written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="escirank", description=__doc__)
    parser.add_argument("--version", action="version", version=f"escirank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _common_flags(p)
        p.set_defaults(handler=handler)
        return p

    p = add("ingest", _cmd_ingest, "load, validate, and normalize the three input files")
    p.add_argument("--products", help="products file")
    p.add_argument("--queries", help="queries file")
    p.add_argument("--judgments", help="judgments file")

    p = add("filter", _cmd_filter, "keep products appearing in enough queries")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--min-occurrences", type=int, required=True)

    p = add("pad", _cmd_pad, "fill queries with sampled irrelevant items")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--pad-size", type=int, required=True)
    p.add_argument("--sample-from", help="sample padding items from this products file instead")

    p = add("enrich", _cmd_enrich, "generate captions/tags for products with images")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--captions", action="store_true", help="generate captions only")
    p.add_argument("--tags", action="store_true", help="generate tags only")
    p.add_argument("--prompt-set", help="named-prompt record file")

    p = add("preprocess-queries", _cmd_preprocess_queries, "expand queries into keywords")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--prompt-set", help="named-prompt record file")

    p = add("embed", _cmd_embed, "warm the embedding cache for an approach")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--approach", default="text")

    p = add("rank", _cmd_rank, "rank every evaluation query under one approach")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--approach", required=True)
    p.add_argument("--out", help="rankings output file (default rankings.jsonl)")

    p = add("evaluate", _cmd_evaluate, "score a rankings file with nDCG")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--rankings", required=True)

    p = add("report", _cmd_report, "re-render tables and plot data from report.json")
    p.add_argument("--report", required=True)

    p = add("run", _cmd_run, "execute the full experiment grid from a config")
    p.add_argument("--products", help="products file (overrides config)")
    p.add_argument("--queries", help="queries file (overrides config)")
    p.add_argument("--judgments", help="judgments file (overrides config)")
    p.add_argument(
        "--mode",
        choices=("grid", "compare-backends", "compare-preprocessing"),
        default="grid",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "verbose", False):
            logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 3
    except EsciRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
