"""Command-line driver.

Subcommands: synth, ingest, stats, featurize, label, train, evaluate,
report-coefficients, harvest feed, harvest users, serve-mock,
tokenize-debug. Every command exits 0 on success and nonzero with a
module-prefixed diagnostic on failure. A JSON file passed with --config
supplies defaults for pipeline options; explicit flags win. Relative input
and output paths resolve against $PAYLENS_DATA_DIR when it is set.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
import time

import numpy as np

from . import corpus as corpus_mod
from . import labels as labels_mod
from .errors import CorruptError, PaylensError, VersionError
from .evaluation import GridSpec, balance_classes, grid_search, stratified_kfold
from .features import engineered_feature_names
from .harvest import (ClientConfig, MockServerConfig, crawl_users,
                      fetch_public_feed, run_mock_server)
from .models import top_coefficients
from .models.serialize import model_from_container, model_to_container
from .pipeline import (FittedPipeline, PipelineConfig, build_dataset,
                       fit_pipeline)
from .synth import SynthSpec, generate_synthetic_corpus
from .tokenizer import tokenize_post
from .vectorizer import ScalerStats, Vocabulary

PIPELINE_MAGIC = "paylens-pipeline"
PIPELINE_VERSION = 1


def _resolve_path(path: str) -> str:
    if path == "-" or os.path.isabs(path):
        return path
    base = os.environ.get("PAYLENS_DATA_DIR")
    return os.path.join(base, path) if base else path


def _open_in(path: str):
    if path == "-":
        return contextlib.nullcontext(sys.stdin)  # don't close the stream
    return open(_resolve_path(path), encoding="utf-8")


def _open_out(path: str):
    if path == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(_resolve_path(path), "w", encoding="utf-8")


def _load_corpus(path: str, strict: bool = False,
                 min_posts: int | None = None) -> corpus_mod.Corpus:
    with _open_in(path) as fp:
        result = corpus_mod.load_transactions(fp, strict=strict)
    if result.skipped:
        print(f"warning: skipped {result.skipped} malformed line(s)",
              file=sys.stderr)
    grouped = corpus_mod.group_by_user(result.transactions)
    if min_posts and min_posts > 1:
        grouped = corpus_mod.filter_min_posts(grouped, min_posts)
    return grouped


def _file_config(args) -> dict:
    if getattr(args, "config", None):
        with _open_in(args.config) as fp:
            return json.load(fp)
    return {}


def _pick(cli_value, cfg: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    if key in cfg:
        return cfg[key]
    return default


def _pipeline_config(args, cfg: dict) -> PipelineConfig:
    n_lo = _pick(args.ngram_min, cfg, "ngram_min", 1)
    n_hi = _pick(args.ngram_max, cfg, "ngram_max", 2)
    return PipelineConfig(
        vectorizer=_pick(args.vectorizer, cfg, "vectorizer", "tfidf"),
        n_range=(int(n_lo), int(n_hi)),
        min_df=int(_pick(args.min_df, cfg, "min_df", 2)),
        use_engineered=_pick(args.use_engineered, cfg, "use_engineered", True),
        include_actor_pct=_pick(args.include_actor_pct, cfg,
                                "include_actor_pct", False),
        classifier=_pick(args.classifier, cfg, "classifier", "svm"),
        C=float(_pick(args.C, cfg, "C", 1.0)),
        mlp_overrides=tuple(sorted(cfg.get("mlp_overrides", {}).items())),
        gbdt_overrides=tuple(sorted(cfg.get("gbdt_overrides", {}).items())),
        seed=int(_pick(args.seed, cfg, "seed", 0)),
    )


def _labeled_users(grouped: corpus_mod.Corpus, args, cfg: dict):
    task = args.task
    name_corpus = None
    if getattr(args, "name_corpus", None):
        with _open_in(args.name_corpus) as fp:
            name_corpus = labels_mod.load_name_corpus(fp)
    political = None
    if task == "politics":
        labels_path = _pick(getattr(args, "labels_file", None), cfg,
                            "labels_file", None)
        if labels_path is None:
            raise labels_mod.LabelFileError(
                "politics task requires --labels-file")
        with _open_in(labels_path) as fp:
            political = labels_mod.load_political_labels(fp)
    labeled = labels_mod.build_labeled_dataset(
        grouped, task, name_corpus=name_corpus,
        region=_pick(getattr(args, "region", None), cfg, "region", "us"),
        political_labels=political)
    balance = _pick(getattr(args, "balance", None), cfg, "balance", True)
    if balance:
        labeled = balance_classes(labeled, seed=int(_pick(
            getattr(args, "seed", None), cfg, "seed", 0)))
    return labeled


def save_pipeline(fitted: FittedPipeline, path: str) -> None:
    container = {
        "magic": PIPELINE_MAGIC,
        "version": PIPELINE_VERSION,
        "kind": "pipeline",
        "payload": {
            "config": fitted.config.to_dict(),
            "vocab": {
                "terms": fitted.vocab.terms,
                "df": [fitted.vocab.document_frequency[t]
                       for t in fitted.vocab.terms],
                "n_documents": fitted.vocab.n_documents,
                "n_range": list(fitted.vocab.n_range),
                "min_df": fitted.vocab.min_df,
            },
            "scaler": None if fitted.scaler is None else {
                "mean": fitted.scaler.mean.tolist(),
                "std": fitted.scaler.std.tolist(),
            },
            "model": model_to_container(fitted.model),
            "feature_names": fitted.feature_names,
            "class_names": list(fitted.class_names),
        },
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fp:
        json.dump(container, fp)
    os.replace(tmp, path)


def load_pipeline(path: str) -> FittedPipeline:
    try:
        with open(_resolve_path(path), encoding="utf-8") as fp:
            container = json.load(fp)
    except json.JSONDecodeError as exc:
        raise CorruptError(f"unreadable pipeline file: {exc}") from exc
    if container.get("magic") != PIPELINE_MAGIC:
        raise VersionError("not a pipeline file (bad magic)")
    if container.get("version") != PIPELINE_VERSION:
        raise VersionError(
            f"unsupported pipeline version {container.get('version')!r}")
    payload = container["payload"]
    vocab_data = payload["vocab"]
    vocab = Vocabulary(
        index={t: i for i, t in enumerate(vocab_data["terms"])},
        document_frequency=dict(zip(vocab_data["terms"], vocab_data["df"])),
        n_documents=vocab_data["n_documents"],
        n_range=tuple(vocab_data["n_range"]),
        min_df=vocab_data["min_df"],
    )
    scaler = None
    if payload.get("scaler"):
        scaler = ScalerStats(mean=np.asarray(payload["scaler"]["mean"]),
                             std=np.asarray(payload["scaler"]["std"]))
    return FittedPipeline(
        config=PipelineConfig.from_dict(payload["config"]),
        vocab=vocab,
        scaler=scaler,
        model=model_from_container(payload["model"]),
        feature_names=payload["feature_names"],
        class_names=tuple(payload["class_names"]),
    )


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_users_per_class=args.users_per_class,
        posts_per_user=(args.posts_min, args.posts_max),
        p_signal=args.p_signal,
        p_noise=args.p_noise,
        emoji_fraction=args.emoji_fraction,
        seed=args.seed,
    )
    result = generate_synthetic_corpus(spec)
    with _open_out(args.out) as fp:
        corpus_mod.dump_transactions(result.transactions, fp)
    if args.labels_out:
        with _open_out(args.labels_out) as fp:
            fp.write("user_id,label\n")
            for user_id, label in result.labels:
                fp.write(f"{user_id},{label}\n")
    print(f"wrote {len(result.transactions)} transactions, "
          f"{len(result.labels)} labeled users")
    return 0


def cmd_ingest(args) -> int:
    with _open_in(args.infile) as fp:
        result = corpus_mod.load_transactions(fp, strict=args.strict)
    with _open_out(args.out) as fp:
        corpus_mod.dump_transactions(result.transactions, fp)
    print(f"ingested {len(result.transactions)} transactions "
          f"({result.skipped} skipped)")
    return 0


def cmd_stats(args) -> int:
    grouped = _load_corpus(args.infile)
    histogram = corpus_mod.note_length_histogram(grouped)
    with _open_out(args.out) as fp:
        fp.write("length,count\n")
        for length in sorted(histogram):
            fp.write(f"{length},{histogram[length]}\n")
    total = sum(histogram.values())
    mode = max(histogram, key=lambda k: (histogram[k], -k)) if histogram else None
    print(f"{total} transactions, {len(grouped.users)} users, "
          f"mode note length {mode}")
    return 0


def cmd_featurize(args) -> int:
    from .features import aggregate_user_features
    grouped = _load_corpus(args.infile, min_posts=args.min_posts)
    names = engineered_feature_names(args.include_actor_pct)
    with _open_out(args.out) as fp:
        writer = csv.writer(fp)
        writer.writerow(["user_id"] + names)
        for user_id in sorted(grouped.users):
            profile = grouped.users[user_id]
            posts = [tokenize_post(t.note) for t, _ in profile.posts]
            feats = aggregate_user_features(profile, posts)
            row = feats.to_vector(args.include_actor_pct)
            writer.writerow([user_id] + [repr(float(v)) for v in row])
    print(f"featurized {len(grouped.users)} users ({len(names)} columns)")
    return 0


def cmd_label(args) -> int:
    cfg = _file_config(args)
    grouped = _load_corpus(args.infile, min_posts=args.min_posts)
    labeled = _labeled_users(grouped, args, cfg)
    class_names = labels_mod.CLASS_NAMES[args.task]
    with _open_out(args.out) as fp:
        fp.write("user_id,label,class_name\n")
        for lu in labeled:
            fp.write(f"{lu.user_id},{lu.label},{class_names[lu.label]}\n")
    print(f"labeled {len(labeled)} users for task {args.task}")
    return 0


def cmd_train(args) -> int:
    cfg = _file_config(args)
    grouped = _load_corpus(args.infile, min_posts=args.min_posts)
    labeled = _labeled_users(grouped, args, cfg)
    config = _pipeline_config(args, cfg)
    dataset = build_dataset(grouped, labeled,
                            include_actor_pct=config.include_actor_pct)
    fitted = fit_pipeline(dataset, np.arange(len(dataset)), config)
    save_pipeline(fitted, _resolve_path(args.out))
    print(f"trained {config.classifier} on {len(dataset)} users "
          f"({len(fitted.feature_names)} features) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _file_config(args)
    grouped = _load_corpus(args.infile, min_posts=args.min_posts)
    labeled = _labeled_users(grouped, args, cfg)
    config = _pipeline_config(args, cfg)
    dataset = build_dataset(grouped, labeled,
                            include_actor_pct=config.include_actor_pct)
    if args.grid:
        with _open_in(args.grid) as fp:
            grid = GridSpec.from_dict(json.load(fp))
    else:
        grid = GridSpec()
    plan = stratified_kfold(dataset.labels01.tolist(), k=args.folds,
                            seed=config.seed)
    report = grid_search(grid, plan, dataset, base=config,
                         workers=args.workers)
    with _open_out(args.report) as fp:
        json.dump(report.to_dict(), fp, indent=2)
        fp.write("\n")
    if args.model_out and report.best_model is not None:
        save_pipeline(report.best_model, _resolve_path(args.model_out))
    best = report.best
    print(f"best config: {best.config.classifier}/{best.config.vectorizer} "
          f"ngrams={best.config.n_range} C={best.config.C} "
          f"mean accuracy {best.mean_accuracy:.4f}")
    return 0


def cmd_report_coefficients(args) -> int:
    fitted = load_pipeline(args.model)
    model = fitted.model
    if model.kind != "svm":
        raise PaylensError(
            f"coefficient report requires a linear SVM, got {model.kind!r}")
    positive, negative = top_coefficients(model, args.k)
    neg_name, pos_name = fitted.class_names
    with _open_out(args.out) as fp:
        writer = csv.writer(fp)
        writer.writerow(["feature", "weight", "class"])
        for name, weight in positive:
            writer.writerow([name, repr(weight), pos_name])
        for name, weight in negative:
            writer.writerow([name, repr(weight), neg_name])
    print(f"wrote {len(positive)}+{len(negative)} coefficients")
    return 0


def cmd_harvest_feed(args) -> int:
    client = ClientConfig(rate=args.rate, burst=args.burst)
    txns = fetch_public_feed(args.endpoint, pages=args.pages, client=client)
    with _open_out(args.out) as fp:
        corpus_mod.dump_transactions(txns, fp)
    print(f"collected {len(txns)} unique transactions over {args.pages} poll(s)")
    return 0


def cmd_harvest_users(args) -> int:
    with _open_in(args.ids) as fp:
        user_ids = [line.strip() for line in fp if line.strip()]
    client = ClientConfig(rate=args.rate, burst=args.burst)
    resume = args.checkpoint and os.path.exists(_resolve_path(args.checkpoint))
    mode = "a" if resume else "w"
    with open(_resolve_path(args.out), mode, encoding="utf-8") as out:
        collected = crawl_users(
            args.endpoint, user_ids, workers=args.workers,
            checkpoint_path=_resolve_path(args.checkpoint) if args.checkpoint else None,
            out=out, client=client, max_users=args.max_users)
    print(f"collected {len(collected)} new transactions "
          f"from {len(user_ids)} queued users")
    return 0


def cmd_serve_mock(args) -> int:
    with _open_in(args.corpus) as fp:
        result = corpus_mod.load_transactions(fp)
    grouped = corpus_mod.group_by_user(result.transactions)
    usernames = {}
    if args.usernames:
        with _open_in(args.usernames) as fp:
            usernames = json.load(fp)
    config = MockServerConfig(page_size=args.page_size,
                              refresh_interval=args.refresh_interval,
                              rate_limit=args.rate_limit,
                              usernames=usernames)
    server = run_mock_server(grouped, config, port=args.port)
    stop_note = (f"stopping after {args.duration}s" if args.duration
                 else "Ctrl-C to stop")
    print(f"mock server on {server.url} "
          f"({len(result.transactions)} transactions); {stop_note}",
          flush=True)
    try:
        if args.duration:
            time.sleep(args.duration)
        else:
            while True:
                time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def cmd_tokenize_debug(args) -> int:
    post = tokenize_post(args.note)
    print(f"{'kind':<10} {'surface':<20} lemma")
    for tok in post.tokens:
        print(f"{tok.kind:<10} {tok.surface:<20} {tok.lemma}")
    return 0


# ---------------------------------------------------------------- parser

def _add_common_label_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", choices=("gender", "politics"), required=True)
    p.add_argument("--labels-file", help="politics: CSV user_id,label")
    p.add_argument("--name-corpus", help="TSV name corpus (default: bundled)")
    p.add_argument("--region", default=None)
    p.add_argument("--min-posts", type=int, default=5)
    p.add_argument("--balance", action="store_true", default=None,
                   help="downsample the majority class (default on)")
    p.add_argument("--no-balance", dest="balance", action="store_false")
    p.add_argument("--config", help="JSON file with option defaults")


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vectorizer", choices=("count", "tfidf"), default=None)
    p.add_argument("--ngram-min", type=int, default=None)
    p.add_argument("--ngram-max", type=int, default=None)
    p.add_argument("--min-df", type=int, default=None)
    p.add_argument("--classifier", choices=("svm", "mlp", "gbdt"), default=None)
    p.add_argument("-C", dest="C", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-engineered", dest="use_engineered",
                   action="store_false", default=None)
    p.add_argument("--include-actor-pct", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paylens",
        description="Latent attribute prediction from social-payment notes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--users-per-class", type=int, default=100)
    p.add_argument("--posts-min", type=int, default=5)
    p.add_argument("--posts-max", type=int, default=12)
    p.add_argument("--p-signal", type=float, default=0.6)
    p.add_argument("--p-noise", type=float, default=0.1)
    p.add_argument("--emoji-fraction", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse, validate and dedup a JSONL corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="note-length histogram CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("featurize", help="engineered feature rows per user")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-posts", type=int, default=1)
    p.add_argument("--include-actor-pct", action="store_true")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("label", help="derive task labels for users")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_common_label_args(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="fit one pipeline config on all users")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="pipeline artifact path")
    _add_common_label_args(p)
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated grid search")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--grid", help="grid spec JSON (default: built-in grid)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--report", required=True)
    p.add_argument("--model-out", help="save the refit best pipeline here")
    p.add_argument("--workers", type=int, default=1)
    _add_common_label_args(p)
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report-coefficients",
                       help="top SVM weights per class as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("-k", type=int, default=15)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_report_coefficients)

    p = sub.add_parser("harvest", help="collect transactions over HTTP")
    hsub = p.add_subparsers(dest="harvest_command", required=True)

    hp = hsub.add_parser("feed", help="poll the public feed")
    hp.add_argument("--endpoint", required=True)
    hp.add_argument("--pages", type=int, default=1)
    hp.add_argument("--out", required=True)
    hp.add_argument("--rate", type=float, default=0.0)
    hp.add_argument("--burst", type=float, default=1.0)
    hp.set_defaults(func=cmd_harvest_feed)

    hp = hsub.add_parser("users", help="crawl every queued user's history")
    hp.add_argument("--endpoint", required=True)
    hp.add_argument("--ids", required=True, help="file with one user id per line")
    hp.add_argument("--workers", type=int, default=8)
    hp.add_argument("--checkpoint")
    hp.add_argument("--out", required=True)
    hp.add_argument("--rate", type=float, default=0.0)
    hp.add_argument("--burst", type=float, default=1.0)
    hp.add_argument("--max-users", type=int, default=None)
    hp.set_defaults(func=cmd_harvest_users)

    p = sub.add_parser("serve-mock", help="run the mock feed server")
    p.add_argument("--corpus", required=True)
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--page-size", type=int, default=20)
    p.add_argument("--refresh-interval", type=float, default=900.0)
    p.add_argument("--rate-limit", type=float, default=0.0)
    p.add_argument("--usernames", help="JSON username -> user_id map")
    p.add_argument("--duration", type=float, default=0.0,
                   help="serve for N seconds then exit (0 = run until Ctrl-C)")
    p.set_defaults(func=cmd_serve_mock)

    p = sub.add_parser("tokenize-debug", help="print the token table of a note")
    p.add_argument("--note", required=True)
    p.set_defaults(func=cmd_tokenize_debug)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PaylensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
