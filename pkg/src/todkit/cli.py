"""Operator command line: ingest, build-store, run, evaluate, sweep, serve.

Exit codes: 0 success, 1 evaluation expectation mismatch, 2 input error,
3 backend error. Every mutating command writes a manifest sufficient to
reproduce the run with a replay backend.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

import click

from .backends import (CassetteMissError, HttpBackend, HttpBackendConfig,
                       RecordingBackend, ReplayBackend, TransportError)
from .core import PipelineConfig
from .database import Database
from .ingest import (Corpus, CorpusFormatError, collect_snippets,
                     load_multiwoz, load_sgd)
from .metrics import EvalReport, evaluate_run, load_predictions
from .offline import QueueBackend, gold_answer_queues
from .pipeline import Pipeline, run_corpus
from .prompts import TemplateSet
from .reporting import (render_table, write_report_figures, write_report_tsv,
                        write_sweep_outputs)
from .store import ContextStore, HashedTrigramEmbedder, RemoteEmbedder, \
    build_store

EXIT_EXPECT_MISMATCH = 1
EXIT_INPUT_ERROR = 2
EXIT_BACKEND_ERROR = 3


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _file_sha256(path: Path) -> Optional[str]:
    if not path.is_file():
        return None
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_corpus(corpus_dir: str) -> Corpus:
    try:
        return Corpus.load(Path(corpus_dir))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        _fail(EXIT_INPUT_ERROR, f"cannot load corpus from {corpus_dir}: {exc}")


def _load_db(corpus_dir: str, db_dir: Optional[str],
             corpus: Corpus) -> Optional[Database]:
    candidate = Path(db_dir) if db_dir else Path(corpus_dir) / "db"
    if candidate.is_dir():
        return Database.load(candidate, schemas=corpus.schemas)
    return None


def _make_embedder(kind: str, url: Optional[str], dimension: int):
    if kind == "trigram":
        return HashedTrigramEmbedder(dimension)
    if kind == "remote":
        if not url:
            _fail(EXIT_INPUT_ERROR, "--embedder remote needs --embedder-url")
        return RemoteEmbedder(url, dimension)
    _fail(EXIT_INPUT_ERROR, f"unknown embedder {kind!r}")


def _merge_config(config_file: Optional[str], **flags) -> PipelineConfig:
    """Precedence: explicit flags > config file > defaults."""
    base: dict = {}
    if config_file:
        try:
            base = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            _fail(EXIT_INPUT_ERROR, f"cannot read config {config_file}: {exc}")
    for key, value in flags.items():
        if value is not None:
            base[key] = value
    try:
        return PipelineConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        _fail(EXIT_INPUT_ERROR, f"invalid configuration: {exc}")


def _make_backend(backend: str, cassette: Optional[str], record: Optional[str],
                  base_url: Optional[str], wire: str, model: Optional[str],
                  corpus: Corpus, split: Optional[str], timeout: float):
    if backend == "replay":
        if not cassette:
            _fail(EXIT_INPUT_ERROR, "--backend replay needs --cassette")
        try:
            inner = ReplayBackend.from_file(cassette)
        except OSError as exc:
            _fail(EXIT_INPUT_ERROR, f"cannot load cassette: {exc}")
    elif backend == "http":
        if not base_url:
            _fail(EXIT_INPUT_ERROR, "--backend http needs --base-url")
        inner = HttpBackend(HttpBackendConfig(
            base_url=base_url, wire=wire, model=model,
            api_key=os.environ.get("TODKIT_API_KEY"), timeout=timeout))
    elif backend == "scripted-gold":
        inner = QueueBackend(gold_answer_queues(corpus, split),
                             backend_id="scripted-gold")
    else:
        _fail(EXIT_INPUT_ERROR, f"unknown backend {backend!r}")
    if record:
        return RecordingBackend(inner, record)
    return inner


@click.group()
def main() -> None:
    """Prompt-driven task-oriented dialogue pipeline."""


@main.command()
@click.argument("dataset", type=click.Choice(["multiwoz", "sgd"]))
@click.argument("path", type=click.Path(exists=True, file_okay=False))
@click.argument("out", type=click.Path(file_okay=False))
def ingest(dataset: str, path: str, out: str) -> None:
    """Parse a dataset directory into the unified corpus layout."""
    try:
        corpus = load_multiwoz(path) if dataset == "multiwoz" else load_sgd(path)
    except (CorpusFormatError, OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_INPUT_ERROR, str(exc))
    corpus.save(out)
    db_src = Path(path) / "db"
    if db_src.is_dir():
        db_out = Path(out) / "db"
        db_out.mkdir(parents=True, exist_ok=True)
        for file in db_src.glob("*_db.json"):
            (db_out / file.name).write_bytes(file.read_bytes())
    for warning in corpus.load_warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"{len(corpus.dialogues)} dialogues, "
               f"{len(corpus.schemas)} domain schemas -> {out}")


@main.command("build-store")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--pool-size", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--window", default=2, show_default=True)
@click.option("--split", default="train", show_default=True)
@click.option("--embedder", default="trigram", show_default=True,
              type=click.Choice(["trigram", "remote"]))
@click.option("--embedder-url", default=None)
@click.option("--dimension", default=512, show_default=True)
def build_store_cmd(corpus_dir: str, out: str, pool_size: int, seed: int,
                    window: int, split: str, embedder: str,
                    embedder_url: Optional[str], dimension: int) -> None:
    """Sample and embed few-shot examples from a corpus split."""
    corpus = _load_corpus(corpus_dir)
    emb = _make_embedder(embedder, embedder_url, dimension)
    snippets = collect_snippets(corpus, window, split=split)
    store = build_store(snippets, pool_size, emb, seed=seed)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    store.save(out)
    click.echo(f"stored {len(store)} examples across "
               f"{len(store.domains())} domains -> {out}")


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--few-shot/--zero-shot", "few_shot", default=None)
@click.option("--oracle-state", is_flag=True, default=None)
@click.option("--oracle-domain", is_flag=True, default=None)
@click.option("--k", "retrieval_k", type=int, default=None)
@click.option("--pool-size", "pool_size_per_domain", type=int, default=None)
@click.option("--fuzzy-threshold", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_file", type=click.Path(exists=True),
              default=None, help="JSON file mirroring the config fields.")
@click.option("--store", "store_path", type=click.Path(exists=True),
              default=None)
@click.option("--db", "db_dir", type=click.Path(exists=True, file_okay=False),
              default=None)
@click.option("--templates", default=None,
              help="Template set name or directory (default: dataset name).")
@click.option("--backend", default="replay", show_default=True,
              type=click.Choice(["replay", "http", "scripted-gold"]))
@click.option("--cassette", type=click.Path(), default=None)
@click.option("--record", type=click.Path(), default=None,
              help="Record every completion to this cassette file.")
@click.option("--base-url", default=None)
@click.option("--wire", default="completion", show_default=True,
              type=click.Choice(["completion", "chat"]))
@click.option("--model", default=None)
@click.option("--timeout", default=60.0, show_default=True)
@click.option("--split", default="test", show_default=True)
@click.option("--limit", type=int, default=None)
@click.option("--parallelism", default=os.cpu_count() or 1, show_default=False)
def run(corpus_dir: str, out: str, config_file: Optional[str],
        store_path: Optional[str], db_dir: Optional[str],
        templates: Optional[str], backend: str, cassette: Optional[str],
        record: Optional[str], base_url: Optional[str], wire: str,
        model: Optional[str], timeout: float, split: str,
        limit: Optional[int], parallelism: int, **config_flags) -> None:
    """Run the pipeline over a corpus split and write predictions."""
    corpus = _load_corpus(corpus_dir)
    config = _merge_config(config_file, **config_flags)
    db = _load_db(corpus_dir, db_dir, corpus)
    try:
        template_set = TemplateSet.load(templates or corpus.name)
    except Exception as exc:
        _fail(EXIT_INPUT_ERROR, f"cannot load templates: {exc}")

    store = None
    if config.few_shot:
        embedder = HashedTrigramEmbedder()
        if store_path:
            store = ContextStore.load(store_path, embedder)
        else:
            store = build_store(collect_snippets(
                corpus, config.context_window_utterances, split="train"),
                config.pool_size_per_domain, embedder, seed=config.seed)

    backend_obj = _make_backend(backend, cassette, record, base_url, wire,
                                model, corpus, split, timeout)
    pipeline = Pipeline(corpus, template_set, backend_obj, config, db=db,
                        store=store)
    try:
        artifact = run_corpus(pipeline, split=split, parallelism=parallelism,
                              limit=limit)
    except (TransportError, CassetteMissError) as exc:
        _fail(EXIT_BACKEND_ERROR, str(exc))

    artifact.manifest.update({
        "command": "run",
        "argv": sys.argv[1:],
        "corpus_hash": _file_sha256(Path(corpus_dir) / "corpus.jsonl"),
        "cassette_hash": _file_sha256(Path(cassette)) if cassette else None,
        "outputs": {"predictions": str(Path(out) / "predictions.jsonl")},
    })
    path = artifact.save(out)
    hard_failures = [f for f in artifact.manifest["failures"]]
    if hard_failures:
        click.echo(f"{len(hard_failures)} dialogue(s) failed "
                   f"(see manifest)", err=True)
        if any("cassette" in (f["error"] or "") or "fingerprint" in
               (f["error"] or "") for f in hard_failures):
            sys.exit(EXIT_BACKEND_ERROR)
    click.echo(f"variant {config.variant_label}: "
               f"{artifact.manifest['turns']} turns -> {path}")


@main.command()
@click.argument("predictions", type=click.Path(exists=True, dir_okay=False))
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--db", "db_dir", type=click.Path(exists=True, file_okay=False),
              default=None)
@click.option("--fuzzy-threshold", default=0.9, show_default=True)
@click.option("--lenient-jga", is_flag=True, default=False,
              help="Ignore extra predicted slots in the joint match.")
@click.option("--per-domain", is_flag=True, default=False)
@click.option("--figures", is_flag=True, default=False)
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=None)
@click.option("--expect", multiple=True,
              help="metric=value assertions for CI, e.g. --expect jga=1.0")
@click.option("--tolerance", default=1e-6, show_default=True)
def evaluate(predictions: str, corpus_dir: str, db_dir: Optional[str],
             fuzzy_threshold: float, lenient_jga: bool, per_domain: bool,
             figures: bool, out_dir: Optional[str], expect: tuple[str, ...],
             tolerance: float) -> None:
    """Score a prediction file against corpus gold annotations."""
    corpus = _load_corpus(corpus_dir)
    db = _load_db(corpus_dir, db_dir, corpus)
    try:
        records = load_predictions(predictions)
        report = evaluate_run(records, corpus, db=db,
                              threshold=fuzzy_threshold,
                              allow_extra_slots=lenient_jga)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(EXIT_INPUT_ERROR, f"cannot evaluate: {exc}")
    if not per_domain:
        report.per_domain = {}

    click.echo(render_table(report))
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        write_report_tsv(report, out / "report.tsv")
        if figures:
            for path in write_report_figures(report, out / "figures"):
                click.echo(f"figure -> {path}")

    mismatches = []
    for assertion in expect:
        if "=" not in assertion:
            _fail(EXIT_INPUT_ERROR, f"bad --expect {assertion!r}")
        name, _, raw = assertion.partition("=")
        actual = getattr(report, name.strip(), None)
        if actual is None:
            _fail(EXIT_INPUT_ERROR, f"unknown metric {name!r}")
        if abs(actual - float(raw)) > tolerance:
            mismatches.append(f"{name}: expected {raw}, got {actual:.6f}")
    if mismatches:
        for line in mismatches:
            click.echo(f"expectation failed: {line}", err=True)
        sys.exit(EXIT_EXPECT_MISMATCH)


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--pool-sizes", default="0,2,5,10,25,50,100", show_default=True)
@click.option("--k", "retrieval_k", type=int, default=None)
@click.option("--oracle-state", is_flag=True, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--backend", default="scripted-gold", show_default=True,
              type=click.Choice(["replay", "http", "scripted-gold"]))
@click.option("--cassette", type=click.Path(), default=None)
@click.option("--base-url", default=None)
@click.option("--wire", default="completion", show_default=True,
              type=click.Choice(["completion", "chat"]))
@click.option("--db", "db_dir", type=click.Path(exists=True, file_okay=False),
              default=None)
@click.option("--split", default="test", show_default=True)
@click.option("--store-split", default="train", show_default=True)
@click.option("--fuzzy-threshold", type=float, default=None)
def sweep(corpus_dir: str, out: str, pool_sizes: str, backend: str,
          cassette: Optional[str], base_url: Optional[str], wire: str,
          db_dir: Optional[str], split: str, store_split: str,
          **config_flags) -> None:
    """Pool-size sweep: rebuild the store per size, run, score, plot."""
    corpus = _load_corpus(corpus_dir)
    db = _load_db(corpus_dir, db_dir, corpus)
    try:
        sizes = [int(s) for s in pool_sizes.split(",") if s.strip() != ""]
    except ValueError:
        _fail(EXIT_INPUT_ERROR, f"bad --pool-sizes {pool_sizes!r}")
    template_set = TemplateSet.load(corpus.name)
    embedder = HashedTrigramEmbedder()
    snippets = collect_snippets(corpus, split=store_split)

    points = []
    for size in sizes:
        config = _merge_config(None, few_shot=size > 0,
                               pool_size_per_domain=max(size, 1),
                               **config_flags)
        if size > 0 and config.retrieval_k > size:
            config = config.replace(retrieval_k=size)
        store = (build_store(snippets, size, embedder, seed=config.seed)
                 if size > 0 else None)
        backend_obj = _make_backend(backend, cassette, None, base_url, wire,
                                    None, corpus, split, 60.0)
        pipeline = Pipeline(corpus, template_set, backend_obj, config, db=db,
                            store=store)
        try:
            artifact = run_corpus(pipeline, split=split)
            report = evaluate_run(artifact.predictions, corpus, db=db,
                                  threshold=config.fuzzy_threshold)
        except (TransportError, CassetteMissError) as exc:
            _fail(EXIT_BACKEND_ERROR, str(exc))
        points.append({"pool_size": size, "success": report.success,
                       "jga": report.jga, "slot_f1": report.slot_f1,
                       "bleu": report.bleu})
        click.echo(f"pool={size}: success={report.success:.3f} "
                   f"jga={report.jga:.3f}")
    for path in write_sweep_outputs(points, out):
        click.echo(f"-> {path}")
    manifest = {
        "command": "sweep", "argv": sys.argv[1:], "pool_sizes": sizes,
        "split": split, "store_split": store_split,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (Path(out) / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


@main.command()
@click.option("--corpus", "corpus_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--db", "db_dir", type=click.Path(exists=True, file_okay=False),
              default=None)
@click.option("--backend", default="replay", show_default=True,
              type=click.Choice(["replay", "http", "scripted-gold"]))
@click.option("--cassette", type=click.Path(exists=True), default=None)
@click.option("--base-url", default=None)
@click.option("--wire", default="completion", show_default=True,
              type=click.Choice(["completion", "chat"]))
@click.option("--store", "store_path", type=click.Path(exists=True),
              default=None)
@click.option("--few-shot", is_flag=True, default=False)
@click.option("--seed", default=0, show_default=True)
@click.option("--sessions-file", type=click.Path(), default="sessions.jsonl",
              show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False),
              default=None, help="Static directory with the built web UI.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
def serve(corpus_dir: str, db_dir: Optional[str], backend: str,
          cassette: Optional[str], base_url: Optional[str], wire: str,
          store_path: Optional[str], few_shot: bool, seed: int,
          sessions_file: str, ui_dir: Optional[str], host: str,
          port: int) -> None:
    """Serve live chat sessions and the annotation API."""
    import uvicorn

    from .service import build_app

    corpus = _load_corpus(corpus_dir)
    db = _load_db(corpus_dir, db_dir, corpus)
    config = PipelineConfig(few_shot=few_shot, seed=seed)
    store = None
    if few_shot:
        embedder = HashedTrigramEmbedder()
        store = (ContextStore.load(store_path, embedder) if store_path else
                 build_store(collect_snippets(corpus, split="train"),
                             config.pool_size_per_domain, embedder, seed))
    backend_obj = _make_backend(backend, cassette, None, base_url, wire, None,
                                corpus, None, 60.0)
    app = build_app(corpus=corpus, db=db, backend=backend_obj, config=config,
                    store=store, sessions_path=sessions_file, seed=seed,
                    ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
