"""Offline scripted backends and cassette building.

A QueueBackend answers each call kind from a pre-planned FIFO, which lets a
corpus with gold annotations stand in for a cooperative model: running the
pipeline once over it while recording produces a replay cassette that makes
every later run hermetic and bit-deterministic.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

from .backends import CompletionRequest, CompletionResult, RecordingBackend
from .core import PipelineConfig
from .database import Database
from .ingest import Corpus
from .parsing import format_pairs
from .pipeline import Pipeline, run_corpus
from .prompts import TemplateSet
from .store import ContextStore


class QueueExhaustedError(RuntimeError):
    pass


class QueueBackend:
    """Pops pre-planned completions per request tag, in call order."""

    def __init__(self, answers: dict[str, list[str]],
                 backend_id: str = "scripted") -> None:
        self._queues = {tag: list(items) for tag, items in answers.items()}
        self.backend_id = backend_id

    def complete(self, request: CompletionRequest) -> CompletionResult:
        queue = self._queues.get(request.tag)
        if not queue:
            raise QueueExhaustedError(
                f"no scripted answer left for tag {request.tag!r}")
        return CompletionResult(text=queue.pop(0), backend_id=self.backend_id)


def gold_answer_queues(corpus: Corpus, split: Optional[str] = None) -> dict:
    """Per-tag answer queues replaying a corpus's gold annotations."""
    answers: dict[str, list[str]] = {"domain_detect": [], "state": [],
                                     "response": []}
    for dialogue in corpus.select(split):
        for turn in dialogue.turns:
            answers["domain_detect"].append(turn.gold_domain or "")
            pairs = turn.gold_update.pairs if turn.gold_update else {}
            answers["state"].append(format_pairs(pairs))
            answers["response"].append(turn.system_response_delex or "")
    return answers


def record_gold_cassette(corpus: Corpus, templates: TemplateSet,
                         cassette_path: Union[str, Path],
                         configs: list[PipelineConfig],
                         db: Optional[Database] = None,
                         store: Optional[ContextStore] = None,
                         split: Optional[str] = None) -> Path:
    """Record one cassette covering several variant configs.

    Each config is run sequentially against a fresh gold-scripted backend;
    all exchanges append to the same cassette file, keyed by fingerprint.
    """
    cassette_path = Path(cassette_path)
    if cassette_path.exists():
        cassette_path.unlink()
    for config in configs:
        backend = RecordingBackend(
            QueueBackend(gold_answer_queues(corpus, split),
                         backend_id="scripted-gold"),
            cassette_path)
        pipeline = Pipeline(corpus, templates, backend, config, db=db,
                            store=store if config.few_shot else None)
        run_corpus(pipeline, split=split, parallelism=1)
    return cassette_path
