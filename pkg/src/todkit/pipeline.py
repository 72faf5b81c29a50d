"""Per-turn orchestration: detect domain, retrieve, track state, query the
database and generate a delexicalized response.

In generated-state mode a turn issues three backend calls (domain, state,
response); oracle modes drop the corresponding call, so calls per turn equal
3 - oracle_domain - oracle_state. Dialogues are independent, which makes
corpus runs embarrassingly parallel and byte-deterministic given a replay
backend and fixed seeds.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .backends import (Backend, CassetteMissError, CompletionRequest,
                       CompletionResult, TransportError)
from .core import (BeliefState, DialogueHistory, PipelineConfig, StateUpdate,
                   Turn, apply_state_update)
from .database import Database, DbResult, external_result
from .ingest import Corpus, Dialogue
from .parsing import (extract_placeholders, parse_domain_output,
                      parse_state_output, sanitize_response)
from .prompts import (DOMAIN_DETECT, RESPONSE, STATE, RenderedPrompt,
                      TemplateSet, render_domain_prompt,
                      render_response_prompt, render_state_prompt)
from .store import ContextStore, StoredExample, UncorruptibleExampleError, \
    make_context_key

DOMAIN_MAX_TOKENS = 16
STATE_MAX_TOKENS = 160
RESPONSE_MAX_TOKENS = 256


@dataclass
class TurnRecord:
    """Complete audit of one pipeline turn."""

    dialogue_id: str
    turn_index: int
    utterance: str
    detected_domain: str = ""
    prompts: dict[str, RenderedPrompt] = field(default_factory=dict)
    completions: dict[str, CompletionResult] = field(default_factory=dict)
    parsed_update: Optional[StateUpdate] = None
    belief: BeliefState = field(default_factory=BeliefState)
    db_result: Optional[DbResult] = None
    response_raw: str = ""
    response_delex: str = ""
    placeholders: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    error: Optional[str] = None

    @property
    def backend_calls(self) -> int:
        return len(self.completions)

    @property
    def latencies(self) -> dict[str, float]:
        return {kind: c.latency for kind, c in self.completions.items()}

    def prediction(self) -> dict:
        """The per-turn record written to prediction files."""
        return {
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "detected_domain": self.detected_domain,
            "update": self.parsed_update.to_dict() if self.parsed_update else None,
            "belief": self.belief.to_dict(),
            "db_count": self.db_result.count if self.db_result else 0,
            "response_delex": self.response_delex,
            "warnings": sorted(set(self.warnings)),
            "error": self.error,
        }

    def transcript(self, include_prompts: bool = False) -> dict:
        record = self.prediction()
        record["response_raw"] = self.response_raw
        record["placeholders"] = list(self.placeholders)
        record["backend_calls"] = self.backend_calls
        record["latencies"] = self.latencies
        if include_prompts:
            record["prompts"] = {k: p.text for k, p in self.prompts.items()}
            record["completions"] = {k: c.text
                                     for k, c in self.completions.items()}
            record["provenance"] = {k: list(p.provenance)
                                    for k, p in self.prompts.items()}
        return record


@dataclass
class SessionState:
    """Mutable per-conversation state, confined to a single worker."""

    config: PipelineConfig
    history: DialogueHistory = field(default_factory=DialogueHistory)
    belief: BeliefState = field(default_factory=BeliefState)
    active_domain: Optional[str] = None
    turn_records: list[TurnRecord] = field(default_factory=list)


def _corruption_seed(base_seed: int, dialogue_id: str, turn_index: int,
                     example_id: str) -> int:
    digest = hashlib.sha256(
        f"{base_seed}|{dialogue_id}|{turn_index}|{example_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class Pipeline:
    """Shared, read-only pipeline context (schemas, templates, db, store)."""

    def __init__(self, corpus: Corpus, templates: TemplateSet,
                 backend: Backend, config: PipelineConfig,
                 db: Optional[Database] = None,
                 store: Optional[ContextStore] = None) -> None:
        if config.few_shot and store is None:
            raise ValueError("few-shot mode needs a context store")
        self.corpus = corpus
        self.templates = templates
        self.backend = backend
        self.config = config
        self.db = db
        self.store = store
        self.domains = corpus.domain_names

    def _complete(self, record: TurnRecord, kind: str, prompt: RenderedPrompt,
                  max_tokens: int, stop: tuple[str, ...] = ()) -> str:
        request = CompletionRequest(prompt=prompt.text, max_tokens=max_tokens,
                                    temperature=0.0, stop_sequences=stop,
                                    tag=kind)
        result = self.backend.complete(request)
        record.prompts[kind] = prompt
        record.completions[kind] = result
        return result.text

    def _retrieve_examples(self, session: SessionState, record: TurnRecord,
                           domain: str, utterance: str,
                           ) -> tuple[list[StoredExample], list[StoredExample]]:
        config = self.config
        key = make_context_key(session.history, utterance,
                               config.context_window_utterances)
        positives = self.store.retrieve(key, domain, config.retrieval_k)
        negatives: list[StoredExample] = []
        schema = self.corpus.schema(domain)
        for example in positives:
            for n in range(config.negatives_per_example):
                seed = _corruption_seed(config.seed, record.dialogue_id,
                                        record.turn_index,
                                        f"{example.id}#{n}")
                try:
                    negatives.append(
                        self.store.make_negative(example, schema, seed))
                except UncorruptibleExampleError:
                    record.warnings += ("uncorruptible-example-skipped",)
        return positives, negatives

    def run_turn(self, session: SessionState, utterance: str,
                 gold: Optional[Turn] = None,
                 dialogue_id: str = "live", turn_index: Optional[int] = None,
                 ) -> TurnRecord:
        """One full pipeline turn. The session is only mutated on success, so
        a backend failure leaves belief and history untouched."""
        config = self.config
        index = turn_index if turn_index is not None else len(session.turn_records)
        record = TurnRecord(dialogue_id=dialogue_id, turn_index=index,
                            utterance=utterance)
        warnings: list[str] = []

        try:
            # 1. Active domain.
            if config.oracle_domain:
                if gold is None or not gold.gold_domain:
                    raise ValueError(
                        "oracle_domain requires a gold domain annotation")
                domain = gold.gold_domain
            else:
                prompt = render_domain_prompt(
                    self.templates.resolve(DOMAIN_DETECT, "global"),
                    session.history, utterance, self.domains,
                    config.prompt_history_window)
                text = self._complete(record, DOMAIN_DETECT, prompt,
                                      DOMAIN_MAX_TOKENS, stop=("\n",))
                outcome = parse_domain_output(text, self.domains,
                                              previous=session.active_domain)
                warnings.extend(outcome.warnings)
                domain = outcome.value
            record.detected_domain = domain
            schema = self.corpus.schema(domain)

            # 2. Retrieval (few-shot only).
            positives: list[StoredExample] = []
            negatives: list[StoredExample] = []
            if config.few_shot:
                positives, negatives = self._retrieve_examples(
                    session, record, domain, utterance)

            # 3. Belief state.
            if config.oracle_state:
                if gold is None or gold.gold_state is None:
                    raise ValueError(
                        "oracle_state requires a gold state annotation")
                belief = BeliefState.from_dict(gold.gold_state.to_dict())
                update = gold.gold_update or StateUpdate(domain, {})
            else:
                prompt = render_state_prompt(
                    self.templates.resolve(STATE, domain), schema,
                    session.history, utterance, positives, negatives,
                    zero_shot=not config.few_shot,
                    history_window=config.prompt_history_window)
                text = self._complete(record, STATE, prompt, STATE_MAX_TOKENS)
                outcome = parse_state_output(text, schema,
                                             config.fuzzy_threshold)
                warnings.extend(outcome.warnings)
                update = outcome.value
                belief = apply_state_update(session.belief, update,
                                            known_domains=self.domains)
            record.parsed_update = update
            record.belief = belief

            # 4. Database.
            if gold is not None and gold.external_db is not None:
                db_result = external_result(gold.external_db, domain)
            elif self.db is not None and domain in self.db.domains:
                db_result = self.db.query(domain, belief)
            elif gold is not None and self.corpus.name == "sgd":
                db_result = external_result(None, domain)
            else:
                db_result = DbResult(domain=domain, count=0)
            warnings.extend(db_result.warnings)
            record.db_result = db_result

            # 5. Response.
            prompt = render_response_prompt(
                self.templates.resolve(RESPONSE, domain), schema,
                session.history, utterance, belief.pairs(domain),
                db_result.count, positives, zero_shot=not config.few_shot,
                history_window=config.prompt_history_window)
            text = self._complete(record, RESPONSE, prompt,
                                  RESPONSE_MAX_TOKENS)
            record.response_raw = text
            outcome = sanitize_response(text)
            warnings.extend(outcome.warnings)
            record.response_delex = outcome.value
            record.placeholders = tuple(extract_placeholders(outcome.value))
        except (TransportError, CassetteMissError) as exc:
            record.error = str(exc)
            record.warnings = tuple(warnings)
            return record

        record.warnings = tuple(warnings)

        # Commit the turn.
        session.belief = record.belief
        session.active_domain = record.detected_domain
        session.history.add_user(utterance)
        if config.gold_history and gold is not None and gold.system_response:
            session.history.add_system(gold.system_response)
        else:
            session.history.add_system(record.response_delex)
        session.turn_records.append(record)
        return record

    def run_dialogue(self, dialogue: Dialogue) -> list[TurnRecord]:
        session = SessionState(config=self.config)
        records: list[TurnRecord] = []
        for index, turn in enumerate(dialogue.turns):
            record = self.run_turn(session, turn.user_utterance, gold=turn,
                                   dialogue_id=dialogue.id, turn_index=index)
            records.append(record)
            if record.error is not None:
                break
        return records


@dataclass
class RunArtifact:
    predictions: list[dict]
    manifest: dict
    records: list[TurnRecord] = field(default_factory=list)

    def prediction_bytes(self) -> bytes:
        lines = [json.dumps(p, sort_keys=True, ensure_ascii=False)
                 for p in self.predictions]
        return ("\n".join(lines) + "\n").encode("utf-8")

    def save(self, out_dir: Union[str, Path]) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "predictions.jsonl").write_bytes(self.prediction_bytes())
        (out / "manifest.json").write_text(
            json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        return out / "predictions.jsonl"


def run_corpus(pipeline: Pipeline, split: Optional[str] = None,
               parallelism: int = 1, limit: Optional[int] = None,
               manifest_extra: Optional[Mapping] = None) -> RunArtifact:
    """Run every dialogue of a corpus split; dialogues are independent, so
    any parallelism yields the same prediction bytes."""
    dialogues = pipeline.corpus.select(split, limit)
    results: dict[str, list[TurnRecord]] = {}
    if parallelism <= 1:
        for dialogue in dialogues:
            results[dialogue.id] = pipeline.run_dialogue(dialogue)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = {pool.submit(pipeline.run_dialogue, d): d.id
                       for d in dialogues}
            for future, dialogue_id in futures.items():
                results[dialogue_id] = future.result()

    ordered = [record for dialogue_id in sorted(results)
               for record in results[dialogue_id]]
    failures = [{"dialogue_id": r.dialogue_id, "turn_index": r.turn_index,
                 "error": r.error} for r in ordered if r.error]
    import time as _time
    manifest = {
        "dataset": pipeline.corpus.name,
        "variant": pipeline.config.variant_label,
        "config": pipeline.config.to_dict(),
        "backend_id": pipeline.backend.backend_id,
        "split": split or "all",
        "dialogues": len(dialogues),
        "turns": len(ordered),
        "failures": failures,
        "template_hashes": pipeline.templates.fingerprint(),
        "store_fingerprint": (pipeline.store.fingerprint()
                              if pipeline.store else None),
        "db_fingerprint": pipeline.db.fingerprint() if pipeline.db else None,
        "timestamp": _time.strftime("%Y-%m-%dT%H:%M:%SZ", _time.gmtime()),
    }
    manifest.update(dict(manifest_extra or {}))
    return RunArtifact(predictions=[r.prediction() for r in ordered],
                       manifest=manifest, records=ordered)
