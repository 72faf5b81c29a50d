"""HTTP service for live chat sessions and the human-evaluation protocol.

Annotators get a goal sampled from the corpus, converse with the pipeline,
and answer the three end-of-dialogue questions. Sessions and annotations
live in a single append-only record file so a restart loses nothing and the
export can always be recomputed from raw records.
"""

from __future__ import annotations

import itertools
import json
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from time import time
from typing import Mapping, Optional, Union

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import Backend, CassetteMissError, TransportError
from .core import BeliefState, DialogueHistory, PipelineConfig
from .database import Database, booking_reference, lexicalize
from .ingest import Corpus, GoalSpec
from .metrics import AnnotationRecord, aggregate_annotations
from .pipeline import Pipeline, SessionState, TurnRecord
from .prompts import TemplateSet
from .reporting import render_annotation_table
from .store import ContextStore


class SessionCreateBody(BaseModel):
    goal_id: Optional[str] = None
    config: dict = Field(default_factory=dict)


class MessageBody(BaseModel):
    text: str


class AnnotationBody(BaseModel):
    q1_domain_flags: dict[str, bool]
    q2_clarifications: int = 0
    q3_all_captured: bool = False
    note: str = ""


@dataclass
class Session:
    id: str
    goal_id: str
    goal: GoalSpec
    state: SessionState
    pipeline: Pipeline
    annotation: Optional[AnnotationRecord] = None
    created: float = field(default_factory=time)
    updated: float = field(default_factory=time)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionLog:
    """Append-only single-file persistence for sessions and annotations."""

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: Mapping) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True,
                                    ensure_ascii=False) + "\n")

    def replay(self) -> list[dict]:
        if not self.path.exists():
            return []
        events = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    events.append(json.loads(line))
        return events


def build_app(corpus: Corpus, backend: Backend, config: PipelineConfig,
              db: Optional[Database] = None,
              store: Optional[ContextStore] = None,
              templates: Optional[TemplateSet] = None,
              sessions_path: Union[str, Path] = "sessions.jsonl",
              seed: int = 0, ui_dir: Optional[Union[str, Path]] = None,
              ) -> FastAPI:
    app = FastAPI(title="todkit annotation service", version="1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    template_set = templates or TemplateSet.load(corpus.name)
    base_pipeline = Pipeline(corpus, template_set, backend, config, db=db,
                             store=store)
    log = SessionLog(sessions_path)
    sessions: dict[str, Session] = {}
    goal_pool = [d for d in corpus.dialogues if d.goal is not None]
    goal_rng = random.Random(seed)
    counter = itertools.count(1)
    registry_lock = threading.Lock()

    def _pipeline_for(overrides: Mapping) -> Pipeline:
        if not overrides:
            return base_pipeline
        merged = config.replace(**{k: v for k, v in overrides.items()})
        return Pipeline(corpus, template_set, backend, merged, db=db,
                        store=store if merged.few_shot else None)

    def _restore() -> None:
        for event in log.replay():
            kind = event.get("event")
            if kind == "session":
                goal = GoalSpec.from_dict(event["goal"])
                session = Session(
                    id=event["session_id"], goal_id=event["goal_id"],
                    goal=goal, state=SessionState(config=config),
                    pipeline=base_pipeline, created=event.get("created", 0))
                sessions[session.id] = session
            elif kind == "turn" and event.get("session_id") in sessions:
                session = sessions[event["session_id"]]
                record = event["record"]
                session.state.history.add_user(record["utterance"])
                session.state.history.add_system(record["response_delex"])
                session.state.belief = BeliefState.from_dict(record["belief"])
                session.state.active_domain = record["detected_domain"]
                restored = TurnRecord(
                    dialogue_id=event["session_id"],
                    turn_index=record["turn_index"],
                    utterance=record["utterance"],
                    detected_domain=record["detected_domain"],
                    belief=session.state.belief,
                    response_delex=record["response_delex"],
                    warnings=tuple(record.get("warnings", ())))
                session.state.turn_records.append(restored)
            elif kind == "annotation" and event.get("session_id") in sessions:
                sessions[event["session_id"]].annotation = \
                    AnnotationRecord.from_dict(event["record"])
        if sessions:
            highest = max(int(s.split("-")[1]) for s in sessions)
            nonlocal counter
            counter = itertools.count(highest + 1)

    _restore()

    def _get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id!r}")
        return session

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "dataset": corpus.name,
                "sessions": len(sessions),
                "goals_available": len(goal_pool)}

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: SessionCreateBody) -> dict:
        if not goal_pool:
            raise HTTPException(status_code=503,
                                detail="no corpus goals loaded")
        with registry_lock:
            if body.goal_id:
                matching = [d for d in goal_pool if d.id == body.goal_id]
                if not matching:
                    raise HTTPException(status_code=404,
                                        detail=f"no goal {body.goal_id!r}")
                dialogue = matching[0]
            else:
                dialogue = goal_rng.choice(goal_pool)
            try:
                pipeline = _pipeline_for(body.config)
            except (TypeError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            session = Session(
                id=f"s-{next(counter):06d}", goal_id=dialogue.id,
                goal=dialogue.goal,
                state=SessionState(config=pipeline.config),
                pipeline=pipeline)
            sessions[session.id] = session
        log.append({"event": "session", "session_id": session.id,
                    "goal_id": session.goal_id,
                    "goal": session.goal.to_dict(),
                    "created": session.created})
        return {"session_id": session.id, "goal_id": session.goal_id,
                "goal": session.goal.to_dict()}

    @app.post("/v1/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody) -> dict:
        session = _get_session(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=422, detail="empty message")
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail="a message is already in flight")
        try:
            try:
                record = session.pipeline.run_turn(
                    session.state, body.text, gold=None,
                    dialogue_id=session.id)
            except (TransportError, CassetteMissError) as exc:
                raise HTTPException(status_code=502, detail=str(exc))
            if record.error is not None:
                raise HTTPException(status_code=502, detail=record.error)
        finally:
            session.lock.release()
        session.updated = time()

        entity = None
        if record.db_result and record.db_result.entities:
            entity = record.db_result.entities[0]
        extras = {
            "choice": str(record.db_result.count if record.db_result else 0),
            "reference": booking_reference(session.id, record.detected_domain),
        }
        lexicalized = lexicalize(record.response_delex, entity, extras)
        log.append({"event": "turn", "session_id": session.id,
                    "record": record.transcript(include_prompts=True)})
        return {
            "turn_index": record.turn_index,
            "response_lexicalized": lexicalized.text,
            "response_delex": record.response_delex,
            "belief": record.belief.to_dict(),
            "detected_domain": record.detected_domain,
            "db_count": record.db_result.count if record.db_result else 0,
            "warnings": sorted(set(record.warnings)),
            "unresolved_placeholders": list(lexicalized.unresolved),
        }

    @app.post("/v1/sessions/{session_id}/annotation")
    def post_annotation(session_id: str, body: AnnotationBody,
                        overwrite: bool = Query(default=False)) -> dict:
        session = _get_session(session_id)
        if session.annotation is not None and not overwrite:
            raise HTTPException(status_code=409,
                                detail="session already annotated")
        try:
            record = AnnotationRecord(
                session_id=session.id,
                goal_domains=session.goal.domains,
                q1_domain_flags=body.q1_domain_flags,
                q2_clarifications=body.q2_clarifications,
                q3_all_captured=body.q3_all_captured,
                note=body.note)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session.annotation = record
        log.append({"event": "annotation", "session_id": session.id,
                    "record": record.to_dict()})
        return {"stored": True, "session_id": session.id}

    @app.get("/v1/sessions/{session_id}/transcript")
    def transcript(session_id: str,
                   debug: bool = Query(default=False)) -> dict:
        session = _get_session(session_id)
        return {
            "session_id": session.id,
            "goal_id": session.goal_id,
            "goal": session.goal.to_dict(),
            "belief": session.state.belief.to_dict(),
            "annotated": session.annotation is not None,
            "turns": [r.transcript(include_prompts=debug)
                      for r in session.state.turn_records],
        }

    @app.get("/v1/annotations/export")
    def export() -> JSONResponse:
        records = [s.annotation for s in sessions.values()
                   if s.annotation is not None]
        records.sort(key=lambda r: r.session_id)
        aggregate = aggregate_annotations(records)
        return JSONResponse({
            "records": [r.to_dict() for r in records],
            "aggregate": aggregate,
            "table": render_annotation_table(aggregate),
        })

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

    return app
