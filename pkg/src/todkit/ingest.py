"""Corpus ingestion: MultiWOZ-2.2- and SGD-shaped directories into one model.

Expected layouts (small hand-authored fixtures in the same formats ship with
the tests; the real datasets are user-supplied):

MultiWOZ 2.2 directory:
    schema.json            list of services; slot names carry the
                           "<domain>-" prefix, categorical slots list their
                           possible_values
    goals.json             dialogue_id -> {"<domain>": {"info": {...},
                           "reqt": [...], "book": {...}}, "message": ...}
    db/<domain>_db.json    entity arrays
    <split>/dialogues_*.json   turns with per-frame states and span
                           annotations ("slot", "start", "exclusive_end")

SGD directory:
    <split>/schema.json and <split>/dialogues_*.json. Service names are
    collapsed to their family ("Restaurants_1" -> "restaurants") and family
    schemas merged. System frames contribute per-turn service_results.

Loading is deterministic: dialogues are sorted by id, and gold values are
canonicalized against the schema so downstream comparisons are stable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core import (BeliefState, DialogueHistory, DomainSchema, SlotSpec,
                   StateUpdate, Turn, canonicalize_value, diff_states)
from .database import Database
from .store import Snippet, make_context_key


class CorpusFormatError(ValueError):
    """A dialogue file does not follow the expected dataset layout."""


@dataclass(frozen=True)
class GoalSpec:
    constraints: Mapping[str, Mapping[str, str]]
    requested: Mapping[str, tuple[str, ...]]
    message: str = ""

    def __post_init__(self) -> None:
        if not self.constraints and not self.requested:
            raise ValueError("goal must cover at least one domain")

    @property
    def domains(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.constraints) | set(self.requested)))

    def to_dict(self) -> dict:
        return {"constraints": {d: dict(p) for d, p in self.constraints.items()},
                "requested": {d: list(r) for d, r in self.requested.items()},
                "message": self.message}

    @classmethod
    def from_dict(cls, data: Mapping) -> "GoalSpec":
        return cls(constraints={d: dict(p)
                                for d, p in data.get("constraints", {}).items()},
                   requested={d: tuple(r)
                              for d, r in data.get("requested", {}).items()},
                   message=data.get("message", ""))


@dataclass
class Dialogue:
    id: str
    split: str
    domains: tuple[str, ...]
    turns: list[Turn]
    goal: Optional[GoalSpec] = None

    @property
    def multi_domain(self) -> bool:
        return len(self.domains) > 1


@dataclass
class Corpus:
    name: str
    dialogues: list[Dialogue]
    schemas: dict[str, DomainSchema]
    load_warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.dialogues.sort(key=lambda d: d.id)

    @property
    def domain_names(self) -> list[str]:
        return list(self.schemas)

    def schema(self, domain: str) -> DomainSchema:
        return self.schemas[domain.lower()]

    def select(self, split: Optional[str] = None,
               limit: Optional[int] = None) -> list[Dialogue]:
        picked = [d for d in self.dialogues
                  if split in (None, "all") or d.split == split]
        return picked[:limit] if limit else picked

    # -- unified serialization ------------------------------------------------

    def save(self, out_dir: Union[str, Path]) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        schemas = [_schema_to_dict(s) for s in self.schemas.values()]
        (out / "schemas.json").write_text(
            json.dumps({"dataset": self.name, "schemas": schemas},
                       indent=2, sort_keys=True) + "\n")
        with (out / "corpus.jsonl").open("w", encoding="utf-8") as fh:
            for dialogue in self.dialogues:
                fh.write(json.dumps(_dialogue_to_dict(dialogue),
                                    sort_keys=True, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "Corpus":
        directory = Path(directory)
        meta = json.loads((directory / "schemas.json").read_text())
        schemas = {s["name"]: _schema_from_dict(s) for s in meta["schemas"]}
        dialogues = []
        with (directory / "corpus.jsonl").open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    dialogues.append(_dialogue_from_dict(json.loads(line)))
        return cls(name=meta["dataset"], dialogues=dialogues, schemas=schemas)


def _schema_to_dict(schema: DomainSchema) -> dict:
    return {
        "name": schema.name,
        "description": schema.description,
        "db_excluded_slots": list(schema.db_excluded_slots),
        "slots": [{"name": s.name, "description": s.description,
                   "values": list(s.values), "informable": s.informable,
                   "requestable": s.requestable} for s in schema.slots],
    }


def _schema_from_dict(data: Mapping) -> DomainSchema:
    return DomainSchema(
        name=data["name"],
        description=data.get("description", ""),
        db_excluded_slots=tuple(data.get("db_excluded_slots", ())),
        slots=tuple(SlotSpec(name=s["name"], description=s.get("description", ""),
                             values=tuple(s.get("values", ())),
                             informable=s.get("informable", True),
                             requestable=s.get("requestable", False))
                    for s in data.get("slots", ())),
    )


def _dialogue_to_dict(dialogue: Dialogue) -> dict:
    return {
        "id": dialogue.id,
        "split": dialogue.split,
        "domains": list(dialogue.domains),
        "goal": dialogue.goal.to_dict() if dialogue.goal else None,
        "turns": [{
            "user_utterance": t.user_utterance,
            "system_response": t.system_response,
            "system_response_delex": t.system_response_delex,
            "gold_state": t.gold_state.to_dict() if t.gold_state else None,
            "gold_domain": t.gold_domain,
            "gold_update": t.gold_update.to_dict() if t.gold_update else None,
            "requested_slots": list(t.requested_slots),
            "external_db": t.external_db,
        } for t in dialogue.turns],
    }


def _dialogue_from_dict(data: Mapping) -> Dialogue:
    turns = []
    for t in data["turns"]:
        turns.append(Turn(
            user_utterance=t["user_utterance"],
            system_response=t.get("system_response"),
            system_response_delex=t.get("system_response_delex"),
            gold_state=(BeliefState.from_dict(t["gold_state"])
                        if t.get("gold_state") is not None else None),
            gold_domain=t.get("gold_domain"),
            gold_update=(StateUpdate.from_dict(t["gold_update"])
                         if t.get("gold_update") else None),
            requested_slots=tuple(t.get("requested_slots", ())),
            external_db=t.get("external_db"),
        ))
    goal = GoalSpec.from_dict(data["goal"]) if data.get("goal") else None
    return Dialogue(id=data["id"], split=data.get("split", "train"),
                    domains=tuple(data.get("domains", ())), turns=turns,
                    goal=goal)


# -- MultiWOZ 2.2 -------------------------------------------------------------

_SPLITS = ("train", "dev", "test")


def _strip_domain_prefix(slot: str, domain: str) -> str:
    slot = slot.lower()
    if slot.startswith(domain + "-"):
        slot = slot[len(domain) + 1:]
    return slot.replace(" ", "")


def load_multiwoz_schemas(schema_file: Path) -> dict[str, DomainSchema]:
    schemas: dict[str, DomainSchema] = {}
    for service in json.loads(schema_file.read_text()):
        domain = service["service_name"].lower()
        slots = []
        for slot in service.get("slots", ()):
            name = _strip_domain_prefix(slot["name"], domain)
            values = tuple(str(v).lower() for v in slot.get("possible_values", ())
                           ) if slot.get("is_categorical") else ()
            slots.append(SlotSpec(
                name=name,
                description=slot.get("description", ""),
                values=values,
                informable=slot.get("informable", True),
                requestable=slot.get("requestable", not name.startswith("book")),
            ))
        excluded = tuple(s.name for s in slots if s.name.startswith("book"))
        # Time-window slots constrain by comparison, not equality; they never
        # filter the entity table.
        excluded += tuple(s.name for s in slots
                          if s.name in ("leaveat", "arriveby"))
        schemas[domain] = DomainSchema(
            name=domain,
            description=service.get("description", ""),
            slots=tuple(slots),
            db_excluded_slots=excluded,
        )
    return schemas


def _frame_state(frame: Mapping, domain: str,
                 schema: Optional[DomainSchema],
                 warnings: list[str], dialogue_id: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    slot_values = (frame.get("state") or {}).get("slot_values") or {}
    for raw_name, values in slot_values.items():
        name = _strip_domain_prefix(raw_name, domain)
        if schema is not None and schema.slot(name) is None:
            warnings.append(
                f"{dialogue_id}: unknown slot {raw_name!r} skipped")
            continue
        if not values:
            continue
        value = values[0] if isinstance(values, (list, tuple)) else values
        spec = schema.slot(name) if schema is not None else None
        canonical = canonicalize_value(str(value), spec)
        if canonical:
            pairs[name] = canonical
    return pairs


def _active_domain(candidates: Sequence[str], changed: Sequence[str],
                   previous: Optional[str]) -> Optional[str]:
    """Frames vote for the active domain; a state change breaks ties."""
    if len(candidates) == 1:
        return candidates[0]
    for domain in candidates:
        if domain in changed:
            return domain
    if previous in candidates:
        return previous
    if candidates:
        return candidates[0]
    if changed:
        return changed[0]
    return previous


def _apply_spans(utterance: str, spans: Sequence[Mapping]) -> str:
    """Replace annotated character spans with [slot] placeholders."""
    delex = utterance
    ordered = sorted((s for s in spans
                      if "start" in s and "exclusive_end" in s),
                     key=lambda s: -int(s["start"]))
    for span in ordered:
        start, end = int(span["start"]), int(span["exclusive_end"])
        name = str(span["slot"]).lower().replace("-", "_").replace(" ", "")
        delex = delex[:start] + f"[{name}]" + delex[end:]
    return delex


def fallback_delexicalize(text: str, domain: str, entity) -> str:
    """Span-free delexicalization: replace the matched entity's attribute
    values with [domain_attribute] placeholders, longest value first."""
    if entity is None:
        return text
    delex = text
    for attr, value in sorted(entity.attributes.items(),
                              key=lambda kv: -len(kv[1])):
        if not value:
            continue
        pattern = re.compile(r"\b" + re.escape(value) + r"\b", re.IGNORECASE)
        delex = pattern.sub(f"[{domain}_{attr}]", delex)
    return delex


def _load_goal(record: Mapping, schemas: Mapping[str, DomainSchema]) -> Optional[GoalSpec]:
    constraints: dict[str, dict[str, str]] = {}
    requested: dict[str, tuple[str, ...]] = {}
    message = record.get("message", "")
    if isinstance(message, list):
        message = " ".join(message)
    for domain, section in record.items():
        if domain == "message" or not isinstance(section, Mapping):
            continue
        domain = domain.lower()
        schema = schemas.get(domain)
        info = {}
        for slot, value in (section.get("info") or {}).items():
            name = _strip_domain_prefix(slot, domain)
            spec = schema.slot(name) if schema else None
            info[name] = canonicalize_value(str(value), spec)
        reqt = tuple(_strip_domain_prefix(s, domain)
                     for s in (section.get("reqt") or ()))
        if section.get("book"):
            reqt += ("reference",)
        if info:
            constraints[domain] = info
        if reqt:
            requested[domain] = reqt
    if not constraints and not requested:
        return None
    return GoalSpec(constraints=constraints, requested=requested,
                    message=str(message))


def load_multiwoz(path: Union[str, Path]) -> Corpus:
    """Parse a MultiWOZ 2.2 directory into the unified corpus model."""
    path = Path(path)
    schema_file = path / "schema.json"
    if not schema_file.exists():
        raise CorpusFormatError(f"missing schema.json under {path}")
    schemas = load_multiwoz_schemas(schema_file)
    warnings: list[str] = []

    goals: dict[str, GoalSpec] = {}
    goals_file = path / "goals.json"
    if goals_file.exists():
        for dialogue_id, record in json.loads(goals_file.read_text()).items():
            goal = _load_goal(record, schemas)
            if goal is not None:
                goals[dialogue_id] = goal

    db: Optional[Database] = None
    if (path / "db").is_dir():
        db = Database.load(path / "db", schemas=schemas)

    dialogues: list[Dialogue] = []
    for split in _SPLITS:
        split_dir = path / split
        if not split_dir.is_dir():
            continue
        for file in sorted(split_dir.glob("dialogues_*.json")):
            for record in json.loads(file.read_text()):
                dialogues.append(_parse_multiwoz_dialogue(
                    record, split, schemas, goals, db, warnings))
    if not dialogues:
        raise CorpusFormatError(f"no dialogue files found under {path}")
    corpus = Corpus(name="multiwoz", dialogues=dialogues, schemas=schemas,
                    load_warnings=warnings)
    derive_gold_updates(corpus)
    return corpus


def _parse_multiwoz_dialogue(record: Mapping, split: str,
                             schemas: Mapping[str, DomainSchema],
                             goals: Mapping[str, GoalSpec],
                             db: Optional[Database],
                             warnings: list[str]) -> Dialogue:
    try:
        dialogue_id = record["dialogue_id"]
        services = tuple(s.lower() for s in record.get("services", ()))
        raw_turns = record["turns"]
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(
            f"dialogue record missing field {exc} "
            f"(id={record.get('dialogue_id', '?')!r})") from exc

    turns: list[Turn] = []
    prev_states: dict[str, dict[str, str]] = {}
    prev_domain: Optional[str] = None
    i = 0
    while i < len(raw_turns):
        turn = raw_turns[i]
        if turn.get("speaker", "").upper() != "USER":
            raise CorpusFormatError(
                f"{dialogue_id}: expected USER turn at index {i}")
        utterance = turn.get("utterance", "")
        if not utterance:
            raise CorpusFormatError(f"{dialogue_id}: empty user utterance")

        states: dict[str, dict[str, str]] = {}
        candidates: list[str] = []
        for frame in turn.get("frames", ()):
            domain = str(frame.get("service", "")).lower()
            if not domain:
                continue
            schema = schemas.get(domain)
            if schema is None:
                warnings.append(f"{dialogue_id}: unknown service {domain!r}")
                continue
            pairs = _frame_state(frame, domain, schema, warnings, dialogue_id)
            if pairs:
                states[domain] = pairs
            intent = (frame.get("state") or {}).get("active_intent", "NONE")
            if intent and intent != "NONE":
                candidates.append(domain)
        changed = [d for d, p in states.items() if p != prev_states.get(d, {})]
        active = _active_domain(candidates, changed, prev_domain) or \
            (services[0] if services else None)

        requested: tuple[str, ...] = ()
        for frame in turn.get("frames", ()):
            if str(frame.get("service", "")).lower() == active:
                requested = tuple(
                    _strip_domain_prefix(s, active)
                    for s in (frame.get("state") or {}).get("requested_slots", ()))

        system_response = None
        system_delex = None
        if i + 1 < len(raw_turns) and \
                raw_turns[i + 1].get("speaker", "").upper() == "SYSTEM":
            sys_turn = raw_turns[i + 1]
            system_response = sys_turn.get("utterance", "")
            spans = [s for frame in sys_turn.get("frames", ())
                     for s in frame.get("slots", ())]
            if spans:
                system_delex = _apply_spans(system_response, spans)
            elif db is not None and active in db.domains:
                result = db.query(active, BeliefState.from_dict(states))
                entity = result.entities[0] if result.entities else None
                system_delex = fallback_delexicalize(system_response, active,
                                                     entity)
            else:
                system_delex = system_response
            i += 2
        else:
            i += 1

        turns.append(Turn(
            user_utterance=utterance,
            system_response=system_response,
            system_response_delex=system_delex,
            gold_state=BeliefState.from_dict(states),
            gold_domain=active,
            requested_slots=requested,
        ))
        prev_states = {d: dict(p) for d, p in states.items()}
        prev_domain = active

    return Dialogue(id=dialogue_id, split=split, domains=services,
                    turns=turns, goal=goals.get(dialogue_id))


# -- SGD ----------------------------------------------------------------------

def _family(service_name: str) -> str:
    return service_name.split("_")[0].lower()


def load_sgd_schemas(schema_records: Iterable[Mapping]) -> dict[str, DomainSchema]:
    """Merge per-service schemas into per-family domain schemas."""
    merged: dict[str, dict[str, SlotSpec]] = {}
    descriptions: dict[str, str] = {}
    for service in schema_records:
        family = _family(service["service_name"])
        descriptions.setdefault(family, service.get("description", ""))
        slots = merged.setdefault(family, {})
        for slot in service.get("slots", ()):
            name = slot["name"].lower()
            if name in slots:
                continue
            values = tuple(str(v).lower() for v in slot.get("possible_values", ())
                           ) if slot.get("is_categorical") else ()
            slots[name] = SlotSpec(name=name,
                                   description=slot.get("description", ""),
                                   values=values)
    return {family: DomainSchema(name=family,
                                 description=descriptions.get(family, ""),
                                 slots=tuple(slots.values()))
            for family, slots in merged.items()}


def load_sgd(path: Union[str, Path]) -> Corpus:
    """Parse an SGD-shaped directory into the unified corpus model."""
    path = Path(path)
    schema_records: list[Mapping] = []
    seen_services: set[str] = set()
    for candidate in [path / "schema.json"] + \
            [path / split / "schema.json" for split in _SPLITS]:
        if candidate.exists():
            for service in json.loads(candidate.read_text()):
                if service["service_name"] not in seen_services:
                    seen_services.add(service["service_name"])
                    schema_records.append(service)
    if not schema_records:
        raise CorpusFormatError(f"no schema.json found under {path}")
    schemas = load_sgd_schemas(schema_records)
    warnings: list[str] = []

    dialogues: list[Dialogue] = []
    for split in _SPLITS:
        split_dir = path / split
        if not split_dir.is_dir():
            continue
        for file in sorted(split_dir.glob("dialogues_*.json")):
            for record in json.loads(file.read_text()):
                dialogues.append(_parse_sgd_dialogue(
                    record, split, schemas, warnings))
    if not dialogues:
        raise CorpusFormatError(f"no dialogue files found under {path}")
    corpus = Corpus(name="sgd", dialogues=dialogues, schemas=schemas,
                    load_warnings=warnings)
    derive_gold_updates(corpus)
    return corpus


def _parse_sgd_dialogue(record: Mapping, split: str,
                        schemas: Mapping[str, DomainSchema],
                        warnings: list[str]) -> Dialogue:
    try:
        dialogue_id = record["dialogue_id"]
        services = tuple(sorted({_family(s) for s in record.get("services", ())}))
        raw_turns = record["turns"]
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(
            f"dialogue record missing field {exc} "
            f"(id={record.get('dialogue_id', '?')!r})") from exc

    turns: list[Turn] = []
    prev_states: dict[str, dict[str, str]] = {}
    prev_domain: Optional[str] = None
    i = 0
    while i < len(raw_turns):
        turn = raw_turns[i]
        if turn.get("speaker", "").upper() != "USER":
            raise CorpusFormatError(
                f"{dialogue_id}: expected USER turn at index {i}")
        utterance = turn.get("utterance", "")
        if not utterance:
            raise CorpusFormatError(f"{dialogue_id}: empty user utterance")

        states: dict[str, dict[str, str]] = {}
        candidates: list[str] = []
        requested_by_domain: dict[str, tuple[str, ...]] = {}
        for frame in turn.get("frames", ()):
            family = _family(str(frame.get("service", "")))
            schema = schemas.get(family)
            if schema is None:
                warnings.append(f"{dialogue_id}: unknown service "
                                f"{frame.get('service')!r}")
                continue
            pairs = _frame_state(frame, family, schema, warnings, dialogue_id)
            if pairs:
                states[family] = pairs
            intent = (frame.get("state") or {}).get("active_intent", "NONE")
            if intent and intent != "NONE":
                candidates.append(family)
            requested_by_domain[family] = tuple(
                s.lower() for s in
                (frame.get("state") or {}).get("requested_slots", ()))
        changed = [d for d, p in states.items() if p != prev_states.get(d, {})]
        active = _active_domain(candidates, changed, prev_domain) or \
            (services[0] if services else None)
        requested = requested_by_domain.get(active, ())

        system_response = None
        system_delex = None
        external_db = None
        if i + 1 < len(raw_turns) and \
                raw_turns[i + 1].get("speaker", "").upper() == "SYSTEM":
            sys_turn = raw_turns[i + 1]
            system_response = sys_turn.get("utterance", "")
            spans = []
            for frame in sys_turn.get("frames", ()):
                spans.extend(frame.get("slots", ()))
                if frame.get("service_results") is not None:
                    external_db = [
                        {str(k).lower(): str(v) for k, v in row.items()}
                        for row in frame["service_results"]]
            system_delex = (_apply_spans(system_response, spans)
                            if spans else system_response)
            i += 2
        else:
            i += 1

        turns.append(Turn(
            user_utterance=utterance,
            system_response=system_response,
            system_response_delex=system_delex,
            gold_state=BeliefState.from_dict(states),
            gold_domain=active,
            requested_slots=requested,
            external_db=external_db,
        ))
        prev_states = {d: dict(p) for d, p in states.items()}
        prev_domain = active

    return Dialogue(id=dialogue_id, split=split, domains=services,
                    turns=turns, goal=None)


# -- derived annotations ------------------------------------------------------

def derive_gold_updates(corpus: Corpus) -> Corpus:
    """Annotate every turn with its state delta against the previous turn."""
    for dialogue in corpus.dialogues:
        previous = BeliefState()
        for turn in dialogue.turns:
            gold = turn.gold_state if turn.gold_state is not None else previous
            updates = diff_states(previous, gold)
            by_domain = {u.domain: u for u in updates}
            if turn.gold_domain and turn.gold_domain in by_domain:
                turn.gold_update = by_domain[turn.gold_domain]
            elif updates:
                turn.gold_update = updates[0]
            else:
                turn.gold_update = StateUpdate(
                    domain=turn.gold_domain or dialogue.domains[0]
                    if dialogue.domains else "none", pairs={})
            previous = gold
    return corpus


def gold_update_lists(corpus: Corpus) -> dict[str, list[list[StateUpdate]]]:
    """Full per-turn diff lists (all domains), keyed by dialogue id."""
    out: dict[str, list[list[StateUpdate]]] = {}
    for dialogue in corpus.dialogues:
        previous = BeliefState()
        per_turn = []
        for turn in dialogue.turns:
            gold = turn.gold_state if turn.gold_state is not None else previous
            per_turn.append(diff_states(previous, gold))
            previous = gold
        out[dialogue.id] = per_turn
    return out


def collect_snippets(corpus: Corpus, window: int = 2,
                     split: Optional[str] = "train") -> list[Snippet]:
    """Context-store candidates from single-domain dialogues.

    Turns with an empty gold update are skipped: they make poor few-shot
    state examples and cannot be corrupted into negatives.
    """
    snippets: list[Snippet] = []
    for dialogue in corpus.select(split):
        history = DialogueHistory()
        for index, turn in enumerate(dialogue.turns):
            key = make_context_key(history, turn.user_utterance, window)
            if turn.gold_update and turn.gold_update.pairs:
                snippets.append(Snippet(
                    id=f"{dialogue.id}:{index}",
                    domain=turn.gold_update.domain,
                    context_key=key,
                    gold_update=turn.gold_update,
                    gold_state=turn.gold_state or BeliefState(),
                    gold_response_delex=turn.system_response_delex or "",
                    multi_domain=dialogue.multi_domain,
                ))
            history.add_user(turn.user_utterance)
            if turn.system_response is not None:
                history.add_system(turn.system_response)
    return snippets
