"""Per-domain entity database: constraint queries and lexicalization.

The database answers belief-state queries for prompt construction, and fills
delexicalized placeholders back in for live display. Datasets that ship
per-turn results instead of a database (SGD) bypass the query path entirely
via ``external_result``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .core import DONTCARE, BeliefState, DomainSchema, UnknownDomainError, \
    fuzzy_equal, normalize_value
from .parsing import PLACEHOLDER_RE

# Attributes where partial similarity is meaningless: matched exactly after
# normalization instead of fuzzily.
EXACT_MATCH_ATTRIBUTES = {"phone", "postcode", "address", "id", "trainid"}


@dataclass(frozen=True)
class Entity:
    domain: str
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {str(k).lower(): str(v) for k, v in self.attributes.items()}
        object.__setattr__(self, "attributes", clean)

    def get(self, name: str) -> Optional[str]:
        return self.attributes.get(name.lower())


@dataclass(frozen=True)
class DbResult:
    domain: str
    count: int
    entities: tuple[Entity, ...] = ()
    provided_externally: bool = False
    warnings: tuple[str, ...] = ()


class Database:
    """Immutable per-domain entity tables loaded from JSON files."""

    def __init__(self, tables: Mapping[str, Sequence[Entity]],
                 fuzzy_threshold: float = 0.9,
                 schemas: Optional[Mapping[str, DomainSchema]] = None) -> None:
        self._tables = {d.lower(): tuple(es) for d, es in tables.items()}
        self._attr_names = {d: {a for e in es for a in e.attributes}
                            for d, es in self._tables.items()}
        self.fuzzy_threshold = fuzzy_threshold
        self._schemas = dict(schemas or {})

    @classmethod
    def load(cls, path: Union[str, Path], fuzzy_threshold: float = 0.9,
             schemas: Optional[Mapping[str, DomainSchema]] = None) -> "Database":
        """Load ``<domain>_db.json`` files (arrays of attribute records)
        from a directory."""
        path = Path(path)
        tables: dict[str, list[Entity]] = {}
        for file in sorted(path.glob("*_db.json")):
            domain = file.name[:-len("_db.json")].lower()
            records = json.loads(file.read_text())
            if not isinstance(records, list):
                raise ValueError(f"{file}: expected an array of records")
            tables[domain] = [Entity(domain, rec) for rec in records]
        return cls(tables, fuzzy_threshold, schemas)

    @property
    def domains(self) -> list[str]:
        return sorted(self._tables)

    def table(self, domain: str) -> tuple[Entity, ...]:
        domain = domain.lower()
        if domain not in self._tables:
            raise UnknownDomainError(f"no database table for domain {domain!r}")
        return self._tables[domain]

    def _matches(self, entity: Entity, slot: str, value: str) -> bool:
        attr = entity.get(slot)
        if attr is None:
            return False
        if slot in EXACT_MATCH_ATTRIBUTES:
            return normalize_value(attr) == normalize_value(value)
        return fuzzy_equal(attr, value, self.fuzzy_threshold)

    def query(self, domain: str, state: BeliefState,
              max_entities: int = 5) -> DbResult:
        """Entities matching every user-specified constraint in the domain.

        ``dontcare`` values, booking-only slots (the schema's exclusion
        list) and slots that exist on no entity of the domain impose no
        constraint. ``count`` is the full match cardinality even when the
        returned entity list is truncated.
        """
        table = self.table(domain)
        domain = domain.lower()
        excluded = set()
        schema = self._schemas.get(domain)
        if schema is not None:
            excluded = set(schema.db_excluded_slots)
        attr_names = self._attr_names.get(domain, set())
        constraints = {
            slot: value for slot, value in state.pairs(domain).items()
            if normalize_value(value) != DONTCARE
            and slot not in excluded
            and slot in attr_names
        }
        matched = [e for e in table
                   if all(self._matches(e, s, v) for s, v in constraints.items())]
        return DbResult(domain=domain, count=len(matched),
                        entities=tuple(matched[:max_entities]))

    def fingerprint(self) -> str:
        payload = json.dumps(
            {d: [dict(e.attributes) for e in es]
             for d, es in sorted(self._tables.items())},
            sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


def external_result(turn_db: Optional[Sequence[Mapping[str, str]]],
                    domain: str) -> DbResult:
    """Wrap dataset-provided per-turn results (SGD path); query() is bypassed."""
    if turn_db is None:
        return DbResult(domain=domain, count=0, provided_externally=True,
                        warnings=("missing-db-annotation",))
    entities = tuple(Entity(domain, rec) for rec in turn_db)
    return DbResult(domain=domain, count=len(entities), entities=entities,
                    provided_externally=True)


@dataclass(frozen=True)
class LexicalizedText:
    text: str
    unresolved: tuple[str, ...] = ()


def lexicalize(template: str, entity: Optional[Entity],
               extras: Optional[Mapping[str, str]] = None) -> LexicalizedText:
    """Fill ``[name]`` placeholders from an entity's attributes.

    Placeholder names may carry the domain prefix ([hotel_address]); extras
    (booking reference, result count) take over where the entity has no such
    attribute. Unknown placeholders stay verbatim and are reported.
    """
    extras = {str(k).lower(): str(v) for k, v in (extras or {}).items()}
    unresolved: list[str] = []

    def substitute(match) -> str:
        name = match.group(1).strip().lower()
        candidates = [name]
        if entity is not None and name.startswith(entity.domain + "_"):
            candidates.append(name[len(entity.domain) + 1:])
        elif "_" in name:
            candidates.append(name.split("_", 1)[1])
        for candidate in candidates:
            if entity is not None:
                value = entity.get(candidate)
                if value is not None:
                    return value
            if candidate in extras:
                return extras[candidate]
        unresolved.append(name)
        return match.group(0)

    text = PLACEHOLDER_RE.sub(substitute, template)
    return LexicalizedText(text=text, unresolved=tuple(unresolved))


def booking_reference(session_id: str, domain: str) -> str:
    """Deterministic pseudo-reference for (session, domain) lexicalization."""
    digest = hashlib.sha256(f"{session_id}|{domain}".encode()).hexdigest()
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    number = int(digest[:12], 16)
    out = []
    for _ in range(8):
        number, idx = divmod(number, len(alphabet))
        out.append(alphabet[idx])
    return "".join(out)
