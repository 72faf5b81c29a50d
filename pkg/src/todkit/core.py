"""Shared domain types, belief-state algebra and value normalization.

Everything here is a plain immutable value; all operations return new
objects and are safe to call from concurrent workers.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Collection, Iterator, Mapping, Optional, Sequence

DONTCARE = "dontcare"

CUSTOMER = "customer"
ASSISTANT = "assistant"

SPEAKER_LABELS = {CUSTOMER: "Customer", ASSISTANT: "Assistant"}

# Surface variants that normalize to a single canonical form. Applied before
# any fuzzy comparison, so threshold 1.0 still equates these.
VALUE_ALIASES = {
    "center": "centre",
    "centre of town": "centre",
    "center of town": "centre",
    "guesthouse": "guest house",
    "dont care": DONTCARE,
    "don't care": DONTCARE,
    "do not care": DONTCARE,
    "doesnt matter": DONTCARE,
    "doesn't matter": DONTCARE,
    "no preference": DONTCARE,
    "any": DONTCARE,
}


class UnknownDomainError(ValueError):
    """Raised when an operation names a domain outside the dataset's list."""


def _strip_outer_quotes(text: str) -> str:
    out = text.strip()
    while len(out) >= 2 and out[0] == out[-1] and out[0] in "\"'":
        out = out[1:-1].strip()
    return out


def normalize_value(raw: str) -> str:
    """Lowercase, trim, strip surrounding quotes, collapse inner whitespace
    and map known aliases to their canonical spelling."""
    out = _strip_outer_quotes(str(raw)).lower()
    out = " ".join(out.split())
    return VALUE_ALIASES.get(out, out)


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def similarity(a: str, b: str) -> float:
    """Edit-distance ratio on normalized strings: 1 - dist / min(len).

    Normalizing by the shorter length makes the ratio symmetric and yields
    e.g. 9/10 for a one-character insertion into a 10-character value.
    Clamped to [0, 1]; empty-vs-empty counts as identical.
    """
    na, nb = normalize_value(a), normalize_value(b)
    if na == nb:
        return 1.0
    shorter = min(len(na), len(nb))
    if shorter == 0:
        return 0.0
    return max(0.0, 1.0 - levenshtein(na, nb) / shorter)


def fuzzy_equal(a: str, b: str, threshold: float = 0.9) -> bool:
    """True when the normalized values coincide or clear the edit ratio.

    The ``dontcare`` sentinel is matched exactly, never fuzzily.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0,1], got {threshold}")
    na, nb = normalize_value(a), normalize_value(b)
    if na == nb:
        return True
    if na == DONTCARE or nb == DONTCARE:
        return False
    return similarity(na, nb) >= threshold


@dataclass(frozen=True)
class SlotSpec:
    """One slot of a domain schema.

    ``values`` lists the canonical enumeration for closed slots; open slots
    leave it empty.
    """

    name: str
    description: str = ""
    values: tuple[str, ...] = ()
    informable: bool = True
    requestable: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", self.name.lower())


@dataclass(frozen=True)
class DomainSchema:
    name: str
    description: str = ""
    slots: tuple[SlotSpec, ...] = ()
    # Slots never used as database constraints (booking details and the like).
    db_excluded_slots: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", self.name.lower())
        names = [s.name for s in self.slots]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate slot names in schema {self.name!r}")

    def slot(self, name: str) -> Optional[SlotSpec]:
        name = name.lower()
        for s in self.slots:
            if s.name == name:
                return s
        return None

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slots)

    def informable_slots(self) -> tuple[SlotSpec, ...]:
        return tuple(s for s in self.slots if s.informable)


def canonicalize_value(raw: str, slot: Optional[SlotSpec] = None,
                       threshold: float = 0.9) -> str:
    """Map a raw surface value onto the slot's canonical form.

    For enumerated slots the closest canonical value wins when it clears the
    fuzzy threshold; otherwise the normalized raw string is kept, so the
    result is always either an enumeration member or the normalized input.
    """
    norm = normalize_value(raw)
    if norm == DONTCARE:
        return DONTCARE
    if slot is not None and slot.values:
        best: Optional[str] = None
        best_score = -1.0
        for candidate in slot.values:
            if normalize_value(candidate) == norm:
                return candidate
            score = similarity(norm, candidate)
            if score > best_score:
                best, best_score = candidate, score
        if best is not None and best_score >= threshold:
            return best
    return norm


@dataclass(frozen=True)
class StateUpdate:
    """Turn-level delta of slot values for a single domain."""

    domain: str
    pairs: Mapping[str, str] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", self.domain.lower())
        object.__setattr__(self, "pairs", dict(self.pairs))

    def __bool__(self) -> bool:
        return bool(self.pairs)

    def to_dict(self) -> dict:
        return {"domain": self.domain, "pairs": dict(self.pairs),
                "warnings": list(self.warnings)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "StateUpdate":
        return cls(domain=data["domain"], pairs=dict(data.get("pairs", {})),
                   warnings=tuple(data.get("warnings", ())))


@dataclass(frozen=True)
class BeliefState:
    """Accumulated per-domain slot->value map.

    Treated as immutable: merging updates produces a new instance and never
    leaves empty per-domain maps behind.
    """

    domains: Mapping[str, Mapping[str, str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {d: dict(pairs) for d, pairs in self.domains.items() if pairs}
        object.__setattr__(self, "domains", clean)

    def pairs(self, domain: str) -> dict[str, str]:
        return dict(self.domains.get(domain.lower(), {}))

    def triples(self) -> Iterator[tuple[str, str, str]]:
        for domain in self.domains:
            for slot, value in self.domains[domain].items():
                yield domain, slot, value

    def __bool__(self) -> bool:
        return bool(self.domains)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BeliefState):
            return NotImplemented
        return {d: dict(p) for d, p in self.domains.items()} == \
            {d: dict(p) for d, p in other.domains.items()}

    def to_dict(self) -> dict[str, dict[str, str]]:
        return {d: dict(p) for d, p in sorted(self.domains.items())}

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping[str, str]]) -> "BeliefState":
        return cls(domains={d: dict(p) for d, p in data.items()})


def apply_state_update(state: BeliefState, update: StateUpdate,
                       known_domains: Optional[Collection[str]] = None) -> BeliefState:
    """Merge a turn-level update into the accumulated state (last write wins).

    The input state is unchanged; pairs can only be added or overwritten,
    there is no deletion channel.
    """
    if known_domains is not None and update.domain not in known_domains:
        raise UnknownDomainError(
            f"update targets unknown domain {update.domain!r}")
    if not update.pairs:
        return state
    merged = {d: dict(p) for d, p in state.domains.items()}
    bucket = merged.setdefault(update.domain, {})
    bucket.update(update.pairs)
    return BeliefState(domains=merged)


def diff_states(prev: BeliefState, next_state: BeliefState) -> list[StateUpdate]:
    """Per-domain updates turning ``prev`` into ``next_state``.

    Only added or changed pairs are reported; pairs present in ``prev`` but
    absent from ``next_state`` are ignored (no deletion channel). Domains are
    emitted in sorted order for determinism.
    """
    updates = []
    for domain in sorted(next_state.domains):
        before = prev.domains.get(domain, {})
        after = next_state.domains[domain]
        changed = {s: v for s, v in sorted(after.items())
                   if before.get(s) != v}
        if changed:
            updates.append(StateUpdate(domain=domain, pairs=changed))
    return updates


def states_fuzzy_match(pred: BeliefState, gold: BeliefState,
                       threshold: float = 0.9, allow_extra: bool = False) -> bool:
    """Joint comparison: every gold triple fuzzily matched, and (unless
    ``allow_extra``) no predicted (domain, slot) outside the gold set."""
    for domain, slot, value in gold.triples():
        pred_value = pred.domains.get(domain, {}).get(slot)
        if pred_value is None or not fuzzy_equal(pred_value, value, threshold):
            return False
    if not allow_extra:
        gold_keys = {(d, s) for d, s, _ in gold.triples()}
        for d, s, _ in pred.triples():
            if (d, s) not in gold_keys:
                return False
    return True


class DialogueHistory:
    """Ordered (speaker, text) exchanges, alternating starting with the customer."""

    def __init__(self, entries: Sequence[tuple[str, str]] = ()) -> None:
        self._entries: list[tuple[str, str]] = []
        for speaker, text in entries:
            self.add(speaker, text)

    def add(self, speaker: str, text: str) -> None:
        if speaker not in SPEAKER_LABELS:
            raise ValueError(f"unknown speaker {speaker!r}")
        expected = CUSTOMER if len(self._entries) % 2 == 0 else ASSISTANT
        if speaker != expected:
            raise ValueError(
                f"speakers must alternate starting with customer; "
                f"expected {expected!r}, got {speaker!r}")
        self._entries.append((speaker, text))

    def add_user(self, text: str) -> None:
        self.add(CUSTOMER, text)

    def add_system(self, text: str) -> None:
        self.add(ASSISTANT, text)

    @property
    def entries(self) -> tuple[tuple[str, str], ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def window(self, n: Optional[int]) -> tuple[tuple[str, str], ...]:
        """Last ``n`` utterances (all of them when ``n`` is None)."""
        if n is None:
            return self.entries
        if n <= 0:
            return ()
        return tuple(self._entries[-n:])

    def render(self, n: Optional[int] = None) -> str:
        return "\n".join(f"{SPEAKER_LABELS[speaker]}: {text}"
                         for speaker, text in self.window(n))

    def copy(self) -> "DialogueHistory":
        return DialogueHistory(self._entries)


@dataclass
class Turn:
    """One user turn of a corpus dialogue, with its gold annotations."""

    user_utterance: str
    system_response: Optional[str] = None
    system_response_delex: Optional[str] = None
    gold_state: Optional[BeliefState] = None
    gold_domain: Optional[str] = None
    gold_update: Optional[StateUpdate] = None
    requested_slots: tuple[str, ...] = ()
    # SGD-style externally provided database results for this turn.
    external_db: Optional[list[dict[str, str]]] = None

    def __post_init__(self) -> None:
        if not self.user_utterance:
            raise ValueError("user_utterance must be non-empty")


@dataclass(frozen=True)
class PipelineConfig:
    few_shot: bool = False
    oracle_state: bool = False
    oracle_domain: bool = False
    retrieval_k: int = 2
    negatives_per_example: int = 1
    pool_size_per_domain: int = 10
    context_window_utterances: int = 2
    fuzzy_threshold: float = 0.9
    # History rendered into prompts; None means the entire dialogue so far.
    prompt_history_window: Optional[int] = None
    # Feed gold system responses (instead of generated ones) back into history.
    gold_history: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.retrieval_k < 0:
            raise ValueError("retrieval_k must be >= 0")
        if self.few_shot and self.pool_size_per_domain < self.retrieval_k:
            raise ValueError(
                "pool_size_per_domain must cover retrieval_k in few-shot mode")
        if not 0.0 <= self.fuzzy_threshold <= 1.0:
            raise ValueError("fuzzy_threshold must be in [0,1]")
        if self.context_window_utterances < 1:
            raise ValueError("context_window_utterances must be >= 1")

    @property
    def variant_label(self) -> str:
        label = ("fs" if self.few_shot else "zs") + "-" + \
            ("obs" if self.oracle_state else "gbs")
        if self.oracle_domain:
            label += "-od"
        return label

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**dict(data))
