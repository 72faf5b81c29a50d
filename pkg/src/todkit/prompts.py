"""Prompt templates and the three per-turn prompt renderers.

Templates are plain text files with ``{placeholder}`` markers, one file per
(dataset, domain, kind) with a ``default`` fallback per kind, so prompts can
be customized per domain or per model without touching code. A placeholder
standing alone on its line is elided together with the line when its value
is empty, which keeps zero-shot and empty-history prompts free of dangling
separators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

from .core import DialogueHistory, DomainSchema
from .parsing import format_pairs

DOMAIN_DETECT = "domain_detect"
STATE = "state"
RESPONSE = "response"

PLACEHOLDERS = (
    "domain_list",
    "history",
    "utterance",
    "slot_list",
    "examples",
    "belief_state",
    "db_results",
    "domain",
    "domain_description",
)

_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    kind: str
    domain: str  # concrete domain name, or "default", or "global"
    text: str

    @property
    def segments(self) -> tuple[tuple[str, str], ...]:
        """Alternating ("literal", text) / ("placeholder", name) parts."""
        parts: list[tuple[str, str]] = []
        pos = 0
        for m in _PLACEHOLDER_RE.finditer(self.text):
            if m.start() > pos:
                parts.append(("literal", self.text[pos:m.start()]))
            parts.append(("placeholder", m.group(1)))
            pos = m.end()
        if pos < len(self.text):
            parts.append(("literal", self.text[pos:]))
        return tuple(parts)

    def placeholders(self) -> set[str]:
        return {name for kind, name in self.segments if kind == "placeholder"}

    def render(self, values: dict[str, str]) -> str:
        lines_out: list[str] = []
        for line in self.text.split("\n"):
            m = _PLACEHOLDER_RE.fullmatch(line.strip())
            if m is not None:
                value = values.get(m.group(1), "")
                if value == "":
                    continue  # elide the whole line
                lines_out.append(value)
                continue
            lines_out.append(_PLACEHOLDER_RE.sub(
                lambda mm: str(values.get(mm.group(1), "")), line))
        return "\n".join(lines_out).rstrip("\n")


@dataclass(frozen=True)
class RenderedPrompt:
    kind: str
    text: str
    provenance: tuple[str, ...] = ()


def scan_unresolved(text: str) -> list[str]:
    """Known placeholder markers surviving in a rendered prompt (should be none)."""
    return [m.group(1) for m in _PLACEHOLDER_RE.finditer(text)]


class TemplateSet:
    """All templates for one dataset, resolved domain-first then default."""

    def __init__(self, templates: dict[tuple[str, str], PromptTemplate]) -> None:
        self._templates = dict(templates)
        if (DOMAIN_DETECT, "global") not in self._templates:
            raise TemplateError("missing global domain_detect template")
        for kind in (STATE, RESPONSE):
            if not any(k == kind for k, _ in self._templates):
                raise TemplateError(f"no {kind} template shipped")

    @classmethod
    def load(cls, source: Union[str, Path], dataset: Optional[str] = None) -> "TemplateSet":
        """Load ``*.txt`` templates from a directory.

        ``source`` is either a dataset name resolved against the packaged
        defaults ("multiwoz", "sgd") or a path to a custom template directory.
        File naming: ``domain_detect.txt``, ``<kind>-<domain>.txt`` and
        ``<kind>-default.txt`` for kind in {state, response}.
        """
        path = Path(source)
        if path.is_dir():
            base = path
        else:
            base = resources.files("todkit").joinpath(f"templates/{source}")
            if not base.is_dir():
                raise TemplateError(f"no such template set: {source!r}")
        templates: dict[tuple[str, str], PromptTemplate] = {}
        for entry in sorted(base.iterdir(), key=lambda e: e.name):
            if not entry.name.endswith(".txt"):
                continue
            stem = entry.name[:-4]
            text = entry.read_text()
            unknown = set(re.findall(r"\{([a-z_]+)\}", text)) - set(PLACEHOLDERS)
            if unknown:
                raise TemplateError(
                    f"template {entry.name}: unknown placeholders {sorted(unknown)}")
            if stem == DOMAIN_DETECT:
                templates[(DOMAIN_DETECT, "global")] = PromptTemplate(
                    DOMAIN_DETECT, "global", text)
            elif "-" in stem:
                kind, domain = stem.split("-", 1)
                if kind not in (STATE, RESPONSE):
                    raise TemplateError(f"unrecognized template file {entry.name}")
                templates[(kind, domain)] = PromptTemplate(kind, domain, text)
            else:
                raise TemplateError(f"unrecognized template file {entry.name}")
        return cls(templates)

    def resolve(self, kind: str, domain: str) -> PromptTemplate:
        if kind == DOMAIN_DETECT:
            return self._templates[(DOMAIN_DETECT, "global")]
        for key in ((kind, domain), (kind, "default")):
            if key in self._templates:
                return self._templates[key]
        raise TemplateError(f"no template for kind={kind!r} domain={domain!r}")

    def fingerprint(self) -> dict[str, str]:
        import hashlib
        return {f"{kind}/{domain}": hashlib.sha256(t.text.encode()).hexdigest()
                for (kind, domain), t in sorted(self._templates.items())}


def serialize_state(domain: str, pairs: dict[str, str]) -> str:
    """Belief-state line in the ``domain { slot: "value"}`` shape."""
    if not pairs:
        return f"{domain} {{}}"
    body = ", ".join(f'{slot}: "{value}"' for slot, value in sorted(pairs.items()))
    return f"{domain} {{ {body}}}"


def pluralize(domain: str) -> str:
    return domain if domain.endswith("s") else domain + "s"


def serialize_db_results(domain: str, count: int) -> str:
    return f"{pluralize(domain)}: {count}"


def slot_list_lines(schema: DomainSchema) -> str:
    return "\n".join(f'- "{s.name}": {s.description}'
                     for s in schema.informable_slots())


_EXAMPLE_HEADER = "------- Example: --------"
_NEGATIVE_HEADER = "------- Incorrect example: --------"


def _state_example_block(example, negative: bool = False) -> str:
    header = _NEGATIVE_HEADER if negative else _EXAMPLE_HEADER
    pairs = example.gold_update.pairs if example.gold_update else {}
    return f"{header}\n{example.context_key}\nOutput: {format_pairs(pairs)}"


def _response_example_block(example) -> str:
    state = serialize_state(example.domain,
                            example.gold_state.pairs(example.domain)
                            if example.gold_state else {})
    return (f"{_EXAMPLE_HEADER}\n{example.context_key}\n"
            f"State: {state}\nResponse: {example.gold_response_delex or ''}")


def render_domain_prompt(template: PromptTemplate, history: DialogueHistory,
                         utterance: str, domains: Sequence[str],
                         history_window: Optional[int] = None) -> RenderedPrompt:
    if not domains:
        raise ValueError("domains must be non-empty")
    text = template.render({
        "domain_list": ", ".join(domains),
        "history": history.render(history_window),
        "utterance": utterance,
    })
    return RenderedPrompt(DOMAIN_DETECT, text)


def render_state_prompt(template: PromptTemplate, schema: DomainSchema,
                        history: DialogueHistory, utterance: str,
                        positives: Sequence = (), negatives: Sequence = (),
                        zero_shot: bool = True,
                        history_window: Optional[int] = None) -> RenderedPrompt:
    if zero_shot and (positives or negatives):
        raise ValueError("zero-shot prompts take no retrieved examples")
    blocks = [_state_example_block(ex) for ex in positives]
    blocks += [_state_example_block(ex, negative=True) for ex in negatives]
    text = template.render({
        "slot_list": slot_list_lines(schema),
        "examples": "\n".join(blocks),
        "history": history.render(history_window),
        "utterance": utterance,
        "domain": schema.name,
        "domain_description": schema.description,
    })
    return RenderedPrompt(STATE, text,
                          provenance=tuple(ex.id for ex in positives))


def render_response_prompt(template: PromptTemplate, schema: DomainSchema,
                           history: DialogueHistory, utterance: str,
                           state_pairs: dict[str, str], db_count: int,
                           positives: Sequence = (), zero_shot: bool = True,
                           history_window: Optional[int] = None) -> RenderedPrompt:
    if zero_shot and positives:
        raise ValueError("zero-shot prompts take no retrieved examples")
    blocks = [_response_example_block(ex) for ex in positives]
    text = template.render({
        "examples": "\n".join(blocks),
        "history": history.render(history_window),
        "utterance": utterance,
        "belief_state": serialize_state(schema.name, state_pairs),
        "db_results": serialize_db_results(schema.name, db_count),
        "domain": schema.name,
        "domain_description": schema.description,
    })
    return RenderedPrompt(RESPONSE, text,
                          provenance=tuple(ex.id for ex in positives))
