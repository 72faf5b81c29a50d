"""Tolerant parsers for raw LLM completions.

Models routinely deviate from the requested output formats (extra chatter,
malformed structure, hallucinated dialogue turns), so every parser here is
total: any input string yields a ParseOutcome, never an exception. Warning
tags record how far the input was from the declared format.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Generic, Optional, Sequence, TypeVar

from .core import DomainSchema, StateUpdate, canonicalize_value

T = TypeVar("T")

WARN_INVALID_STRUCTURE = "invalid-structure"
WARN_UNKNOWN_SLOT = "unknown-slot-dropped"
WARN_EXTRA_CONTENT = "extra-content-truncated"
WARN_INVALID_VALUE = "invalid-value-dropped"
WARN_NO_DOMAIN = "no-domain-found"


@dataclass(frozen=True)
class ParseOutcome(Generic[T]):
    value: T
    warnings: tuple[str, ...] = ()


def format_pairs(pairs: dict[str, str]) -> str:
    """Inverse of the hyphen-pair parser: entity:"value" joined by hyphens."""
    return "-".join(f'{slot}:"{value}"' for slot, value in pairs.items())


def format_pairs_json(pairs: dict[str, str]) -> str:
    return json.dumps(pairs)


def _find_braced_region(text: str) -> Optional[tuple[int, int]]:
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return start, i + 1
    return None


_KV_TOLERANT = re.compile(
    r"""["']?([A-Za-z_][\w ]*?)["']?\s*:\s*("[^"\n]*"|'[^'\n]*'|[^,{}\n]*)""")


def _parse_braced(text: str, schema: DomainSchema) -> Optional[dict[str, object]]:
    """Key/value pairs from a brace-delimited region, JSON first then a
    lenient scan. Returns None when no braced region exists."""
    region = _find_braced_region(text)
    if region is None:
        return None
    raw = text[region[0]:region[1]]
    obj: Optional[dict] = None
    try:
        loaded = json.loads(raw)
        if isinstance(loaded, dict):
            obj = loaded
    except (json.JSONDecodeError, ValueError):
        pass
    if obj is None:
        obj = {}
        for key, value in _KV_TOLERANT.findall(raw[1:-1]):
            obj[key] = value
    # Unwrap a single domain-keyed object: {"hotel": {...}}.
    if len(obj) == 1:
        ((key, inner),) = obj.items()
        if isinstance(inner, dict) and str(key).strip().lower() == schema.name:
            obj = inner
    return {"pairs": obj, "exact": text.strip() == raw.strip()}


def _split_pair_segments(text: str) -> list[str]:
    """Split on hyphen or comma separators that sit outside quoted spans.

    Hyphens are the declared separator; commas cover the common deviation.
    """
    segments, buf, quote = [], [], ""
    for ch in text:
        if quote:
            if ch == quote:
                quote = ""
            buf.append(ch)
        elif ch in "\"'":
            quote = ch
            buf.append(ch)
        elif ch in "-,":
            segments.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    segments.append("".join(buf))
    return segments


_SEGMENT_RE = re.compile(r'^\s*"?([A-Za-z_][\w ]*?)"?\s*:\s*(.*?)\s*$')
_QUOTED_PAIR_RE = re.compile(r'([A-Za-z_]\w*)\s*:\s*"([^"\n]*)"')
_BARE_PAIR_RE = re.compile(r"([A-Za-z_]\w*):([A-Za-z0-9]\w*)")


def _collect_pairs(raw_pairs: dict[str, object], schema: DomainSchema,
                   threshold: float, warnings: list[str]) -> dict[str, str]:
    known = set(schema.slot_names)
    pairs: dict[str, str] = {}
    for key, value in raw_pairs.items():
        name = str(key).strip().strip("\"'").lower()
        if name not in known:
            if WARN_UNKNOWN_SLOT not in warnings:
                warnings.append(WARN_UNKNOWN_SLOT)
            continue
        if isinstance(value, (dict, list, tuple)):
            if WARN_INVALID_VALUE not in warnings:
                warnings.append(WARN_INVALID_VALUE)
            continue
        if isinstance(value, bool):
            value = "yes" if value else "no"
        canonical = canonicalize_value(str(value), schema.slot(name), threshold)
        if canonical:
            pairs[name] = canonical
    return pairs


def parse_state_output(text: str, schema: DomainSchema,
                       threshold: float = 0.9) -> ParseOutcome[StateUpdate]:
    """Parse an LLM state-tracking completion into a StateUpdate.

    Tries a brace-delimited structured object first, then hyphen-separated
    entity:"value" pairs. Unknown slots are dropped, values canonicalized,
    empty values treated as not captured. Degrades to an empty update with
    an invalid-structure warning instead of raising.
    """
    warnings: list[str] = []
    text = "" if text is None else str(text)

    braced = _parse_braced(text, schema)
    if braced is not None and braced["pairs"]:
        if not braced["exact"]:
            warnings.append(WARN_EXTRA_CONTENT)
        pairs = _collect_pairs(braced["pairs"], schema, threshold, warnings)
        return ParseOutcome(StateUpdate(schema.name, pairs, tuple(warnings)),
                            tuple(warnings))
    if braced is not None and braced["exact"]:
        # A bare "{}" is a well-formed empty update.
        return ParseOutcome(StateUpdate(schema.name, {}), ())

    stripped = text.strip()
    segments = _split_pair_segments(stripped) if stripped else []
    matches = [_SEGMENT_RE.match(seg) for seg in segments]
    clean: Optional[tuple[dict[str, str], list[str]]] = None
    if segments and all(matches):
        raw = {m.group(1): m.group(2) for m in matches}  # type: ignore[union-attr]
        clean_warnings: list[str] = list(warnings)
        pairs = _collect_pairs(raw, schema, threshold, clean_warnings)
        if pairs or WARN_UNKNOWN_SLOT not in clean_warnings:
            # All keys were real slots (possibly with empty values): trust it.
            return ParseOutcome(StateUpdate(schema.name, pairs,
                                            tuple(clean_warnings)),
                                tuple(clean_warnings))
        clean = (pairs, clean_warnings)

    # Salvage scan: quoted pairs anywhere, then colon-glued bare tokens.
    raw = {}
    for key, value in _QUOTED_PAIR_RE.findall(text):
        raw[key] = value
    if not raw:
        for key, value in _BARE_PAIR_RE.findall(text):
            raw.setdefault(key, value)
    if raw:
        salvage_warnings = warnings + [WARN_EXTRA_CONTENT]
        pairs = _collect_pairs(raw, schema, threshold, salvage_warnings)
        if pairs:
            return ParseOutcome(StateUpdate(schema.name, pairs,
                                            tuple(salvage_warnings)),
                                tuple(salvage_warnings))

    if clean is not None:
        pairs, clean_warnings = clean
        return ParseOutcome(StateUpdate(schema.name, pairs,
                                        tuple(clean_warnings)),
                            tuple(clean_warnings))
    warnings.append(WARN_INVALID_STRUCTURE)
    return ParseOutcome(StateUpdate(schema.name, {}, tuple(warnings)),
                        tuple(warnings))


_TOKEN_RE = re.compile(r"[a-z0-9_]+")


def parse_domain_output(text: str, domains: Sequence[str],
                        previous: Optional[str] = None) -> ParseOutcome[str]:
    """Pick the answered domain out of a (possibly chatty) completion.

    Returns the first listed domain whose name occurs as a token of the
    lowercased text (plural forms tolerated). Falls back to the previous
    turn's domain, then the first listed one, with a no-domain-found warning.
    """
    if not domains:
        raise ValueError("domains must be non-empty")
    normalized = [d.lower() for d in domains]
    tokens = set(_TOKEN_RE.findall(("" if text is None else str(text)).lower()))
    for domain in normalized:
        if domain in tokens or domain + "s" in tokens:
            return ParseOutcome(domain, ())
    fallback = previous.lower() if previous else normalized[0]
    if fallback not in normalized:
        fallback = normalized[0]
    return ParseOutcome(fallback, (WARN_NO_DOMAIN,))


_SPEAKER_MARKERS = ("Customer:", "Assistant:", "User:", "System:")
_LEADING_LABEL_RE = re.compile(r"^(assistant|system|response|answer)\s*:\s*",
                               re.IGNORECASE)


def _strip_outer_quotes(text: str) -> str:
    while len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    return text


def sanitize_response(text: str) -> ParseOutcome[str]:
    """Clean a generated system response.

    Truncates at the first hallucinated speaker marker, strips leading role
    labels and surrounding quotes, collapses whitespace. Bracketed
    placeholders pass through untouched. Idempotent.
    """
    out = "" if text is None else str(text)
    warnings: list[str] = []
    for _ in range(10):
        before = out
        out = out.strip()
        out = _LEADING_LABEL_RE.sub("", out)
        cut = min((i for i in (out.find(m) for m in _SPEAKER_MARKERS) if i >= 0),
                  default=-1)
        if cut >= 0:
            out = out[:cut]
            if WARN_EXTRA_CONTENT not in warnings:
                warnings.append(WARN_EXTRA_CONTENT)
        out = _strip_outer_quotes(out.strip())
        out = " ".join(out.split())
        if out == before:
            break
    return ParseOutcome(out, tuple(warnings))


PLACEHOLDER_RE = re.compile(r"\[([^\[\]]+)\]")


def extract_placeholders(text: str) -> list[str]:
    """All [name]-style placeholders in order of appearance, lowercased."""
    return [m.group(1).strip().lower()
            for m in PLACEHOLDER_RE.finditer("" if text is None else str(text))]
