"""Automatic evaluation metrics and human-annotation aggregation.

Value comparisons everywhere go through the fuzzy matcher, so capitalization
and small typos do not flip a metric; with threshold 1.0 every metric
reduces to exact normalized-string matching.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .core import BeliefState, fuzzy_equal, states_fuzzy_match
from .database import Database
from .ingest import Corpus, Dialogue, GoalSpec
from .parsing import extract_placeholders


def domain_accuracy(predicted: Sequence[str], gold: Sequence[str]) -> float:
    """Ratio of turns with the active domain detected correctly."""
    if len(predicted) != len(gold):
        raise ValueError("prediction/gold turn counts differ")
    if not gold:
        raise ValueError("no turns to evaluate")
    hits = sum(1 for p, g in zip(predicted, gold)
               if (p or "").lower() == (g or "").lower())
    return hits / len(gold)


def joint_goal_accuracy(predicted: Sequence[BeliefState],
                        gold: Sequence[BeliefState],
                        threshold: float = 0.9,
                        allow_extra: bool = False) -> float:
    """Ratio of turns whose whole predicted state matches the gold state."""
    if len(predicted) != len(gold):
        raise ValueError("prediction/gold turn counts differ")
    if not gold:
        return 0.0
    hits = sum(1 for p, g in zip(predicted, gold)
               if states_fuzzy_match(p, g, threshold, allow_extra))
    return hits / len(gold)


def slot_micro_f1(predicted: Sequence[BeliefState],
                  gold: Sequence[BeliefState],
                  threshold: float = 0.9) -> tuple[float, float, float]:
    """Micro-averaged precision/recall/F1 over (domain, slot, value) triples.

    Matching is one-to-one on (domain, slot): a predicted triple matches the
    gold triple of the same key when the values are fuzzily equal.
    """
    tp = fp = fn = 0
    for pred, gld in zip(predicted, gold):
        gold_map = {(d, s): v for d, s, v in gld.triples()}
        pred_map = {(d, s): v for d, s, v in pred.triples()}
        for key, value in pred_map.items():
            if key in gold_map and fuzzy_equal(value, gold_map[key], threshold):
                tp += 1
            else:
                fp += 1
        for key, value in gold_map.items():
            if key not in pred_map or \
                    not fuzzy_equal(pred_map[key], value, threshold):
                fn += 1
    if tp == fp == fn == 0:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return precision, recall, f1


_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def bleu_tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i:i + order])
                   for i in range(len(tokens) - order + 1))


def bleu(candidates: Sequence[str], references: Sequence[str],
         max_order: int = 4) -> float:
    """Corpus-level BLEU with brevity penalty, add-one smoothing on orders
    2..max_order, on a 0-100 scale."""
    if len(candidates) != len(references):
        raise ValueError("candidate/reference counts differ")
    if not candidates:
        raise ValueError("empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    cand_len = ref_len = 0
    for candidate, reference in zip(candidates, references):
        cand_tokens = bleu_tokenize(candidate)
        ref_tokens = bleu_tokenize(reference)
        cand_len += len(cand_tokens)
        ref_len += len(ref_tokens)
        for order in range(1, max_order + 1):
            cand_ngrams = _ngram_counts(cand_tokens, order)
            ref_ngrams = _ngram_counts(ref_tokens, order)
            matches[order - 1] += sum(min(count, ref_ngrams[gram])
                                      for gram, count in cand_ngrams.items())
            totals[order - 1] += max(len(cand_tokens) - order + 1, 0)
    if totals[0] == 0 or matches[0] == 0:
        return 0.0
    log_sum = math.log(matches[0] / totals[0])
    for order in range(2, max_order + 1):
        log_sum += math.log((matches[order - 1] + 1) /
                            (totals[order - 1] + 1))
    geo_mean = math.exp(log_sum / max_order)
    brevity = 1.0 if cand_len >= ref_len else math.exp(1 - ref_len / cand_len)
    return 100.0 * geo_mean * brevity


# -- dialogue success ---------------------------------------------------------

# Placeholders that count as offering a concrete entity, per domain family.
_GENERIC_OFFER = ("name", "choice")
_OFFER_EXTRAS = {
    "train": ("trainid", "id"),
    "taxi": ("type", "color", "phone"),
}


def _offer_names(domain: str) -> set[str]:
    names = set()
    for base in _GENERIC_OFFER + _OFFER_EXTRAS.get(domain, ()):
        names.add(base)
        names.add(f"{domain}_{base}")
    return names


def _slot_mentioned(placeholders: set[str], domain: str, slot: str) -> bool:
    return slot in placeholders or f"{domain}_{slot}" in placeholders


def _entity_consistent(entity, constraints: Mapping[str, str],
                       threshold: float) -> bool:
    for slot, value in constraints.items():
        attr = entity.get(slot)
        if attr is None:
            continue  # booking/time slots carry no entity attribute
        if not fuzzy_equal(attr, value, threshold):
            return False
    return True


def multiwoz_success(turn_predictions: Sequence[Mapping], goal: GoalSpec,
                     db: Database, threshold: float = 0.9,
                     ) -> tuple[bool, dict[str, bool]]:
    """Corpus-based dialogue success against the goal annotation.

    Per goal domain: (inform) some turn of that domain offered an entity
    (name/choice-style placeholder) while its database result, re-queried
    from the predicted belief, contains a first match consistent with the
    goal constraints; (request) every requested slot's placeholder appears
    in some response of that domain. The dialogue succeeds when every goal
    domain does.
    """
    per_domain: dict[str, bool] = {}
    for domain in goal.domains:
        constraints = dict(goal.constraints.get(domain, {}))
        requested = goal.requested.get(domain, ())
        offers = _offer_names(domain)

        inform_ok = not constraints
        provided: set[str] = set()
        for turn in turn_predictions:
            if (turn.get("detected_domain") or "").lower() != domain:
                continue
            placeholders = set(extract_placeholders(
                turn.get("response_delex", "")))
            provided |= placeholders
            if not inform_ok and placeholders & offers:
                belief = BeliefState.from_dict(turn.get("belief", {}))
                if domain in db.domains:
                    result = db.query(domain, belief)
                    if result.count > 0 and result.entities and \
                            _entity_consistent(result.entities[0],
                                               constraints, threshold):
                        inform_ok = True
        request_ok = all(_slot_mentioned(provided, domain, slot)
                         for slot in requested)
        per_domain[domain] = inform_ok and request_ok
    return all(per_domain.values()), per_domain


def sgd_success(turn_predictions: Sequence[Mapping], dialogue: Dialogue,
                threshold: float = 0.9) -> bool:
    """SGD dialogue success: final state captured correctly and every
    annotated requested slot surfaced as a placeholder in some response."""
    if not turn_predictions or not dialogue.turns:
        return False
    final_pred = BeliefState.from_dict(turn_predictions[-1].get("belief", {}))
    final_gold = dialogue.turns[-1].gold_state or BeliefState()
    if not states_fuzzy_match(final_pred, final_gold, threshold):
        return False
    provided: set[str] = set()
    for turn in turn_predictions:
        provided |= set(extract_placeholders(turn.get("response_delex", "")))
    for turn in dialogue.turns:
        domain = (turn.gold_domain or "").lower()
        for slot in turn.requested_slots:
            if not _slot_mentioned(provided, domain, slot):
                return False
    return True


# -- human evaluation ---------------------------------------------------------

@dataclass(frozen=True)
class AnnotationRecord:
    """Answers to the three end-of-dialogue evaluation questions."""

    session_id: str
    goal_domains: tuple[str, ...]
    q1_domain_flags: Mapping[str, bool]
    q2_clarifications: int
    q3_all_captured: bool
    note: str = ""

    def __post_init__(self) -> None:
        unknown = set(self.q1_domain_flags) - set(self.goal_domains)
        if unknown:
            raise ValueError(f"q1 flags for non-goal domains: {sorted(unknown)}")
        if self.q2_clarifications < 0:
            raise ValueError("q2_clarifications must be >= 0")

    @property
    def q1_successful(self) -> int:
        return sum(1 for ok in self.q1_domain_flags.values() if ok)

    @property
    def all_subdialogues_ok(self) -> bool:
        return all(self.q1_domain_flags.get(d, False)
                   for d in self.goal_domains)

    def to_dict(self) -> dict:
        return {"session_id": self.session_id,
                "goal_domains": list(self.goal_domains),
                "q1_domain_flags": dict(self.q1_domain_flags),
                "q2_clarifications": self.q2_clarifications,
                "q3_all_captured": self.q3_all_captured,
                "note": self.note}

    @classmethod
    def from_dict(cls, data: Mapping) -> "AnnotationRecord":
        return cls(session_id=data["session_id"],
                   goal_domains=tuple(data["goal_domains"]),
                   q1_domain_flags=dict(data["q1_domain_flags"]),
                   q2_clarifications=int(data["q2_clarifications"]),
                   q3_all_captured=bool(data["q3_all_captured"]),
                   note=data.get("note", ""))


def aggregate_annotations(records: Sequence[AnnotationRecord]) -> dict:
    """Aggregate the per-dialogue answers into the summary table."""
    dialogues = len(records)
    subdialogues = sum(len(r.goal_domains) for r in records)
    successful_sub = sum(r.q1_successful for r in records)
    successful_dial = sum(1 for r in records if r.all_subdialogues_ok)
    captured = sum(1 for r in records if r.q3_all_captured)
    clarifications = sum(r.q2_clarifications for r in records)
    return {
        "dialogues": dialogues,
        "subdialogues": subdialogues,
        "clarify_per_dialogue": (clarifications / dialogues
                                 if dialogues else 0.0),
        "successful_subdialogues_ratio": (successful_sub / subdialogues
                                          if subdialogues else 0.0),
        "successful_subdialogues_percent": (round(100 * successful_sub /
                                                  subdialogues)
                                            if subdialogues else 0),
        "successful_dialogues_ratio": (successful_dial / dialogues
                                       if dialogues else 0.0),
        "successful_dialogues_percent": (round(100 * successful_dial /
                                               dialogues) if dialogues else 0),
        "correctly_captured_ratio": (captured / dialogues
                                     if dialogues else 0.0),
        "correctly_captured_percent": (round(100 * captured / dialogues)
                                       if dialogues else 0),
    }


# -- corpus-level evaluation --------------------------------------------------

@dataclass
class EvalReport:
    dataset: str = ""
    n_dialogues: int = 0
    n_turns: int = 0
    domain_accuracy: float = 0.0
    jga: float = 0.0
    slot_precision: float = 0.0
    slot_recall: float = 0.0
    slot_f1: float = 0.0
    bleu: float = 0.0
    success: float = 0.0
    per_domain: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "n_dialogues": self.n_dialogues,
            "n_turns": self.n_turns,
            "domain_accuracy": self.domain_accuracy,
            "jga": self.jga,
            "slot_precision": self.slot_precision,
            "slot_recall": self.slot_recall,
            "slot_f1": self.slot_f1,
            "bleu": self.bleu,
            "success": self.success,
            "per_domain": {d: dict(v) for d, v in sorted(self.per_domain.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalReport":
        return cls(**{**data, "per_domain": {d: dict(v) for d, v in
                                             data.get("per_domain", {}).items()}})

    def validate(self) -> None:
        for name in ("domain_accuracy", "jga", "slot_precision",
                     "slot_recall", "slot_f1", "success"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0,1]")
        if not 0.0 <= self.bleu <= 100.0:
            raise ValueError(f"bleu={self.bleu} outside [0,100]")


def load_predictions(path: Union[str, Path]) -> list[dict]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def evaluate_run(predictions: Sequence[Mapping], corpus: Corpus,
                 db: Optional[Database] = None, threshold: float = 0.9,
                 allow_extra_slots: bool = False) -> EvalReport:
    """Score a prediction file against corpus gold annotations."""
    by_turn = {(p["dialogue_id"], p["turn_index"]): p for p in predictions}
    dialogue_ids = {p["dialogue_id"] for p in predictions}

    pred_domains: list[str] = []
    gold_domains: list[str] = []
    pred_states: list[BeliefState] = []
    gold_states: list[BeliefState] = []
    candidates: list[str] = []
    references: list[str] = []
    per_domain_turns: dict[str, list[tuple[BeliefState, BeliefState]]] = {}
    per_domain_hits: dict[str, list[bool]] = {}

    evaluated_dialogues: list[Dialogue] = []
    for dialogue in corpus.dialogues:
        if dialogue.id not in dialogue_ids:
            continue
        evaluated_dialogues.append(dialogue)
        for index, turn in enumerate(dialogue.turns):
            pred = by_turn.get((dialogue.id, index))
            if pred is None:
                continue
            if turn.gold_domain:
                pred_domains.append(pred.get("detected_domain", ""))
                gold_domains.append(turn.gold_domain)
                per_domain_hits.setdefault(turn.gold_domain, []).append(
                    (pred.get("detected_domain", "") or "").lower()
                    == turn.gold_domain)
            if turn.gold_state is not None:
                pred_state = BeliefState.from_dict(pred.get("belief", {}))
                pred_states.append(pred_state)
                gold_states.append(turn.gold_state)
                if turn.gold_domain:
                    per_domain_turns.setdefault(turn.gold_domain, []).append(
                        (pred_state, turn.gold_state))
            if turn.system_response_delex is not None:
                candidates.append(pred.get("response_delex", ""))
                references.append(turn.system_response_delex)

    report = EvalReport(dataset=corpus.name,
                        n_dialogues=len(evaluated_dialogues),
                        n_turns=len(by_turn))
    if gold_domains:
        report.domain_accuracy = domain_accuracy(pred_domains, gold_domains)
    if gold_states:
        report.jga = joint_goal_accuracy(pred_states, gold_states, threshold,
                                         allow_extra_slots)
        precision, recall, f1 = slot_micro_f1(pred_states, gold_states,
                                              threshold)
        report.slot_precision, report.slot_recall, report.slot_f1 = \
            precision, recall, f1
    if candidates:
        report.bleu = bleu(candidates, references)

    successes: list[bool] = []
    domain_success: dict[str, list[bool]] = {}
    for dialogue in evaluated_dialogues:
        turns = [by_turn[(dialogue.id, i)] for i in range(len(dialogue.turns))
                 if (dialogue.id, i) in by_turn]
        if corpus.name == "sgd":
            successes.append(sgd_success(turns, dialogue, threshold))
        elif dialogue.goal is not None and db is not None:
            ok, flags = multiwoz_success(turns, dialogue.goal, db, threshold)
            successes.append(ok)
            for domain, flag in flags.items():
                domain_success.setdefault(domain, []).append(flag)
    if successes:
        report.success = sum(successes) / len(successes)

    for domain in sorted(set(per_domain_turns) | set(per_domain_hits)
                         | set(domain_success)):
        entry: dict[str, float] = {}
        hits = per_domain_hits.get(domain)
        if hits:
            entry["domain_accuracy"] = sum(hits) / len(hits)
        turns = per_domain_turns.get(domain)
        if turns:
            matched = sum(
                1 for pred, gold in turns
                if states_fuzzy_match(
                    BeliefState.from_dict({domain: pred.pairs(domain)}),
                    BeliefState.from_dict({domain: gold.pairs(domain)}),
                    threshold, allow_extra_slots))
            entry["jga"] = matched / len(turns)
            entry["turns"] = float(len(turns))
        flags = domain_success.get(domain)
        if flags:
            entry["success"] = sum(flags) / len(flags)
        report.per_domain[domain] = entry

    report.validate()
    return report
