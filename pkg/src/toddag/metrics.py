"""Corpus-level evaluation: Inform, Success, Success-F1, Match, BLEU, Score.

A prediction file maps dialog ids to the system's delexicalized responses
and the entity it offered per domain.  Inform asks whether every constrained
domain got a consistent offer; Success additionally requires every requested
slot's placeholder to surface in some response.  The combined Score is
(Inform + Success) / 2 + BLEU; on KVRET corpora Match plays the Inform role
and Success-F1 the Success role in the same formula.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, Dialog, GoalSpec
from .text import is_placeholder, placeholder_for, tokenize


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class PredictionEntry:
    responses: tuple[str, ...]
    offered: dict[str, dict[str, str]]


@dataclass(frozen=True)
class MetricsReport:
    inform: float
    success: float
    bleu: float
    score: float
    success_f1: float | None = None
    match: float | None = None

    def as_dict(self) -> dict:
        doc = {
            "inform": self.inform,
            "success": self.success,
            "bleu": self.bleu,
            "score": self.score,
        }
        if self.success_f1 is not None:
            doc["success_f1"] = self.success_f1
        if self.match is not None:
            doc["match"] = self.match
        return doc


def load_predictions(path: str | Path) -> dict[str, PredictionEntry]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = {}
    for dialog_id, raw in doc.items():
        out[str(dialog_id)] = PredictionEntry(
            responses=tuple(str(r) for r in raw.get("responses", [])),
            offered={
                str(d): {str(s): str(v) for s, v in pairs.items()}
                for d, pairs in raw.get("offered", {}).items()
            },
        )
    return out


def dialog_inform(entry: PredictionEntry, goal: GoalSpec) -> bool:
    """True iff every constrained domain got an offer matching all constraints."""
    for domain, constraints in goal.informable.items():
        offered = entry.offered.get(domain)
        if offered is None:
            return False
        for slot, value in constraints.items():
            if offered.get(slot) != value:
                return False
    return True


def _requested_placeholders(goal: GoalSpec) -> set[str]:
    return {
        placeholder_for(slot) for slots in goal.requestable.values() for slot in slots
    }


def _provided_placeholders(entry: PredictionEntry) -> set[str]:
    provided: set[str] = set()
    for response in entry.responses:
        for token in tokenize(response):
            if is_placeholder(token):
                provided.add(token)
    return provided


def dialog_success(entry: PredictionEntry, goal: GoalSpec) -> bool:
    """Informed and every requested slot's placeholder surfaced in a response."""
    if not dialog_inform(entry, goal):
        return False
    return _requested_placeholders(goal) <= _provided_placeholders(entry)


def dialog_success_f1(entry: PredictionEntry, goal: GoalSpec) -> float:
    """Harmonic mean of provided/requested slot precision and recall, in [0, 1]."""
    requested = _requested_placeholders(goal)
    provided = _provided_placeholders(entry)
    hits = len(requested & provided)
    precision = hits / len(provided) if provided else 0.0
    recall = hits / len(requested) if requested else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def bleu(predictions: list[str], references: list[str]) -> float:
    """Corpus BLEU-4, uniform weights, add-one smoothing on n >= 2 counts."""
    if len(predictions) != len(references):
        raise MetricsError(
            f"{len(predictions)} predictions vs {len(references)} references"
        )
    if not predictions:
        raise MetricsError("empty corpus")
    matched = [0, 0, 0, 0]
    total = [0, 0, 0, 0]
    hyp_len = 0
    ref_len = 0
    for hyp_text, ref_text in zip(predictions, references):
        hyp = tokenize(hyp_text)
        ref = tokenize(ref_text)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            hyp_grams = Counter(zip(*(hyp[i:] for i in range(n)))) if len(hyp) >= n else Counter()
            ref_grams = Counter(zip(*(ref[i:] for i in range(n)))) if len(ref) >= n else Counter()
            total[n - 1] += sum(hyp_grams.values())
            matched[n - 1] += sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
    if total[0] == 0 or matched[0] == 0:
        return 0.0
    precisions = [matched[0] / total[0]]
    precisions += [(matched[n] + 1) / (total[n] + 1) for n in (1, 2, 3)]
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(sum(math.log(p) for p in precisions) / 4.0) * 100.0


def score(inform: float, success: float, bleu_value: float) -> float:
    return (inform + success) / 2.0 + bleu_value


def evaluate(
    corpus: Corpus,
    predictions: dict[str, PredictionEntry],
    dataset: str = "multiwoz",
    dialog_ids: list[str] | None = None,
) -> MetricsReport:
    """Score predictions for the corpus test split (or an explicit id list)."""
    if dialog_ids is None:
        dialogs = corpus.test_dialogs()
    else:
        dialogs = [corpus.dialog(i) for i in dialog_ids]
    if not dialogs:
        raise MetricsError("no dialogs to evaluate")

    informed: list[bool] = []
    succeeded: list[bool] = []
    f1_values: list[float] = []
    hyp_texts: list[str] = []
    ref_texts: list[str] = []
    for dialog in dialogs:
        goal = corpus.goal_index.get(dialog.id)
        if goal is None:
            raise MetricsError(f"dialog {dialog.id} has no goal annotation")
        entry = predictions.get(dialog.id)
        if entry is None:
            raise MetricsError(f"no prediction for dialog {dialog.id}")
        if len(entry.responses) != len(dialog.turns):
            raise MetricsError(
                f"dialog {dialog.id}: {len(entry.responses)} responses"
                f" vs {len(dialog.turns)} turns"
            )
        informed.append(dialog_inform(entry, goal))
        succeeded.append(dialog_success(entry, goal))
        f1_values.append(dialog_success_f1(entry, goal))
        hyp_texts.extend(entry.responses)
        ref_texts.extend(turn.response_delex for turn in dialog.turns)

    inform_pct = 100.0 * sum(informed) / len(dialogs)
    success_pct = 100.0 * sum(succeeded) / len(dialogs)
    f1_pct = 100.0 * sum(f1_values) / len(dialogs)
    bleu_value = bleu(hyp_texts, ref_texts)

    if dataset == "kvret":
        # Match stands in for Inform and Success-F1 for Success in the Score.
        return MetricsReport(
            inform=inform_pct,
            success=f1_pct,
            bleu=bleu_value,
            score=score(inform_pct, f1_pct, bleu_value),
            success_f1=f1_pct,
            match=inform_pct,
        )
    return MetricsReport(
        inform=inform_pct,
        success=success_pct,
        bleu=bleu_value,
        score=score(inform_pct, success_pct, bleu_value),
    )


DOMAIN_ABBREVIATIONS = {
    "taxi": "tx",
    "attraction": "at",
    "restaurant": "re",
    "hotel": "ho",
    "train": "tr",
}


def category_key(dialog: Dialog) -> str:
    return ", ".join(DOMAIN_ABBREVIATIONS.get(d, d) for d in dialog.domains)


def error_by_category(dialogs: list[Dialog], success_flags: dict[str, bool]) -> dict[str, float]:
    """Share of unsuccessful dialogs per ordered domain-sequence category."""
    totals: Counter[str] = Counter()
    failures: Counter[str] = Counter()
    for dialog in dialogs:
        if dialog.id not in success_flags:
            raise MetricsError(f"no success flag for dialog {dialog.id}")
        key = category_key(dialog)
        totals[key] += 1
        if not success_flags[dialog.id]:
            failures[key] += 1
    return {key: failures[key] / totals[key] for key in sorted(totals)}
