"""Semantics-preservation filter for candidate augmented utterances.

A candidate replaces the gold user utterance only if a predictor, shown the
dialog context and the candidate, reproduces the turn's gold dialog state
(as a set of (domain, slot, value) triples) and the gold system acts (as a
multiset).  The predictor is an interface: production use points it at a
trained dialog system over the wire, tests use the deterministic rule-table
predictor so no model is ever needed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Protocol, Sequence

from .corpus import DialogState, SystemAct, Turn
from .text import tokenize

FilterReason = Literal["accepted", "state_mismatch", "act_mismatch"]


class Predictor(Protocol):
    def predict(
        self, context: Sequence[str], utterance: str
    ) -> tuple[DialogState, tuple[SystemAct, ...]]:
        """Predicted (dialog state, system acts) for the turn being checked."""


@dataclass(frozen=True)
class FilterDecision:
    accepted: bool
    reason: FilterReason


def check(
    predictor: Predictor,
    context: Sequence[str],
    gold: Turn,
    candidate_utterance: str,
) -> FilterDecision:
    """Accept the candidate iff the predictor reproduces the gold annotations.

    State equality is order-insensitive (set of triples); acts compare as a
    multiset.  Predictor transport failures propagate as errors, they are
    never treated as acceptance.
    """
    predicted_state, predicted_acts = predictor.predict(context, candidate_utterance)
    if predicted_state.triples() != gold.state.triples():
        return FilterDecision(accepted=False, reason="state_mismatch")
    if Counter(a.key() for a in predicted_acts) != Counter(a.key() for a in gold.acts):
        return FilterDecision(accepted=False, reason="act_mismatch")
    return FilterDecision(accepted=True, reason="accepted")


class GoldPredictor:
    """Always answers with the gold annotations it was built from."""

    def __init__(self, state: DialogState, acts: tuple[SystemAct, ...]) -> None:
        self._state = state
        self._acts = acts

    def predict(self, context, utterance):
        return self._state, self._acts


class EmptyPredictor:
    """Predicts an empty state and no acts for every input."""

    def predict(self, context, utterance):
        return DialogState(), ()


@dataclass(frozen=True)
class StateRule:
    when_tokens: tuple[str, ...]
    domain: str
    slot: str
    value: str


@dataclass(frozen=True)
class ActRule:
    when_tokens: tuple[str, ...]
    act: str
    domain: str
    slot: str = ""


class RuleTablePredictor:
    """Deterministic keyword predictor driven by a JSON rule file.

    State rules fire when all their trigger tokens occur anywhere in the
    context plus the candidate utterance (the state accumulates over the
    dialog); act rules look at the candidate utterance only.  Rules are
    applied in file order; a later state rule overrides an earlier one for
    the same (domain, slot).
    """

    def __init__(self, state_rules: Sequence[StateRule], act_rules: Sequence[ActRule]) -> None:
        self.state_rules = tuple(state_rules)
        self.act_rules = tuple(act_rules)

    @classmethod
    def from_dict(cls, raw: dict) -> "RuleTablePredictor":
        state_rules = [
            StateRule(
                when_tokens=tuple(r["when_tokens"]),
                domain=r["domain"],
                slot=r["slot"],
                value=r["value"],
            )
            for r in raw.get("state_rules", [])
        ]
        act_rules = [
            ActRule(
                when_tokens=tuple(r["when_tokens"]),
                act=r["act"],
                domain=r["domain"],
                slot=r.get("slot", ""),
            )
            for r in raw.get("act_rules", [])
        ]
        return cls(state_rules, act_rules)

    @classmethod
    def load(cls, path: str | Path) -> "RuleTablePredictor":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def predict(self, context, utterance):
        history_tokens = set()
        for text in context:
            history_tokens.update(tokenize(text))
        utterance_tokens = set(tokenize(utterance))
        all_tokens = history_tokens | utterance_tokens

        slots: dict[str, dict[str, str]] = {}
        for rule in self.state_rules:
            if all(t in all_tokens for t in rule.when_tokens):
                slots.setdefault(rule.domain, {})[rule.slot] = rule.value
        acts: list[SystemAct] = []
        for rule in self.act_rules:
            if all(t in utterance_tokens for t in rule.when_tokens):
                act = SystemAct(act=rule.act, domain=rule.domain, slot=rule.slot)
                if act not in acts:
                    acts.append(act)
        return DialogState(slots), tuple(acts)


class HttpPredictor:
    """Predictor backed by a /v1/predict endpoint."""

    def __init__(self, client) -> None:
        self._client = client

    def predict(self, context, utterance):
        state_raw, acts_raw = self._client.predict(list(context), utterance)
        state = DialogState(
            {str(d): {str(s): str(v) for s, v in pairs.items()} for d, pairs in state_raw.items()}
        )
        acts = tuple(
            SystemAct(act=str(a["act"]), domain=str(a["domain"]), slot=str(a.get("slot") or ""))
            for a in acts_raw
        )
        return state, acts
