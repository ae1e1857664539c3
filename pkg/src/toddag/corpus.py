"""Canonical data model for annotated task-oriented dialog corpora.

A corpus is a validated, immutable collection of dialogs.  Each turn pairs a
user utterance with a system response, both in lexical and delexicalized
form, together with the dialog state accumulated so far and the system acts
of the turn.  The canonical on-disk form is a UTF-8 JSON document whose
serialization is byte-deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .delex import DelexEntry, DelexMap, DelexError, relexicalize, validate_map
from .text import find_placeholders, placeholder_for


class CorpusError(Exception):
    """Base class for corpus loading and validation failures."""


class CorpusParseError(CorpusError):
    def __init__(self, message: str, locus: str = "") -> None:
        super().__init__(f"{message}" + (f" (at {locus})" if locus else ""))
        self.locus = locus


class CorpusValidationError(CorpusError):
    def __init__(self, message: str, dialog_id: str = "", turn_index: int | None = None) -> None:
        where = ""
        if dialog_id:
            where = f" [dialog {dialog_id}" + (
                f", turn {turn_index}]" if turn_index is not None else "]"
            )
        super().__init__(message + where)
        self.dialog_id = dialog_id
        self.turn_index = turn_index


@dataclass(frozen=True)
class SystemAct:
    act: str
    domain: str
    slot: str = ""

    def key(self) -> tuple[str, str, str]:
        return (self.act, self.domain, self.slot)


@dataclass(frozen=True)
class DialogState:
    """Per-turn map of domain -> slot -> value accumulated so far."""

    slots: dict[str, dict[str, str]] = field(default_factory=dict)

    def triples(self) -> frozenset[tuple[str, str, str]]:
        return frozenset(
            (domain, slot, value)
            for domain, pairs in self.slots.items()
            for slot, value in pairs.items()
        )

    def pairs(self) -> frozenset[tuple[str, str]]:
        return frozenset((d, s) for d, s, _ in self.triples())

    def delex(self) -> "DialogState":
        """The state with every value replaced by its canonical placeholder."""
        return DialogState(
            {
                domain: {slot: placeholder_for(slot) for slot in sorted(pairs)}
                for domain, pairs in sorted(self.slots.items())
            }
        )

    def key(self) -> tuple:
        """Canonical hashable form (used for delexicalized state matching)."""
        return tuple(
            (domain, tuple(sorted(pairs.items())))
            for domain, pairs in sorted(self.slots.items())
        )

    def domains(self) -> list[str]:
        return sorted(self.slots)

    def is_empty(self) -> bool:
        return not any(self.slots.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DialogState):
            return NotImplemented
        return self.triples() == other.triples()


@dataclass(frozen=True)
class TurnDelexMap:
    """Span maps for the two utterances of a turn."""

    user: DelexMap = DelexMap()
    response: DelexMap = DelexMap()


@dataclass(frozen=True)
class Turn:
    index: int
    user: str
    user_delex: str
    response: str
    response_delex: str
    state: DialogState
    acts: tuple[SystemAct, ...] = ()
    delex_map: TurnDelexMap = TurnDelexMap()


@dataclass(frozen=True)
class Dialog:
    id: str
    domains: tuple[str, ...]
    turns: tuple[Turn, ...]


@dataclass(frozen=True)
class GoalSpec:
    """Per-domain informable constraints and requestable slots."""

    informable: dict[str, dict[str, str]] = field(default_factory=dict)
    requestable: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def domains(self) -> set[str]:
        return set(self.informable) | set(self.requestable)


@dataclass(frozen=True)
class Corpus:
    dataset_id: str
    dialogs: tuple[Dialog, ...]
    ontology: frozenset[tuple[str, str]]
    goal_index: dict[str, GoalSpec] = field(default_factory=dict)
    act_vocab: frozenset[str] = frozenset()
    splits: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.dialogs)

    def __iter__(self) -> Iterator[Dialog]:
        return iter(self.dialogs)

    def dialog(self, dialog_id: str) -> Dialog:
        for d in self.dialogs:
            if d.id == dialog_id:
                return d
        raise KeyError(dialog_id)

    def validation_ids(self) -> frozenset[str]:
        return frozenset(self.splits.get("validation", ()))

    def test_ids(self) -> frozenset[str]:
        return frozenset(self.splits.get("test", ()))

    def train_dialogs(self) -> list[Dialog]:
        held_out = self.validation_ids() | self.test_ids()
        return [d for d in self.dialogs if d.id not in held_out]

    def test_dialogs(self) -> list[Dialog]:
        test = self.test_ids()
        return [d for d in self.dialogs if d.id in test]


def first_appearance_domains(turns: Iterable[Turn]) -> tuple[str, ...]:
    """Deduplicated first-appearance order of state domains across turns.

    Within a single turn the domains are visited in sorted order, matching
    the canonical serialization.
    """
    seen: list[str] = []
    for turn in turns:
        for domain in sorted(turn.state.slots):
            if domain not in seen:
                seen.append(domain)
    return tuple(seen)


def validate_corpus(corpus: Corpus) -> None:
    seen_ids: set[str] = set()
    for dialog in corpus.dialogs:
        if dialog.id in seen_ids:
            raise CorpusValidationError("duplicate dialog id", dialog_id=dialog.id)
        seen_ids.add(dialog.id)
        _validate_dialog(dialog, corpus)
    for split, ids in corpus.splits.items():
        for dialog_id in ids:
            if dialog_id not in seen_ids:
                raise CorpusValidationError(
                    f"split {split!r} names unknown dialog", dialog_id=dialog_id
                )
    for dialog_id, goal in corpus.goal_index.items():
        if dialog_id not in seen_ids:
            raise CorpusValidationError("goal for unknown dialog", dialog_id=dialog_id)
        for domain, pairs in goal.informable.items():
            for slot in pairs:
                if (domain, slot) not in corpus.ontology:
                    raise CorpusValidationError(
                        f"goal slot ({domain}, {slot}) not in ontology", dialog_id=dialog_id
                    )
        for domain, slots in goal.requestable.items():
            for slot in slots:
                if (domain, slot) not in corpus.ontology:
                    raise CorpusValidationError(
                        f"goal slot ({domain}, {slot}) not in ontology", dialog_id=dialog_id
                    )


def _validate_dialog(dialog: Dialog, corpus: Corpus) -> None:
    for position, turn in enumerate(dialog.turns):
        if turn.index != position:
            raise CorpusValidationError(
                f"turn indices not contiguous, found {turn.index} at position {position}",
                dialog_id=dialog.id,
                turn_index=position,
            )
        _validate_turn(turn, dialog.id, corpus)
    expected = first_appearance_domains(dialog.turns)
    if dialog.domains != expected:
        raise CorpusValidationError(
            f"domains {list(dialog.domains)} != first-appearance order {list(expected)}",
            dialog_id=dialog.id,
        )


def _validate_turn(turn: Turn, dialog_id: str, corpus: Corpus) -> None:
    for side, lexical, delexed, entries in (
        ("user", turn.user, turn.user_delex, turn.delex_map.user),
        ("response", turn.response, turn.response_delex, turn.delex_map.response),
    ):
        try:
            validate_map(entries)
            roundtrip = relexicalize(delexed, entries)
        except DelexError as exc:
            raise CorpusValidationError(
                f"{side} delex map invalid: {exc}", dialog_id=dialog_id, turn_index=turn.index
            ) from exc
        if roundtrip != lexical:
            raise CorpusValidationError(
                f"{side} delex round-trip mismatch: {roundtrip!r} != {lexical!r}",
                dialog_id=dialog_id,
                turn_index=turn.index,
            )
        mapped = sorted(entries.placeholders())
        present = find_placeholders(delexed)
        # every placeholder in the text must be consumable by the map
        if sorted(present) != mapped:
            raise CorpusValidationError(
                f"{side} placeholders {present} do not match delex map {mapped}",
                dialog_id=dialog_id,
                turn_index=turn.index,
            )
    for domain, slot, value in turn.state.triples():
        if not value:
            raise CorpusValidationError(
                f"empty value for state slot ({domain}, {slot})",
                dialog_id=dialog_id,
                turn_index=turn.index,
            )
        if (domain, slot) not in corpus.ontology:
            raise CorpusValidationError(
                f"state slot ({domain}, {slot}) not in ontology",
                dialog_id=dialog_id,
                turn_index=turn.index,
            )
    for act in turn.acts:
        if act.act not in corpus.act_vocab:
            raise CorpusValidationError(
                f"act {act.act!r} not in declared act vocabulary",
                dialog_id=dialog_id,
                turn_index=turn.index,
            )
        if act.slot and (act.domain, act.slot) not in corpus.ontology:
            raise CorpusValidationError(
                f"act slot ({act.domain}, {act.slot}) not in ontology",
                dialog_id=dialog_id,
                turn_index=turn.index,
            )


# ---------------------------------------------------------------------------
# canonical JSON serialization


def _map_to_json(entries: DelexMap) -> list[dict]:
    return [
        {"placeholder": e.placeholder, "value": e.value, "start": e.start, "end": e.end}
        for e in entries.entries
    ]


def _map_from_json(raw: list, locus: str) -> DelexMap:
    entries = []
    for i, item in enumerate(raw):
        try:
            entries.append(
                DelexEntry(
                    placeholder=item["placeholder"],
                    value=item["value"],
                    start=int(item["start"]),
                    end=int(item["end"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusParseError(f"bad delex entry: {exc}", f"{locus}[{i}]") from exc
    return DelexMap(tuple(entries))


def turn_to_json(turn: Turn) -> dict:
    return {
        "index": turn.index,
        "user": turn.user,
        "user_delex": turn.user_delex,
        "response": turn.response,
        "response_delex": turn.response_delex,
        "state": {d: dict(p) for d, p in sorted(turn.state.slots.items())},
        "acts": [{"act": a.act, "domain": a.domain, "slot": a.slot} for a in turn.acts],
        "delex_map": {
            "user": _map_to_json(turn.delex_map.user),
            "response": _map_to_json(turn.delex_map.response),
        },
    }


def corpus_to_json(corpus: Corpus) -> dict:
    return {
        "dataset_id": corpus.dataset_id,
        "ontology": sorted([d, s] for d, s in corpus.ontology),
        "act_vocab": sorted(corpus.act_vocab),
        "splits": {name: list(ids) for name, ids in sorted(corpus.splits.items())},
        "goals": {
            dialog_id: {
                "informable": {d: dict(p) for d, p in sorted(goal.informable.items())},
                "requestable": {d: sorted(s) for d, s in sorted(goal.requestable.items())},
            }
            for dialog_id, goal in sorted(corpus.goal_index.items())
        },
        "dialogs": [
            {
                "id": d.id,
                "domains": list(d.domains),
                "turns": [turn_to_json(t) for t in d.turns],
            }
            for d in corpus.dialogs
        ],
    }


def dumps_canonical(corpus: Corpus) -> str:
    return json.dumps(corpus_to_json(corpus), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def save_canonical(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(corpus), encoding="utf-8")


def _require(doc: dict, key: str, locus: str) -> object:
    if key not in doc:
        raise CorpusParseError(f"missing field {key!r}", locus)
    return doc[key]


def turn_from_json(raw: dict, locus: str) -> Turn:
    state_raw = _require(raw, "state", locus)
    if not isinstance(state_raw, dict):
        raise CorpusParseError("state must be an object", locus)
    state = DialogState(
        {str(d): {str(s): str(v) for s, v in pairs.items()} for d, pairs in state_raw.items()}
    )
    acts_raw = _require(raw, "acts", locus)
    acts = tuple(
        SystemAct(act=str(a["act"]), domain=str(a["domain"]), slot=str(a.get("slot") or ""))
        for a in acts_raw
    )
    maps_raw = _require(raw, "delex_map", locus)
    return Turn(
        index=int(_require(raw, "index", locus)),
        user=str(_require(raw, "user", locus)),
        user_delex=str(_require(raw, "user_delex", locus)),
        response=str(_require(raw, "response", locus)),
        response_delex=str(_require(raw, "response_delex", locus)),
        state=state,
        acts=acts,
        delex_map=TurnDelexMap(
            user=_map_from_json(maps_raw.get("user", []), f"{locus}.delex_map.user"),
            response=_map_from_json(maps_raw.get("response", []), f"{locus}.delex_map.response"),
        ),
    )


def corpus_from_json(doc: dict) -> Corpus:
    if not isinstance(doc, dict):
        raise CorpusParseError("top-level document must be an object")
    ontology = frozenset(
        (str(d), str(s)) for d, s in _require(doc, "ontology", "ontology")
    )
    goals = {}
    for dialog_id, raw in _require(doc, "goals", "goals").items():
        goals[str(dialog_id)] = GoalSpec(
            informable={
                str(d): {str(s): str(v) for s, v in pairs.items()}
                for d, pairs in raw.get("informable", {}).items()
            },
            requestable={
                str(d): tuple(str(s) for s in slots)
                for d, slots in raw.get("requestable", {}).items()
            },
        )
    dialogs = []
    for d_i, raw_dialog in enumerate(_require(doc, "dialogs", "dialogs")):
        locus = f"dialogs[{d_i}]"
        dialog_id = str(_require(raw_dialog, "id", locus))
        turns = tuple(
            turn_from_json(raw_turn, f"{locus}.turns[{t_i}]")
            for t_i, raw_turn in enumerate(_require(raw_dialog, "turns", locus))
        )
        dialogs.append(
            Dialog(
                id=dialog_id,
                domains=tuple(str(d) for d in _require(raw_dialog, "domains", locus)),
                turns=turns,
            )
        )
    corpus = Corpus(
        dataset_id=str(_require(doc, "dataset_id", "dataset_id")),
        dialogs=tuple(dialogs),
        ontology=ontology,
        goal_index=goals,
        act_vocab=frozenset(str(a) for a in doc.get("act_vocab", [])),
        splits={str(k): tuple(str(i) for i in v) for k, v in doc.get("splits", {}).items()},
    )
    validate_corpus(corpus)
    return corpus


def load_canonical(path: str | Path) -> Corpus:
    path = Path(path)
    if not path.exists():
        raise CorpusParseError(f"no such file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"not valid JSON: {exc.msg}", f"line {exc.lineno}") from exc
    return corpus_from_json(doc)


def replace_turn_texts(
    turn: Turn,
    *,
    user: str | None = None,
    user_delex: str | None = None,
    user_map: DelexMap | None = None,
) -> Turn:
    """Copy of ``turn`` with user-side text fields swapped out."""
    delex_map = turn.delex_map
    if user_map is not None:
        delex_map = TurnDelexMap(user=user_map, response=delex_map.response)
    return replace(
        turn,
        user=turn.user if user is None else user,
        user_delex=turn.user_delex if user_delex is None else user_delex,
        delex_map=delex_map,
    )
