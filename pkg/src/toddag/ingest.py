"""Adapters normalizing raw MultiWOZ-2.0-shaped and KVRET-shaped dumps.

Both adapters reject internally inconsistent source annotations with a
repairable error report instead of auto-repairing them, and refuse to drop
annotation fields they do not recognize.  Delexicalization is the toolkit's
own canonical scheme: annotated slot values found in an utterance are
replaced by ``[value_<slot>]`` placeholders, longest value first.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .corpus import (
    Corpus,
    CorpusParseError,
    CorpusValidationError,
    Dialog,
    DialogState,
    GoalSpec,
    SystemAct,
    Turn,
    TurnDelexMap,
    first_appearance_domains,
    validate_corpus,
)
from .delex import DelexEntry, DelexMap, delexicalize
from .text import placeholder_for

_SKIP_VALUES = {"", "none", "not mentioned", "?"}


def _normalize_slot(slot: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", slot.strip().lower()).strip("_")


def _delex_utterance(text: str, value_slots: list[tuple[str, str]]) -> tuple[str, DelexMap]:
    """Replace annotated values in ``text``; longest values claim spans first."""
    claimed: list[tuple[int, int, str, str]] = []

    def _overlaps(start: int, end: int) -> bool:
        return any(start < e and s < end for s, e, _, _ in claimed)

    for value, slot in sorted(value_slots, key=lambda vs: -len(vs[0])):
        if not value:
            continue
        for match in re.finditer(rf"(?<!\w){re.escape(value)}(?!\w)", text):
            if not _overlaps(match.start(), match.end()):
                claimed.append((match.start(), match.end(), value, slot))
    entries = tuple(
        DelexEntry(placeholder=placeholder_for(slot), value=value, start=start, end=end)
        for start, end, value, slot in sorted(claimed)
    )
    delex_map = DelexMap(entries)
    return delexicalize(text, delex_map), delex_map


def _read_json(path: Path) -> object:
    if not path.exists():
        raise CorpusParseError(f"required file missing: {path.name}", str(path.parent))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"not valid JSON: {exc.msg}", f"{path.name} line {exc.lineno}") from exc


def _check_fields(raw: dict, known: set[str], locus: str) -> None:
    unknown = set(raw) - known
    if unknown:
        raise CorpusParseError(
            f"unmapped annotation fields {sorted(unknown)}; refusing to drop them silently",
            locus,
        )


# ---------------------------------------------------------------------------
# MultiWOZ 2.0

_GOAL_KEYS = {"info", "reqt", "book", "fail_info", "fail_book"}
_GOAL_META_KEYS = {"message", "topic", "eod", "messageLen"}
_METADATA_KEYS = {"book", "semi"}
_LOG_KEYS = {"text", "metadata"}


def ingest_multiwoz(raw_dir: str | Path) -> Corpus:
    """Normalize a MultiWOZ-2.0-format directory into a canonical corpus."""
    raw_dir = Path(raw_dir)
    data = _read_json(raw_dir / "data.json")
    acts_doc = _read_json(raw_dir / "dialogue_acts.json")
    val_ids = _read_id_list(raw_dir / "valListFile.txt")
    test_ids = _read_id_list(raw_dir / "testListFile.txt")

    dialogs: list[Dialog] = []
    goals: dict[str, GoalSpec] = {}
    ontology: set[tuple[str, str]] = set()
    act_vocab: set[str] = set()

    for dialog_id in data:
        raw_dialog = data[dialog_id]
        _check_fields(raw_dialog, {"goal", "log"}, dialog_id)
        goals[dialog_id] = _multiwoz_goal(raw_dialog.get("goal", {}), dialog_id, ontology)
        log = raw_dialog["log"]
        if len(log) % 2 != 0:
            raise CorpusValidationError(
                f"log has odd length {len(log)}; user/system turns must pair up",
                dialog_id=dialog_id,
            )
        acts_key = dialog_id[:-5] if dialog_id.endswith(".json") else dialog_id
        dialog_acts = acts_doc.get(acts_key, {})
        turns = []
        for t in range(len(log) // 2):
            user_raw, system_raw = log[2 * t], log[2 * t + 1]
            _check_fields(user_raw, _LOG_KEYS, f"{dialog_id} log[{2 * t}]")
            _check_fields(system_raw, _LOG_KEYS, f"{dialog_id} log[{2 * t + 1}]")
            state = _multiwoz_state(system_raw.get("metadata", {}), dialog_id, t)
            acts = _multiwoz_acts(dialog_acts.get(str(t + 1), {}), dialog_id, t)
            turns.append(_build_turn(t, user_raw["text"], system_raw["text"], state, acts))
            for domain, slot, _ in state.triples():
                ontology.add((domain, slot))
            for act in acts:
                act_vocab.add(act.act)
                if act.slot:
                    ontology.add((act.domain, act.slot))
        dialogs.append(
            Dialog(id=dialog_id, domains=first_appearance_domains(turns), turns=tuple(turns))
        )

    corpus = Corpus(
        dataset_id="multiwoz",
        dialogs=tuple(dialogs),
        ontology=frozenset(ontology),
        goal_index=goals,
        act_vocab=frozenset(act_vocab),
        splits={"validation": tuple(val_ids), "test": tuple(test_ids)},
    )
    validate_corpus(corpus)
    return corpus


def _read_id_list(path: Path) -> list[str]:
    if not path.exists():
        raise CorpusParseError(f"required file missing: {path.name}", str(path.parent))
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _multiwoz_goal(raw: dict, dialog_id: str, ontology: set[tuple[str, str]]) -> GoalSpec:
    informable: dict[str, dict[str, str]] = {}
    requestable: dict[str, tuple[str, ...]] = {}
    for domain, spec in raw.items():
        if domain in _GOAL_META_KEYS:
            continue
        if not isinstance(spec, dict) or not spec:
            continue
        _check_fields(spec, _GOAL_KEYS, f"{dialog_id} goal.{domain}")
        domain = domain.lower()
        info = {
            _normalize_slot(s): str(v)
            for s, v in spec.get("info", {}).items()
            if str(v).lower() not in _SKIP_VALUES
        }
        if info:
            informable[domain] = info
            ontology.update((domain, s) for s in info)
        reqt = tuple(sorted(_normalize_slot(s) for s in spec.get("reqt", [])))
        if reqt:
            requestable[domain] = reqt
            ontology.update((domain, s) for s in reqt)
    return GoalSpec(informable=informable, requestable=requestable)


def _multiwoz_state(metadata: dict, dialog_id: str, turn: int) -> DialogState:
    slots: dict[str, dict[str, str]] = {}
    for domain, tracks in metadata.items():
        _check_fields(tracks, _METADATA_KEYS, f"{dialog_id} turn {turn} metadata.{domain}")
        domain = domain.lower()
        pairs: dict[str, str] = {}
        for slot, value in tracks.get("semi", {}).items():
            if str(value).lower() not in _SKIP_VALUES:
                pairs[_normalize_slot(slot)] = str(value)
        for slot, value in tracks.get("book", {}).items():
            if slot == "booked":
                continue  # DB trace emitted by the wizard tool, not a user constraint
            if str(value).lower() not in _SKIP_VALUES:
                pairs[_normalize_slot(f"book_{slot}")] = str(value)
        if pairs:
            slots[domain] = pairs
    return DialogState(slots)


def _multiwoz_acts(raw: object, dialog_id: str, turn: int) -> tuple[SystemAct, ...]:
    if not isinstance(raw, dict):  # "No Annotation"
        return ()
    acts: list[SystemAct] = []
    for domain_act, pairs in raw.items():
        if "-" not in domain_act:
            raise CorpusParseError(
                f"act key {domain_act!r} is not Domain-Act shaped", f"{dialog_id} turn {turn}"
            )
        domain, act = domain_act.lower().split("-", 1)
        for slot, _value in pairs:
            slot = _normalize_slot(slot)
            acts.append(SystemAct(act=act, domain=domain, slot="" if slot == "none" else slot))
    return tuple(acts)


def _build_turn(
    index: int, user: str, response: str, state: DialogState, acts: tuple[SystemAct, ...]
) -> Turn:
    value_slots = [(value, slot) for _, slot, value in sorted(state.triples())]
    user_delex, user_map = _delex_utterance(user, value_slots)
    response_delex, response_map = _delex_utterance(response, value_slots)
    return Turn(
        index=index,
        user=user,
        user_delex=user_delex,
        response=response,
        response_delex=response_delex,
        state=state,
        acts=acts,
        delex_map=TurnDelexMap(user=user_map, response=response_map),
    )


# ---------------------------------------------------------------------------
# KVRET

_SCENARIO_KEYS = {"kb", "task", "uuid"}
_DRIVER_KEYS = {"utterance", "end_dialogue", "requested", "slots"}
_ASSISTANT_KEYS = {"utterance", "requested", "slots", "end_dialogue"}

_KVRET_FILES = {
    "train": "kvret_train_public.json",
    "validation": "kvret_dev_public.json",
    "test": "kvret_test_public.json",
}


def ingest_kvret(raw_dir: str | Path) -> Corpus:
    """Normalize a KVRET-format directory into a canonical corpus."""
    raw_dir = Path(raw_dir)
    dialogs: list[Dialog] = []
    goals: dict[str, GoalSpec] = {}
    ontology: set[tuple[str, str]] = set()
    splits: dict[str, list[str]] = {"validation": [], "test": []}

    for split, filename in _KVRET_FILES.items():
        raw_dialogs = _read_json(raw_dir / filename)
        if not isinstance(raw_dialogs, list):
            raise CorpusParseError("expected a list of dialogs", filename)
        for i, raw in enumerate(raw_dialogs):
            dialog, goal = _kvret_dialog(raw, f"{split}-{i}", ontology)
            dialogs.append(dialog)
            goals[dialog.id] = goal
            if split in splits:
                splits[split].append(dialog.id)

    corpus = Corpus(
        dataset_id="kvret",
        dialogs=tuple(dialogs),
        ontology=frozenset(ontology),
        goal_index=goals,
        act_vocab=frozenset({"inform"}),
        splits={name: tuple(ids) for name, ids in splits.items()},
    )
    validate_corpus(corpus)
    return corpus


def _kvret_dialog(
    raw: dict, fallback_id: str, ontology: set[tuple[str, str]]
) -> tuple[Dialog, GoalSpec]:
    _check_fields(raw, {"scenario", "dialogue"}, fallback_id)
    scenario = raw["scenario"]
    _check_fields(scenario, _SCENARIO_KEYS, f"{fallback_id} scenario")
    domain = scenario["task"]["intent"].lower()
    dialog_id = str(scenario.get("uuid") or fallback_id)

    exchanges: list[tuple[dict, dict]] = []
    pending_driver: dict | None = None
    for entry in raw["dialogue"]:
        speaker = entry.get("turn")
        data = entry.get("data", {})
        if speaker == "driver":
            _check_fields(data, _DRIVER_KEYS, f"{dialog_id} driver turn")
            if pending_driver is not None:
                raise CorpusValidationError(
                    "two driver turns in a row", dialog_id=dialog_id, turn_index=len(exchanges)
                )
            pending_driver = data
        elif speaker == "assistant":
            _check_fields(data, _ASSISTANT_KEYS, f"{dialog_id} assistant turn")
            if pending_driver is None:
                raise CorpusValidationError(
                    "assistant turn without preceding driver turn",
                    dialog_id=dialog_id,
                    turn_index=len(exchanges),
                )
            exchanges.append((pending_driver, data))
            pending_driver = None
        else:
            raise CorpusParseError(f"unknown speaker {speaker!r}", dialog_id)
    if pending_driver is not None:
        raise CorpusValidationError(
            "dialog ends on an unanswered driver turn",
            dialog_id=dialog_id,
            turn_index=len(exchanges),
        )

    turns: list[Turn] = []
    accumulated: dict[str, str] = {}
    requested: set[str] = set()
    for t, (driver, assistant) in enumerate(exchanges):
        for slot, value in (assistant.get("slots") or {}).items():
            if str(value).lower() not in _SKIP_VALUES:
                accumulated[_normalize_slot(slot)] = str(value)
        for slot, wanted in (assistant.get("requested") or {}).items():
            if wanted:
                requested.add(_normalize_slot(slot))
        # the domain key is always present: a KVRET dialog belongs to its
        # scenario intent even before any slot has been annotated
        state = DialogState({domain: dict(accumulated)})
        acts = tuple(
            SystemAct(act="inform", domain=domain, slot=_normalize_slot(slot))
            for slot in sorted(assistant.get("slots") or {})
        )
        turns.append(_build_turn(t, driver["utterance"], assistant["utterance"], state, acts))
        ontology.update((domain, s) for s in accumulated)
        ontology.update((domain, a.slot) for a in acts if a.slot)

    ontology.update((domain, s) for s in requested)
    goal = GoalSpec(
        informable={domain: dict(accumulated)} if accumulated else {},
        requestable={domain: tuple(sorted(requested))} if requested else {},
    )
    return Dialog(id=dialog_id, domains=first_appearance_domains(turns), turns=tuple(turns)), goal
