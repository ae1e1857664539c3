"""Dialog-level augmentation built on delexicalized dialog-state matching.

Tree synthesis turns sampled dialogs into turn templates carrying the
previous, current and next delexicalized states, links templates whose
states chain, and random-walks the linked structure from a virtual root
until a final-turn template, re-filling slot values afterwards.

Act-response substitution swaps a turn's system act and response with those
of another turn that has the same delexicalized state.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..corpus import (
    Corpus,
    Dialog,
    DialogState,
    SystemAct,
    Turn,
    TurnDelexMap,
    first_appearance_domains,
)
from ..delex import DelexEntry, DelexMap
from ..text import PLACEHOLDER_RE, placeholder_for

ROOT_STATE = "ROOT"
LEAF_STATE = "LEAF"

StateKey = object  # tuple for real states, ROOT_STATE / LEAF_STATE sentinels


class SynthesisError(RuntimeError):
    pass


def delex_state_key(state: DialogState) -> tuple:
    return state.delex().key()


@dataclass(frozen=True)
class TurnTemplate:
    turn: Turn
    pds: StateKey
    cds: tuple
    nds: StateKey
    origin: tuple[str, int]


def extract_templates(dialogs: Iterable[Dialog]) -> list[TurnTemplate]:
    """One template per turn; first turns get ROOT, last turns get LEAF."""
    templates: list[TurnTemplate] = []
    for dialog in dialogs:
        keys = [delex_state_key(turn.state) for turn in dialog.turns]
        for i, turn in enumerate(dialog.turns):
            templates.append(
                TurnTemplate(
                    turn=turn,
                    pds=ROOT_STATE if i == 0 else keys[i - 1],
                    cds=keys[i],
                    nds=LEAF_STATE if i == len(dialog.turns) - 1 else keys[i + 1],
                    origin=(dialog.id, turn.index),
                )
            )
    return templates


@dataclass
class TemplateTree:
    templates: list[TurnTemplate]
    root_children: list[int]
    children: dict[int, list[int]]


def build_tree(templates: Sequence[TurnTemplate]) -> TemplateTree:
    """Link template j under template i iff i.nds == j.cds and j.pds == i.cds."""
    order = sorted(range(len(templates)), key=lambda j: (templates[j].origin, j))
    root_children = [j for j in order if templates[j].pds == ROOT_STATE]
    children: dict[int, list[int]] = {}
    for i, template in enumerate(templates):
        if template.nds == LEAF_STATE:
            children[i] = []
            continue
        children[i] = [
            j
            for j in order
            if templates[j].cds == template.nds and templates[j].pds == template.cds
        ]
    return TemplateTree(templates=list(templates), root_children=root_children, children=children)


def walk_tree(tree: TemplateTree, rng: random.Random, max_steps: int = 10_000) -> list[TurnTemplate]:
    """Random root-to-leaf walk choosing children uniformly."""
    if not tree.root_children:
        raise SynthesisError("no first-turn templates to start a walk from")
    path: list[TurnTemplate] = []
    node = rng.choice(tree.root_children)
    for _ in range(max_steps):
        template = tree.templates[node]
        path.append(template)
        if template.nds == LEAF_STATE:
            return path
        options = tree.children[node]
        if not options:
            raise SynthesisError(
                f"template from {template.origin} has a next state but no continuation"
            )
        node = rng.choice(options)
    raise SynthesisError(f"walk did not reach a final turn within {max_steps} steps")


def enumerate_paths(tree: TemplateTree, max_paths: int = 100_000) -> list[tuple[tuple[str, int], ...]]:
    """Exhaustive root-to-leaf template-origin paths (oracle for small corpora)."""
    paths: list[tuple[tuple[str, int], ...]] = []

    def _descend(node: int, trail: list[tuple[str, int]]) -> None:
        if len(paths) >= max_paths:
            raise SynthesisError("path enumeration exceeded the cap")
        template = tree.templates[node]
        trail = trail + [template.origin]
        if template.nds == LEAF_STATE:
            paths.append(tuple(trail))
            return
        for child in tree.children[node]:
            _descend(child, trail)

    for start in tree.root_children:
        _descend(start, [])
    return paths


# ---------------------------------------------------------------------------
# surface realization

ValuePool = dict[str, list[str]]


def collect_value_pool(dialogs: Iterable[Dialog]) -> ValuePool:
    """Values observed per placeholder token, from span maps and states."""
    values: dict[str, set[str]] = {}
    for dialog in dialogs:
        for turn in dialog.turns:
            for entries in (turn.delex_map.user, turn.delex_map.response):
                for entry in entries.entries:
                    values.setdefault(entry.placeholder, set()).add(entry.value)
            for _, slot, value in turn.state.triples():
                values.setdefault(placeholder_for(slot), set()).add(value)
    return {token: sorted(pool) for token, pool in values.items()}


def _realize_text(text: str, assignment: dict[str, str]) -> tuple[str, DelexMap]:
    entries: list[DelexEntry] = []
    pieces: list[str] = []
    cursor = 0
    offset = 0
    for match in PLACEHOLDER_RE.finditer(text):
        token = match.group()
        value = assignment[token]
        pieces.append(text[cursor : match.start()])
        offset += match.start() - cursor
        entries.append(
            DelexEntry(placeholder=token, value=value, start=offset, end=offset + len(value))
        )
        pieces.append(value)
        offset += len(value)
        cursor = match.end()
    pieces.append(text[cursor:])
    return "".join(pieces), DelexMap(tuple(entries))


def surface_realize(
    delex_dialog: Dialog, value_pool: ValuePool, rng: random.Random
) -> Dialog:
    """Fill placeholders; one value per placeholder token for the whole dialog."""
    tokens: set[str] = set()
    for turn in delex_dialog.turns:
        tokens.update(PLACEHOLDER_RE.findall(turn.user_delex))
        tokens.update(PLACEHOLDER_RE.findall(turn.response_delex))
        for _, slot, _ in turn.state.triples():
            tokens.add(placeholder_for(slot))
    assignment: dict[str, str] = {}
    for token in sorted(tokens):
        pool = value_pool.get(token, [])
        if not pool:
            raise SynthesisError(f"no observed value for slot placeholder {token}")
        assignment[token] = rng.choice(pool)

    realized_turns: list[Turn] = []
    for i, turn in enumerate(delex_dialog.turns):
        user, user_map = _realize_text(turn.user_delex, assignment)
        response, response_map = _realize_text(turn.response_delex, assignment)
        state = DialogState(
            {
                domain: {slot: assignment[placeholder_for(slot)] for slot in pairs}
                for domain, pairs in turn.state.slots.items()
            }
        )
        realized_turns.append(
            Turn(
                index=i,
                user=user,
                user_delex=turn.user_delex,
                response=response,
                response_delex=turn.response_delex,
                state=state,
                acts=turn.acts,
                delex_map=TurnDelexMap(user=user_map, response=response_map),
            )
        )
    return Dialog(
        id=delex_dialog.id,
        domains=first_appearance_domains(realized_turns),
        turns=tuple(realized_turns),
    )


def _delex_only_dialog(dialog_id: str, path: Sequence[TurnTemplate]) -> Dialog:
    """A dialog holding only the delexicalized content of a template path."""
    turns = []
    for i, template in enumerate(path):
        source = template.turn
        turns.append(
            Turn(
                index=i,
                user=source.user_delex,
                user_delex=source.user_delex,
                response=source.response_delex,
                response_delex=source.response_delex,
                state=source.state.delex(),
                acts=source.acts,
                delex_map=TurnDelexMap(),
            )
        )
    return Dialog(
        id=dialog_id,
        domains=first_appearance_domains(turns),
        turns=tuple(turns),
    )


DEFAULT_SAMPLE_SIZE = 50


def synthesize_dialog(
    corpus: Corpus,
    dialog_id: str,
    rng: random.Random,
    sample_size: int = DEFAULT_SAMPLE_SIZE,
) -> Dialog:
    """Sample dialogs with replacement, build the template tree, walk it."""
    source = corpus.train_dialogs()
    if not source:
        raise SynthesisError("corpus has no training dialogs to sample from")
    sampled = [source[rng.randrange(len(source))] for _ in range(sample_size)]
    templates = extract_templates(sampled)
    tree = build_tree(templates)
    path = walk_tree(tree, rng)
    delex_dialog = _delex_only_dialog(dialog_id, path)
    return surface_realize(delex_dialog, collect_value_pool(sampled), rng)


# ---------------------------------------------------------------------------
# act-response substitution


@dataclass(frozen=True)
class StateIndexEntry:
    acts: tuple[SystemAct, ...]
    response: str
    response_delex: str
    response_map: DelexMap
    origin: tuple[str, int]
    source_state: DialogState


@dataclass
class StateIndex:
    entries: dict[tuple, list[StateIndexEntry]]

    def lookup(self, state: DialogState) -> list[StateIndexEntry]:
        return self.entries.get(delex_state_key(state), [])


def build_state_index(corpus: Corpus) -> StateIndex:
    """Group (acts, response) pairs of training turns by delexicalized state."""
    entries: dict[tuple, list[StateIndexEntry]] = {}
    for dialog in corpus.train_dialogs():
        for turn in dialog.turns:
            entries.setdefault(delex_state_key(turn.state), []).append(
                StateIndexEntry(
                    acts=turn.acts,
                    response=turn.response,
                    response_delex=turn.response_delex,
                    response_map=turn.delex_map.response,
                    origin=(dialog.id, turn.index),
                    source_state=turn.state,
                )
            )
    return StateIndex(entries)


def act_response_substitute(
    dialog: Dialog, index: StateIndex, rng: random.Random, dialog_id: str | None = None
) -> Dialog:
    """Replace each turn's system act and response with a same-state sample."""
    turns = []
    for turn in dialog.turns:
        options = index.lookup(turn.state)
        if not options:
            raise SynthesisError(
                f"state of dialog {dialog.id} turn {turn.index} is missing from the index"
            )
        pick = rng.choice(options)
        turns.append(
            Turn(
                index=turn.index,
                user=turn.user,
                user_delex=turn.user_delex,
                response=pick.response,
                response_delex=pick.response_delex,
                state=turn.state,
                acts=pick.acts,
                delex_map=TurnDelexMap(user=turn.delex_map.user, response=pick.response_map),
            )
        )
    return Dialog(
        id=dialog_id or dialog.id,
        domains=dialog.domains,
        turns=tuple(turns),
    )
