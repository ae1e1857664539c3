"""Dependency parses supplied as CoNLL-U sidecar files.

The toolkit never runs a parser itself; rotation consumes parses produced
offline.  Sentences are keyed by ``sent_id = <dialog_id>/<turn>/<speaker>/<n>``
where ``n`` numbers the sentences of one utterance from zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class ParseToken:
    form: str
    head: int  # 1-based head position, 0 for the root
    deprel: str


@dataclass(frozen=True)
class DependencyParse:
    tokens: tuple[ParseToken, ...]

    def __post_init__(self) -> None:
        n = len(self.tokens)
        roots = [i for i, t in enumerate(self.tokens, start=1) if t.head == 0]
        if len(roots) != 1:
            raise ParseError(f"expected exactly one root, found {len(roots)}")
        for i, token in enumerate(self.tokens, start=1):
            if not 0 <= token.head <= n:
                raise ParseError(f"token {i} has head {token.head} outside 1..{n}")
            if token.head == i:
                raise ParseError(f"token {i} is its own head")
        # reachability from the root proves the heads form a tree
        children: dict[int, list[int]] = {}
        for i, token in enumerate(self.tokens, start=1):
            children.setdefault(token.head, []).append(i)
        seen: set[int] = set()
        stack = [roots[0]]
        while stack:
            node = stack.pop()
            if node in seen:
                raise ParseError("cycle in dependency heads")
            seen.add(node)
            stack.extend(children.get(node, []))
        if len(seen) != n:
            raise ParseError("dependency heads do not form a connected tree")

    @property
    def root(self) -> int:
        return next(i for i, t in enumerate(self.tokens, start=1) if t.head == 0)

    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def children(self, position: int) -> list[int]:
        return [i for i, t in enumerate(self.tokens, start=1) if t.head == position]

    def subtree(self, position: int) -> set[int]:
        nodes = {position}
        frontier = [position]
        while frontier:
            here = frontier.pop()
            for child in self.children(here):
                if child not in nodes:
                    nodes.add(child)
                    frontier.append(child)
        return nodes


def parse_key(dialog_id: str, turn_index: int, speaker: str = "user") -> str:
    return f"{dialog_id}/{turn_index}/{speaker}"


class ParseStore:
    """In-memory lookup of per-sentence parses for dialog turns."""

    def __init__(self) -> None:
        self._sentences: dict[str, list[DependencyParse]] = {}

    def add(self, dialog_id: str, turn_index: int, speaker: str, parse: DependencyParse) -> None:
        self._sentences.setdefault(parse_key(dialog_id, turn_index, speaker), []).append(parse)

    def lookup(
        self, dialog_id: str, turn_index: int, speaker: str = "user"
    ) -> list[DependencyParse] | None:
        return self._sentences.get(parse_key(dialog_id, turn_index, speaker))

    def __len__(self) -> int:
        return sum(len(v) for v in self._sentences.values())


def parse_conllu(text: str, source: str = "<string>") -> list[tuple[str, DependencyParse]]:
    """All (sent_id, parse) pairs of one CoNLL-U document."""
    results: list[tuple[str, DependencyParse]] = []
    sent_id: str | None = None
    tokens: list[ParseToken] = []

    def _flush(lineno: int) -> None:
        nonlocal sent_id, tokens
        if tokens:
            if sent_id is None:
                raise ParseError(f"{source}:{lineno}: sentence without a sent_id comment")
            results.append((sent_id, DependencyParse(tuple(tokens))))
        sent_id = None
        tokens = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            _flush(lineno)
            continue
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment.startswith("sent_id"):
                _, _, value = comment.partition("=")
                sent_id = value.strip()
            continue
        columns = line.split("\t")
        if len(columns) < 8:
            raise ParseError(f"{source}:{lineno}: expected >= 8 tab-separated columns")
        if "-" in columns[0] or "." in columns[0]:
            raise ParseError(f"{source}:{lineno}: range/empty token ids are not supported")
        tokens.append(ParseToken(form=columns[1], head=int(columns[6]), deprel=columns[7]))
    _flush(len(text.splitlines()) + 1)
    return results


def load_conllu_dir(directory: str | Path) -> ParseStore:
    """Load every ``*.conllu`` file under ``directory`` into one store."""
    store = ParseStore()
    directory = Path(directory)
    entries: list[tuple[tuple, str, int, str, DependencyParse]] = []
    for path in sorted(directory.glob("**/*.conllu")):
        for sent_id, parse in parse_conllu(path.read_text(encoding="utf-8"), str(path)):
            parts = sent_id.split("/")
            if len(parts) != 4:
                raise ParseError(
                    f"{path}: sent_id {sent_id!r} is not <dialog>/<turn>/<speaker>/<n>"
                )
            dialog_id, turn, speaker, ordinal = parts
            entries.append(((dialog_id, int(turn), speaker, int(ordinal)), dialog_id, int(turn), speaker, parse))
    for _, dialog_id, turn, speaker, parse in sorted(entries, key=lambda e: e[0]):
        store.add(dialog_id, turn, speaker, parse)
    return store


def dump_conllu(sentences: list[tuple[str, DependencyParse]]) -> str:
    """Render (sent_id, parse) pairs back to CoNLL-U text."""
    blocks = []
    for sent_id, parse in sentences:
        lines = [f"# sent_id = {sent_id}"]
        for i, token in enumerate(parse.tokens, start=1):
            lines.append(
                "\t".join(
                    [str(i), token.form, "_", "_", "_", "_", str(token.head), token.deprel, "_", "_"]
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
