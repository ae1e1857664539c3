"""Walkthrough: the canonical corpus model and placeholder handling.

Loads the golden corpus shipped with the repo, shows how a turn stores both
lexical and delexicalized utterances, and demonstrates the protect/restore
markers that keep placeholders alive through text-mangling transforms.
"""

from pathlib import Path

from toddag import load_canonical, relexicalize
from toddag.delex import ProtectedText, protect, restore

GOLDEN = Path(__file__).parent.parent / "tests" / "fixtures" / "golden_corpus.json"


def main() -> None:
    corpus = load_canonical(GOLDEN)
    print(f"loaded {len(corpus)} dialogs from {GOLDEN.name}")
    print(f"ontology: {sorted(corpus.ontology)[:5]} ...")

    dialog = corpus.dialogs[4]  # a train dialog with user-side placeholders
    turn = dialog.turns[0]
    print(f"\ndialog {dialog.id}, turn 0")
    print(f"  user        : {turn.user}")
    print(f"  user_delex  : {turn.user_delex}")
    print(f"  state       : {turn.state.slots}")
    print(f"  relex check : {relexicalize(turn.user_delex, turn.delex_map.user) == turn.user}")

    protected = protect(turn.user_delex)
    print(f"\nprotected   : {protected.text}")
    print(f"marker map  : {protected.marker_map}")

    # a reordering transform keeps the numbered markers alive
    shuffled = " ".join(reversed(protected.text.split()))
    print(f"shuffled    : {shuffled}")
    print(f"restored    : {restore(ProtectedText(shuffled, protected.marker_map))}")

    # a transform that eats a marker gets rejected instead of corrupting data
    damaged = protected.text.replace("#1", "", 1)
    print(f"damaged     : {damaged!r} -> restore gives {restore(ProtectedText(damaged, protected.marker_map))}")


if __name__ == "__main__":
    main()
