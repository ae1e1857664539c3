"""Walkthrough: dialog-tree synthesis and act-response substitution.

Turn templates carry the previous/current/next delexicalized states; linking
them yields a tree whose random walks produce new dialogs, re-filled with
observed slot values.  Act-response substitution swaps system actions and
responses between turns sharing a delexicalized state.
"""

import random
from pathlib import Path

from toddag import load_canonical
from toddag.augment.dialog import (
    act_response_substitute,
    build_state_index,
    build_tree,
    extract_templates,
    synthesize_dialog,
)

GOLDEN = Path(__file__).parent.parent / "tests" / "fixtures" / "golden_corpus.json"


def main() -> None:
    corpus = load_canonical(GOLDEN)
    templates = extract_templates(corpus.dialogs)
    print(f"{len(templates)} turn templates from {len(corpus)} dialogs")

    tree = build_tree(templates)
    print(f"root children: {[tree.templates[i].origin for i in tree.root_children]}")
    for i in tree.root_children[:2]:
        links = [tree.templates[j].origin for j in tree.children[i]]
        print(f"  {tree.templates[i].origin} continues into {links}")

    synthetic = synthesize_dialog(corpus, "tree#demo", random.Random(7), sample_size=20)
    print("\nsynthesized dialog:")
    for turn in synthetic.turns:
        print(f"  U{turn.index}: {turn.user}")
        print(f"  S{turn.index}: {turn.response}")

    index = build_state_index(corpus)
    sizes = sorted((len(v) for v in index.entries.values()), reverse=True)
    print(f"\nstate index entry sizes: {sizes}")
    dialog = corpus.dialogs[0]
    swapped = act_response_substitute(dialog, index, random.Random(3), "mada#demo")
    for old, new in zip(dialog.turns, swapped.turns):
        marker = "*" if new.response != old.response else " "
        print(f" {marker} turn {old.index}: {old.response!r} -> {new.response!r}")


if __name__ == "__main__":
    main()
