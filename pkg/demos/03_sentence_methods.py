"""Walkthrough: the four sentence-level methods on one turn.

Back-translation (with a word-reversing mock pivot), paraphrase selection
with slot preservation, chat-based paraphrasing of the lexical utterance,
and fragment rotation over a dependency parse.
"""

import random

from toddag.augment.sentence import (
    back_translate,
    fragment_rotate,
    llm_paraphrase,
    paraphrase,
)
from toddag.corpus import DialogState, Turn, TurnDelexMap
from toddag.delex import DelexEntry, DelexMap
from toddag.mocks import MarkerDropTranslate, MockChat, MockParaphrase, WordReverseTranslate
from toddag.parses import DependencyParse, ParseToken


def make_turn() -> Turn:
    user = "book a train to cambridge on monday"
    user_map = DelexMap(
        (
            DelexEntry("[value_destination]", "cambridge", 16, 25),
            DelexEntry("[value_day]", "monday", 29, 35),
        )
    )
    return Turn(
        index=0,
        user=user,
        user_delex="book a train to [value_destination] on [value_day]",
        response="i found tr1234 for you .",
        response_delex="i found [value_id] for you .",
        state=DialogState({"train": {"destination": "cambridge", "day": "monday"}}),
        acts=(),
        delex_map=TurnDelexMap(user=user_map),
    )


PARSE = DependencyParse(
    (
        ParseToken("book", 0, "root"),
        ParseToken("a", 3, "det"),
        ParseToken("train", 1, "obj"),
        ParseToken("to", 5, "case"),
        ParseToken("[value_destination]", 1, "obl"),
        ParseToken("on", 7, "case"),
        ParseToken("[value_day]", 1, "obl"),
    )
)


def main() -> None:
    turn = make_turn()
    print(f"original: {turn.user}")

    reversed_turn = back_translate(turn, WordReverseTranslate(), pivot="fr")
    print(f"\nback-translation (reversing mock pivot): {reversed_turn.user}")
    print(f"placeholders survived: {reversed_turn.user_delex}")
    print(f"marker loss rejects: {back_translate(turn, MarkerDropTranslate()) is None}")

    kept = paraphrase(turn, MockParaphrase(), random.Random(0))
    print(f"\nparaphrase (echo mock keeps slots): {kept.user}")

    chat_turn = llm_paraphrase(turn, MockChat(), random.Random(0))
    print(f"chat paraphrase (echo mock): {chat_turn.user}")

    print("\nfragment rotations:")
    for seed in range(3):
        rotated = fragment_rotate(turn, [PARSE], random.Random(seed))
        print(f"  seed {seed}: {rotated.user}")


if __name__ == "__main__":
    main()
