"""Walkthrough: embedding-neighbor word substitution with the consistency filter.

A tiny planar embedding table gives "cheap" the neighbors "inexpensive",
"expensive" and "moderate".  The rule-table predictor maps price words back
to dialog-state values, so candidates that would bend the state are
discarded and the substitution settles on a synonym.
"""

import numpy as np

from toddag.augment.word import SubstitutionPolicy, substitute_embedding
from toddag.corpus import DialogState, SystemAct, Turn, TurnDelexMap
from toddag.embeddings import EmbeddingTable, StopwordList, top_k_neighbors
from toddag.filtering import RuleTablePredictor, check

ANGLES = {"want": 0, "need": 2, "cheap": 30, "inexpensive": 32, "expensive": 34, "moderate": 36}

RULES = {
    "state_rules": [
        {"when_tokens": [w], "domain": "hotel", "slot": "price", "value": v}
        for w, v in [
            ("cheap", "cheap"),
            ("inexpensive", "cheap"),  # synonym maps to the same canonical value
            ("expensive", "expensive"),
            ("moderate", "moderate"),
        ]
    ],
    "act_rules": [],
}


def main() -> None:
    radians = np.radians(list(ANGLES.values()))
    table = EmbeddingTable(list(ANGLES), np.stack([np.cos(radians), np.sin(radians)], axis=1))
    print("neighbors of 'cheap':")
    for word, similarity in top_k_neighbors(table, "cheap", 3):
        print(f"  {word:<12} {similarity:.4f}")

    turn = Turn(
        index=0,
        user="cheap",
        user_delex="cheap",
        response="ok .",
        response_delex="ok .",
        state=DialogState({"hotel": {"price": "cheap"}}),
        acts=(),
        delex_map=TurnDelexMap(),
    )
    predictor = RuleTablePredictor.from_dict(RULES)
    print("\nfilter decisions per candidate:")
    for candidate in ("inexpensive", "expensive", "moderate"):
        decision = check(predictor, [], turn, candidate)
        print(f"  {candidate:<12} -> {decision.reason}")

    got = substitute_embedding(
        turn, table, StopwordList.english(), SubstitutionPolicy(k=3, rng_seed=1), predictor
    )
    print(f"\nsubstitution keeps the state intact: {turn.user!r} -> {got.user!r}")
    print(f"state unchanged: {got.state == turn.state}")


if __name__ == "__main__":
    main()
