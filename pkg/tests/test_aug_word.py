import numpy as np
import pytest

from toddag.augment.word import (
    SubstitutionPolicy,
    eligible_positions,
    substitute_embedding,
    substitute_masked_lm,
)
from toddag.corpus import DialogState, SystemAct, Turn, TurnDelexMap
from toddag.delex import DelexEntry, DelexMap
from toddag.embeddings import EmbeddingTable, StopwordList
from toddag.filtering import EmptyPredictor, GoldPredictor, RuleTablePredictor, check
from toddag.mocks import CannedFillMask, MockFillMask, MockScript, fingerprint
from toddag.text import tokenize

STOPWORDS = StopwordList.english()


def hotel_turn():
    return Turn(
        index=0,
        user="i want a cheap hotel",
        user_delex="i want a cheap hotel",
        response="ok .",
        response_delex="ok .",
        state=DialogState({"hotel": {"price": "cheap"}}),
        acts=(SystemAct("recommend", "hotel", "name"),),
        delex_map=TurnDelexMap(),
    )


def single_neighbor_table():
    # "cheap" has exactly one neighbor; no other turn word is in vocabulary
    return EmbeddingTable(
        ["cheap", "inexpensive"], np.array([[1.0, 0.0], [0.99, 0.01]])
    )


def accept_all_for(turn):
    return GoldPredictor(turn.state, turn.acts)


class TestEligibility:
    def test_placeholders_stopwords_punctuation_excluded(self):
        tokens = tokenize("i want the [value_price] hotel now .")
        positions = eligible_positions(tokens, STOPWORDS)
        assert [tokens[i] for i in positions] == ["want", "hotel"]


class TestEmbeddingSubstitution:
    def test_stopword_only_utterance_unchanged(self):
        turn = Turn(
            index=0,
            user="is it to the [value_area]",
            user_delex="is it to the [value_area]",
            response="r",
            response_delex="r",
            state=DialogState(),
            acts=(),
            delex_map=TurnDelexMap(
                user=DelexMap((DelexEntry("[value_area]", "[value_area]", 12, 24),))
            ),
        )
        # the only non-stopword token is the placeholder, so nothing changes
        got = substitute_embedding(
            turn, single_neighbor_table(), STOPWORDS, SubstitutionPolicy(), accept_all_for(turn)
        )
        assert got.user_delex == turn.user_delex

    def test_always_reject_filter_returns_original(self):
        turn = hotel_turn()
        got = substitute_embedding(
            turn, single_neighbor_table(), STOPWORDS, SubstitutionPolicy(), EmptyPredictor()
        )
        assert got == turn

    def test_single_candidate_accept_all(self):
        turn = hotel_turn()
        got = substitute_embedding(
            turn, single_neighbor_table(), STOPWORDS, SubstitutionPolicy(), accept_all_for(turn)
        )
        assert got.user_delex == "i want a inexpensive hotel"
        assert got.user == "i want a inexpensive hotel"
        assert got.state == turn.state
        assert got.acts == turn.acts
        assert got.response == turn.response

    def test_pool_iteration_skips_rejected_candidates(self, toy_embeddings):
        # "expensive" and "moderate" change the predicted price and are
        # discarded; "inexpensive" maps back to cheap and is kept
        rules = {
            "state_rules": [
                {"when_tokens": [w], "domain": "hotel", "slot": "price", "value": v}
                for w, v in [
                    ("cheap", "cheap"),
                    ("inexpensive", "cheap"),
                    ("expensive", "expensive"),
                    ("moderate", "moderate"),
                ]
            ],
            "act_rules": [],
        }
        predictor = RuleTablePredictor.from_dict(rules)
        turn = Turn(
            index=0,
            user="cheap",
            user_delex="cheap",
            response="r",
            response_delex="r",
            state=DialogState({"hotel": {"price": "cheap"}}),
            acts=(),
            delex_map=TurnDelexMap(),
        )
        for seed in range(8):
            got = substitute_embedding(
                turn, toy_embeddings, STOPWORDS, SubstitutionPolicy(k=3, rng_seed=seed), predictor
            )
            assert got.user_delex == "inexpensive"

    def test_fixed_seed_reproducible(self, toy_embeddings, fixture_corpus, rule_predictor):
        dialog = fixture_corpus.dialogs[0]
        policy = SubstitutionPolicy(k=5, rng_seed=123)
        first = substitute_embedding(
            dialog.turns[0], toy_embeddings, STOPWORDS, policy, rule_predictor
        )
        second = substitute_embedding(
            dialog.turns[0], toy_embeddings, STOPWORDS, policy, rule_predictor
        )
        assert first == second

    def test_token_count_and_annotations_preserved(
        self, toy_embeddings, fixture_corpus, rule_predictor
    ):
        for dialog in fixture_corpus.dialogs[:12]:
            context = []
            for turn in dialog.turns:
                got = substitute_embedding(
                    turn,
                    toy_embeddings,
                    STOPWORDS,
                    SubstitutionPolicy(rng_seed=7),
                    rule_predictor,
                    context,
                )
                assert len(tokenize(got.user_delex)) == len(tokenize(turn.user_delex))
                assert got.state == turn.state
                assert got.acts == turn.acts
                assert got.response_delex == turn.response_delex
                assert got.delex_map == turn.delex_map
                context.extend([turn.user_delex, turn.response_delex])

    def test_accepted_substitutions_reverify(self, toy_embeddings, fixture_corpus, rule_predictor):
        changed = 0
        for dialog in fixture_corpus.dialogs:
            context = []
            for turn in dialog.turns:
                got = substitute_embedding(
                    turn,
                    toy_embeddings,
                    STOPWORDS,
                    SubstitutionPolicy(rng_seed=11),
                    rule_predictor,
                    context,
                )
                if got.user_delex != turn.user_delex:
                    changed += 1
                    assert check(rule_predictor, context, turn, got.user_delex).accepted
                context.extend([turn.user_delex, turn.response_delex])
        assert changed > 0  # the fixture must actually exercise acceptance


class TestMaskedLmSubstitution:
    def test_empty_candidates_unchanged(self):
        turn = hotel_turn()
        got = substitute_masked_lm(
            turn, MockFillMask(), STOPWORDS, SubstitutionPolicy(), accept_all_for(turn)
        )
        assert got == turn

    def test_scripted_substitution_applied(self):
        turn = hotel_turn()
        request = {"text": "i want a <mask> hotel", "mask_token": "<mask>", "top_k": 10}
        backend = MockFillMask(
            MockScript(
                responses={
                    fingerprint(request): {"candidates": [{"token": "inexpensive", "score": 1.0}]}
                }
            )
        )
        got = substitute_masked_lm(
            turn, backend, STOPWORDS, SubstitutionPolicy(), accept_all_for(turn)
        )
        assert got.user_delex == "i want a inexpensive hotel"
        assert got.state == turn.state

    def test_candidate_equal_to_original_skipped(self):
        turn = hotel_turn()
        request = {"text": "i want a <mask> hotel", "mask_token": "<mask>", "top_k": 10}
        backend = MockFillMask(
            MockScript(
                responses={
                    fingerprint(request): {
                        "candidates": [
                            {"token": "cheap", "score": 0.9},
                            {"token": "inexpensive", "score": 0.1},
                        ]
                    }
                }
            )
        )
        got = substitute_masked_lm(
            turn, backend, STOPWORDS, SubstitutionPolicy(), accept_all_for(turn)
        )
        # "cheap" == original is skipped, the next candidate is used
        assert got.user_delex == "i want a inexpensive hotel"

    def test_canned_backend_with_filter(self, fixture_corpus, rule_predictor):
        backend = CannedFillMask([("want", 0.6), ("need", 0.4)])
        dialog = fixture_corpus.dialogs[0]
        got = substitute_masked_lm(
            dialog.turns[0], backend, STOPWORDS, SubstitutionPolicy(rng_seed=3), rule_predictor
        )
        assert len(tokenize(got.user_delex)) == len(tokenize(dialog.turns[0].user_delex))


def test_policy_validation():
    with pytest.raises(ValueError):
        SubstitutionPolicy(k=0)
    with pytest.raises(ValueError):
        SubstitutionPolicy(max_positions_fraction=0.0)
    with pytest.raises(ValueError):
        SubstitutionPolicy(max_positions_fraction=1.5)
