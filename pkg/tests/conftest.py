from __future__ import annotations

import pytest

from corpusgen import (
    build_fixture_corpus,
    build_tree_toy_corpora,
    fixture_embeddings,
    fixture_rules,
)
from toddag.filtering import RuleTablePredictor


@pytest.fixture(scope="session")
def fixture_bundle():
    return build_fixture_corpus(50)


@pytest.fixture(scope="session")
def fixture_corpus(fixture_bundle):
    return fixture_bundle[0]


@pytest.fixture(scope="session")
def fixture_parses(fixture_bundle):
    return fixture_bundle[1]


@pytest.fixture(scope="session")
def rule_predictor():
    return RuleTablePredictor.from_dict(fixture_rules())


@pytest.fixture(scope="session")
def toy_embeddings():
    return fixture_embeddings()


@pytest.fixture(scope="session")
def tree_toys():
    return build_tree_toy_corpora()
