import json
import logging
import sys

import pytest

from corpusgen import build_fewshot_corpus, build_fixture_corpus, fixture_rules
from toddag.corpus import dumps_canonical
from toddag.experiment import (
    AugmentConfig,
    AugmentResources,
    EXPANSION_COPIES,
    constant_predictor_factory,
    expand,
    few_shot_split,
    run_matrix,
    sample_subset,
)
from toddag.filtering import EmptyPredictor, RuleTablePredictor
from toddag.mocks import CannedFillMask, MockChat, MockParaphrase, WordReverseTranslate


@pytest.fixture(scope="module")
def small_bundle():
    return build_fixture_corpus(12, dataset_id="small")


def mock_resources(parses, predictor=None) -> AugmentResources:
    predictor = predictor or RuleTablePredictor.from_dict(fixture_rules())
    import corpusgen

    return AugmentResources(
        embeddings=corpusgen.fixture_embeddings(),
        mask_filler=CannedFillMask([("want", 0.6), ("need", 0.4)]),
        translator=WordReverseTranslate(),
        paraphraser=MockParaphrase(),
        chat=MockChat(),
        parses=parses,
        predictor_factory=constant_predictor_factory(predictor),
    )


class TestSampleSubset:
    def test_fraction_one_keeps_everything(self, fixture_corpus):
        subset = sample_subset(fixture_corpus, 1.0, seed=1)
        assert [d.id for d in subset.dialogs] == [d.id for d in fixture_corpus.dialogs]

    def test_half_fraction_rounds(self, fixture_corpus):
        subset = sample_subset(fixture_corpus, 0.5, seed=1)
        assert len(subset.train_dialogs()) == 25

    def test_rounding_rule(self, fixture_corpus):
        assert len(sample_subset(fixture_corpus, 0.1, seed=2).train_dialogs()) == 5
        assert len(sample_subset(fixture_corpus, 0.25, seed=2).train_dialogs()) == round(
            0.25 * 50
        )

    def test_splits_untouched(self):
        corpus, _ = build_fixture_corpus(20, with_splits=True)
        subset = sample_subset(corpus, 0.5, seed=3)
        assert subset.validation_ids() == corpus.validation_ids()
        assert subset.test_ids() == corpus.test_ids()

    def test_original_order_preserved(self, fixture_corpus):
        subset = sample_subset(fixture_corpus, 0.3, seed=4)
        positions = {d.id: i for i, d in enumerate(fixture_corpus.dialogs)}
        indices = [positions[d.id] for d in subset.dialogs]
        assert indices == sorted(indices)

    def test_deterministic(self, fixture_corpus):
        a = sample_subset(fixture_corpus, 0.4, seed=9)
        b = sample_subset(fixture_corpus, 0.4, seed=9)
        assert [d.id for d in a.dialogs] == [d.id for d in b.dialogs]

    def test_fraction_validated(self, fixture_corpus):
        with pytest.raises(ValueError):
            sample_subset(fixture_corpus, 0.0, seed=1)
        with pytest.raises(ValueError):
            sample_subset(fixture_corpus, 1.1, seed=1)


class TestFewShotSplit:
    def test_keep_20_of_40(self):
        corpus = build_fewshot_corpus()
        split = few_shot_split(corpus, "hotel", keep=20, seed=0)
        hotel_train = [d for d in split.train_dialogs() if "hotel" in d.domains]
        assert len(hotel_train) == 20
        other_train = [d for d in split.train_dialogs() if "hotel" not in d.domains]
        assert len(other_train) == 12  # non-target training dialogs untouched

    def test_eval_restricted_to_target_domain(self):
        corpus = build_fewshot_corpus()
        split = few_shot_split(corpus, "hotel", keep=20, seed=0)
        assert set(split.validation_ids()) == {"valho0", "valho1"}
        assert set(split.test_ids()) == {"tesho0", "tesho1"}
        for dialog in split.test_dialogs():
            assert "hotel" in dialog.domains

    def test_keep_zero(self):
        corpus = build_fewshot_corpus()
        split = few_shot_split(corpus, "hotel", keep=0, seed=0)
        assert not [d for d in split.train_dialogs() if "hotel" in d.domains]

    def test_fewer_than_keep_warns_and_keeps_all(self, caplog):
        corpus, _ = build_fixture_corpus(12)  # only 4 hotel-pattern dialogs
        hotel_train = [d for d in corpus.train_dialogs() if "hotel" in d.domains]
        with caplog.at_level(logging.WARNING):
            split = few_shot_split(corpus, "hotel", keep=20, seed=0)
        kept = [d for d in split.train_dialogs() if "hotel" in d.domains]
        assert len(kept) == len(hotel_train)
        assert any("keeping all" in r.message for r in caplog.records)

    def test_unknown_domain_rejected(self, fixture_corpus):
        with pytest.raises(ValueError, match="ontology"):
            few_shot_split(fixture_corpus, "submarine", keep=20, seed=0)


class TestExpand:
    @pytest.mark.parametrize(
        "method",
        ["w2v", "mlm", "backtranslate", "paraphrase", "rotate", "llm", "dialogtree", "actresp"],
    )
    @pytest.mark.parametrize("expansion", ["x2", "x3", "x5"])
    def test_counts_exact_for_every_method(self, small_bundle, method, expansion):
        corpus, parses = small_bundle
        config = AugmentConfig(method=method, expansion=expansion, seed=1)
        expanded = expand(corpus, config, mock_resources(parses))
        assert len(expanded) == (EXPANSION_COPIES[expansion] + 1) * len(corpus)

    def test_originals_byte_identical_and_in_order(self, small_bundle):
        corpus, parses = small_bundle
        config = AugmentConfig(method="w2v", expansion="x3", seed=5)
        expanded = expand(corpus, config, mock_resources(parses))
        originals = [d for d in expanded.dialogs if "#aug" not in d.id]
        assert [dumps_canonical_dialog(d) for d in originals] == [
            dumps_canonical_dialog(d) for d in corpus.dialogs
        ]

    def test_synthetic_ids_are_derived(self, small_bundle):
        corpus, parses = small_bundle
        config = AugmentConfig(method="actresp", expansion="x5", seed=2)
        expanded = expand(corpus, config, mock_resources(parses))
        for dialog in corpus.dialogs:
            for copy in (1, 2, 3, 4):
                assert any(d.id == f"{dialog.id}#aug{copy}" for d in expanded.dialogs)

    def test_all_reject_filter_keeps_synthetics_equal(self, small_bundle):
        corpus, parses = small_bundle
        config = AugmentConfig(method="w2v", expansion="x2", seed=3)
        resources = mock_resources(parses, predictor=EmptyPredictor())
        expanded = expand(corpus, config, resources)
        assert len(expanded) == 2 * len(corpus)
        by_id = {d.id: d for d in expanded.dialogs}
        for dialog in corpus.dialogs:
            synthetic = by_id[f"{dialog.id}#aug1"]
            assert [t.user_delex for t in synthetic.turns] == [
                t.user_delex for t in dialog.turns
            ]

    def test_expansion_is_deterministic(self, small_bundle):
        corpus, parses = small_bundle
        config = AugmentConfig(method="rotate", expansion="x3", seed=7)
        first = expand(corpus, config, mock_resources(parses))
        second = expand(corpus, config, mock_resources(parses))
        assert dumps_canonical(first) == dumps_canonical(second)

    def test_synthetics_get_anchor_goals(self, small_bundle):
        corpus, parses = small_bundle
        config = AugmentConfig(method="paraphrase", expansion="x2", seed=1)
        expanded = expand(corpus, config, mock_resources(parses))
        for dialog in corpus.dialogs:
            assert expanded.goal_index[f"{dialog.id}#aug1"] == corpus.goal_index[dialog.id]

    def test_heldout_dialogs_not_expanded(self):
        corpus, parses = build_fixture_corpus(12, with_splits=True)
        config = AugmentConfig(method="actresp", expansion="x2", seed=1)
        expanded = expand(corpus, config, mock_resources(parses))
        train = len(corpus.train_dialogs())
        assert len(expanded) == len(corpus) + train
        for dialog_id in corpus.validation_ids() | corpus.test_ids():
            assert not any(
                d.id.startswith(f"{dialog_id}#aug") for d in expanded.dialogs
            )


def dumps_canonical_dialog(dialog) -> str:
    from toddag.corpus import turn_to_json

    return json.dumps(
        {"id": dialog.id, "domains": list(dialog.domains), "turns": [turn_to_json(t) for t in dialog.turns]},
        sort_keys=True,
    )


TRAINER_STUB = """\
import json, sys
corpus_path, out_path = sys.argv[1], sys.argv[2]
doc = json.loads(open(corpus_path, encoding="utf-8").read())
test_ids = set(doc.get("splits", {}).get("test", []))
pred = {}
for dialog in doc["dialogs"]:
    if dialog["id"] in test_ids:
        goal = doc["goals"][dialog["id"]]
        offered = {d: dict(v) for d, v in goal.get("informable", {}).items()}
        pred[dialog["id"]] = {
            "responses": [t["response_delex"] for t in dialog["turns"]],
            "offered": offered,
        }
open(out_path, "w", encoding="utf-8").write(json.dumps(pred))
"""


class TestRunMatrix:
    def _hooked_matrix(self, tmp_path, out_dir, workers=1):
        corpus, parses = build_fixture_corpus(16, with_splits=True)
        stub = tmp_path / "trainer_stub.py"
        stub.write_text(TRAINER_STUB, encoding="utf-8")
        hook = f"{sys.executable} {stub} {{corpus}} {{predictions}}"
        return run_matrix(
            corpus,
            methods=["actresp"],
            fractions=[0.5, 1.0],
            expansions=["x2"],
            seeds=[1, 2],
            out_dir=out_dir,
            resources=mock_resources(parses),
            base_config=AugmentConfig(method="actresp"),
            trainer_hook=hook,
            workers=workers,
        )

    def test_matrix_with_trainer_hook(self, tmp_path):
        report = self._hooked_matrix(tmp_path, tmp_path / "out")
        assert not report.failed
        assert len(report.cells) == 4
        csv_text = (tmp_path / "out" / "results.csv").read_text(encoding="utf-8")
        lines = csv_text.splitlines()
        assert lines[0] == "method,fraction,expansion,seed,inform,success,bleu,score"
        assert len([l for l in lines if ",mean," in l]) == 2
        doc = json.loads((tmp_path / "out" / "report.json").read_text(encoding="utf-8"))
        assert all(cell["status"] == "ok" for cell in doc["cells"])
        assert all(cell["metrics"] is not None for cell in doc["cells"])

    def test_matrix_outputs_identical_across_worker_counts(self, tmp_path):
        self._hooked_matrix(tmp_path, tmp_path / "serial", workers=1)
        self._hooked_matrix(tmp_path, tmp_path / "parallel", workers=4)
        serial = sorted((tmp_path / "serial").rglob("*"))
        parallel = sorted((tmp_path / "parallel").rglob("*"))
        assert [p.relative_to(tmp_path / "serial") for p in serial] == [
            p.relative_to(tmp_path / "parallel") for p in parallel
        ]
        for a, b in zip(serial, parallel):
            if a.is_file():
                assert a.read_bytes() == b.read_bytes(), a.name

    def test_cell_failure_recorded_and_matrix_continues(self, tmp_path, fixture_corpus):
        report = run_matrix(
            fixture_corpus,
            methods=["actresp"],
            fractions=[0.2],
            expansions=["x2"],
            seeds=[1],
            out_dir=tmp_path / "out",
            resources=AugmentResources(),
            base_config=AugmentConfig(method="actresp"),
            trainer_hook=f"{sys.executable} -c 'import sys; sys.exit(3)'",
            workers=1,
        )
        assert report.failed
        assert report.cells[0].status == "failed"
        assert (tmp_path / "out" / "results.csv").exists()

    def test_empty_method_list_gives_empty_table(self, tmp_path, fixture_corpus):
        report = run_matrix(
            fixture_corpus,
            methods=[],
            fractions=[0.5],
            expansions=["x2"],
            seeds=[1],
            out_dir=tmp_path / "out",
        )
        assert report.cells == []
        csv_text = (tmp_path / "out" / "results.csv").read_text(encoding="utf-8")
        assert csv_text.splitlines() == ["method,fraction,expansion,seed,inform,success,bleu,score"]
