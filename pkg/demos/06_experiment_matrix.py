"""Walkthrough: subset sampling, expansion accounting and the run matrix.

Runs two mocked methods over two expansion factors and three seeds, then
prints the machine-readable results table the matrix writes.  All backends
are deterministic in-process mocks, so the whole demo is hermetic.
"""

import tempfile
from pathlib import Path

from toddag import load_canonical
from toddag.experiment import (
    AugmentConfig,
    AugmentResources,
    constant_predictor_factory,
    expand,
    run_matrix,
    sample_subset,
)
from toddag.filtering import GoldPredictor
from toddag.mocks import MockParaphrase

GOLDEN = Path(__file__).parent.parent / "tests" / "fixtures" / "golden_corpus.json"


def main() -> None:
    corpus = load_canonical(GOLDEN)
    subset = sample_subset(corpus, 0.5, seed=1)
    print(f"sampled {len(subset.train_dialogs())} of {len(corpus.train_dialogs())} training dialogs")

    resources = AugmentResources(
        paraphraser=MockParaphrase(),
        predictor_factory=lambda turn: GoldPredictor(turn.state, turn.acts),
    )
    expanded = expand(subset, AugmentConfig(method="paraphrase", expansion="x3", seed=1), resources)
    print(f"x3 expansion: {len(subset)} -> {len(expanded)} dialogs")
    print(f"synthetic ids: {[d.id for d in expanded.dialogs if '#aug' in d.id]}")

    with tempfile.TemporaryDirectory() as tmp:
        report = run_matrix(
            corpus,
            methods=["paraphrase", "actresp"],
            fractions=[0.5, 1.0],
            expansions=["x2", "x3"],
            seeds=[1, 2, 3],
            out_dir=tmp,
            resources=resources,
            base_config=AugmentConfig(method="paraphrase"),
            workers=4,
        )
        print(f"\nmatrix: {len(report.cells)} cells, failed={report.failed}")
        print((Path(tmp) / "results.csv").read_text(encoding="utf-8"))


if __name__ == "__main__":
    main()
