"""Walkthrough: corpus evaluation and the combined Score.

Builds predictions for the golden corpus test-style dialogs, scores them,
and reproduces a few published Score rows from their Inform/Success/BLEU
components.
"""

import json
from pathlib import Path

from toddag import load_canonical
from toddag.metrics import PredictionEntry, error_by_category, evaluate, score

ROOT = Path(__file__).parent.parent
GOLDEN = ROOT / "tests" / "fixtures" / "golden_corpus.json"
REPORTED = ROOT / "tests" / "fixtures" / "reported_scores.json"


def main() -> None:
    corpus = load_canonical(GOLDEN)
    ids = [d.id for d in corpus.dialogs]

    predictions = {}
    for i, dialog in enumerate(corpus.dialogs):
        goal = corpus.goal_index[dialog.id]
        offered = {d: dict(v) for d, v in goal.informable.items()}
        responses = [t.response_delex for t in dialog.turns]
        if i == 0:
            offered = {}  # this dialog offers nothing: inform fails
        if i == 1:
            responses = ["you are welcome ." for _ in responses]  # loses requestables
        predictions[dialog.id] = PredictionEntry(tuple(responses), offered)

    report = evaluate(corpus, predictions, dataset="fixture", dialog_ids=ids)
    print("evaluation over the golden corpus:")
    print(f"  inform  : {report.inform:.2f}")
    print(f"  success : {report.success:.2f}")
    print(f"  bleu    : {report.bleu:.2f}")
    print(f"  score   : {report.score:.2f}")

    flags = {}
    for dialog in corpus.dialogs:
        goal = corpus.goal_index[dialog.id]
        from toddag.metrics import dialog_success

        flags[dialog.id] = dialog_success(predictions[dialog.id], goal)
    print(f"\nerror rate per domain category: {error_by_category(list(corpus.dialogs), flags)}")

    print("\npublished Score rows reproduced from their components:")
    tables = json.loads(REPORTED.read_text(encoding="utf-8"))
    for label, inform, success, bleu_value, printed in tables["multiwoz_10_x2"][:4]:
        computed = score(inform, success, bleu_value)
        print(f"  {label:<18} (I+S)/2+B = {computed:7.3f}  printed {printed}")


if __name__ == "__main__":
    main()
