"""End to end: the augmentation CLI drives the live reference server."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from todserve.app import serve
from todserve.config import ServerConfig

REPO = Path(__file__).parent.parent.parent
FIXTURE_CORPUS = REPO / "tests" / "fixtures" / "fixture_corpus_50.json"
RULES = REPO / "tests" / "fixtures" / "rules.json"


@pytest.fixture(scope="module")
def server():
    running = serve(
        ServerConfig(host="127.0.0.1", port=0, models={"fill_mask": "builtin:frequency"})
    )
    yield running
    running.shutdown()


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "toddag.cli", *args],
        capture_output=True,
        text=True,
    )


@pytest.mark.parametrize(
    "expansion,expected", [("x2", 100), ("x3", 150), ("x5", 250)]
)
def test_mlm_augmentation_against_live_server(server, tmp_path, expansion, expected):
    out = tmp_path / f"augmented_{expansion}.json"
    result = run_cli(
        [
            "augment",
            "--corpus", str(FIXTURE_CORPUS),
            "--out", str(out),
            "--method", "mlm",
            "--expansion", expansion,
            "--seed", "1",
            "--backend", server.address,
            "--predictor", f"rules:{RULES}",
        ]
    )
    assert result.returncode == 0, result.stderr
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert len(doc["dialogs"]) == expected
    originals = [d for d in doc["dialogs"] if "#aug" not in d["id"]]
    assert len(originals) == 50


def test_server_substitutions_survive_the_filter(server, tmp_path):
    out = tmp_path / "augmented.json"
    result = run_cli(
        [
            "augment",
            "--corpus", str(FIXTURE_CORPUS),
            "--out", str(out),
            "--method", "mlm",
            "--expansion", "x2",
            "--seed", "7",
            "--backend", server.address,
            "--predictor", f"rules:{RULES}",
        ]
    )
    assert result.returncode == 0, result.stderr
    doc = json.loads(out.read_text(encoding="utf-8"))
    reference = json.loads(FIXTURE_CORPUS.read_text(encoding="utf-8"))
    original_users = {
        d["id"]: [t["user_delex"] for t in d["turns"]] for d in reference["dialogs"]
    }
    changed = 0
    for dialog in doc["dialogs"]:
        if "#aug" not in dialog["id"]:
            continue
        anchor = dialog["id"].split("#aug")[0]
        for turn, original in zip(dialog["turns"], original_users[anchor]):
            if turn["user_delex"] != original:
                changed += 1
    assert changed > 0  # live candidates actually get accepted somewhere
