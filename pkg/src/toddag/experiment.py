"""Experiment protocols: subset sampling, expansion, few-shot splits, matrix.

Expansion factors x2/x3/x5 add one, two or four synthetic dialogs per
original training dialog.  A per-turn rejection keeps the original turn, so
the expanded corpus always hits the exact target count and every original
dialog survives byte-identical, in order.  The run matrix crosses methods,
training fractions and expansions over several seeds and renders a
machine-readable CSV plus a JSON report; all randomness is derived from the
cell key and the seed, never from scheduling.
"""

from __future__ import annotations

import json
import logging
import random
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from .augment.dialog import (
    DEFAULT_SAMPLE_SIZE,
    StateIndex,
    act_response_substitute,
    build_state_index,
    synthesize_dialog,
)
from .augment.sentence import back_translate, fragment_rotate, llm_paraphrase, paraphrase
from .augment.word import SubstitutionPolicy, substitute_embedding, substitute_masked_lm
from .corpus import Corpus, Dialog, Turn, dumps_canonical, validate_corpus
from .embeddings import EmbeddingTable, StopwordList
from .filtering import GoldPredictor, Predictor
from .metrics import MetricsReport, evaluate, load_predictions
from .parses import ParseStore
from .seeds import derive_rng, derive_seed

log = logging.getLogger(__name__)

METHODS = (
    "w2v",
    "mlm",
    "backtranslate",
    "paraphrase",
    "rotate",
    "llm",
    "dialogtree",
    "actresp",
)

EXPANSION_COPIES = {"x2": 1, "x3": 2, "x5": 4}

DEFAULT_SEEDS = (1, 2, 3)


@dataclass
class AugmentResources:
    """Method resources: model clients, embeddings, parses, the filter."""

    embeddings: EmbeddingTable | None = None
    stopwords: StopwordList = field(default_factory=StopwordList.english)
    mask_filler: object | None = None
    translator: object | None = None
    paraphraser: object | None = None
    chat: object | None = None
    parses: ParseStore | None = None
    predictor_factory: Callable[[Turn], Predictor] | None = None


@dataclass(frozen=True)
class AugmentConfig:
    method: str
    expansion: str = "x2"
    seed: int = 0
    k: int = 10
    sample_size: int = DEFAULT_SAMPLE_SIZE
    pivot: str = "fr"
    max_positions_fraction: float = 1.0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.expansion not in EXPANSION_COPIES:
            raise ValueError(f"unknown expansion {self.expansion!r}; expected x2/x3/x5")

    @property
    def copies(self) -> int:
        return EXPANSION_COPIES[self.expansion]


def gold_oracle_factory(turn: Turn) -> Predictor:
    return GoldPredictor(turn.state, turn.acts)


def constant_predictor_factory(predictor: Predictor) -> Callable[[Turn], Predictor]:
    return lambda _turn: predictor


# ---------------------------------------------------------------------------
# subset sampling and few-shot splits


def sample_subset(corpus: Corpus, fraction: float, seed: int) -> Corpus:
    """Uniform sample without replacement of the training dialogs.

    Keeps round(fraction * |train|) training dialogs in their original
    order; validation and test splits are untouched.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    train = corpus.train_dialogs()
    count = round(fraction * len(train))
    rng = derive_rng("subset", seed)
    keep = {d.id for d in rng.sample(train, count)} if count < len(train) else {
        d.id for d in train
    }
    held_out = corpus.validation_ids() | corpus.test_ids()
    dialogs = tuple(d for d in corpus.dialogs if d.id in keep or d.id in held_out)
    kept_ids = {d.id for d in dialogs}
    return replace(
        corpus,
        dialogs=dialogs,
        goal_index={i: g for i, g in corpus.goal_index.items() if i in kept_ids},
    )


def few_shot_split(corpus: Corpus, target_domain: str, keep: int = 20, seed: int = 0) -> Corpus:
    """Few-shot cross-domain split for ``target_domain``.

    All training dialogs containing the domain are removed except ``keep``
    randomly retained ones, and the evaluation splits are restricted to
    dialogs containing the domain.
    """
    if keep < 0:
        raise ValueError("keep must be >= 0")
    if not any(target_domain == d for d, _ in corpus.ontology):
        raise ValueError(f"domain {target_domain!r} not in the corpus ontology")
    train = corpus.train_dialogs()
    targets = [d for d in train if target_domain in d.domains]
    if len(targets) <= keep:
        if len(targets) < keep:
            log.warning(
                "only %d %s training dialogs available, keeping all (asked for %d)",
                len(targets),
                target_domain,
                keep,
            )
        retained = {d.id for d in targets}
    else:
        rng = derive_rng("few_shot", target_domain, seed)
        retained = {d.id for d in rng.sample(targets, keep)}
    dropped = {d.id for d in targets if d.id not in retained}

    eval_keep = {
        dialog_id
        for split in ("validation", "test")
        for dialog_id in corpus.splits.get(split, ())
        if target_domain in corpus.dialog(dialog_id).domains
    }
    eval_drop = (corpus.validation_ids() | corpus.test_ids()) - eval_keep

    dialogs = tuple(
        d for d in corpus.dialogs if d.id not in dropped and d.id not in eval_drop
    )
    kept_ids = {d.id for d in dialogs}
    return replace(
        corpus,
        dialogs=dialogs,
        goal_index={i: g for i, g in corpus.goal_index.items() if i in kept_ids},
        splits={
            split: tuple(i for i in ids if i in eval_keep)
            for split, ids in corpus.splits.items()
        },
    )


# ---------------------------------------------------------------------------
# expansion


def _context_texts(turns: Sequence[Turn]) -> list[str]:
    texts: list[str] = []
    for turn in turns:
        texts.append(turn.user_delex)
        texts.append(turn.response_delex)
    return texts


def _augment_turnwise(
    dialog: Dialog,
    synthetic_id: str,
    transform: Callable[[Turn, list[str], random.Random], Turn | None],
    base_seed: int,
) -> Dialog:
    turns: list[Turn] = []
    for turn in dialog.turns:
        rng = derive_rng(base_seed, turn.index)
        synthetic = transform(turn, _context_texts(turns), rng)
        turns.append(turn if synthetic is None else synthetic)
    return Dialog(id=synthetic_id, domains=dialog.domains, turns=tuple(turns))


def synthesize_copy(
    corpus: Corpus,
    dialog: Dialog,
    copy_index: int,
    config: AugmentConfig,
    resources: AugmentResources,
    state_index: StateIndex | None = None,
) -> Dialog:
    """One synthetic dialog for (original, copy_index) under the config."""
    synthetic_id = f"{dialog.id}#aug{copy_index}"
    base_seed = derive_seed(config.seed, config.method, dialog.id, copy_index)
    method = config.method

    if method in ("w2v", "mlm"):
        if resources.predictor_factory is None:
            raise ValueError("word-level methods need a consistency-filter predictor")

        def _word(turn: Turn, context: list[str], rng: random.Random) -> Turn | None:
            policy = SubstitutionPolicy(
                k=config.k,
                max_positions_fraction=config.max_positions_fraction,
                rng_seed=derive_seed(base_seed, turn.index),
            )
            predictor = resources.predictor_factory(turn)
            if method == "w2v":
                if resources.embeddings is None:
                    raise ValueError("w2v needs an embedding table")
                return substitute_embedding(
                    turn, resources.embeddings, resources.stopwords, policy, predictor, context
                )
            if resources.mask_filler is None:
                raise ValueError("mlm needs a fill-mask backend")
            return substitute_masked_lm(
                turn, resources.mask_filler, resources.stopwords, policy, predictor, context
            )

        return _augment_turnwise(dialog, synthetic_id, _word, base_seed)

    if method == "backtranslate":
        if resources.translator is None:
            raise ValueError("backtranslate needs a translate backend")
        return _augment_turnwise(
            dialog,
            synthetic_id,
            lambda turn, _ctx, _rng: back_translate(turn, resources.translator, config.pivot),
            base_seed,
        )

    if method == "paraphrase":
        if resources.paraphraser is None:
            raise ValueError("paraphrase needs a paraphrase backend")
        return _augment_turnwise(
            dialog,
            synthetic_id,
            lambda turn, _ctx, rng: paraphrase(turn, resources.paraphraser, rng),
            base_seed,
        )

    if method == "rotate":
        if resources.parses is None:
            raise ValueError("rotate needs a directory of dependency parses")

        def _rotate(turn: Turn, _ctx: list[str], rng: random.Random) -> Turn | None:
            sentence_parses = resources.parses.lookup(dialog.id, turn.index, "user")
            if sentence_parses is None:
                return None  # unparsed turn: treated as a rejection
            return fragment_rotate(turn, sentence_parses, rng)

        return _augment_turnwise(dialog, synthetic_id, _rotate, base_seed)

    if method == "llm":
        if resources.chat is None:
            raise ValueError("llm needs a chat backend")
        return _augment_turnwise(
            dialog,
            synthetic_id,
            lambda turn, _ctx, rng: llm_paraphrase(turn, resources.chat, rng),
            base_seed,
        )

    if method == "dialogtree":
        rng = derive_rng(base_seed, "tree")
        return synthesize_dialog(corpus, synthetic_id, rng, config.sample_size)

    if method == "actresp":
        if state_index is None:
            state_index = build_state_index(corpus)
        rng = derive_rng(base_seed, "actresp")
        return act_response_substitute(dialog, state_index, rng, synthetic_id)

    raise ValueError(f"unhandled method {method!r}")


def expand(corpus: Corpus, config: AugmentConfig, resources: AugmentResources) -> Corpus:
    """Every original training dialog verbatim plus its synthetic copies.

    Synthetic ids are ``<original>#aug<copy>``.  Held-out splits pass
    through unaugmented, so for an all-training corpus the output size is
    exactly the expansion factor times the input size.
    """
    train_ids = {d.id for d in corpus.train_dialogs()}
    state_index = build_state_index(corpus) if config.method == "actresp" else None

    dialogs: list[Dialog] = []
    goal_index = dict(corpus.goal_index)
    for dialog in corpus.dialogs:
        dialogs.append(dialog)
        if dialog.id not in train_ids:
            continue
        for copy_index in range(1, config.copies + 1):
            synthetic = synthesize_copy(
                corpus, dialog, copy_index, config, resources, state_index
            )
            dialogs.append(synthetic)
            if dialog.id in goal_index:
                goal_index[synthetic.id] = goal_index[dialog.id]
    expanded = replace(corpus, dialogs=tuple(dialogs), goal_index=goal_index)
    validate_corpus(expanded)
    return expanded


# ---------------------------------------------------------------------------
# run matrix


@dataclass(frozen=True)
class CellKey:
    method: str
    fraction: float
    expansion: str
    seed: int

    def path(self) -> str:
        return f"{self.method}/f{self.fraction:g}/{self.expansion}/seed{self.seed}"


@dataclass
class CellResult:
    key: CellKey
    artifact: str
    status: str
    error: str = ""
    metrics: MetricsReport | None = None


@dataclass
class MatrixReport:
    cells: list[CellResult]

    @property
    def failed(self) -> bool:
        return any(cell.status != "ok" for cell in self.cells)


def _run_cell(
    corpus: Corpus,
    key: CellKey,
    out_dir: Path,
    base_config: AugmentConfig,
    resources: AugmentResources,
    trainer_hook: str | None,
) -> CellResult:
    cell_dir = out_dir / key.path()
    artifact = cell_dir / "corpus.json"
    try:
        subset = sample_subset(corpus, key.fraction, key.seed)
        config = replace(
            base_config, method=key.method, expansion=key.expansion, seed=key.seed
        )
        augmented = expand(subset, config, resources)
        cell_dir.mkdir(parents=True, exist_ok=True)
        artifact.write_text(dumps_canonical(augmented), encoding="utf-8")
        metrics = None
        if trainer_hook:
            predictions_path = cell_dir / "predictions.json"
            command = trainer_hook.format(corpus=artifact, predictions=predictions_path)
            subprocess.run(shlex.split(command), check=True)
            dataset = "kvret" if corpus.dataset_id.startswith("kvret") else "multiwoz"
            metrics = evaluate(augmented, load_predictions(predictions_path), dataset)
        # artifact paths are relative to out_dir so archives stay relocatable
        return CellResult(
            key=key, artifact=f"{key.path()}/corpus.json", status="ok", metrics=metrics
        )
    except Exception as exc:  # a failing cell must not sink the matrix
        log.warning("cell %s failed: %s", key.path(), exc)
        return CellResult(
            key=key, artifact=f"{key.path()}/corpus.json", status="failed", error=str(exc)
        )


def run_matrix(
    corpus: Corpus,
    methods: Sequence[str],
    fractions: Sequence[float],
    expansions: Sequence[str],
    seeds: Sequence[int] = DEFAULT_SEEDS,
    out_dir: str | Path = "matrix-out",
    resources: AugmentResources | None = None,
    base_config: AugmentConfig | None = None,
    trainer_hook: str | None = None,
    workers: int = 1,
) -> MatrixReport:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    resources = resources or AugmentResources()
    base_config = base_config or AugmentConfig(method="w2v")
    keys = [
        CellKey(method=m, fraction=f, expansion=e, seed=s)
        for m in methods
        for f in fractions
        for e in expansions
        for s in seeds
    ]
    if workers <= 1:
        results = [
            _run_cell(corpus, key, out_dir, base_config, resources, trainer_hook)
            for key in keys
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda key: _run_cell(
                        corpus, key, out_dir, base_config, resources, trainer_hook
                    ),
                    keys,
                )
            )
    results.sort(key=lambda c: (c.key.method, c.key.fraction, c.key.expansion, c.key.seed))
    report = MatrixReport(cells=results)
    (out_dir / "results.csv").write_text(render_results_csv(report), encoding="utf-8")
    (out_dir / "report.json").write_text(render_report_json(report), encoding="utf-8")
    return report


def _metric_cells(metrics: MetricsReport | None) -> list[str]:
    if metrics is None:
        return ["", "", "", ""]
    return [
        f"{metrics.inform:.2f}",
        f"{metrics.success:.2f}",
        f"{metrics.bleu:.2f}",
        f"{metrics.score:.2f}",
    ]


def render_results_csv(report: MatrixReport) -> str:
    lines = ["method,fraction,expansion,seed,inform,success,bleu,score"]
    for cell in report.cells:
        key = cell.key
        lines.append(
            ",".join(
                [key.method, f"{key.fraction:g}", key.expansion, str(key.seed)]
                + _metric_cells(cell.metrics)
            )
        )
    # means section: one row per cell over its seeds, full-precision mean
    # rendered at two decimals
    groups: dict[tuple[str, float, str], list[MetricsReport]] = {}
    for cell in report.cells:
        if cell.metrics is not None:
            groups.setdefault(
                (cell.key.method, cell.key.fraction, cell.key.expansion), []
            ).append(cell.metrics)
    for (method, fraction, expansion), values in sorted(groups.items()):
        mean = MetricsReport(
            inform=sum(v.inform for v in values) / len(values),
            success=sum(v.success for v in values) / len(values),
            bleu=sum(v.bleu for v in values) / len(values),
            score=sum(v.score for v in values) / len(values),
        )
        lines.append(
            ",".join(
                [method, f"{fraction:g}", expansion, "mean"] + _metric_cells(mean)
            )
        )
    return "\n".join(lines) + "\n"


def render_report_json(report: MatrixReport) -> str:
    doc = {
        "cells": [
            {
                "method": cell.key.method,
                "fraction": cell.key.fraction,
                "expansion": cell.key.expansion,
                "seed": cell.key.seed,
                "artifact": cell.artifact,
                "status": cell.status,
                "error": cell.error,
                "metrics": cell.metrics.as_dict() if cell.metrics else None,
            }
            for cell in report.cells
        ]
    }
    return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def best_expansions(report: MatrixReport) -> dict[tuple[str, float], tuple[str, float]]:
    """Best mean Score per (method, fraction), as (expansion, score)."""
    means: dict[tuple[str, float, str], list[float]] = {}
    for cell in report.cells:
        if cell.metrics is not None:
            means.setdefault(
                (cell.key.method, cell.key.fraction, cell.key.expansion), []
            ).append(cell.metrics.score)
    best: dict[tuple[str, float], tuple[str, float]] = {}
    for (method, fraction, expansion), scores in sorted(means.items()):
        mean_score = sum(scores) / len(scores)
        current = best.get((method, fraction))
        if current is None or mean_score > current[1]:
            best[(method, fraction)] = (expansion, mean_score)
    return best
