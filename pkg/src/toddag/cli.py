"""Command-line interface: ingest, subset, split-crossdomain, augment,
evaluate, matrix, report.

Every subcommand accepts ``--config FILE`` pointing at a JSON object whose
keys mirror the long flag names (dashes as underscores); explicit flags
override config values.  The process exits nonzero when a requested matrix
cell failed or an input is invalid.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import (
    BackendEndpoint,
    BackendError,
    ChatClient,
    FillMaskClient,
    ParaphraseClient,
    PredictClient,
    TranslateClient,
)
from .corpus import CorpusError, load_canonical, save_canonical
from .embeddings import EmbeddingTable
from .experiment import (
    AugmentConfig,
    AugmentResources,
    DEFAULT_SEEDS,
    METHODS,
    constant_predictor_factory,
    expand,
    few_shot_split,
    gold_oracle_factory,
    run_matrix,
    sample_subset,
)
from .filtering import HttpPredictor, RuleTablePredictor
from .ingest import ingest_kvret, ingest_multiwoz
from .metrics import MetricsError, evaluate, load_predictions
from .parses import load_conllu_dir


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _setting(args: argparse.Namespace, config: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _endpoint(args, config) -> BackendEndpoint:
    url = _setting(args, config, "backend")
    if not url:
        raise SystemExit("this method needs --backend <url>")
    return BackendEndpoint(
        base_url=url,
        timeout_ms=int(_setting(args, config, "timeout_ms", 10_000)),
        retries=int(_setting(args, config, "retries", 2)),
        max_in_flight=int(_setting(args, config, "max_in_flight", 4)),
    )


def _predictor_factory(args, config):
    spec = _setting(args, config, "predictor", "oracle")
    if spec == "oracle":
        return gold_oracle_factory
    if spec.startswith("rules:"):
        return constant_predictor_factory(RuleTablePredictor.load(spec[len("rules:") :]))
    if spec.startswith("http:"):
        endpoint = BackendEndpoint(base_url=spec[len("http:") :])
        return constant_predictor_factory(HttpPredictor(PredictClient(endpoint)))
    raise SystemExit(f"unknown predictor spec {spec!r}; use oracle, rules:<path> or http:<url>")


def _resources(args, config, methods: list[str]) -> AugmentResources:
    resources = AugmentResources()
    if any(m in methods for m in ("w2v", "mlm")):
        resources.predictor_factory = _predictor_factory(args, config)
    if "w2v" in methods:
        embeddings = _setting(args, config, "embeddings")
        if not embeddings:
            raise SystemExit("method w2v needs --embeddings <path>")
        resources.embeddings = EmbeddingTable.load(embeddings)
    if "mlm" in methods:
        resources.mask_filler = FillMaskClient(
            _endpoint(args, config), mask_token=_setting(args, config, "mask_token", "<mask>")
        )
    if "backtranslate" in methods:
        resources.translator = TranslateClient(_endpoint(args, config))
    if "paraphrase" in methods:
        resources.paraphraser = ParaphraseClient(_endpoint(args, config))
    if "llm" in methods:
        resources.chat = ChatClient(_endpoint(args, config))
    if "rotate" in methods:
        parses = _setting(args, config, "parses")
        if not parses:
            raise SystemExit("method rotate needs --parses <dir>")
        resources.parses = load_conllu_dir(parses)
    return resources


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", help="base URL of the model backend service")
    parser.add_argument("--mask-token", dest="mask_token")
    parser.add_argument("--timeout-ms", dest="timeout_ms", type=int)
    parser.add_argument("--retries", type=int)
    parser.add_argument("--max-in-flight", dest="max_in_flight", type=int)
    parser.add_argument("--embeddings", help="word2vec-format embedding table")
    parser.add_argument("--parses", help="directory of CoNLL-U sidecar parses")
    parser.add_argument(
        "--predictor", help="consistency filter: oracle, rules:<path> or http:<url>"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toddag")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a raw dataset into canonical JSON")
    p.add_argument("--format", choices=("multiwoz", "kvret", "canonical"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")

    p = sub.add_parser("subset", help="sample a training subset")
    p.add_argument("--corpus", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")

    p = sub.add_parser("split-crossdomain", help="few-shot cross-domain split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--keep", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")

    p = sub.add_parser("augment", help="expand a corpus with one method")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--expansion", choices=("x2", "x3", "x5"))
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--pivot")
    p.add_argument(
        "--max-positions-fraction", dest="max_positions_fraction", type=float
    )
    p.add_argument("--config")
    _add_backend_flags(p)

    p = sub.add_parser("evaluate", help="score a prediction file against a corpus")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--dataset", choices=("multiwoz", "kvret"))
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("matrix", help="run the method x fraction x expansion matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--methods")
    p.add_argument("--fractions")
    p.add_argument("--expansions")
    p.add_argument("--seeds")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--trainer-hook", dest="trainer_hook")
    p.add_argument("--k", type=int)
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--pivot")
    p.add_argument("--config")
    _add_backend_flags(p)

    p = sub.add_parser("report", help="summarize a matrix output directory")
    p.add_argument("--matrix-dir", dest="matrix_dir", required=True)
    p.add_argument("--config")

    return parser


def _cmd_ingest(args, config) -> int:
    fmt = args.format
    if fmt == "multiwoz":
        corpus = ingest_multiwoz(args.input)
    elif fmt == "kvret":
        corpus = ingest_kvret(args.input)
    else:
        corpus = load_canonical(args.input)
    save_canonical(corpus, args.out)
    print(f"wrote {len(corpus)} dialogs to {args.out}")
    return 0


def _cmd_subset(args, config) -> int:
    corpus = load_canonical(args.corpus)
    subset = sample_subset(corpus, args.fraction, args.seed)
    save_canonical(subset, args.out)
    print(f"sampled {len(subset.train_dialogs())} training dialogs to {args.out}")
    return 0


def _cmd_split(args, config) -> int:
    corpus = load_canonical(args.corpus)
    split = few_shot_split(corpus, args.domain, keep=args.keep, seed=args.seed)
    save_canonical(split, args.out)
    remaining = sum(1 for d in split.train_dialogs() if args.domain in d.domains)
    print(f"kept {remaining} {args.domain} training dialogs; wrote {args.out}")
    return 0


def _cmd_augment(args, config) -> int:
    corpus = load_canonical(args.corpus)
    method = _setting(args, config, "method")
    if not method:
        raise SystemExit("augment needs --method")
    aug_config = AugmentConfig(
        method=method,
        expansion=_setting(args, config, "expansion", "x2"),
        seed=int(_setting(args, config, "seed", 0)),
        k=int(_setting(args, config, "k", 10)),
        sample_size=int(_setting(args, config, "sample_size", 50)),
        pivot=_setting(args, config, "pivot", "fr"),
        max_positions_fraction=float(_setting(args, config, "max_positions_fraction", 1.0)),
    )
    resources = _resources(args, config, [method])
    expanded = expand(corpus, aug_config, resources)
    save_canonical(expanded, args.out)
    print(f"expanded {len(corpus)} -> {len(expanded)} dialogs ({method}, {aug_config.expansion})")
    return 0


def _cmd_evaluate(args, config) -> int:
    corpus = load_canonical(args.ref)
    dataset = _setting(args, config, "dataset") or (
        "kvret" if corpus.dataset_id.startswith("kvret") else "multiwoz"
    )
    report = evaluate(corpus, load_predictions(args.pred), dataset=dataset)
    line = (
        f"inform={report.inform:.2f} success={report.success:.2f} "
        f"bleu={report.bleu:.2f} score={report.score:.2f}"
    )
    if report.match is not None:
        line += f" match={report.match:.2f} success_f1={report.success_f1:.2f}"
    print(line)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def _parse_csv(raw: str | None, cast):
    if not raw:
        return None
    return [cast(part) for part in str(raw).split(",") if part != ""]


def _cmd_matrix(args, config) -> int:
    corpus = load_canonical(args.corpus)
    methods = _parse_csv(_setting(args, config, "methods"), str) or []
    fractions = _parse_csv(_setting(args, config, "fractions"), float) or [1.0]
    expansions = _parse_csv(_setting(args, config, "expansions"), str) or ["x2"]
    seeds = _parse_csv(_setting(args, config, "seeds"), int) or list(DEFAULT_SEEDS)
    resources = _resources(args, config, methods)
    base_config = AugmentConfig(
        method=methods[0] if methods else "w2v",
        k=int(_setting(args, config, "k", 10)),
        sample_size=int(_setting(args, config, "sample_size", 50)),
        pivot=_setting(args, config, "pivot", "fr"),
    )
    report = run_matrix(
        corpus,
        methods=methods,
        fractions=fractions,
        expansions=expansions,
        seeds=seeds,
        out_dir=args.out_dir,
        resources=resources,
        base_config=base_config,
        trainer_hook=_setting(args, config, "trainer_hook"),
        workers=int(_setting(args, config, "workers", 1)),
    )
    failed = [cell for cell in report.cells if cell.status != "ok"]
    print(f"{len(report.cells)} cells, {len(failed)} failed; results in {args.out_dir}")
    return 1 if failed else 0


def _cmd_report(args, config) -> int:
    report_path = Path(args.matrix_dir) / "report.json"
    doc = json.loads(report_path.read_text(encoding="utf-8"))
    rows = [cell for cell in doc["cells"] if cell.get("metrics")]
    for cell in doc["cells"]:
        status = cell["status"]
        label = f"{cell['method']} f={cell['fraction']:g} {cell['expansion']} seed={cell['seed']}"
        if cell.get("metrics"):
            m = cell["metrics"]
            print(
                f"{label}: inform={m['inform']:.2f} success={m['success']:.2f} "
                f"bleu={m['bleu']:.2f} score={m['score']:.2f} [{status}]"
            )
        else:
            print(f"{label}: [{status}]")
    if rows:
        means: dict[tuple[str, float, str], list[float]] = {}
        for cell in rows:
            key = (cell["method"], cell["fraction"], cell["expansion"])
            means.setdefault(key, []).append(cell["metrics"]["score"])
        best: dict[tuple[str, float], tuple[str, float]] = {}
        for (method, fraction, expansion), scores in sorted(means.items()):
            value = sum(scores) / len(scores)
            if (method, fraction) not in best or value > best[(method, fraction)][1]:
                best[(method, fraction)] = (expansion, value)
        for (method, fraction), (expansion, value) in sorted(best.items()):
            print(f"best {method} @ {fraction:g}: {expansion} (score {value:.2f})")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "subset": _cmd_subset,
    "split-crossdomain": _cmd_split,
    "augment": _cmd_augment,
    "evaluate": _cmd_evaluate,
    "matrix": _cmd_matrix,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = _load_config(getattr(args, "config", None))
    try:
        return _COMMANDS[args.command](args, config)
    except (CorpusError, MetricsError, BackendError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
