"""Command-line entry point: prepare | train | predict | llm | eval | report.

Configuration comes from a JSON file (``--config``), with ``--seed`` and
``--out`` as global overrides.  Every run is deterministic given config and
seed; per-component seeds derive from the single master seed.  Exit codes:
0 ok, 2 config error, 3 data error, 4 provider error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as ds
from . import dumps as dumpio
from . import evaluation as ev
from . import features as ft
from . import linear_model as lm
from . import report as rp
from . import shallow_model as sm
from .errors import ConfigError, DataError, NameOriginError, ProviderError
from .llm import (
    HttpChatProvider,
    RunPolicy,
    StrategyKind,
    StrategyParams,
    run_batch,
    select_fewshot_examples,
)
from .mock_provider import MockChatProvider, MockScript
from .prng import derive
from .taxonomy import (
    Granularity,
    LabelSpace,
    bins_for_space,
    load_taxonomy,
    validate_taxonomy,
)

_GRANULARITY = {g.value: g for g in Granularity}
_LABEL_KIND = {
    Granularity.NATIONALITY: "nationalities",
    Granularity.REGION: "regions",
    Granularity.CONTINENT: "continents",
}

DEFAULT_CONFIG = {
    "seed": 0,
    "out_dir": "runs/default",
    "dataset": {"raw_path": None, "min_samples": 500, "cap": 800, "ratios": [0.8, 0.1, 0.1]},
    "features": {"n_min": 1, "n_max": 4, "max_features": 50_000, "lowercase": True},
    "svm": {"C": 1.0, "epochs": 10, "tolerance": 0.0},
    "fasttext": {"buckets": ft.DEFAULT_HASH_BUCKETS, "dim": 100, "lr": 0.5, "epochs": 25,
                 "n_min": 2, "n_max": 5},
    "llm": {
        "strategy": "zero_shot",
        "granularity": "nationality",
        "limit": None,
        "provider": {"kind": "mock", "script": None, "endpoint": None, "model": None,
                     "auth_env": "OPENAI_API_KEY", "timeout": 60.0},
        "policy": {"max_concurrency": 50, "max_retries": 3, "backoff_base": 0.5,
                   "backoff_factor": 2.0, "jitter": True},
        "params": {"temperature": 1.0, "max_output_tokens": 256, "n_samples": 5},
    },
    "eval": {"ks": [1, 2, 3, 5], "granularity": "nationality", "mode": "project",
             "strata": True, "confusion_top_n": 10, "matrix_top_n": 15},
    "taxonomy_path": None,
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        user = json.loads(p.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    return _merge(DEFAULT_CONFIG, user)


def _load_taxonomy(config: dict):
    tax = load_taxonomy(config.get("taxonomy_path"))
    check = validate_taxonomy(tax, expected_labels=tax.nat_to_region.keys())
    if not check.ok:
        raise DataError(f"taxonomy failed validation: {check.problems}")
    return tax


def _splits_dir(config: dict, args) -> Path:
    if getattr(args, "splits", None):
        return Path(args.splits)
    return Path(config["out_dir"]) / "splits"


def cmd_prepare(config: dict, args) -> int:
    raw = args.raw or config["dataset"]["raw_path"]
    if not raw:
        raise ConfigError("no raw corpus path (set dataset.raw_path or pass --raw)")
    if not Path(raw).exists():
        raise DataError(f"raw corpus not found: {raw}")
    records = ds.load_raw(raw)
    pconf = ds.PreprocessConfig(
        min_samples=config["dataset"]["min_samples"],
        cap=config["dataset"]["cap"],
        ratios=tuple(config["dataset"]["ratios"]),
        seed=config["seed"],
    )
    split = ds.preprocess(records, pconf)
    out = _splits_dir(config, args)
    manifest_path = ds.save_splits(split, out)
    manifest = json.loads(manifest_path.read_text("utf-8"))
    print(f"labels: {len(manifest['labels'])}")
    for name in ("train", "dev", "test"):
        print(f"{name}: {manifest['totals'][name]:,}")
    print(f"total: {manifest['total']:,}")
    print(f"manifest: {manifest_path}")
    return 0


def _read_split(splits: Path, name: str) -> list[ds.NameRecord]:
    if not (splits / f"{name}.tsv").exists():
        raise DataError(f"missing split file {splits / (name + '.tsv')}; run prepare first")
    return ds.load_split(splits, name)


def cmd_train(config: dict, args) -> int:
    splits = _splits_dir(config, args)
    train_recs = _read_split(splits, "train")
    dev_recs = _read_split(splits, "dev")
    models_dir = Path(config["out_dir"]) / "models"
    models_dir.mkdir(parents=True, exist_ok=True)

    if args.model == "svm":
        fconf = ft.NgramConfig(
            n_min=config["features"]["n_min"],
            n_max=config["features"]["n_max"],
            max_features=config["features"]["max_features"],
            lowercase=config["features"]["lowercase"],
        )
        vocab = ft.fit_vocabulary([r.name for r in train_recs], fconf)
        train_x = ft.transform_all((r.name for r in train_recs), vocab)
        dev_x = ft.transform_all((r.name for r in dev_recs), vocab)
        tconf = lm.TrainConfig(
            C=config["svm"]["C"],
            epochs=config["svm"]["epochs"],
            seed=derive(config["seed"], "svm"),
            tolerance=config["svm"]["tolerance"],
        )
        model = lm.train(vocab, train_x, [r.nationality for r in train_recs],
                         dev_x, [r.nationality for r in dev_recs], tconf)
        vocab.save(models_dir / "vocab.json")
        model.save(models_dir / "svm.npz")
        correct = sum(
            lm.predict_topk(model, x, 1)[0][0] == r.nationality
            for x, r in zip(dev_x, dev_recs)
        )
        print(f"dev accuracy: {correct / len(dev_recs):.3f}")
        print(f"model: {models_dir / 'svm.npz'}")
        return 0

    if args.model == "fasttext":
        sconf = sm.ShallowConfig(
            buckets=config["fasttext"]["buckets"],
            dim=config["fasttext"]["dim"],
            lr=config["fasttext"]["lr"],
            epochs=config["fasttext"]["epochs"],
            n_min=config["fasttext"]["n_min"],
            n_max=config["fasttext"]["n_max"],
            seed=derive(config["seed"], "fasttext"),
        )
        model = sm.train([r.name for r in train_recs],
                         [r.nationality for r in train_recs], sconf)
        model.save(models_dir / "fasttext.npz")
        correct = sum(
            sm.predict_topk(model, r.name, 1)[0][0] == r.nationality for r in dev_recs
        )
        print(f"dev accuracy: {correct / len(dev_recs):.3f}")
        print(f"model: {models_dir / 'fasttext.npz'}")
        return 0

    raise ConfigError(f"unknown model: {args.model!r}")


def cmd_predict(config: dict, args) -> int:
    splits = _splits_dir(config, args)
    records = _read_split(splits, args.split)
    models_dir = Path(config["out_dir"]) / "models"
    dump_dir = Path(config["out_dir"]) / "dumps"
    k = args.k

    rows = []
    if args.model == "svm":
        model_path = Path(args.model_file) if args.model_file else models_dir / "svm.npz"
        vocab_path = Path(args.vocab) if args.vocab else models_dir / "vocab.json"
        for path in (model_path, vocab_path):
            if not path.exists():
                raise DataError(f"missing artifact: {path}")
        model = lm.LinearModel.load(model_path)
        vocab = ft.Vocabulary.load(vocab_path)
        lm.ensure_compatible(model, vocab)
        for rec in records:
            top = lm.predict_topk(model, ft.transform(rec.name, vocab), k)
            pred = ev.Prediction(rec.name, rec.nationality,
                                 tuple(lab for lab, _ in top),
                                 tuple(score for _, score in top), source="svm")
            rows.append(dumpio.prediction_to_row(pred, strategy="svm"))
    elif args.model == "fasttext":
        model_path = Path(args.model_file) if args.model_file else models_dir / "fasttext.npz"
        if not model_path.exists():
            raise DataError(f"missing artifact: {model_path}")
        model = sm.ShallowModel.load(model_path)
        for rec in records:
            top = sm.predict_topk(model, rec.name, k)
            pred = ev.Prediction(rec.name, rec.nationality,
                                 tuple(lab for lab, _ in top),
                                 tuple(score for _, score in top), source="fasttext")
            rows.append(dumpio.prediction_to_row(pred, strategy="fasttext"))
    else:
        raise ConfigError(f"unknown model: {args.model!r}")

    out_path = Path(args.dump) if args.dump else dump_dir / f"{args.model}_{args.split}.jsonl"
    count = dumpio.write_dump(out_path, rows)
    print(f"wrote {count:,} predictions to {out_path}")
    return 0


def _build_provider(config: dict, args):
    pconf = config["llm"]["provider"]
    kind = args.provider or pconf["kind"]
    if kind == "mock":
        script = args.script or pconf["script"]
        if not script:
            raise ConfigError("mock provider needs a script file (llm.provider.script)")
        if not Path(script).exists():
            raise DataError(f"mock script not found: {script}")
        return MockChatProvider(MockScript.load(script), seed=config["seed"])
    if kind == "http":
        if not pconf["endpoint"] or not pconf["model"]:
            raise ConfigError("http provider needs endpoint and model in config")
        return HttpChatProvider(
            endpoint=pconf["endpoint"],
            model=pconf["model"],
            auth_env=pconf["auth_env"],
            timeout=pconf["timeout"],
        )
    raise ConfigError(f"unknown provider kind: {kind!r}")


def cmd_llm(config: dict, args) -> int:
    tax = _load_taxonomy(config)
    splits = _splits_dir(config, args)
    records = _read_split(splits, args.split)
    limit = args.limit if args.limit is not None else config["llm"]["limit"]
    if limit:
        records = records[: int(limit)]

    strategy_name = args.strategy or config["llm"]["strategy"]
    try:
        kind = StrategyKind(strategy_name)
    except ValueError as exc:
        raise ConfigError(f"unknown strategy: {strategy_name!r}") from exc

    gran = _GRANULARITY.get(args.granularity or config["llm"]["granularity"])
    if gran is None:
        raise ConfigError("llm.granularity must be nationality|region|continent")
    space = list(tax.label_space(gran).labels)

    params = StrategyParams(
        temperature=config["llm"]["params"]["temperature"],
        max_output_tokens=config["llm"]["params"]["max_output_tokens"],
        n_samples=config["llm"]["params"]["n_samples"],
        top_k=args.k,
    )
    policy = RunPolicy(
        max_concurrency=config["llm"]["policy"]["max_concurrency"],
        max_retries=config["llm"]["policy"]["max_retries"],
        backoff_base=config["llm"]["policy"]["backoff_base"],
        backoff_factor=config["llm"]["policy"]["backoff_factor"],
        jitter=config["llm"]["policy"]["jitter"],
    )
    provider = _build_provider(config, args)

    examples = None
    if kind is StrategyKind.FEW_SHOT:
        examples = select_fewshot_examples(_read_split(splits, "train"), tax)
    if kind is StrategyKind.LEAST_TO_MOST and gran is not Granularity.NATIONALITY:
        raise ConfigError("least_to_most always predicts nationalities; "
                          "evaluate coarse levels by projection instead")

    runs, summary = run_batch(
        [rec.name for rec in records],
        kind,
        provider=provider,
        params=params,
        policy=policy,
        label_space=space,
        taxonomy=tax,
        examples=examples,
        label_kind=_LABEL_KIND[gran],
    )

    truth = {i: rec.nationality if gran is Granularity.NATIONALITY
             else tax.project(rec.nationality, gran) for i, rec in enumerate(records)}
    rows = []
    trace_rows = []
    for i, run in enumerate(runs):
        rows.append({
            "name": run.name,
            "true_label": truth[i],
            "predicted": run.prediction,
            "strategy": run.strategy,
            "flags": run.flags(),
        })
        trace_rows.append({
            "name": run.name,
            "strategy": run.strategy,
            "messages": run.messages,
            "responses": run.responses,
            "prediction": run.prediction,
            "flags": run.flags(),
        })

    dump_path = (Path(args.dump) if args.dump
                 else Path(config["out_dir"]) / "dumps" / f"{kind.value}_{args.split}.jsonl")
    dumpio.write_dump(dump_path, rows)
    trace_path = Path(config["out_dir"]) / "traces" / f"{kind.value}_{args.split}.jsonl"
    dumpio.write_dump(trace_path, trace_rows)
    print(f"unknown rate: {summary.unknown_rate:.4f}")
    print(f"retry histogram: {summary.retry_histogram}")
    print(f"dump: {dump_path}")
    return 0


def cmd_eval(config: dict, args) -> int:
    tax = _load_taxonomy(config)
    econf = config["eval"]
    gran = _GRANULARITY.get(args.granularity or econf["granularity"])
    if gran is None:
        raise ConfigError("eval.granularity must be nationality|region|continent")
    mode = args.mode or econf["mode"]
    if mode not in ("project", "native"):
        raise ConfigError("eval.mode must be 'project' or 'native'")

    dump_paths = [Path(p) for p in args.dump]
    for path in dump_paths:
        if not path.exists():
            raise DataError(f"dump not found: {path}")

    bins = None
    provenance: dict = {"dumps": [str(p) for p in dump_paths], "seed": config["seed"],
                        "granularity": gran.value, "mode": mode}
    splits = _splits_dir(config, args)
    manifest = None
    if (splits / "manifest.json").exists():
        manifest = ds.load_manifest(splits)
        provenance["dataset_fingerprint"] = manifest["fingerprint"]
        provenance["length_histogram"] = manifest["stats"]["length_histogram"]
        if gran is Granularity.NATIONALITY and econf["strata"]:
            train_counts = manifest["per_label_counts"]["train"]
            space = tax.label_space(Granularity.NATIONALITY)
            if not set(space.labels) <= set(train_counts):
                # smaller corpora (subsets, fixtures): bin whatever was trained on
                space = LabelSpace(tuple(sorted(train_counts)), Granularity.NATIONALITY)
            bins = bins_for_space(train_counts, space)

    bundle = rp.ReportBundle(provenance=provenance)
    eval_sets = []
    for path in dump_paths:
        preds = dumpio.read_dump(path)
        if not preds:
            raise DataError(f"empty dump: {path}")
        method = preds[0].source or path.stem
        if gran is not Granularity.NATIONALITY and mode == "project":
            preds = ev.project_predictions(preds, tax, gran)
        label_space = None
        if mode == "native" and gran is not Granularity.NATIONALITY:
            label_space = list(tax.label_space(gran).labels)
        use_bins = bins
        if gran is Granularity.NATIONALITY and bins is not None:
            covered = {p.true_label for p in preds} <= set(bins.bin_of)
            use_bins = bins if covered else None
        report = ev.build_report(
            preds,
            tax,
            bins=use_bins,
            ks=econf["ks"],
            granularity=gran,
            source=method,
            mode=mode,
            label_space=label_space,
            confusion_top_n=econf["confusion_top_n"],
            matrix_top_n=econf["matrix_top_n"],
        )
        bundle.entries.append(rp.ReportEntry(method=method, seed=config["seed"], report=report))
        eval_sets.append((method, preds))

    out_dir = Path(args.out_dir) if args.out_dir else Path(config["out_dir"]) / "eval"
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle.save(out_dir / "report.json")
    _write_renderings(bundle, out_dir)

    if args.compare:
        if len(eval_sets) != 2:
            raise ConfigError("--compare needs exactly two dumps")
        cases = ev.cross_model_cases(eval_sets[0][1], eval_sets[1][1], tax)
        payload = {
            "a": eval_sets[0][0],
            "b": eval_sets[1][0],
            "sizes": cases.sizes(),
            "buckets": {
                name: [
                    {"name": a.name, "true": a.true_label,
                     "a_pred": list(a.ranked), "b_pred": list(b.ranked)}
                    for a, b in pairs
                ]
                for name, pairs in cases.buckets.items()
            },
        }
        (out_dir / "cases.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", "utf-8")
        print(f"cross-model cases: {out_dir / 'cases.json'}")

    for entry in bundle.entries:
        rep = entry.report
        print(f"{entry.method}: accuracy={rep.accuracy:.3f} macro_f1={rep.macro_f1:.3f} "
              f"unknown_rate={rep.unknown_rate:.4f}")
    print(f"report: {out_dir / 'report.json'}")
    return 0


def _write_renderings(bundle: rp.ReportBundle, out_dir: Path) -> None:
    tables_dir = out_dir / "tables"
    plots_dir = out_dir / "plotdata"
    tables_dir.mkdir(parents=True, exist_ok=True)
    plots_dir.mkdir(parents=True, exist_ok=True)
    for kind in rp.TABLE_KINDS:
        try:
            (tables_dir / f"{kind}.md").write_text(rp.render_markdown(bundle, kind), "utf-8")
        except rp.MissingAnalysis:
            continue
    for kind in rp.PLOT_KINDS:
        try:
            rp.emit_plot_data(bundle, kind, plots_dir / f"{kind}.csv")
        except rp.MissingAnalysis:
            continue


def cmd_report(config: dict, args) -> int:
    report_path = Path(args.report_json) if args.report_json else (
        Path(config["out_dir"]) / "eval" / "report.json")
    if not report_path.exists():
        raise DataError(f"report bundle not found: {report_path}")
    bundle = rp.ReportBundle.load(report_path)
    out_dir = Path(args.out_dir) if args.out_dir else report_path.parent
    _write_renderings(bundle, out_dir)
    print(f"tables: {out_dir / 'tables'}")
    print(f"plotdata: {out_dir / 'plotdata'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nameorigin")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override config seed")
    parser.add_argument("--out", help="override config out_dir")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="filter/cap/split a raw corpus")
    p.add_argument("--raw", help="raw corpus path (TSV or JSON)")
    p.add_argument("--splits", help="output directory for split files")

    p = sub.add_parser("train", help="train a baseline model")
    p.add_argument("--model", required=True, choices=["svm", "fasttext"])
    p.add_argument("--splits", help="directory with train/dev/test.tsv")

    p = sub.add_parser("predict", help="write a prediction dump for a split")
    p.add_argument("--model", required=True, choices=["svm", "fasttext"])
    p.add_argument("--model-file", dest="model_file")
    p.add_argument("--vocab")
    p.add_argument("--splits")
    p.add_argument("--split", default="test", choices=["train", "dev", "test"])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--dump", help="output JSONL path")

    p = sub.add_parser("llm", help="run a prompting strategy over a split")
    p.add_argument("--strategy", choices=[k.value for k in StrategyKind])
    p.add_argument("--provider", choices=["mock", "http"])
    p.add_argument("--script", help="mock script JSON")
    p.add_argument("--splits")
    p.add_argument("--split", default="test", choices=["train", "dev", "test"])
    p.add_argument("--granularity", choices=list(_GRANULARITY))
    p.add_argument("--limit", type=int)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--dump", help="output JSONL path")

    p = sub.add_parser("eval", help="compute metrics over prediction dumps")
    p.add_argument("--dump", nargs="+", required=True)
    p.add_argument("--granularity", choices=list(_GRANULARITY))
    p.add_argument("--mode", choices=["project", "native"])
    p.add_argument("--splits")
    p.add_argument("--compare", action="store_true",
                   help="emit cross-model cases (needs exactly two dumps)")
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("report", help="re-render tables and plot data from report.json")
    p.add_argument("--report-json", dest="report_json")
    p.add_argument("--out-dir", dest="out_dir")

    return parser


_COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "predict": cmd_predict,
    "llm": cmd_llm,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        if args.out is not None:
            config["out_dir"] = args.out
        return _COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NameOriginError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
