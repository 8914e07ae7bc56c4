"""Command-line driver: ingest -> launder -> featurize -> train -> evaluate.

Every subcommand takes ``--config`` pointing at a ``key = value`` run
configuration.  Exit codes: 0 on success, 2 for configuration/input
validation problems, 1 for unexpected internal errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import classify, embeddings, evaluate, launder, manifest as mani, perceptual, spectral, store
from .audio import AudioClip, ClipLabel, canonicalize, read_wav, write_wav
from .config import RunConfig, parse_config, write_resolved
from .errors import ConfigError, EncoderUnavailable, VoicedetError

logger = logging.getLogger(__name__)


def _read_canonical(path: str, clip_id: str, label: ClipLabel) -> AudioClip:
    clip = canonicalize(read_wav(path, clip_id=clip_id))
    return replace(clip, label=label)


def cmd_ingest(cfg: RunConfig) -> int:
    if not cfg.roots:
        raise ConfigError("config must declare at least one 'root = dir|kind[|arch]'")
    m = mani.build_manifest(cfg.roots, cfg.seed, cfg.utterance_pattern)
    if cfg.balance_per_architecture > 0:
        m = mani.balance_architectures(m, cfg.balance_per_architecture)
    if cfg.pair_utterances:
        m = mani.balance_paired_utterances(m)
    m = mani.split_dataset(m, mode=cfg.split_mode, allow_small=cfg.allow_small_strata)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    mani.write_manifest(m, cfg.manifest_path)
    write_resolved(cfg)
    counts = {s: len(m.by_split(s)) for s in mani.SPLITS}
    print(
        f"ingested {len(m.entries)} clips -> {cfg.manifest_path} "
        f"(train={counts['train']} val={counts['val']} test={counts['test']})"
    )
    return 0


def cmd_launder(cfg: RunConfig) -> int:
    m = mani.read_manifest(cfg.manifest_path)
    m = launder.assign_laundering(m)
    needs_codec = any(
        e.laundering.kind in (mani.LAUNDER_TRANSCODE, mani.LAUNDER_BOTH)
        for e in m.entries
    )
    encoder = cfg.encoder()
    if needs_codec and encoder is None:
        raise EncoderUnavailable(
            "laundering plan includes transcoding but no encoder templates are configured"
        )
    cfg.laundered_dir.mkdir(parents=True, exist_ok=True)

    def process(entry: mani.ManifestEntry) -> mani.ManifestEntry:
        clip = _read_canonical(entry.path, entry.clip_id, entry.label)
        out = launder.launder_clip(
            clip,
            entry.laundering,
            launder.clip_noise_seed(cfg.seed, entry.clip_id),
            encoder,
        )
        dest = cfg.laundered_dir / (entry.clip_id.replace("/", "__") + ".wav")
        write_wav(dest, out)
        return mani.ManifestEntry(
            clip_id=entry.clip_id,
            path=str(dest),
            label=entry.label,
            utterance_id=entry.utterance_id,
            split=entry.split,
            laundering=entry.laundering,
        )

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        new_entries = list(pool.map(process, m.entries))
    mani.write_manifest(mani.DatasetManifest(tuple(new_entries), m.seed), cfg.manifest_path)
    n_clean = sum(1 for e in new_entries if e.laundering.kind == mani.LAUNDER_NONE)
    print(
        f"laundered {len(new_entries)} clips -> {cfg.laundered_dir} "
        f"({len(new_entries) - n_clean} altered, {n_clean} untouched)"
    )
    return 0


def _featurize_family(cfg: RunConfig, m: mani.DatasetManifest, family: str) -> Path:
    out_path = cfg.feature_store_path(family)
    if family == store.FAMILY_LEARNED:
        if not cfg.embeddings_file:
            raise ConfigError("learned features need 'embeddings_file' in the config")
        embs = embeddings.load_embeddings(cfg.embeddings_file, m.clip_ids())
        rows = [(cid, embs[cid].vector) for cid in m.clip_ids()]
        store.write_feature_store(out_path, family, embeddings.embedding_schema(), rows)
        return out_path

    if family == store.FAMILY_PERCEPTUAL:
        schema = list(perceptual.PERCEPTUAL_FEATURE_NAMES)

        def one(entry: mani.ManifestEntry) -> np.ndarray:
            clip = _read_canonical(entry.path, entry.clip_id, entry.label)
            return perceptual.perceptual_features(clip, cfg.envelope_cutoff_hz).as_vector()

    elif family == store.FAMILY_SPECTRAL:
        schema = list(spectral.spectral_schema())

        def one(entry: mani.ManifestEntry) -> np.ndarray:
            clip = _read_canonical(entry.path, entry.clip_id, entry.label)
            return spectral.spectral_features(clip).values

    else:
        raise ConfigError(f"unknown feature family {family!r}")

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        vectors = list(pool.map(one, m.entries))
    rows = [(e.clip_id, v) for e, v in zip(m.entries, vectors)]
    store.write_feature_store(out_path, family, schema, rows)
    return out_path


def cmd_featurize(cfg: RunConfig, family: str | None) -> int:
    m = mani.read_manifest(cfg.manifest_path)
    cfg.features_dir.mkdir(parents=True, exist_ok=True)
    families = [family] if family else list(cfg.families)
    for fam in families:
        out_path = _featurize_family(cfg, m, fam)
        print(f"featurized {len(m.entries)} clips ({fam}) -> {out_path}")
    return 0


def _labels_for(entries: list[mani.ManifestEntry], task: str) -> list[str]:
    if task == classify.TASK_SINGLE:
        return [e.label.kind for e in entries]
    return [
        "real" if e.label.kind == "real" else e.label.architecture for e in entries
    ]


def _grid_override(cfg: RunConfig, kind: str) -> list[dict] | None:
    if kind == classify.KIND_LINEAR:
        if cfg.grid_linear_l2:
            return [{"l2": v} for v in cfg.grid_linear_l2]
        return None
    n_trees = cfg.grid_forest_n_trees
    depths = cfg.grid_forest_max_depth
    leaves = cfg.grid_forest_min_leaf
    if not (n_trees or depths or leaves):
        return None
    n_trees = n_trees or [100, 300]
    depths = depths or [8, 16, None]
    leaves = leaves or [1, 5]
    return [
        {"n_trees": nt, "max_depth": md, "min_leaf": ml}
        for nt in n_trees
        for md in depths
        for ml in leaves
    ]


def _model_stem(task: str, kind: str, family: str) -> str:
    return f"{task}_{kind}_{family}"


def cmd_train(cfg: RunConfig, kind: str, task: str, family: str | None) -> int:
    m = mani.read_manifest(cfg.manifest_path)
    train_entries = m.by_split(mani.SPLIT_TRAIN)
    val_entries = m.by_split(mani.SPLIT_VAL)
    if not train_entries or not val_entries:
        raise ConfigError("manifest has empty train or val split; run ingest first")
    cfg.models_dir.mkdir(parents=True, exist_ok=True)

    families = [family] if family else list(cfg.families)
    for fam in families:
        fs = store.read_feature_store(cfg.feature_store_path(fam), expected_family=fam)
        X_train = fs.matrix([e.clip_id for e in train_entries])
        X_val = fs.matrix([e.clip_id for e in val_entries])
        y_train = _labels_for(train_entries, task)
        y_val = _labels_for(val_entries, task)

        selected = None
        if fam == store.FAMILY_SPECTRAL:
            selection = spectral.select_features(
                X_train, np.asarray(y_train), k=cfg.selection_k, seed=cfg.seed
            )
            selected = selection.selected_indices

        result = classify.tune_hyperparameters(
            X_train,
            y_train,
            X_val,
            y_val,
            kind,
            task,
            fam,
            grid=_grid_override(cfg, kind),
            seed=cfg.seed,
            selected_indices=selected,
        )
        stem = _model_stem(task, kind, fam)
        model_path = cfg.models_dir / f"{stem}.model"
        classify.save_model(result.model, model_path)
        log_path = cfg.models_dir / f"{stem}.tuning.txt"
        metric_name = "val_eer_pct" if task == classify.TASK_SINGLE else "neg_val_macro_acc"
        log_lines = [
            f"params={params!r} {metric_name}={score!r}" for params, score in result.log
        ]
        log_lines.append(f"chosen={result.best_params!r}")
        log_path.write_text("\n".join(log_lines) + "\n", encoding="utf-8")
        print(f"trained {stem} -> {model_path} (best {result.best_params})")
    return 0


def _evaluate_model(
    cfg: RunConfig, m: mani.DatasetManifest, model_path: Path
) -> evaluate.EvalReport:
    model = classify.load_model(model_path)
    test_entries = m.by_split(mani.SPLIT_TEST)
    if not test_entries:
        raise ConfigError("manifest has no test split")
    fs = store.read_feature_store(
        cfg.feature_store_path(model.family), expected_family=model.family
    )
    X = fs.matrix([e.clip_id for e in test_entries])
    labels = _labels_for(test_entries, model.task)
    proba = classify.predict_proba(model, X)
    syn_acc, real_acc, confusion = evaluate.class_accuracies(
        proba, labels, model.classes, model.task, cfg.decision_threshold
    )
    eer = None
    if model.task == classify.TASK_SINGLE:
        scores = classify.synthetic_score(model, X)
        roc = evaluate.roc_curve(scores, [lab != "real" for lab in labels])
        eer, _ = evaluate.compute_eer(roc)
    return evaluate.EvalReport(
        dataset=cfg.dataset,
        model=model_path.stem,
        classifier=model.kind,
        task=model.task,
        family=model.family,
        synthetic_acc=syn_acc,
        real_acc=real_acc,
        eer=eer,
        confusion=confusion,
    )


def cmd_evaluate(
    cfg: RunConfig, kind: str | None, task: str | None, family: str | None
) -> int:
    m = mani.read_manifest(cfg.manifest_path)
    model_paths = sorted(cfg.models_dir.glob("*.model"))
    if task:
        model_paths = [p for p in model_paths if p.stem.startswith(f"{task}_")]
    if kind:
        model_paths = [p for p in model_paths if f"_{kind}_" in p.stem]
    if family:
        model_paths = [p for p in model_paths if p.stem.endswith(f"_{family}")]
    if not model_paths:
        raise ConfigError(f"no trained models match under {cfg.models_dir}")

    reports = [_evaluate_model(cfg, m, p) for p in model_paths]
    cfg.reports_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.reports_dir / "report.csv"
    csv_path.write_text(evaluate.report_csv(reports), encoding="utf-8")
    for rep in reports:
        conf_path = cfg.reports_dir / f"{rep.model}.confusion.txt"
        np.savetxt(conf_path, rep.confusion, fmt="%d", delimiter="\t")
    print(evaluate.report_table(reports), end="")
    print(f"wrote {csv_path}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    csv_path = cfg.reports_dir / "report.csv"
    if not csv_path.exists():
        raise ConfigError(f"no report at {csv_path}; run evaluate first")
    reports = evaluate.parse_report_csv(csv_path.read_text(encoding="utf-8"))
    print(evaluate.report_table(reports), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voicedet",
        description="Cloned-voice detection: dataset prep, features, classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to key=value run config")
        return p

    add("ingest", "inventory audio roots, balance and split the dataset")
    add("launder", "draw the laundering plan and render laundered audio")

    p = add("featurize", "compute a feature family for every clip")
    p.add_argument(
        "--family",
        choices=list(store.FEATURE_FAMILIES),
        help="feature family (default: every family in the config)",
    )

    p = add("train", "tune and train a classifier on the train/val splits")
    p.add_argument("--classifier", required=True, choices=[classify.KIND_LINEAR, classify.KIND_FOREST])
    p.add_argument("--task", required=True, choices=[classify.TASK_SINGLE, classify.TASK_MULTI])
    p.add_argument("--family", choices=list(store.FEATURE_FAMILIES))

    p = add("evaluate", "score trained models on the test split")
    p.add_argument("--classifier", choices=[classify.KIND_LINEAR, classify.KIND_FOREST])
    p.add_argument("--task", choices=[classify.TASK_SINGLE, classify.TASK_MULTI])
    p.add_argument("--family", choices=list(store.FEATURE_FAMILIES))

    add("report", "render the results table from the report CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "launder":
            return cmd_launder(cfg)
        if args.command == "featurize":
            return cmd_featurize(cfg, args.family)
        if args.command == "train":
            return cmd_train(cfg, args.classifier, args.task, args.family)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.classifier, args.task, args.family)
        if args.command == "report":
            return cmd_report(cfg)
        parser.error(f"unknown command {args.command!r}")
    except VoicedetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("internal error: %s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
