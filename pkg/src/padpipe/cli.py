"""padpipe command line: clean -> extract -> train -> eval, plus synth and run.

Exit codes: 0 success, 2 configuration error, 3 data-quality failure,
4 training divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import synth as synth_mod
from .classifier import (
    ModelBundle,
    NetworkSpec,
    TrainConfig,
    apply_normalizer,
    fit_normalizer,
    kfold_cv,
    load_model,
    predict,
    roc_metrics,
    save_model,
    train_network,
)
from .config import RunConfig, load_config, merge_flags
from .errors import ConfigError, FrameLoadError, ManifestError, PadError, TrainingDiverged
from .ingest import Manifest, load_dataset, read_manifest, write_manifest
from .layout import layout_hash
from .pipeline import (
    FeatureParams,
    extract_features,
    read_features_csv,
    select_feature_set,
    write_features_csv,
)

log = logging.getLogger("padpipe")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA_QUALITY = 3
EXIT_TRAINING = 4

MAX_FAILURE_FRACTION = 0.10


def _feature_params(cfg: RunConfig) -> FeatureParams:
    return FeatureParams(
        sigma_threshold=cfg.sigma_threshold,
        block=cfg.block,
        var_threshold=cfg.var_threshold,
        max_lag=cfg.max_lag,
        top_signals=cfg.top_signals,
        min_branch_len=cfg.min_branch_len,
    )


def _train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        lr0=cfg.lr0,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        plateau_patience=cfg.plateau_patience,
        plateau_factor=cfg.plateau_factor,
        plateau_min_delta=cfg.plateau_min_delta,
        val_fraction=cfg.val_fraction,
        seed=cfg.seed,
    )


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _write_roc_csv(path, roc, config_hash: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# padpipe_run_config_hash={config_hash}\n")
        fh.write("threshold,bpcer,apcer\n")
        for t, b, a in zip(roc.thresholds, roc.bpcer, roc.apcer):
            fh.write(f"{float(t)!r},{float(b)!r},{float(a)!r}\n")


def _base_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    flags = {}
    for name in (
        "seed",
        "sigma_threshold",
        "k",
        "epochs",
        "batch_size",
        "feature_set",
        "manifest",
        "outdir",
        "bpcer_targets",
    ):
        if hasattr(args, name):
            flags[name] = getattr(args, name)
    return merge_flags(cfg, **flags)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    cfg = _base_config(args)
    captures = synth_mod.generate_preset(args.preset, seed=cfg.seed, n=args.n)
    manifest_path = synth_mod.save_corpus(
        captures, args.out, manifest_path=args.manifest_out
    )
    print(f"wrote {len(captures)} captures; manifest at {manifest_path}")
    return EXIT_OK


def cmd_clean(args) -> int:
    cfg = _base_config(args)
    manifest = read_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    kept, report = load_dataset(manifest, cfg.sigma_threshold, base_dir=base_dir)
    kept_ids = {seq.capture_id for seq in kept}
    cleaned = Manifest(entries=tuple(e for e in manifest.entries if e.capture_id in kept_ids))
    write_manifest(cleaned, args.out)
    _write_json(
        args.report,
        {"config_hash": cfg.config_hash, **report.to_dict()},
    )
    print(f"kept {len(cleaned)}/{report.total_in} captures ({report.removed} removed)")
    return EXIT_OK


def _dump_debug(sequences, params: FeatureParams, debug_dir) -> None:
    from .frame_selection import select_frames
    from .segmentation import extract_regions

    debug_dir = Path(debug_dir)
    debug_dir.mkdir(parents=True, exist_ok=True)
    for seq in sequences:
        try:
            pair = select_frames(seq, params.sigma_threshold)
            regions = extract_regions(
                seq.frames[pair.f1_index],
                block=params.block,
                var_threshold=params.var_threshold,
                min_branch_len=params.min_branch_len,
            )
        except PadError:
            continue
        stem = debug_dir / seq.capture_id
        for name, mask in (("fg", regions.foreground), ("ridge", regions.ridge_pixels)):
            img = Image.fromarray((mask.astype(np.uint8)) * 255).convert("1")
            img.save(f"{stem}_{name}.png")
        with open(f"{stem}_signals.csv", "w") as fh:
            fh.write("signal,pos,x,y,value\n")
            for i, sig in enumerate(regions.ridge_signals):
                for j in range(len(sig)):
                    fh.write(
                        f"{i},{j},{sig.path[j, 0]},{sig.path[j, 1]},{sig.samples[j]!r}\n"
                    )


def cmd_extract(args) -> int:
    cfg = _base_config(args)
    sequences, report = load_dataset(args.manifest, cfg.sigma_threshold)
    result = extract_features(sequences, cfg.feature_set, _feature_params(cfg))
    write_features_csv(result, args.out, cfg.config_hash)
    if args.debug_dir:
        _dump_debug(sequences, _feature_params(cfg), args.debug_dir)
    total = len(result.capture_ids) + len(result.failures)
    for cid, reason in result.failures:
        log.warning("skipped %s: %s", cid, reason)
    print(
        f"extracted {len(result.capture_ids)}/{total} captures "
        f"({cfg.feature_set}, {result.layout.size} features) -> {args.out}"
    )
    if total and len(result.failures) / total > MAX_FAILURE_FRACTION:
        print(f"error: {len(result.failures)}/{total} captures failed extraction", file=sys.stderr)
        return EXIT_DATA_QUALITY
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _base_config(args)
    ids, subjects, labels, X_all, names = read_features_csv(args.features)
    X, layout = select_feature_set(X_all, names, cfg.feature_set)
    tconf = _train_config(cfg)
    report = kfold_cv(
        X,
        labels,
        subjects,
        k=cfg.k,
        seed=cfg.seed,
        hidden=cfg.hidden,
        config=tconf,
        bpcer_targets=cfg.bpcer_targets,
    )
    # Final model on every row, for deployment-style scoring via `eval`.
    stats = fit_normalizer(X)
    spec = NetworkSpec.for_features(X.shape[1], cfg.hidden)
    result = train_network(spec, tconf, apply_normalizer(stats, X), labels)
    bundle = ModelBundle(
        spec=spec,
        config=tconf,
        stats=stats,
        params=result.params,
        layout_hash=layout.layout_hash,
        feature_names=layout.names,
        lr_trace=result.lr_trace,
    )
    save_model(bundle, args.out, cfg.config_hash)
    _write_json(
        args.report,
        {
            "config_hash": cfg.config_hash,
            "feature_set": cfg.feature_set,
            "k": cfg.k,
            "seed": cfg.seed,
            "rows": len(ids),
            **report.to_dict(),
        },
    )
    apcer_summary = ", ".join(
        f"APCER@{t:.1%} BPCER = {report.mean_apcer[t]:.4f}" for t in cfg.bpcer_targets
    )
    print(f"{cfg.feature_set}: {apcer_summary}; model -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _base_config(args)
    bundle = load_model(args.model)
    ids, subjects, labels, X_all, names = read_features_csv(args.features)
    index = {n: i for i, n in enumerate(names)}
    missing = [n for n in bundle.feature_names if n not in index]
    if missing:
        raise PadError(
            f"feature CSV lacks {len(missing)} model columns (first: {missing[0]})"
        )
    cols = [index[n] for n in bundle.feature_names]
    X = X_all[:, cols]
    scores = predict(bundle, X, layout_hash=layout_hash(bundle.feature_names))
    targets = tuple(float(t) for t in args.bpcer.split(","))
    roc = roc_metrics(scores, labels)
    _write_roc_csv(args.roc, roc, cfg.config_hash)
    metrics = {
        "config_hash": cfg.config_hash,
        "rows": len(ids),
        "auc": roc.auc(),
        "apcer_at_bpcer": {str(t): roc.apcer_at(t) for t in targets},
    }
    print(json.dumps(metrics, sort_keys=True, indent=2))
    return EXIT_OK


def end_to_end(cfg: RunConfig) -> dict:
    """clean -> extract (fused) -> per-set 10-fold CV -> ROC CSVs + report.

    Returns the report document; files land in cfg.outdir.
    """
    if not cfg.manifest:
        raise ConfigError("end-to-end run needs a manifest path")
    if not cfg.outdir:
        raise ConfigError("end-to-end run needs an output directory")
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sequences, cleaning = load_dataset(cfg.manifest, cfg.sigma_threshold)
    result = extract_features(sequences, "fused", _feature_params(cfg))
    total = len(result.capture_ids) + len(result.failures)
    if total == 0 or (total and len(result.failures) / total > MAX_FAILURE_FRACTION):
        raise PadError(f"extraction failed for {len(result.failures)}/{total} captures")
    write_features_csv(result, outdir / "features_fused.csv", cfg.config_hash)
    report = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash,
        "cleaning": cleaning.to_dict(),
        "extraction": {
            "rows": len(result.capture_ids),
            "failures": result.failures,
        },
        "sets": {},
    }
    tconf = _train_config(cfg)
    for feature_set in ("static", "dynamic", "fused"):
        X, layout = select_feature_set(result.features, result.layout.names, feature_set)
        ev = kfold_cv(
            X,
            result.labels,
            result.subject_ids,
            k=cfg.k,
            seed=cfg.seed,
            hidden=cfg.hidden,
            config=tconf,
            bpcer_targets=cfg.bpcer_targets,
        )
        _write_roc_csv(outdir / f"roc_{feature_set}.csv", ev.pooled, cfg.config_hash)
        report["sets"][feature_set] = ev.to_dict()
    _write_json(outdir / "report.json", report)
    return report


def cmd_run(args) -> int:
    cfg = _base_config(args)
    report = end_to_end(cfg)
    for feature_set, block in report["sets"].items():
        apcers = ", ".join(f"@{k}: {v:.4f}" for k, v in sorted(block["mean_apcer"].items()))
        print(f"{feature_set}: AUC {block['pooled_auc']:.4f}; mean APCER {apcers}")
    print(f"report -> {Path(cfg.outdir) / 'report.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file (flags win over file values)")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padpipe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    _add_common(p)
    p.add_argument("--preset", choices=("live", "spoof"), required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--out", required=True, help="directory for frame files")
    p.add_argument("--manifest", dest="manifest_out", default=None, help="manifest output path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("clean", help="apply the blank-frame cleaning rule")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--sigma", dest="sigma_threshold", type=float, default=None)
    p.add_argument("--out", required=True, help="cleaned manifest path")
    p.add_argument("--report", required=True, help="cleaning report JSON path")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("extract", help="extract feature CSV from a manifest")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--set", dest="feature_set", choices=("static", "dynamic", "fused"), default=None)
    p.add_argument("--sigma", dest="sigma_threshold", type=float, default=None)
    p.add_argument("--out", required=True, help="feature CSV path")
    p.add_argument("--debug-dir", default=None, help="dump masks and ridge signals here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="k-fold CV report plus a final model")
    _add_common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--set", dest="feature_set", choices=("static", "dynamic", "fused"), default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--out", required=True, help="model file path")
    p.add_argument("--report", required=True, help="evaluation report JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a feature CSV with a trained model")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--bpcer", default="0.002,0.01", help="comma-separated BPCER targets")
    p.add_argument("--roc", required=True, help="ROC CSV output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="end-to-end: clean, extract, CV on all three sets")
    _add_common(p)
    p.add_argument("--manifest", default=None)
    p.add_argument("--outdir", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PADPIPE_LOGLEVEL", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FrameLoadError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_QUALITY
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except PadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_QUALITY


if __name__ == "__main__":
    sys.exit(main())
