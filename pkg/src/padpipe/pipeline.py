"""Per-capture feature extraction and the feature CSV interchange format.

The fused row layout is the 164 static features followed by the 51 dynamic
features; id columns (capture_id, subject_id, class) come first in the CSV.
Captures whose extraction fails are logged and skipped, never zero-filled.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .capture import CaptureSequence
from .dynamic_features import extract_dynamic_block
from .errors import PadError
from .frame_selection import select_frames
from .ingest import DEFAULT_SIGMA_THRESHOLD
from .layout import FeatureLayout, layout_for
from .segmentation import (
    BLOCK,
    MAX_LAG,
    MIN_BRANCH_LEN,
    TOP_SIGNALS,
    VAR_THRESHOLD,
    compute_foreground,
    extract_regions,
)
from .static_features import extract_static_block

log = logging.getLogger("padpipe.pipeline")


@dataclass(frozen=True)
class FeatureParams:
    """Extraction knobs shared by every capture in a run."""

    sigma_threshold: float = DEFAULT_SIGMA_THRESHOLD
    block: int = BLOCK
    var_threshold: float = VAR_THRESHOLD
    max_lag: int = MAX_LAG
    top_signals: int = TOP_SIGNALS
    min_branch_len: int = MIN_BRANCH_LEN


@dataclass
class ExtractionResult:
    layout: FeatureLayout
    capture_ids: list
    subject_ids: list
    labels: np.ndarray  # 1 = spoof, 0 = live
    features: np.ndarray
    failures: list = field(default_factory=list)
    meta: list = field(default_factory=list)


def extract_capture(seq: CaptureSequence, feature_set: str = "fused", params: FeatureParams | None = None):
    """Feature vector for one capture; returns (values, meta dict)."""
    if params is None:
        params = FeatureParams()
    pair = select_frames(seq, params.sigma_threshold)
    f1 = seq.frames[pair.f1_index]
    f2 = seq.frames[pair.f2_index]
    regions1 = extract_regions(
        f1, block=params.block, var_threshold=params.var_threshold, min_branch_len=params.min_branch_len
    )
    meta = {
        "f1_index": pair.f1_index,
        "f2_index": pair.f2_index,
        "dt_ms": pair.dt_ms,
        "gap_warning": pair.gap_warning,
        "flags": (),
    }
    parts = []
    if feature_set in ("static", "fused"):
        parts.append(extract_static_block(f1, regions1, block=params.block, top_signals=params.top_signals))
    if feature_set in ("dynamic", "fused"):
        regions2 = extract_regions(
            f2, block=params.block, var_threshold=params.var_threshold, min_branch_len=params.min_branch_len
        )
        masks = [
            regions1.foreground if i == pair.f1_index else
            regions2.foreground if i == pair.f2_index else
            compute_foreground(f, block=params.block, var_threshold=params.var_threshold)
            for i, f in enumerate(seq.frames)
        ]
        block_vals = extract_dynamic_block(
            seq,
            pair.f1_index,
            pair.f2_index,
            regions1,
            regions2,
            max_lag=params.max_lag,
            top_signals=params.top_signals,
            masks=masks,
        )
        meta["flags"] = block_vals.flags
        parts.append(block_vals.values())
    values = np.concatenate(parts)
    layout = layout_for(feature_set)
    if values.shape != (layout.size,):
        raise PadError(f"feature vector has {values.shape[0]} values, layout wants {layout.size}")
    return values, meta


def extract_features(
    sequences,
    feature_set: str = "fused",
    params: FeatureParams | None = None,
) -> ExtractionResult:
    """Extract a feature matrix for a list of captures, skipping failures."""
    layout = layout_for(feature_set)
    ids, subjects, labels, rows, failures, metas = [], [], [], [], [], []
    for seq in sequences:
        try:
            values, meta = extract_capture(seq, feature_set, params)
        except PadError as exc:
            log.warning("capture %s failed extraction: %s", seq.capture_id, exc)
            failures.append((seq.capture_id, str(exc)))
            continue
        ids.append(seq.capture_id)
        subjects.append(seq.subject_id)
        labels.append(1 if seq.label.is_spoof else 0)
        rows.append(values)
        metas.append(meta)
    features = np.vstack(rows) if rows else np.zeros((0, layout.size))
    return ExtractionResult(
        layout=layout,
        capture_ids=ids,
        subject_ids=subjects,
        labels=np.asarray(labels, dtype=np.int64),
        features=features,
        failures=failures,
        meta=metas,
    )


ID_COLUMNS = ("capture_id", "subject_id", "class")


def write_features_csv(result: ExtractionResult, path, config_hash: str = "") -> None:
    """Feature CSV: comment line with the run-config hash, header, one row per capture."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# padpipe_run_config_hash={config_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(list(ID_COLUMNS) + list(result.layout.names))
        for i, cid in enumerate(result.capture_ids):
            label = "spoof" if result.labels[i] else "live"
            row = [cid, result.subject_ids[i], label]
            row += [repr(float(v)) for v in result.features[i]]
            writer.writerow(row)


def read_features_csv(path):
    """Parse a feature CSV; returns (ids, subjects, labels, X, feature names)."""
    path = Path(path)
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header[:3]) != ID_COLUMNS:
        raise PadError(f"{path}: expected id columns {ID_COLUMNS}, got {header[:3]}")
    names = tuple(header[3:])
    ids, subjects, labels, rows = [], [], [], []
    for row in reader:
        ids.append(row[0])
        subjects.append(row[1])
        labels.append(1 if row[2] == "spoof" else 0)
        rows.append([float(v) for v in row[3:]])
    X = np.asarray(rows, dtype=np.float64) if rows else np.zeros((0, len(names)))
    return ids, subjects, np.asarray(labels, dtype=np.int64), X, names


def select_feature_set(X: np.ndarray, names, feature_set: str):
    """Project a feature matrix onto the named set's columns, in layout order."""
    layout = layout_for(feature_set)
    index = {n: i for i, n in enumerate(names)}
    missing = [n for n in layout.names if n not in index]
    if missing:
        raise PadError(f"feature CSV lacks {len(missing)} columns for set {feature_set!r} "
                       f"(first missing: {missing[0]})")
    cols = [index[n] for n in layout.names]
    return X[:, cols], layout
