"""Manifest loading, blank-frame detection, and the burst cleaning rule.

A capture is considered usable when it contains a run of at least seven
consecutive non-blank frames; blankness is judged by the standard deviation
of the grayscale middle row of the frame.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .capture import (
    DEFAULT_FRAME_GAP_MS,
    CaptureSequence,
    Frame,
    GroundTruth,
    load_frame_image,
    to_grayscale,
)
from .errors import FrameLoadError, ManifestError

MANIFEST_VERSION = 1

# Default middle-row standard deviation below which a frame counts as blank.
DEFAULT_SIGMA_THRESHOLD = 3.0

# Minimum run of consecutive non-blank frames for a capture to be kept.
MIN_NONBLANK_RUN = 7


@dataclass(frozen=True)
class ManifestEntry:
    capture_id: str
    subject_id: str
    label: GroundTruth
    frame_paths: tuple
    timestamps_ms: tuple | None = None
    static_path: str | None = None


@dataclass(frozen=True)
class Manifest:
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        seen = set()
        for e in entries:
            if e.capture_id in seen:
                raise ManifestError(f"duplicate capture_id {e.capture_id!r}")
            seen.add(e.capture_id)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CleaningReport:
    total_in: int
    removed: int
    removed_ids: tuple
    rule: str

    def __post_init__(self):
        if self.removed > self.total_in:
            raise ValueError("removed count exceeds input count")
        object.__setattr__(self, "removed_ids", tuple(self.removed_ids))

    def to_dict(self) -> dict:
        return {
            "total_in": self.total_in,
            "removed": self.removed,
            "removed_ids": list(self.removed_ids),
            "rule": self.rule,
        }


def _require(entry: dict, key: str, kind, where: str):
    if key not in entry:
        raise ManifestError(f"{where}: missing field {key!r}")
    value = entry[key]
    if not isinstance(value, kind):
        raise ManifestError(f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_entry(raw: dict, where: str) -> ManifestEntry:
    capture_id = _require(raw, "capture_id", str, where)
    subject_id = _require(raw, "subject_id", str, where)
    label = _require(raw, "class", str, where)
    mold = raw.get("mold", "none") or "none"
    material = raw.get("material", "") or ""
    try:
        truth = GroundTruth(label=label, mold=mold, material=material)
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from exc
    frames = _require(raw, "frames", list, where)
    if not frames or not all(isinstance(p, str) for p in frames):
        raise ManifestError(f"{where}.frames: expected a non-empty list of paths")
    timestamps = raw.get("timestamps_ms")
    if timestamps is not None:
        if not isinstance(timestamps, list) or len(timestamps) != len(frames):
            raise ManifestError(f"{where}.timestamps_ms: expected one integer per frame")
        if not all(isinstance(t, int) for t in timestamps):
            raise ManifestError(f"{where}.timestamps_ms: expected integers")
        timestamps = tuple(timestamps)
    static_path = raw.get("static_frame")
    if static_path is not None and not isinstance(static_path, str):
        raise ManifestError(f"{where}.static_frame: expected a path string")
    return ManifestEntry(
        capture_id=capture_id,
        subject_id=subject_id,
        label=truth,
        frame_paths=tuple(frames),
        timestamps_ms=timestamps,
        static_path=static_path,
    )


def read_manifest(path) -> Manifest:
    """Parse a manifest JSON document; malformed input raises ManifestError."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    if raw.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {raw.get('version')!r}")
    entries_raw = raw.get("entries")
    if not isinstance(entries_raw, list):
        raise ManifestError(f"{path}: 'entries' must be a list")
    entries = [_parse_entry(e, f"entries[{i}]") for i, e in enumerate(entries_raw)]
    return Manifest(entries=tuple(entries))


def write_manifest(manifest: Manifest, path) -> None:
    doc = {"version": MANIFEST_VERSION, "entries": []}
    for e in manifest.entries:
        entry = {
            "capture_id": e.capture_id,
            "subject_id": e.subject_id,
            "class": e.label.label,
            "mold": e.label.mold,
            "material": e.label.material,
            "frames": list(e.frame_paths),
        }
        if e.timestamps_ms is not None:
            entry["timestamps_ms"] = list(e.timestamps_ms)
        if e.static_path is not None:
            entry["static_frame"] = e.static_path
        doc["entries"].append(entry)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def manifest_from_csv(csv_path, n_frames: int = 8) -> Manifest:
    """Convenience converter: one CSV row per capture.

    Expected columns: capture_id, subject_id, class, mold, material,
    frame_0 .. frame_{n-1}, and optionally timestamp_ms_0 .. timestamp_ms_{n-1}.
    """
    csv_path = Path(csv_path)
    entries = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader):
            where = f"{csv_path}:row {i + 2}"
            frame_cols = [f"frame_{k}" for k in range(n_frames)]
            missing = [c for c in ("capture_id", "subject_id", "class") if not row.get(c)]
            if missing:
                raise ManifestError(f"{where}: missing {missing}")
            frames = [row[c] for c in frame_cols if row.get(c)]
            if not frames:
                raise ManifestError(f"{where}: no frame paths")
            raw = {
                "capture_id": row["capture_id"],
                "subject_id": row["subject_id"],
                "class": row["class"],
                "mold": row.get("mold", "none") or "none",
                "material": row.get("material", "") or "",
                "frames": frames,
            }
            ts_cols = [f"timestamp_ms_{k}" for k in range(len(frames))]
            if all(row.get(c) for c in ts_cols):
                raw["timestamps_ms"] = [int(row[c]) for c in ts_cols]
            entries.append(_parse_entry(raw, where))
    return Manifest(entries=tuple(entries))


def is_blank(frame: Frame, sigma_threshold: float = DEFAULT_SIGMA_THRESHOLD) -> bool:
    """True iff the middle pixel row of the grayscale frame is nearly flat.

    Uses the population standard deviation of row floor(height / 2).
    """
    gray = to_grayscale(frame)
    row = gray[gray.shape[0] // 2, :].astype(np.float64)
    return float(row.std()) < sigma_threshold


def blank_flags(seq: CaptureSequence, sigma_threshold: float = DEFAULT_SIGMA_THRESHOLD) -> np.ndarray:
    """Per-frame blankness flags for a capture."""
    return np.array([is_blank(f, sigma_threshold) for f in seq.frames], dtype=bool)


def clean_sequence(seq: CaptureSequence, sigma_threshold: float = DEFAULT_SIGMA_THRESHOLD) -> bool:
    """Keep/drop decision: keep iff some run of >= 7 consecutive frames is non-blank."""
    flags = blank_flags(seq, sigma_threshold)
    run = best = 0
    for blank in flags:
        run = 0 if blank else run + 1
        best = max(best, run)
    return best >= MIN_NONBLANK_RUN


def load_capture(entry: ManifestEntry, base_dir=None) -> CaptureSequence:
    """Materialize one manifest entry into a CaptureSequence."""
    base = Path(base_dir) if base_dir is not None else None
    frames = []
    timestamps = entry.timestamps_ms
    if timestamps is None:
        timestamps = tuple(k * DEFAULT_FRAME_GAP_MS for k in range(len(entry.frame_paths)))
    for k, rel in enumerate(entry.frame_paths):
        path = Path(rel)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            rgb = load_frame_image(path)
        except (OSError, ValueError) as exc:
            raise FrameLoadError(entry.capture_id, str(path), str(exc)) from exc
        frames.append(Frame(rgb=rgb, timestamp_ms=int(timestamps[k])))
    return CaptureSequence(
        frames=tuple(frames),
        label=entry.label,
        subject_id=entry.subject_id,
        capture_id=entry.capture_id,
    )


def load_dataset(
    manifest,
    sigma_threshold: float = DEFAULT_SIGMA_THRESHOLD,
    base_dir=None,
):
    """Load and clean every capture named in a manifest.

    Returns (kept sequences in manifest order, CleaningReport).  Paths in the
    manifest are resolved relative to ``base_dir`` (defaulting to the manifest
    file's directory when a path is given).
    """
    if not isinstance(manifest, Manifest):
        manifest_path = Path(manifest)
        if base_dir is None:
            base_dir = manifest_path.parent
        manifest = read_manifest(manifest_path)
    kept = []
    removed_ids = []
    for entry in manifest.entries:
        seq = load_capture(entry, base_dir=base_dir)
        if clean_sequence(seq, sigma_threshold):
            kept.append(seq)
        else:
            removed_ids.append(entry.capture_id)
    report = CleaningReport(
        total_in=len(manifest.entries),
        removed=len(removed_ids),
        removed_ids=tuple(removed_ids),
        rule=f"min-run-{MIN_NONBLANK_RUN}-nonblank,middle-row-sigma<{sigma_threshold}",
    )
    return kept, report
