"""Core data types for color frames, capture sequences, labels, and region masks.

All types are immutable after construction and safe to share across workers.
Frames hold three 8-bit channel planes plus a timestamp in milliseconds since
the start of the burst.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

# Luma weights for RGB -> gray conversion (ITU-style, sum to 1).
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Nominal inter-frame gap used when a manifest carries no timestamps.
DEFAULT_FRAME_GAP_MS = 125

LIVE = "live"
SPOOF = "spoof"
MOLD_KINDS = ("none", "3d", "dental")


@dataclass(frozen=True)
class GroundTruth:
    """Capture label: live/spoof plus spoof fabrication metadata."""

    label: str
    mold: str = "none"
    material: str = ""

    def __post_init__(self):
        if self.label not in (LIVE, SPOOF):
            raise ValueError(f"label must be 'live' or 'spoof', got {self.label!r}")
        if self.mold not in MOLD_KINDS:
            raise ValueError(f"mold must be one of {MOLD_KINDS}, got {self.mold!r}")
        if self.label == LIVE and (self.mold != "none" or self.material):
            raise ValueError("live captures carry no mold or material")

    @property
    def is_spoof(self) -> bool:
        return self.label == SPOOF


@dataclass(frozen=True)
class Frame:
    """One color frame: (H, W, 3) uint8 array plus capture-relative timestamp."""

    rgb: np.ndarray
    timestamp_ms: int = 0

    def __post_init__(self):
        rgb = np.asarray(self.rgb)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"frame must be (H, W, 3), got shape {rgb.shape}")
        if rgb.dtype != np.uint8:
            raise ValueError(f"frame must be uint8, got {rgb.dtype}")
        object.__setattr__(self, "rgb", rgb)
        rgb.setflags(write=False)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def red(self) -> np.ndarray:
        return self.rgb[:, :, 0]

    @property
    def green(self) -> np.ndarray:
        return self.rgb[:, :, 1]

    @property
    def blue(self) -> np.ndarray:
        return self.rgb[:, :, 2]


@dataclass(frozen=True)
class CaptureSequence:
    """Ordered burst of frames with a label and provenance ids."""

    frames: tuple
    label: GroundTruth
    subject_id: str
    capture_id: str

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("capture needs at least one frame")
        shape = frames[0].rgb.shape
        for f in frames:
            if f.rgb.shape != shape:
                raise ValueError("all frames in a capture must share dimensions")
        ts = [f.timestamp_ms for f in frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def timestamps_ms(self) -> tuple:
        return tuple(f.timestamp_ms for f in self.frames)


@dataclass(frozen=True)
class RegionSet:
    """Analysis regions for one frame: foreground, ridge pixels, ridge signals.

    ``ridge_signals`` is a list of segmentation.RidgeSignal sorted longest
    first.  Ridge pixels are always a subset of the foreground.
    """

    foreground: np.ndarray
    ridge_pixels: np.ndarray
    ridge_signals: tuple = field(default_factory=tuple)

    def __post_init__(self):
        fg = np.asarray(self.foreground, dtype=bool)
        rp = np.asarray(self.ridge_pixels, dtype=bool)
        if fg.shape != rp.shape:
            raise ValueError("foreground and ridge_pixels must share shape")
        if np.any(rp & ~fg):
            raise ValueError("ridge pixels must lie inside the foreground")
        object.__setattr__(self, "foreground", fg)
        object.__setattr__(self, "ridge_pixels", rp)
        object.__setattr__(self, "ridge_signals", tuple(self.ridge_signals))
        fg.setflags(write=False)
        rp.setflags(write=False)


def luma(rgb: np.ndarray) -> np.ndarray:
    """Fixed-weight grayscale of an (H, W, 3) array, rounded and clamped to uint8."""
    rgb = np.asarray(rgb, dtype=np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    g = wr * rgb[:, :, 0] + wg * rgb[:, :, 1] + wb * rgb[:, :, 2]
    return np.clip(np.rint(g), 0, 255).astype(np.uint8)


def to_grayscale(frame: Frame) -> np.ndarray:
    """Single 8-bit luma plane of a color frame."""
    return luma(frame.rgb)


def frame_filename(capture_id: str, k: int) -> str:
    """Canonical on-disk name for frame k of a capture."""
    return f"{capture_id}_f{k}.png"


def save_frames(seq: CaptureSequence, out_dir) -> list:
    """Write each frame as a lossless 8-bit PNG; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, frame in enumerate(seq.frames):
        path = out_dir / frame_filename(seq.capture_id, k)
        Image.fromarray(np.asarray(frame.rgb), mode="RGB").save(path)
        paths.append(path)
    return paths


def load_frame_image(path) -> np.ndarray:
    """Read an image file into an (H, W, 3) uint8 array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)
