"""Synthetic capture generator: the verification corpus for the pipeline.

Each capture is an 8-frame color burst of a curved sinusoidal ridge pattern
inside an elliptical contact region, with configurable liveness phenomena:
a green/blue gain ramp standing in for blood displacement, moisture blotches
spreading along ridges, whole-finger drift, and contact-area growth.  Frames
are rendered analytically in shifted coordinates, so drift is exact to the
subpixel and identical (params, seed) pairs rebuild bit-identical bursts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage as ndi

from .capture import CaptureSequence, DEFAULT_FRAME_GAP_MS, Frame, GroundTruth, save_frames
from .ingest import Manifest, ManifestEntry, write_manifest
from .segmentation import bilinear_sample

BACKGROUND_LEVEL = 52.0
CHANNEL_GAINS = {"r": 0.96, "g": 1.0, "b": 0.90}


@dataclass(frozen=True)
class PhenomenaParams:
    """Magnitudes of the simulated liveness phenomena and scene geometry."""

    blood_shift: float = 1.0  # G/B gain reached at the last frame (R fixed)
    perspiration: float = 0.0  # moisture modulation depth reached at the last frame
    shift_px: float = 0.0  # per-frame whole-finger drift
    contact_growth: float = 0.0  # fractional contact-radius growth across the burst
    noise_sigma: float = 0.0
    radius_frac: float = 0.42  # contact radius as a fraction of image size
    ridge_period: float = 8.0
    ridge_amplitude: float = 55.0
    amplitude_jitter: float = 0.0
    base_level: float = 128.0
    size: int = 160
    n_frames: int = 8
    blank_frames: tuple = ()  # fault injection: indices rendered without a finger
    caps_per_subject: int = 2

    def __post_init__(self):
        if not 0.5 <= self.blood_shift <= 2.0:
            raise ValueError("blood_shift gain must lie in [0.5, 2.0]")
        for name in ("perspiration", "shift_px", "contact_growth", "noise_sigma", "amplitude_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_frames < 1 or self.size < 32:
            raise ValueError("need n_frames >= 1 and size >= 32")
        object.__setattr__(self, "blank_frames", tuple(self.blank_frames))


LIVE_PRESET = PhenomenaParams(
    blood_shift=1.10,
    perspiration=0.06,
    shift_px=0.3,
    contact_growth=0.06,
    noise_sigma=1.5,
    radius_frac=0.42,
    ridge_amplitude=55.0,
    amplitude_jitter=7.0,
)

SPOOF_PRESET = PhenomenaParams(
    blood_shift=1.0,
    perspiration=0.0,
    shift_px=1.8,
    contact_growth=0.0,
    noise_sigma=1.5,
    radius_frac=0.30,
    ridge_amplitude=43.0,
    amplitude_jitter=7.0,
)

PRESETS = {"live": LIVE_PRESET, "spoof": SPOOF_PRESET}


def _moisture_field(rng: np.random.Generator, size: int) -> np.ndarray:
    coarse = rng.uniform(0.0, 1.0, size=(5, 5))
    field = ndi.zoom(coarse, size / 5.0, order=1, mode="nearest")
    return field[:size, :size]


def _render_capture(
    params: PhenomenaParams,
    truth: GroundTruth,
    rng: np.random.Generator,
    capture_id: str,
    subject_id: str,
) -> CaptureSequence:
    size = params.size
    n = params.n_frames
    denom = max(n - 1, 1)

    cx = size / 2.0 + rng.uniform(-6.0, 6.0)
    cy = size / 2.0 + rng.uniform(-6.0, 6.0)
    curve_angle = rng.uniform(0.0, 2.0 * np.pi)
    curve_radius = rng.uniform(260.0, 340.0)
    ccx = cx + curve_radius * np.cos(curve_angle)
    ccy = cy + curve_radius * np.sin(curve_angle)
    drift_angle = rng.uniform(0.0, 2.0 * np.pi)
    dx_step = params.shift_px * np.cos(drift_angle)
    dy_step = params.shift_px * np.sin(drift_angle)
    # Bounded nuisance spread: uniform jitter keeps every capture inside the
    # corpus envelope instead of producing rare out-of-distribution tails.
    amp = params.ridge_amplitude + params.amplitude_jitter * rng.uniform(-1.0, 1.0)
    amp = float(np.clip(amp, 20.0, 70.0))
    base = params.base_level + 6.0 * rng.uniform(-1.0, 1.0)
    moisture = _moisture_field(rng, size)

    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    radius0 = params.radius_frac * size
    ax_scale, ay_scale = 1.12, 0.95

    frames = []
    for t in range(n):
        noise = params.noise_sigma * rng.standard_normal((size, size, 3))
        if t in params.blank_frames:
            rgb = np.full((size, size, 3), BACKGROUND_LEVEL) + noise
            frames.append(
                Frame(
                    rgb=np.clip(np.rint(rgb), 0, 255).astype(np.uint8),
                    timestamp_ms=t * DEFAULT_FRAME_GAP_MS,
                )
            )
            continue
        # Finger-frame coordinates: the whole pattern drifts together.
        u = xs - dx_step * t
        v = ys - dy_step * t
        radius_t = radius0 * (1.0 + params.contact_growth * t / denom)
        contact = ((u - cx) / (ax_scale * radius_t)) ** 2 + (
            (v - cy) / (ay_scale * radius_t)
        ) ** 2 <= 1.0
        dist = np.hypot(u - ccx, v - ccy)
        tex = np.sin(2.0 * np.pi * dist / params.ridge_period)
        wet = params.perspiration * t / denom
        damp = bilinear_sample(moisture, v, u)
        gray = base + amp * tex * (1.0 - 0.55 * wet * damp) - 22.0 * wet * damp
        ramp = 1.0 + (params.blood_shift - 1.0) * t / denom
        rgb = np.empty((size, size, 3), dtype=np.float64)
        rgb[:, :, 0] = np.where(contact, gray * CHANNEL_GAINS["r"], BACKGROUND_LEVEL)
        rgb[:, :, 1] = np.where(contact, gray * CHANNEL_GAINS["g"] * ramp, BACKGROUND_LEVEL)
        rgb[:, :, 2] = np.where(contact, gray * CHANNEL_GAINS["b"] * ramp, BACKGROUND_LEVEL)
        rgb += noise
        frames.append(
            Frame(
                rgb=np.clip(np.rint(rgb), 0, 255).astype(np.uint8),
                timestamp_ms=t * DEFAULT_FRAME_GAP_MS,
            )
        )
    return CaptureSequence(
        frames=tuple(frames), label=truth, subject_id=subject_id, capture_id=capture_id
    )


def generate(
    params: PhenomenaParams,
    label: str = "live",
    seed: int = 0,
    n: int = 1,
    mold: str | None = None,
    material: str | None = None,
) -> list:
    """Render ``n`` labeled captures; deterministic given (params, seed)."""
    if label == "live":
        truth = GroundTruth(label="live")
    else:
        truth = GroundTruth(
            label="spoof",
            mold=mold if mold is not None else "dental",
            material=material if material is not None else "synthetic",
        )
    captures = []
    for idx in range(n):
        rng = np.random.default_rng([seed, idx, 0 if label == "live" else 1])
        subject = f"{label}{seed:04d}s{idx // max(params.caps_per_subject, 1):04d}"
        capture_id = f"{label}{seed:04d}c{idx:04d}"
        captures.append(_render_capture(params, truth, rng, capture_id, subject))
    return captures


def generate_preset(preset: str, seed: int = 0, n: int = 1, **overrides) -> list:
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    params = PRESETS[preset]
    if overrides:
        params = replace(params, **overrides)
    return generate(params, label=preset, seed=seed, n=n)


def save_corpus(captures, out_dir, manifest_path=None) -> Path:
    """Write frames plus a manifest consumable by ingest; returns manifest path.

    Frame paths in the manifest are stored relative to the manifest's own
    directory.
    """
    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    manifest_path = Path(manifest_path) if manifest_path else out_dir / "manifest.json"
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    for seq in captures:
        paths = save_frames(seq, frames_dir)
        rel = [os.path.relpath(p, manifest_path.parent) for p in paths]
        entries.append(
            ManifestEntry(
                capture_id=seq.capture_id,
                subject_id=seq.subject_id,
                label=seq.label,
                frame_paths=tuple(rel),
                timestamps_ms=seq.timestamps_ms,
            )
        )
    write_manifest(Manifest(entries=tuple(entries)), manifest_path)
    return manifest_path
