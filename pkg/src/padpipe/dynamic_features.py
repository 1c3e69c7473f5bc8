"""Dynamic liveness features computed from the selected frame pair and burst.

Families (51 values total): color-ratio features over the foreground, the
realigned ridge signal, and the ridge pixels; foreground/background mask
features; a red-channel motion measure accumulated over consecutive frames;
grayscale histogram dynamics; and ridge-signal perspiration measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capture import CaptureSequence, Frame, RegionSet, to_grayscale
from .errors import AlignmentError, InsufficientFrames
from .segmentation import (
    MAX_LAG,
    TOP_SIGNALS,
    compute_foreground,
    concat_top_signals,
    realign_signals,
    sample_along_path,
)

# Additive guard on ratio-image and ratio-measure denominators.
RATIO_EPS = 0.001
# Additive guard on the frame-1/frame-2 mask-ratio quotient.
MASK_RATIO_EPS = 0.0001
# Additive guard on means used as ratio denominators.
MEAN_EPS = 1e-12
# Per-pair squared red difference is clamped here so the motion measure
# responds to movement rather than brightness change.
PRESS_CLAMP = 255.0

HIST_BINS = 64
DARK_BINS = slice(0, 21)
LIGHT_BINS = slice(43, 64)

DRY_LEVEL = 0.1 * 255.0
WET_LEVEL = 0.9 * 255.0

_CHANNEL_INDEX = {"r": 0, "g": 1, "b": 2}


@dataclass(frozen=True)
class PairMetrics:
    """Change statistics between a measure taken on each analysis frame."""

    diff: float
    ratio: float
    sumsquare: float | None = None


@dataclass(frozen=True)
class DynamicFeatureBlock:
    """All 51 dynamic features, grouped by family, in layout order."""

    color_foreground: np.ndarray
    color_ridge_signal: np.ndarray
    color_ridge_pixels: np.ndarray
    mask: np.ndarray
    shift: np.ndarray
    intensity_dynamic: np.ndarray
    perspiration: np.ndarray
    flags: tuple = ()

    def __post_init__(self):
        sizes = {
            "color_foreground": 12,
            "color_ridge_signal": 12,
            "color_ridge_pixels": 7,
            "mask": 6,
            "shift": 1,
            "intensity_dynamic": 6,
            "perspiration": 7,
        }
        for name, size in sizes.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (size,):
                raise ValueError(f"{name} must have exactly {size} values")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)

    def values(self) -> np.ndarray:
        return np.concatenate(
            [
                self.color_foreground,
                self.color_ridge_signal,
                self.color_ridge_pixels,
                self.mask,
                self.shift,
                self.intensity_dynamic,
                self.perspiration,
            ]
        )


def _plane(frame: Frame, channel: str) -> np.ndarray:
    return frame.rgb[:, :, _CHANNEL_INDEX[channel]].astype(np.float64)


def color_ratio_image(frame: Frame, num_channel: str, den_channel: str, mask: np.ndarray) -> np.ndarray:
    """Per-pixel channel quotient num / (den + eps) over the masked pixels."""
    if num_channel == den_channel:
        raise ValueError("ratio image needs two distinct channels")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("ratio image needs a non-empty mask")
    num = _plane(frame, num_channel)[mask]
    den = _plane(frame, den_channel)[mask]
    return num / (den + RATIO_EPS)


def color_ratio_measure(frame: Frame, num_channel: str, den_channel: str, mask: np.ndarray) -> float:
    """Quotient of masked channel means: mean(num) / (mean(den) + eps)."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("ratio measure needs a non-empty mask")
    num = float(_plane(frame, num_channel)[mask].mean())
    den = float(_plane(frame, den_channel)[mask].mean())
    return num / (den + RATIO_EPS)


def pair_metrics(m1, m2) -> PairMetrics:
    """diff / ratio (and, for arrays, element-wise sumsquare) between frames.

    Arrays are reduced to their means for diff and ratio; sumsquare is the
    root of the summed element-wise squared differences and requires equal
    lengths (realigned ridge signals, or a common pixel support).  Scalars
    take the diff/ratio path only.
    """
    scalar = np.isscalar(m1) or np.ndim(m1) == 0
    if scalar != (np.isscalar(m2) or np.ndim(m2) == 0):
        raise AlignmentError("cannot mix scalar and array measures")
    if scalar:
        mu1, mu2 = float(m1), float(m2)
        return PairMetrics(diff=mu2 - mu1, ratio=mu2 / (mu1 + MEAN_EPS))
    a1 = np.asarray(m1, dtype=np.float64)
    a2 = np.asarray(m2, dtype=np.float64)
    if a1.shape != a2.shape:
        raise AlignmentError(f"measure shapes differ: {a1.shape} vs {a2.shape}")
    mu1, mu2 = float(a1.mean()), float(a2.mean())
    sumsq = float(np.sqrt(np.sum((a2 - a1) ** 2)))
    return PairMetrics(diff=mu2 - mu1, ratio=mu2 / (mu1 + MEAN_EPS), sumsquare=sumsq)


def sequence_euclid(f1: Frame, f2: Frame, mask1: np.ndarray, mask2: np.ndarray | None = None) -> float:
    """Euclidean distance between per-channel mean intensities of the frames.

    Each frame's means are taken over its own mask; passing a single mask
    uses it for both frames.
    """
    m1 = np.asarray(mask1, dtype=bool)
    m2 = m1 if mask2 is None else np.asarray(mask2, dtype=bool)
    if not m1.any() or not m2.any():
        raise ValueError("sequence_euclid needs non-empty masks")
    total = 0.0
    for ch in ("r", "g", "b"):
        diff = float(_plane(f2, ch)[m2].mean()) - float(_plane(f1, ch)[m1].mean())
        total += diff * diff
    return float(np.sqrt(total))


def _channel_samples(frame: Frame, path_xy: np.ndarray, start: int, length: int) -> dict:
    out = {}
    for ch in ("r", "g", "b"):
        out[ch] = sample_along_path(_plane(frame, ch), path_xy)[start : start + length]
    return out


def color_feature_block(
    f1: Frame,
    f2: Frame,
    regions1: RegionSet,
    regions2: RegionSet,
    max_lag: int = MAX_LAG,
    top_signals: int = TOP_SIGNALS,
) -> np.ndarray:
    """The 12 + 12 + 7 color features over foreground, ridge signal, ridge pixels.

    Element-wise foreground statistics use the intersection of the two
    foreground masks; raw-channel mean differences use each frame's own
    region.  Ridge-signal statistics are computed on channel samples taken
    along the traced paths after correlation realignment of the grayscale
    signals.
    """
    out = []

    # Foreground block: ratio-image diff/ratio/sumsquare on common support.
    common = regions1.foreground & regions2.foreground
    if not common.any():
        raise AlignmentError("foreground masks share no pixels")
    for num, den in (("g", "r"), ("b", "r"), ("g", "b")):
        cri1 = color_ratio_image(f1, num, den, common)
        cri2 = color_ratio_image(f2, num, den, common)
        pm = pair_metrics(cri1, cri2)
        out += [pm.diff, pm.ratio, pm.sumsquare]
    for ch in ("r", "g", "b"):
        mu1 = float(_plane(f1, ch)[regions1.foreground].mean())
        mu2 = float(_plane(f2, ch)[regions2.foreground].mean())
        out.append(mu2 - mu1)

    # Ridge-signal block: same statistics on realigned path samples.
    sig1, path1 = concat_top_signals(regions1.ridge_signals, top_signals)
    sig2, path2 = concat_top_signals(regions2.ridge_signals, top_signals)
    aln = realign_signals(sig1, sig2, max_lag=max_lag)
    ch1 = _channel_samples(f1, path1, aln.start1, len(aln))
    ch2 = _channel_samples(f2, path2, aln.start2, len(aln))
    for num, den in (("g", "r"), ("b", "r"), ("g", "b")):
        cri1 = ch1[num] / (ch1[den] + RATIO_EPS)
        cri2 = ch2[num] / (ch2[den] + RATIO_EPS)
        pm = pair_metrics(cri1, cri2)
        out += [pm.diff, pm.ratio, pm.sumsquare]
    for ch in ("r", "g", "b"):
        out.append(float(ch2[ch].mean()) - float(ch1[ch].mean()))

    # Ridge-pixel block: scalar ratio measures plus the channel-mean distance.
    for num, den in (("g", "r"), ("b", "r"), ("g", "b")):
        crm1 = color_ratio_measure(f1, num, den, regions1.ridge_pixels)
        crm2 = color_ratio_measure(f2, num, den, regions2.ridge_pixels)
        pm = pair_metrics(crm1, crm2)
        out += [pm.diff, pm.ratio]
    out.append(sequence_euclid(f1, f2, regions1.ridge_pixels, regions2.ridge_pixels))

    return np.asarray(out, dtype=np.float64)


def mask_features(mask1: np.ndarray, mask2: np.ndarray):
    """Six foreground/background mask features; returns (values, guard_flag).

    Values, in order: foreground/background ratio of each frame, the
    frame-1/frame-2 quotient of those ratios, background area change,
    XOR shift count, and foreground area change.  An all-foreground mask
    trips a +1-pixel denominator guard and sets the flag.
    """
    m1 = np.asarray(mask1, dtype=bool)
    m2 = np.asarray(mask2, dtype=bool)
    if m1.shape != m2.shape:
        raise AlignmentError("masks must share dimensions")
    flagged = False

    def fore_back_ratio(m):
        nonlocal flagged
        fore = int(m.sum())
        back = int(m.size - fore)
        if back == 0:
            flagged = True
            back = 1
        return fore / back, fore, m.size - fore

    r1, fore1, back1 = fore_back_ratio(m1)
    r2, fore2, back2 = fore_back_ratio(m2)
    rs = r1 / (r2 + MASK_RATIO_EPS)
    delta_back = float(back2 - back1)
    ms = float(np.sum(m1 ^ m2))
    delta_fore = float(fore2 - fore1)
    return np.array([r1, r2, rs, delta_back, ms, delta_fore], dtype=np.float64), flagged


def delta_image_feature(seq: CaptureSequence, masks=None, block=None, var_threshold=None) -> float:
    """Mean accumulated red-channel motion over the union foreground.

    For every consecutive frame pair the squared red difference is clamped to
    255 per pixel; the per-pixel root of the summed clamped values is averaged
    over the union of the per-frame foreground masks.
    """
    if len(seq) < 2:
        raise InsufficientFrames("motion measure needs at least 2 frames")
    kwargs = {}
    if block is not None:
        kwargs["block"] = block
    if var_threshold is not None:
        kwargs["var_threshold"] = var_threshold
    if masks is None:
        masks = [compute_foreground(f, **kwargs) for f in seq.frames]
    union = np.zeros_like(masks[0], dtype=bool)
    for m in masks:
        union |= m
    reds = [f.red.astype(np.float64) for f in seq.frames]
    accum = np.zeros_like(reds[0])
    for a, b in zip(reds, reds[1:]):
        press = np.minimum((a - b) ** 2, PRESS_CLAMP)
        accum += press
    delta = np.sqrt(accum)
    if not union.any():
        return 0.0
    return float(delta[union].mean())


def _foreground_histogram(frame: Frame, mask: np.ndarray) -> np.ndarray:
    gray = to_grayscale(frame)
    vals = gray[np.asarray(mask, dtype=bool)]
    if vals.size == 0:
        raise ValueError("histogram needs a non-empty mask")
    hist = np.bincount(vals >> 2, minlength=HIST_BINS).astype(np.float64)
    return hist / hist.sum()


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def intensity_dynamic_features(f1: Frame, f2: Frame, mask1: np.ndarray, mask2: np.ndarray) -> np.ndarray:
    """Six dynamics of the 64-bin foreground intensity histogram.

    Total variation of the histogram change, signed change in the dark and
    light thirds, bin-center mean shift, histogram energy change, and
    histogram entropy change.
    """
    h1 = _foreground_histogram(f1, mask1)
    h2 = _foreground_histogram(f2, mask2)
    d = h2 - h1
    centers = 4.0 * np.arange(HIST_BINS) + 1.5
    return np.array(
        [
            float(np.abs(d).sum()),
            float(d[DARK_BINS].sum()),
            float(d[LIGHT_BINS].sum()),
            float((d * centers).sum()),
            float((h2 * h2).sum() - (h1 * h1).sum()),
            _entropy(h2) - _entropy(h1),
        ],
        dtype=np.float64,
    )


def _peak_mean(sig: np.ndarray):
    interior = sig[1:-1]
    peaks = interior[(interior > sig[:-2]) & (interior > sig[2:])]
    if peaks.size == 0:
        return float(sig.mean()), True
    return float(peaks.mean()), False


def _spectral_upper_fraction(sig: np.ndarray):
    spectrum = np.abs(np.fft.rfft(sig)) ** 2
    energy = spectrum[1:]  # DC carries only the mean offset
    total = float(energy.sum())
    if total <= 0.0:
        return 0.0, True
    upper_start = len(sig) // 4  # above half the Nyquist frequency
    upper = float(spectrum[upper_start + 1 :].sum())
    return upper / total, False


def perspiration_features(sig1, sig2, dry_level: float = DRY_LEVEL, wet_level: float = WET_LEVEL):
    """Seven ridge-signal moisture measures; returns (values, degenerate_flag).

    One static spectral measure of the ending-frame signal plus six dynamics:
    total-swing change, peak-mean ratio, mean change, percent variance change,
    and changes in the dry/wet saturation fractions.  Signals must already be
    realigned to equal length.
    """
    a1 = np.asarray(getattr(sig1, "samples", sig1), dtype=np.float64)
    a2 = np.asarray(getattr(sig2, "samples", sig2), dtype=np.float64)
    if a1.shape != a2.shape:
        raise AlignmentError("perspiration features need realigned, equal-length signals")
    if len(a1) < 2:
        raise ValueError("signals too short")
    spectral, flag_spec = _spectral_upper_fraction(a2)
    swing = float(np.abs(np.diff(a2)).sum() - np.abs(np.diff(a1)).sum())
    peaks2, flag2 = _peak_mean(a2)
    peaks1, flag1 = _peak_mean(a1)
    peak_ratio = peaks2 / (peaks1 + MEAN_EPS)
    mean_delta = float(a2.mean() - a1.mean())
    var1, var2 = float(a1.var()), float(a2.var())
    var_pct = 100.0 * (var2 - var1) / (var1 + MEAN_EPS)
    dry_delta = float((a2 < dry_level).mean() - (a1 < dry_level).mean())
    wet_delta = float((a2 > wet_level).mean() - (a1 > wet_level).mean())
    degenerate = flag_spec or flag1 or flag2 or var1 == 0.0 or var2 == 0.0
    values = np.array(
        [spectral, swing, peak_ratio, mean_delta, var_pct, dry_delta, wet_delta],
        dtype=np.float64,
    )
    return values, degenerate


def extract_dynamic_block(
    seq: CaptureSequence,
    f1_index: int,
    f2_index: int,
    regions1: RegionSet,
    regions2: RegionSet,
    max_lag: int = MAX_LAG,
    top_signals: int = TOP_SIGNALS,
    masks=None,
    block=None,
    var_threshold=None,
) -> DynamicFeatureBlock:
    """Assemble all 51 dynamic features for a capture."""
    f1 = seq.frames[f1_index]
    f2 = seq.frames[f2_index]
    color = color_feature_block(f1, f2, regions1, regions2, max_lag, top_signals)
    mask_vals, mask_flag = mask_features(regions1.foreground, regions2.foreground)
    delta = delta_image_feature(seq, masks=masks, block=block, var_threshold=var_threshold)
    ihist = intensity_dynamic_features(f1, f2, regions1.foreground, regions2.foreground)
    sig1, _ = concat_top_signals(regions1.ridge_signals, top_signals)
    sig2, _ = concat_top_signals(regions2.ridge_signals, top_signals)
    aln = realign_signals(sig1, sig2, max_lag=max_lag)
    persp, persp_flag = perspiration_features(aln.aligned1, aln.aligned2)
    flags = []
    if mask_flag:
        flags.append("mask_denominator_guard")
    if aln.degenerate:
        flags.append("ridge_signal_degenerate")
    if persp_flag:
        flags.append("perspiration_degenerate")
    return DynamicFeatureBlock(
        color_foreground=color[:12],
        color_ridge_signal=color[12:24],
        color_ridge_pixels=color[24:31],
        mask=mask_vals,
        shift=np.array([delta]),
        intensity_dynamic=ihist,
        perspiration=persp,
        flags=tuple(flags),
    )
