"""Static texture features from a single frame: LBP, intensity, wavelets.

LBP convention (frozen; the brute-force oracle in the test suite mirrors it
bit for bit):

* 8 samples per pixel on a circle of radius 1 or 2, sample p at angle
  ``2*pi*p/8``, positioned at (row + r*sin, col + r*cos);
* off-grid samples use bilinear interpolation written as two nested linear
  interpolations (exact for locally constant patches); offsets within 1e-9
  of an integer are read directly from the grid;
* bit p is set iff the sampled value is strictly greater than the center;
* codes are pooled into the 36 rotation-equivalence classes of 8-bit words
  (class = minimum over the 8 circular rotations), indexed by ascending
  canonical code — class 0 is the all-zeros code;
* only pixels at least ceil(radius) away from the border contribute, and the
  two per-radius 36-bin histograms are normalized over the masked pixels.
"""

from __future__ import annotations

import math

import numpy as np

from .capture import Frame, RegionSet, to_grayscale
from .segmentation import (
    BLOCK,
    TOP_SIGNALS,
    bilinear_sample,
    concat_top_signals,
    estimate_ridge_period,
    orientation_field,
)

LBP_RADII = (1.0, 2.0)
LBP_SAMPLES = 8
LBP_BINS = 36

INTENSITY_BINS = 64

WAVELET_LEVELS = 7
WAVELET_MIN_LEN = 256
LOG_ENERGY_FLOOR = -30.0


def _rotations(code: int, bits: int = LBP_SAMPLES):
    mask = (1 << bits) - 1
    for k in range(bits):
        yield ((code << k) | (code >> (bits - k))) & mask


def rotation_group_table() -> np.ndarray:
    """Map each 8-bit LBP code to its rotation-class index (0..35).

    Classes are the 36 rotation-equivalence classes of 8-bit words, ordered
    by their smallest member.
    """
    canon = np.array([min(_rotations(c)) for c in range(256)], dtype=np.int64)
    classes = np.unique(canon)
    index = {int(c): i for i, c in enumerate(classes)}
    return np.array([index[int(c)] for c in canon], dtype=np.int64)


_ROT_TABLE = rotation_group_table()


def _sample_offsets(radius: float):
    """(dr, dc) sample offsets; near-integer components snapped to the grid."""
    offsets = []
    for p in range(LBP_SAMPLES):
        theta = 2.0 * math.pi * p / LBP_SAMPLES
        dr = radius * math.sin(theta)
        dc = radius * math.cos(theta)
        if abs(dr - round(dr)) < 1e-9:
            dr = float(round(dr))
        if abs(dc - round(dc)) < 1e-9:
            dc = float(round(dc))
        offsets.append((dr, dc))
    return offsets


def lbp_codes(gray: np.ndarray, radius: float) -> np.ndarray:
    """LBP code of every interior pixel (margin ceil(radius) on all sides)."""
    g = np.asarray(gray, dtype=np.float64)
    m = int(math.ceil(radius))
    h, w = g.shape
    if h <= 2 * m or w <= 2 * m:
        return np.zeros((0, 0), dtype=np.int64)
    center = g[m : h - m, m : w - m]
    codes = np.zeros(center.shape, dtype=np.int64)
    for p, (dr, dc) in enumerate(_sample_offsets(radius)):
        if dr == int(dr) and dc == int(dc):
            r0, c0 = m + int(dr), m + int(dc)
            sample = g[r0 : r0 + center.shape[0], c0 : c0 + center.shape[1]]
        else:
            rb = math.floor(dr)
            cb = math.floor(dc)
            fr = dr - rb
            fc = dc - cb
            r0, c0 = m + rb, m + cb
            a = g[r0 : r0 + center.shape[0], c0 : c0 + center.shape[1]]
            b = g[r0 : r0 + center.shape[0], c0 + 1 : c0 + 1 + center.shape[1]]
            c_ = g[r0 + 1 : r0 + 1 + center.shape[0], c0 : c0 + center.shape[1]]
            d = g[r0 + 1 : r0 + 1 + center.shape[0], c0 + 1 : c0 + 1 + center.shape[1]]
            top = a + fc * (b - a)
            bot = c_ + fc * (d - c_)
            sample = top + fr * (bot - top)
        codes |= (sample > center).astype(np.int64) << p
    return codes


def lbp_histogram(gray: np.ndarray, mask: np.ndarray, radius: float) -> np.ndarray:
    """Normalized 36-bin rotation-grouped LBP histogram over masked pixels."""
    m = int(math.ceil(radius))
    codes = lbp_codes(gray, radius)
    if codes.size == 0:
        return np.zeros(LBP_BINS, dtype=np.float64)
    interior_mask = np.asarray(mask, dtype=bool)[m : m + codes.shape[0], m : m + codes.shape[1]]
    selected = codes[interior_mask]
    if selected.size == 0:
        return np.zeros(LBP_BINS, dtype=np.float64)
    hist = np.bincount(_ROT_TABLE[selected], minlength=LBP_BINS).astype(np.float64)
    return hist / selected.size


def lbp_features(gray: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """72 LBP values: 36-bin histograms at radius 1 and radius 2, concatenated."""
    return np.concatenate([lbp_histogram(gray, mask, r) for r in LBP_RADII])


def intensity_features(gray: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """64-bin (4 gray levels each) normalized histogram over foreground pixels."""
    vals = np.asarray(gray)[np.asarray(mask, dtype=bool)]
    if vals.size == 0:
        raise ValueError("intensity features need a non-empty mask")
    hist = np.bincount(vals.astype(np.uint8) >> 2, minlength=INTENSITY_BINS).astype(np.float64)
    return hist / vals.size


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def haar_decompose(signal: np.ndarray, levels: int = WAVELET_LEVELS, min_len: int = WAVELET_MIN_LEN):
    """Orthonormal Haar decomposition; returns (detail arrays lvl 1..n, approx).

    The input is zero-padded to the next power of two (at least ``min_len``)
    so that every level has at least two coefficients.  The orthonormal
    filters conserve energy exactly: the summed squared detail coefficients
    plus the squared approximation equal the padded signal's energy.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("wavelet features need a non-empty 1-D signal")
    n = _next_pow2(max(len(x), min_len))
    padded = np.zeros(n, dtype=np.float64)
    padded[: len(x)] = x
    approx = padded
    details = []
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for _ in range(levels):
        even = approx[0::2]
        odd = approx[1::2]
        details.append((even - odd) * inv_sqrt2)
        approx = (even + odd) * inv_sqrt2
    return details, approx


def wavelet_multires_features(signal: np.ndarray, levels: int = WAVELET_LEVELS) -> np.ndarray:
    """14 values: per level, log mean-square detail energy and detail std.

    Log energies are floored at -30 so constant signals stay finite.
    """
    details, _ = haar_decompose(signal, levels=levels)
    out = []
    for d in details:
        energy = float(np.mean(d * d))
        log_e = math.log(energy) if energy > 0.0 else LOG_ENERGY_FLOOR
        out.append(max(log_e, LOG_ENERGY_FLOOR))
        out.append(float(d.std()))
    return np.asarray(out, dtype=np.float64)


def valley_signal(
    frame: Frame,
    regions: RegionSet,
    block: int = BLOCK,
    top_signals: int = TOP_SIGNALS,
) -> np.ndarray:
    """Grayscale sampled half a ridge period to the side of the ridge paths.

    The offset direction is the fixed perpendicular of the block-wise ridge
    orientation; the period comes from the frame's spectral peak.  Points
    whose offset leaves the image are skipped.
    """
    gray = to_grayscale(frame).astype(np.float64)
    period = estimate_ridge_period(gray, regions.foreground)
    theta = orientation_field(gray, block=block)
    _, path = concat_top_signals(regions.ridge_signals, top_signals)
    xs = path[:, 0].astype(np.float64)
    ys = path[:, 1].astype(np.float64)
    byi = np.clip((ys // block).astype(int), 0, theta.shape[0] - 1)
    bxi = np.clip((xs // block).astype(int), 0, theta.shape[1] - 1)
    ridge_dir = theta[byi, bxi]
    normal = ridge_dir + math.pi / 2.0
    off = 0.5 * period
    vy = ys + off * np.sin(normal)
    vx = xs + off * np.cos(normal)
    h, w = gray.shape
    inside = (vy >= 0) & (vy <= h - 1) & (vx >= 0) & (vx <= w - 1)
    if not inside.any():
        return np.zeros(0, dtype=np.float64)
    return bilinear_sample(gray, vy[inside], vx[inside])


def extract_static_block(
    frame: Frame,
    regions: RegionSet,
    block: int = BLOCK,
    top_signals: int = TOP_SIGNALS,
) -> np.ndarray:
    """164 static features: LBP (72) + intensity (64) + ridge/valley wavelets (28)."""
    gray = to_grayscale(frame)
    fg = regions.foreground
    ridge_sig, _ = concat_top_signals(regions.ridge_signals, top_signals)
    valley_sig = valley_signal(frame, regions, block=block, top_signals=top_signals)
    if valley_sig.size == 0:
        valley_sig = np.zeros(1, dtype=np.float64)
    return np.concatenate(
        [
            lbp_features(gray, fg),
            intensity_features(gray, fg),
            wavelet_multires_features(ridge_sig),
            wavelet_multires_features(valley_sig),
        ]
    )
