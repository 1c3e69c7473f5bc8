import math

import numpy as np
import pytest

from padpipe.segmentation import extract_regions
from padpipe.static_features import (
    LOG_ENERGY_FLOOR,
    haar_decompose,
    intensity_features,
    lbp_features,
    lbp_histogram,
    rotation_group_table,
    valley_signal,
    wavelet_multires_features,
)

from conftest import frame_from_gray, ridge_gray


# ---------------------------------------------------------------------------
# Brute-force LBP oracle: scalar loops, same documented convention.


def _oracle_lbp_histogram(gray, mask, radius, bins=36):
    g = np.asarray(gray, dtype=np.float64)
    h, w = g.shape
    m = int(math.ceil(radius))

    def canon(code):
        return min(((code << k) | (code >> (8 - k))) & 0xFF for k in range(8))

    classes = sorted({canon(c) for c in range(256)})
    table = {c: classes.index(canon(c)) for c in range(256)}
    hist = [0.0] * bins
    count = 0
    for y in range(m, h - m):
        for x in range(m, w - m):
            if not mask[y, x]:
                continue
            center = g[y, x]
            code = 0
            for p in range(8):
                theta = 2.0 * math.pi * p / 8
                dr = radius * math.sin(theta)
                dc = radius * math.cos(theta)
                if abs(dr - round(dr)) < 1e-9:
                    dr = float(round(dr))
                if abs(dc - round(dc)) < 1e-9:
                    dc = float(round(dc))
                if dr == int(dr) and dc == int(dc):
                    val = g[y + int(dr), x + int(dc)]
                else:
                    rb, cb = math.floor(dr), math.floor(dc)
                    fr, fc = dr - rb, dc - cb
                    a = g[y + rb, x + cb]
                    b = g[y + rb, x + cb + 1]
                    c_ = g[y + rb + 1, x + cb]
                    d = g[y + rb + 1, x + cb + 1]
                    top = a + fc * (b - a)
                    bot = c_ + fc * (d - c_)
                    val = top + fr * (bot - top)
                if val > center:
                    code |= 1 << p
            hist[table[code]] += 1.0
            count += 1
    if count == 0:
        return np.zeros(bins)
    return np.asarray(hist) / count


def test_rotation_table_has_36_classes():
    table = rotation_group_table()
    assert table.shape == (256,)
    assert len(np.unique(table)) == 36
    assert table[0] == 0  # all-zeros code is class 0
    # every rotation of a code maps to the same class
    for code in (0b00010110, 0b11001010, 0b11111110):
        rots = [((code << k) | (code >> (8 - k))) & 0xFF for k in range(8)]
        assert len({table[r] for r in rots}) == 1


def test_lbp_uniform_image_hits_zero_class():
    gray = np.full((16, 16), 77, dtype=np.uint8)
    mask = np.ones_like(gray, dtype=bool)
    for radius in (1.0, 2.0):
        hist = lbp_histogram(gray, mask, radius)
        assert hist[0] == pytest.approx(1.0)
        assert np.allclose(hist[1:], 0.0)


def test_lbp_single_bright_pixel_matches_oracle():
    gray = np.full((9, 9), 10, dtype=np.uint8)
    gray[4, 4] = 200
    mask = np.ones_like(gray, dtype=bool)
    for radius in (1.0, 2.0):
        mine = lbp_histogram(gray, mask, radius)
        oracle = _oracle_lbp_histogram(gray, mask, radius)
        assert np.array_equal(mine, oracle)


def test_lbp_oracle_equivalence_random_images(rng):
    for trial in range(30):
        h = int(rng.integers(6, 17))
        w = int(rng.integers(6, 17))
        gray = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
        mask = rng.random((h, w)) < 0.8
        for radius in (1.0, 2.0):
            mine = lbp_histogram(gray, mask, radius)
            oracle = _oracle_lbp_histogram(gray, mask, radius)
            assert np.array_equal(mine, oracle), f"trial {trial} radius {radius}"


def test_lbp_rotation_invariance():
    gray = ridge_gray(size=64, period=9.0, angle=0.35)
    mask = np.ones_like(gray, dtype=bool)
    rotated = np.rot90(gray)
    for radius in (1.0, 2.0):
        h0 = lbp_histogram(gray, mask, radius)
        h90 = lbp_histogram(rotated, np.rot90(mask), radius)
        assert np.allclose(h0, h90, atol=1e-12)


def test_lbp_feature_vector_length():
    gray = ridge_gray(size=48)
    feats = lbp_features(gray, np.ones_like(gray, dtype=bool))
    assert feats.shape == (72,)
    assert feats[:36].sum() == pytest.approx(1.0)
    assert feats[36:].sum() == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Intensity histogram


def test_intensity_all_black():
    gray = np.zeros((8, 8), dtype=np.uint8)
    hist = intensity_features(gray, np.ones_like(gray, dtype=bool))
    assert hist[0] == 1.0 and np.allclose(hist[1:], 0.0)


def test_intensity_black_white_split():
    gray = np.zeros((8, 8), dtype=np.uint8)
    gray[:4] = 255
    hist = intensity_features(gray, np.ones_like(gray, dtype=bool))
    assert hist[0] == pytest.approx(0.5)
    assert hist[63] == pytest.approx(0.5)


def test_intensity_ramp_is_near_flat():
    vals = np.arange(256, dtype=np.uint8).reshape(16, 16)
    hist = intensity_features(vals, np.ones((16, 16), dtype=bool))
    assert np.allclose(hist, 1.0 / 64.0)


def test_intensity_sums_to_one_and_ignores_outside(rng):
    for _ in range(10):
        gray = rng.integers(0, 256, size=(12, 12), dtype=np.uint8)
        mask = rng.random((12, 12)) < 0.5
        if not mask.any():
            mask[0, 0] = True
        hist = intensity_features(gray, mask)
        assert hist.sum() == pytest.approx(1.0, abs=1e-9)
        outside = gray.copy()
        outside[~mask] = 255 - outside[~mask]
        assert np.array_equal(hist, intensity_features(outside, mask))


# ---------------------------------------------------------------------------
# Haar wavelet features


def test_haar_energy_conservation(rng):
    for _ in range(20):
        n = int(rng.integers(50, 1500))
        sig = rng.standard_normal(n) * 40 + 120
        details, approx = haar_decompose(sig)
        total = sum(float(d @ d) for d in details) + float(approx @ approx)
        assert total == pytest.approx(float(sig @ sig), rel=1e-9)


def test_wavelet_constant_signal_floors():
    # length is a power of two, so zero-padding adds no step edge
    feats = wavelet_multires_features(np.full(256, 42.0))
    assert feats.shape == (14,)
    assert np.allclose(feats[0::2], LOG_ENERGY_FLOOR)
    assert np.allclose(feats[1::2], 0.0)
    # a zero signal floors regardless of padding
    zero_details = wavelet_multires_features(np.zeros(300))
    assert np.allclose(zero_details[0::2], LOG_ENERGY_FLOOR)
    assert np.allclose(zero_details[1::2], 0.0)


def test_wavelet_alternating_signal_concentrates_level1():
    sig = np.tile([1.0, -1.0], 128)  # length 256, pure Nyquist oscillation
    feats = wavelet_multires_features(sig)
    log_es = feats[0::2]
    assert log_es[0] == pytest.approx(math.log(2.0))  # d1 = +/- sqrt(2), mean square 2
    assert np.allclose(log_es[1:], LOG_ENERGY_FLOOR)


def test_wavelet_white_noise_flat_per_coefficient_energy():
    """Mean-square detail energy of white noise is level-independent (3 dB)."""
    rng = np.random.default_rng(99)
    acc = np.zeros(7)
    n_seeds = 100
    for _ in range(n_seeds):
        feats = wavelet_multires_features(rng.standard_normal(1024))
        acc += feats[0::2]
    mean_log_e = acc / n_seeds
    db = 10.0 * mean_log_e / math.log(10.0)
    assert db.max() - db.min() <= 3.0


# ---------------------------------------------------------------------------
# Valley signal


def _regions_for(gray):
    frame = frame_from_gray(gray)
    return frame, extract_regions(frame)


def test_valley_brighter_than_ridge_for_dark_ridges():
    gray = ridge_gray(size=128, period=8.0)
    frame, regions = _regions_for(gray)
    ridge_mean = np.concatenate([s.samples for s in regions.ridge_signals]).mean()
    valley = valley_signal(frame, regions)
    assert valley.size > 0
    assert valley.mean() > ridge_mean + 20


def test_valley_inequality_reverses_on_inverted_contrast():
    gray = ridge_gray(size=128, period=8.0)
    frame, regions = _regions_for(gray)
    inverted = frame_from_gray(255 - gray)
    # same geometry, inverted intensities: resample both signals on the
    # inverted frame
    from padpipe.segmentation import concat_top_signals, sample_along_path
    from padpipe.capture import to_grayscale

    _, path = concat_top_signals(regions.ridge_signals)
    ridge_on_inverted = sample_along_path(to_grayscale(inverted), path).mean()
    valley_on_inverted = valley_signal(inverted, regions).mean()
    assert valley_on_inverted < ridge_on_inverted - 20


def test_valley_offset_lands_half_period_away():
    gray = ridge_gray(size=128, period=8.0)
    frame, regions = _regions_for(gray)
    valley = valley_signal(frame, regions)
    # valleys of a +/-55 sinusoid around 128 have means well above 160
    assert valley.mean() > 160
