import numpy as np
import pytest

from padpipe.dynamic_features import delta_image_feature
from padpipe.frame_selection import select_frames
from padpipe.ingest import blank_flags, clean_sequence
from padpipe.layout import DYNAMIC_IDENTITY_KINDS, DYNAMIC_NAMES
from padpipe.pipeline import extract_capture, extract_features
from padpipe.synth import (
    LIVE_PRESET,
    PhenomenaParams,
    generate,
    generate_preset,
)


def test_same_params_seed_bit_identical():
    a = generate(LIVE_PRESET, "live", seed=42, n=2)
    b = generate(LIVE_PRESET, "live", seed=42, n=2)
    for sa, sb in zip(a, b):
        assert sa.capture_id == sb.capture_id
        for fa, fb in zip(sa.frames, sb.frames):
            assert np.array_equal(fa.rgb, fb.rgb)
            assert fa.timestamp_ms == fb.timestamp_ms


def test_different_seeds_differ():
    a = generate(LIVE_PRESET, "live", seed=1, n=1)[0]
    b = generate(LIVE_PRESET, "live", seed=2, n=1)[0]
    assert not np.array_equal(a.frames[0].rgb, b.frames[0].rgb)


def test_generated_sequences_pass_cleaning():
    for preset in ("live", "spoof"):
        for seq in generate_preset(preset, seed=3, n=4):
            assert len(seq) == 8
            assert clean_sequence(seq, sigma_threshold=3.0)
            assert not blank_flags(seq).any()


def test_blank_frame_injection():
    seq = generate(PhenomenaParams(noise_sigma=1.0, blank_frames=(0, 4)), "live", seed=5, n=1)[0]
    flags = blank_flags(seq)
    assert flags[0] and flags[4]
    assert not clean_sequence(seq)  # max run is 3 + 3


def test_ragged_burst_fault():
    seq = generate(PhenomenaParams(noise_sigma=1.0, n_frames=3), "live", seed=6, n=1)[0]
    assert len(seq) == 3
    pair = select_frames(seq)
    assert pair.gap_warning  # 3 frames at 125 ms cannot reach 625 ms


def test_zero_phenomena_gives_identity_dynamics():
    seq = generate(PhenomenaParams(noise_sigma=0.0), "live", seed=7, n=1)[0]
    vals, _ = extract_capture(seq, "dynamic")
    for name, kind, v in zip(DYNAMIC_NAMES, DYNAMIC_IDENTITY_KINDS, vals):
        if kind == "zero":
            assert abs(v) <= 1e-9, (name, v)
        elif kind == "one":
            assert abs(v - 1.0) <= 1e-9, (name, v)


def test_live_spoof_color_gap_has_disjoint_iqr():
    """The green/red foreground change separates the presets with no IQR overlap."""
    n = 50
    res = extract_features(
        generate_preset("live", seed=8, n=n) + generate_preset("spoof", seed=8, n=n),
        "dynamic",
    )
    assert not res.failures
    col = res.layout.names.index("fg_cri_gr_diff")
    live_vals = res.features[res.labels == 0, col]
    spoof_vals = res.features[res.labels == 1, col]
    live_q1, live_q3 = np.percentile(live_vals, [25, 75])
    spoof_q1, spoof_q3 = np.percentile(spoof_vals, [25, 75])
    assert spoof_q3 < live_q1  # zero overlap between the interquartile ranges


def test_shift_increases_motion_measure():
    moved = 0.0
    still = 0.0
    n = 50
    for seed in range(n):
        p_move = PhenomenaParams(shift_px=2.0, noise_sigma=1.0)
        p_still = PhenomenaParams(shift_px=0.0, noise_sigma=1.0)
        moved += delta_image_feature(generate(p_move, "live", seed=seed, n=1)[0])
        still += delta_image_feature(generate(p_still, "live", seed=seed, n=1)[0])
    assert moved / n > still / n


def test_spoof_preset_has_smaller_foreground():
    from padpipe.segmentation import compute_foreground

    live = generate_preset("live", seed=9, n=3)
    spoof = generate_preset("spoof", seed=9, n=3)
    live_area = np.mean([compute_foreground(s.frames[0]).mean() for s in live])
    spoof_area = np.mean([compute_foreground(s.frames[0]).mean() for s in spoof])
    assert spoof_area < live_area * 0.7


def test_param_validation():
    with pytest.raises(ValueError):
        PhenomenaParams(blood_shift=2.5)
    with pytest.raises(ValueError):
        PhenomenaParams(shift_px=-1.0)
