import pytest

from padpipe.errors import NoUsableFrames
from padpipe.frame_selection import MIN_PAIR_GAP_MS, FramePair, select_frames

from conftest import gray_frame, ridge_frame, sequence_of


def _burst(pattern, gap_ms=125):
    frames = []
    for k, ch in enumerate(pattern):
        if ch == "N":
            frames.append(ridge_frame(size=32, timestamp_ms=k * gap_ms))
        else:
            frames.append(gray_frame(90, size=32, timestamp_ms=k * gap_ms))
    return sequence_of(frames)


def test_all_nonblank_picks_first_qualifying_gap():
    pair = select_frames(_burst("NNNNNNNN"))
    assert (pair.f1_index, pair.f2_index, pair.dt_ms) == (0, 5, 625)
    assert not pair.gap_warning


def test_leading_blank_shifts_both_indices():
    pair = select_frames(_burst("BNNNNNNN"))
    assert (pair.f1_index, pair.f2_index, pair.dt_ms) == (1, 6, 625)


def test_fallback_to_last_nonblank_sets_warning():
    pair = select_frames(_burst("NNBBBBBB"))
    assert (pair.f1_index, pair.f2_index) == (0, 1)
    assert pair.gap_warning and pair.dt_ms == 125


def test_ending_frame_must_be_nonblank():
    # frame 5 is the first with a 625 ms gap but it is blank; frame 6 qualifies
    pair = select_frames(_burst("NNNNNBNN"))
    assert (pair.f1_index, pair.f2_index, pair.dt_ms) == (0, 6, 750)


def test_all_blank_raises():
    with pytest.raises(NoUsableFrames):
        select_frames(_burst("BBBBBBBB"))


def test_single_nonblank_raises():
    with pytest.raises(NoUsableFrames):
        select_frames(_burst("BBBNBBBB"))


def test_pair_invariants():
    with pytest.raises(ValueError):
        FramePair(f1_index=3, f2_index=3, dt_ms=625)
    with pytest.raises(ValueError):
        FramePair(f1_index=0, f2_index=5, dt_ms=500)  # gap unmet without warning
    FramePair(f1_index=0, f2_index=5, dt_ms=500, gap_warning=True)


def test_blanking_earlier_frames_never_decreases_f1(rng):
    """Monotonicity: adding blanks at the front can only push f1 later."""
    for trial in range(25):
        n_lead = int(rng.integers(0, 5))
        pattern = "B" * n_lead + "N" * (8 - n_lead)
        pair = select_frames(_burst(pattern))
        assert pair.f1_index == n_lead
        assert pair.dt_ms >= MIN_PAIR_GAP_MS or pair.gap_warning
        if n_lead < 3:
            # one more leading blank strictly increases f1
            pair2 = select_frames(_burst("B" * (n_lead + 1) + "N" * (7 - n_lead)))
            assert pair2.f1_index >= pair.f1_index
