import numpy as np
import pytest

from padpipe.capture import CaptureSequence, Frame, GroundTruth


def gray_frame(value, size=32, timestamp_ms=0):
    """Uniform gray frame (R=G=B=value)."""
    rgb = np.full((size, size, 3), value, dtype=np.uint8)
    return Frame(rgb=rgb, timestamp_ms=timestamp_ms)


def frame_from_gray(gray, timestamp_ms=0):
    """Promote a 2-D uint8 plane to an R=G=B color frame."""
    gray = np.asarray(gray, dtype=np.uint8)
    return Frame(rgb=np.stack([gray] * 3, axis=2), timestamp_ms=timestamp_ms)


def ridge_gray(size=128, period=8.0, angle=0.0, base=128.0, amp=55.0):
    """Parallel sinusoidal ridge texture (dark ridges, bright valleys)."""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    coord = xs * np.cos(angle) + ys * np.sin(angle)
    tex = base + amp * np.sin(2.0 * np.pi * coord / period)
    return np.clip(np.rint(tex), 0, 255).astype(np.uint8)


def ridge_frame(size=128, period=8.0, angle=0.0, timestamp_ms=0, base=128.0, amp=55.0):
    return frame_from_gray(ridge_gray(size, period, angle, base, amp), timestamp_ms)


def sequence_of(frames, label="live", capture_id="cap0", subject_id="sub0", **truth):
    return CaptureSequence(
        frames=tuple(frames),
        label=GroundTruth(label=label, **truth),
        subject_id=subject_id,
        capture_id=capture_id,
    )


def repeated_sequence(frame, n=8, gap_ms=125, **kwargs):
    frames = [
        Frame(rgb=np.array(frame.rgb), timestamp_ms=k * gap_ms) for k in range(n)
    ]
    return sequence_of(frames, **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
