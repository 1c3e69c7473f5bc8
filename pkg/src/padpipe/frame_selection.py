"""Selection of the beginning/ending frame pair used by all dynamic features.

The beginning frame is the earliest non-blank frame; the ending frame is the
first non-blank frame at least 625 ms later.  When no frame satisfies the gap
the last non-blank frame is used and a warning flag is set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capture import CaptureSequence
from .errors import NoUsableFrames
from .ingest import DEFAULT_SIGMA_THRESHOLD, blank_flags

MIN_PAIR_GAP_MS = 625


@dataclass(frozen=True)
class FramePair:
    """Indices of the selected beginning/ending frames and their time gap."""

    f1_index: int
    f2_index: int
    dt_ms: int
    gap_warning: bool = False

    def __post_init__(self):
        if self.f1_index >= self.f2_index:
            raise ValueError("beginning frame must precede ending frame")
        if not self.gap_warning and self.dt_ms < MIN_PAIR_GAP_MS:
            raise ValueError(f"pair gap {self.dt_ms} ms below {MIN_PAIR_GAP_MS} ms")


def select_frames(
    seq: CaptureSequence,
    sigma_threshold: float = DEFAULT_SIGMA_THRESHOLD,
) -> FramePair:
    """Pick the analysis frame pair for a capture.

    Raises NoUsableFrames when fewer than two frames are non-blank.
    """
    blanks = blank_flags(seq, sigma_threshold)
    usable = np.flatnonzero(~blanks)
    if usable.size == 0:
        raise NoUsableFrames(f"capture {seq.capture_id!r}: all frames blank")
    if usable.size < 2:
        raise NoUsableFrames(f"capture {seq.capture_id!r}: only one non-blank frame")
    ts = seq.timestamps_ms
    f1 = int(usable[0])
    t1 = ts[f1]
    for idx in usable[1:]:
        if ts[idx] - t1 >= MIN_PAIR_GAP_MS:
            return FramePair(f1_index=f1, f2_index=int(idx), dt_ms=int(ts[idx] - t1))
    f2 = int(usable[-1])
    return FramePair(f1_index=f1, f2_index=f2, dt_ms=int(ts[f2] - t1), gap_warning=True)
