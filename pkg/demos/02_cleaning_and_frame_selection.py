"""Blank-frame detection, the cleaning rule, and analysis-pair selection.

A frame is blank when the standard deviation of its grayscale middle pixel
row falls below a threshold (default 3.0 gray levels).  A capture survives
cleaning only if some run of at least seven consecutive frames is non-blank.
The analysis pair is the earliest non-blank frame plus the first non-blank
frame at least 625 ms later.
"""

from padpipe.frame_selection import select_frames
from padpipe.ingest import blank_flags, clean_sequence
from padpipe.synth import PhenomenaParams, generate

good = generate(PhenomenaParams(noise_sigma=1.0), "live", seed=2, n=1)[0]
leading_blank = generate(PhenomenaParams(noise_sigma=1.0, blank_frames=(0,)), "live", seed=2, n=1)[0]
broken = generate(PhenomenaParams(noise_sigma=1.0, blank_frames=(3, 4)), "live", seed=2, n=1)[0]

for name, seq in (("clean burst", good), ("one leading blank", leading_blank), ("two mid blanks", broken)):
    flags = "".join("B" if b else "N" for b in blank_flags(seq))
    verdict = "keep" if clean_sequence(seq) else "drop"
    print(f"{name:20s} pattern={flags}  ->  {verdict}")

print()
for name, seq in (("clean burst", good), ("one leading blank", leading_blank)):
    pair = select_frames(seq)
    print(
        f"{name:20s} beginning frame {pair.f1_index}, ending frame {pair.f2_index}, "
        f"gap {pair.dt_ms} ms, warning={pair.gap_warning}"
    )

# A ragged 3-frame burst cannot reach the 625 ms gap: the last non-blank
# frame is used and the pair carries a warning flag.
short = generate(PhenomenaParams(noise_sigma=1.0, n_frames=3), "live", seed=2, n=1)[0]
pair = select_frames(short)
print(f"\nragged 3-frame burst: pair=({pair.f1_index}, {pair.f2_index}), warning={pair.gap_warning}")
