"""The three analysis regions: foreground, ridge pixels, ridge signals.

Segmentation is block-variance thresholding plus 3x3 closing/opening and
largest-component selection.  Ridge pixels are foreground pixels darker than
their local block mean; the skeleton of that mask is traced into 1-D ridge
signals, which are realigned between the two analysis frames by correlation.
"""

import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from padpipe.frame_selection import select_frames
from padpipe.segmentation import concat_top_signals, extract_regions, realign_signals
from padpipe.synth import PhenomenaParams, generate

out = Path(tempfile.mkdtemp(prefix="padpipe_demo_"))
seq = generate(PhenomenaParams(noise_sigma=1.0, shift_px=0.5), "live", seed=4, n=1)[0]
pair = select_frames(seq)
f1 = seq.frames[pair.f1_index]
f2 = seq.frames[pair.f2_index]

regions1 = extract_regions(f1)
regions2 = extract_regions(f2)
print(f"foreground covers {regions1.foreground.mean():.1%} of frame {pair.f1_index}")
print(f"ridge pixels cover {regions1.ridge_pixels.mean():.1%} (subset of foreground)")
print(f"traced {len(regions1.ridge_signals)} ridge signals; longest "
      f"{len(regions1.ridge_signals[0])} samples")

for name, mask in (("foreground", regions1.foreground), ("ridges", regions1.ridge_pixels)):
    Image.fromarray(mask.astype(np.uint8) * 255).save(out / f"{name}.png")
print(f"masks written to {out}")

# Realign the concatenated top-5 signals of the two frames.  The finger
# drifts 0.5 px per frame, so a small lag is expected.
sig1, _ = concat_top_signals(regions1.ridge_signals)
sig2, _ = concat_top_signals(regions2.ridge_signals)
aln = realign_signals(sig1, sig2, max_lag=32)
print(f"\nrealignment: lag={aln.lag} samples over {len(aln)} common samples "
      f"(degenerate={aln.degenerate})")
print(f"signal means: frame1 {aln.aligned1.mean():.1f}, frame2 {aln.aligned2.mean():.1f} "
      f"(gray levels along ridges)")
