"""The 51 dynamic features, their identity values, and the live/spoof gap.

Feeding a burst made of one repeated frame drives every frame-pair comparison
to its identity value (differences 0, ratios 1, XOR shift 0, motion 0).  On
real presets the color-ratio change between the analysis frames carries the
liveness signal.
"""

import numpy as np

from padpipe.capture import CaptureSequence, Frame
from padpipe.layout import DYNAMIC_NAMES
from padpipe.pipeline import extract_capture, extract_features
from padpipe.synth import PhenomenaParams, generate, generate_preset

# Identity values on a repeated-frame capture.
base = generate(PhenomenaParams(noise_sigma=0.0), "live", seed=3, n=1)[0]
frames = tuple(Frame(rgb=np.array(base.frames[0].rgb), timestamp_ms=125 * k) for k in range(8))
repeated = CaptureSequence(frames=frames, label=base.label, subject_id="s", capture_id="rep")
vals, _ = extract_capture(repeated, "dynamic")
named = dict(zip(DYNAMIC_NAMES, vals))
print("repeated-frame capture (should be identities):")
for name in ("fg_cri_gr_diff", "fg_cri_gr_ratio", "mask_shift_xor", "shift_delta_mean",
             "persp_peak_ratio", "persp_var_pct"):
    print(f"  {name:22s} = {named[name]: .2e}")

# Live vs spoof separation on the strongest color feature.
res = extract_features(
    generate_preset("live", seed=5, n=15) + generate_preset("spoof", seed=5, n=15), "dynamic"
)
col = res.layout.names.index("fg_cri_gr_diff")
live_vals = res.features[res.labels == 0, col]
spoof_vals = res.features[res.labels == 1, col]
print("\ngreen/red ratio-image change over the burst:")
print(f"  live : mean {live_vals.mean(): .4f}  range [{live_vals.min(): .4f}, {live_vals.max(): .4f}]")
print(f"  spoof: mean {spoof_vals.mean(): .4f}  range [{spoof_vals.min(): .4f}, {spoof_vals.max(): .4f}]")

col_delta = res.layout.names.index("shift_delta_mean")
print("\naccumulated red-channel motion (spoofs drift more):")
print(f"  live : mean {res.features[res.labels == 0, col_delta].mean():6.2f}")
print(f"  spoof: mean {res.features[res.labels == 1, col_delta].mean():6.2f}")

col_r1 = res.layout.names.index("mask_ratio_f1")
print("\nforeground/background area ratio (spoofs press a smaller area):")
print(f"  live : mean {res.features[res.labels == 0, col_r1].mean():6.2f}")
print(f"  spoof: mean {res.features[res.labels == 1, col_r1].mean():6.2f}")
