"""The 164 static features: LBP, intensity histogram, wavelet multiresolution.

LBP codes are pooled into the 36 rotation-equivalence classes of 8-bit words
(two radii, 72 values).  The intensity histogram uses 64 four-level bins over
the foreground.  Ridge and valley signals are decomposed with a 7-level Haar
transform; each level contributes its log mean-square detail energy and the
detail standard deviation (14 + 14 values).
"""

import numpy as np

from padpipe.capture import to_grayscale
from padpipe.segmentation import concat_top_signals, extract_regions
from padpipe.static_features import (
    intensity_features,
    lbp_features,
    valley_signal,
    wavelet_multires_features,
)
from padpipe.synth import PhenomenaParams, generate

seq = generate(PhenomenaParams(noise_sigma=1.0), "live", seed=8, n=1)[0]
frame = seq.frames[0]
regions = extract_regions(frame)
gray = to_grayscale(frame)

lbp = lbp_features(gray, regions.foreground)
print(f"LBP: 72 values; top radius-1 bins: {np.argsort(-lbp[:36])[:5].tolist()}")
print(f"     radius-1 histogram sums to {lbp[:36].sum():.6f}")

hist = intensity_features(gray, regions.foreground)
peak = int(np.argmax(hist))
print(f"\nintensity: 64 bins, peak at bin {peak} (gray {4 * peak}..{4 * peak + 3}), "
      f"mass {hist[peak]:.3f}, total {hist.sum():.9f}")

ridge_sig, _ = concat_top_signals(regions.ridge_signals)
valley_sig = valley_signal(frame, regions)
print(f"\nridge signal: {len(ridge_sig)} samples, mean {ridge_sig.mean():.1f}")
print(f"valley signal: {len(valley_sig)} samples, mean {valley_sig.mean():.1f} "
      "(valleys are brighter than ridges)")

wr = wavelet_multires_features(ridge_sig)
wv = wavelet_multires_features(valley_sig)
print("\nper-level log detail energy (ridge | valley):")
for level in range(7):
    print(f"  level {level + 1}: {wr[2 * level]:7.3f} | {wv[2 * level]:7.3f}")
