"""Feature layout descriptor: canonical names, ordering, and layout hashes.

The layout is frozen: the static block (164 values) precedes the dynamic
block (51 values) in fused output, and each dynamic feature carries the kind
of identity value it takes when the two analysis frames are identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

CHANNEL_PAIRS = (("g", "r"), ("b", "r"), ("g", "b"))

WAVELET_LEVELS = 7

# Identity kinds under a repeated-frame capture:
#   zero        -> exactly 0
#   one         -> 1 up to the documented 1e-12 ratio guard
#   pair_equal  -> equal to its sibling feature (frame-1 vs frame-2 measure)
#   damped      -> r / (r + 1e-4), the mask-ratio epsilon keeps it below 1
#   static      -> computed from one frame only; no identity value
IDENTITY_KINDS = ("zero", "one", "pair_equal", "damped", "static")


def _static_names() -> list:
    names = []
    for radius in (1, 2):
        names += [f"lbp_r{radius}_b{i:02d}" for i in range(36)]
    names += [f"intensity_b{i:02d}" for i in range(64)]
    for signal in ("ridge", "valley"):
        for level in range(1, WAVELET_LEVELS + 1):
            names += [f"wavelet_{signal}_l{level}_loge", f"wavelet_{signal}_l{level}_std"]
    return names


def _color_block_names(prefix: str) -> list:
    names = []
    for num, den in CHANNEL_PAIRS:
        for stat in ("diff", "ratio", "sumsq"):
            names.append(f"{prefix}_cri_{num}{den}_{stat}")
    for ch in ("r", "g", "b"):
        names.append(f"{prefix}_raw_{ch}_diff")
    return names


def _dynamic_names_kinds():
    names, kinds = [], []

    def add(name, kind):
        names.append(name)
        kinds.append(kind)

    for prefix in ("fg", "rs"):
        for num, den in CHANNEL_PAIRS:
            add(f"{prefix}_cri_{num}{den}_diff", "zero")
            add(f"{prefix}_cri_{num}{den}_ratio", "one")
            add(f"{prefix}_cri_{num}{den}_sumsq", "zero")
        for ch in ("r", "g", "b"):
            add(f"{prefix}_raw_{ch}_diff", "zero")
    for num, den in CHANNEL_PAIRS:
        add(f"rp_crm_{num}{den}_diff", "zero")
        add(f"rp_crm_{num}{den}_ratio", "one")
    add("rp_euclid", "zero")
    add("mask_ratio_f1", "pair_equal")
    add("mask_ratio_f2", "pair_equal")
    add("mask_ratio_shift", "damped")
    add("mask_back_delta", "zero")
    add("mask_shift_xor", "zero")
    add("mask_fore_delta", "zero")
    add("shift_delta_mean", "zero")
    add("ihist_total_var", "zero")
    add("ihist_dark_delta", "zero")
    add("ihist_light_delta", "zero")
    add("ihist_mean_shift", "zero")
    add("ihist_energy_delta", "zero")
    add("ihist_entropy_delta", "zero")
    add("persp_spectral", "static")
    add("persp_swing_delta", "zero")
    add("persp_peak_ratio", "one")
    add("persp_mean_delta", "zero")
    add("persp_var_pct", "zero")
    add("persp_dry_delta", "zero")
    add("persp_wet_delta", "zero")
    return names, kinds


STATIC_NAMES = tuple(_static_names())
DYNAMIC_NAMES, DYNAMIC_IDENTITY_KINDS = (tuple(x) for x in _dynamic_names_kinds())

DYNAMIC_FAMILY_SIZES = {
    "color_foreground": 12,
    "color_ridge_signal": 12,
    "color_ridge_pixels": 7,
    "mask": 6,
    "shift": 1,
    "intensity_dynamic": 6,
    "perspiration": 7,
}

assert len(STATIC_NAMES) == 164
assert len(DYNAMIC_NAMES) == sum(DYNAMIC_FAMILY_SIZES.values()) == 51

FEATURE_SETS = ("static", "dynamic", "fused")


@dataclass(frozen=True)
class FeatureLayout:
    """Ordered feature names for one feature set."""

    feature_set: str
    names: tuple

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def layout_hash(self) -> str:
        return layout_hash(self.names)


def layout_hash(names) -> str:
    digest = hashlib.sha256(",".join(names).encode("utf-8")).hexdigest()
    return digest[:16]


def layout_for(feature_set: str) -> FeatureLayout:
    if feature_set == "static":
        names = STATIC_NAMES
    elif feature_set == "dynamic":
        names = DYNAMIC_NAMES
    elif feature_set == "fused":
        names = STATIC_NAMES + DYNAMIC_NAMES
    else:
        raise ValueError(f"unknown feature set {feature_set!r}; expected one of {FEATURE_SETS}")
    return FeatureLayout(feature_set=feature_set, names=names)


def dynamic_identity_kind(name: str) -> str:
    """Identity kind of a dynamic feature under a repeated-frame capture."""
    idx = DYNAMIC_NAMES.index(name)
    return DYNAMIC_IDENTITY_KINDS[idx]
