"""Foreground segmentation, ridge extraction, and ridge-signal alignment.

The segmentation baseline is block-variance thresholding followed by a 3x3
morphological closing/opening and largest-connected-component selection.
Ridges are binarized against a local mean, thinned to a one-pixel skeleton,
and each sufficiently long skeleton branch is traced into a 1-D ridge signal
by sampling the grayscale frame along the branch path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi
from skimage.morphology import skeletonize

from .capture import Frame, RegionSet, to_grayscale
from .errors import EmptyRidgeSet

BLOCK = 16
VAR_THRESHOLD = 100.0
MIN_BRANCH_LEN = 16
MAX_LAG = 32
TOP_SIGNALS = 5

# Walk order when tracing skeleton branches: 4-neighbors before diagonals.
_NEIGHBOR_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass(frozen=True)
class RidgeSignal:
    """Grayscale intensities sampled along one traced ridge path.

    ``path`` is an (N, 2) integer array of (x, y) pixel coordinates; samples
    are the grayscale values at those pixels, in path order.
    """

    samples: np.ndarray
    path: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        path = np.asarray(self.path, dtype=np.int64)
        if path.ndim != 2 or path.shape[1] != 2 or len(samples) != len(path):
            raise ValueError("path must be (N, 2) with one sample per point")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "path", path)
        samples.setflags(write=False)
        path.setflags(write=False)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Realignment:
    """Result of correlating two ridge signals onto common support."""

    aligned1: np.ndarray
    aligned2: np.ndarray
    lag: int
    degenerate: bool
    start1: int
    start2: int

    def __len__(self) -> int:
        return len(self.aligned1)


def _block_variance_mask(gray: np.ndarray, block: int, var_threshold: float) -> np.ndarray:
    h, w = gray.shape
    mask = np.zeros((h, w), dtype=bool)
    for by in range(0, h, block):
        for bx in range(0, w, block):
            tile = gray[by : by + block, bx : bx + block]
            if tile.var() >= var_threshold:
                mask[by : by + block, bx : bx + block] = True
    return mask


def compute_foreground(
    frame: Frame,
    block: int = BLOCK,
    var_threshold: float = VAR_THRESHOLD,
) -> np.ndarray:
    """Boolean fingerprint-foreground mask for one frame.

    Block-wise grayscale variance thresholding, one 3x3 closing then opening
    (erosion treats pixels beyond the border as foreground so a full-frame
    mask survives), then the largest connected component.  Blank frames yield
    an empty mask.
    """
    gray = to_grayscale(frame).astype(np.float64)
    mask = _block_variance_mask(gray, block, var_threshold)
    if not mask.any():
        return mask
    s = np.ones((3, 3), dtype=bool)
    mask = ndi.binary_dilation(mask, s)
    mask = ndi.binary_erosion(mask, s, border_value=1)
    mask = ndi.binary_erosion(mask, s, border_value=1)
    mask = ndi.binary_dilation(mask, s)
    if not mask.any():
        return mask
    labels, n = ndi.label(mask)
    if n > 1:
        counts = np.bincount(labels.ravel())
        counts[0] = 0
        mask = labels == int(np.argmax(counts))
    return mask


def orientation_field(gray: np.ndarray, block: int = BLOCK) -> np.ndarray:
    """Block-wise ridge orientation in radians, wrapped to (-pi/2, pi/2].

    Estimated from the doubled-angle average of intensity gradients; the
    returned angle points along the ridges (the gradient direction is its
    perpendicular).
    """
    g = np.asarray(gray, dtype=np.float64)
    gy, gx = np.gradient(g)
    gxx, gyy, gxy = gx * gx, gy * gy, gx * gy
    h, w = g.shape
    nby = (h + block - 1) // block
    nbx = (w + block - 1) // block
    theta = np.zeros((nby, nbx), dtype=np.float64)
    for by in range(nby):
        for bx in range(nbx):
            sl = np.s_[by * block : (by + 1) * block, bx * block : (bx + 1) * block]
            vx = 2.0 * gxy[sl].sum()
            vy = (gxx[sl] - gyy[sl]).sum()
            phi = 0.5 * math.atan2(vx, vy)  # dominant gradient direction
            ridge = phi + math.pi / 2.0
            while ridge > math.pi / 2.0:
                ridge -= math.pi
            while ridge <= -math.pi / 2.0:
                ridge += math.pi
            theta[by, bx] = ridge
    return theta


def estimate_ridge_period(gray: np.ndarray, mask: np.ndarray, default: float = 8.0) -> float:
    """Dominant ridge period in pixels from the 2-D power spectrum over the mask."""
    g = np.asarray(gray, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return default
    centered = np.where(m, g - g[m].mean(), 0.0)
    power = np.abs(np.fft.fft2(centered)) ** 2
    fy = np.fft.fftfreq(g.shape[0])[:, None]
    fx = np.fft.fftfreq(g.shape[1])[None, :]
    fr = np.sqrt(fy * fy + fx * fx)
    band = (fr >= 1.0 / 64.0) & (fr <= 0.45)
    if not band.any() or power[band].max() <= 0.0:
        return default
    flat = np.where(band, power, 0.0)
    peak = np.unravel_index(int(np.argmax(flat)), flat.shape)
    f = fr[peak]
    return float(1.0 / f) if f > 0 else default


def _trace_paths(skel: np.ndarray) -> list:
    """Order skeleton pixels into branch paths (row, col), junctions removed."""
    sk = np.asarray(skel, dtype=bool)
    kernel = np.ones((3, 3), dtype=int)
    kernel[1, 1] = 0
    degree = ndi.convolve(sk.astype(int), kernel, mode="constant", cval=0)
    branches = sk & (degree < 3)
    labels, n = ndi.label(branches, structure=np.ones((3, 3), dtype=int))
    paths = []
    for lab in range(1, n + 1):
        rows, cols = np.nonzero(labels == lab)
        pts = set(zip(rows.tolist(), cols.tolist()))
        if not pts:
            continue
        # Prefer an endpoint start (one in-component neighbor); cycles start
        # at the lexicographically smallest pixel.
        start = None
        for p in sorted(pts):
            nbrs = sum((p[0] + dr, p[1] + dc) in pts for dr, dc in _NEIGHBOR_OFFSETS)
            if nbrs <= 1:
                start = p
                break
        if start is None:
            start = min(pts)
        path = [start]
        visited = {start}
        cur = start
        while True:
            nxt = None
            for dr, dc in _NEIGHBOR_OFFSETS:
                cand = (cur[0] + dr, cur[1] + dc)
                if cand in pts and cand not in visited:
                    nxt = cand
                    break
            if nxt is None:
                break
            path.append(nxt)
            visited.add(nxt)
            cur = nxt
        paths.append(np.array(path, dtype=np.int64))
    return paths


def extract_ridges(
    frame: Frame,
    mask: np.ndarray,
    block: int = BLOCK,
    min_branch_len: int = MIN_BRANCH_LEN,
):
    """Ridge-pixel mask plus traced ridge signals for one frame.

    Ridge pixels are foreground pixels darker than their local block mean;
    the skeleton of that mask is traced branch by branch and every branch of
    at least ``min_branch_len`` pixels becomes a RidgeSignal.  Raises
    EmptyRidgeSet when the foreground is empty or no branch is long enough.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyRidgeSet("empty foreground mask")
    gray = to_grayscale(frame).astype(np.float64)
    local_mean = ndi.uniform_filter(gray, size=block)
    ridge_px = (gray < local_mean) & mask
    if not ridge_px.any():
        raise EmptyRidgeSet("no ridge pixels under local-mean threshold")
    skel = skeletonize(ridge_px)
    signals = []
    for path_rc in _trace_paths(skel):
        if len(path_rc) < min_branch_len:
            continue
        rows, cols = path_rc[:, 0], path_rc[:, 1]
        xy = np.stack([cols, rows], axis=1)
        signals.append(RidgeSignal(samples=gray[rows, cols], path=xy))
    if not signals:
        raise EmptyRidgeSet(f"no ridge branch of length >= {min_branch_len}")
    signals.sort(key=lambda s: (-len(s), int(s.path[0, 1]), int(s.path[0, 0])))
    return ridge_px, signals


def extract_regions(
    frame: Frame,
    block: int = BLOCK,
    var_threshold: float = VAR_THRESHOLD,
    min_branch_len: int = MIN_BRANCH_LEN,
) -> RegionSet:
    """Full region set (foreground, ridge pixels, ridge signals) for a frame."""
    fg = compute_foreground(frame, block=block, var_threshold=var_threshold)
    ridge_px, signals = extract_ridges(frame, fg, block=block, min_branch_len=min_branch_len)
    return RegionSet(foreground=fg, ridge_pixels=ridge_px, ridge_signals=tuple(signals))


def concat_top_signals(signals, top_n: int = TOP_SIGNALS):
    """Concatenate the samples and paths of the top-N longest ridge signals."""
    chosen = list(signals)[:top_n]
    if not chosen:
        raise EmptyRidgeSet("no ridge signals to concatenate")
    samples = np.concatenate([s.samples for s in chosen])
    path = np.concatenate([s.path for s in chosen], axis=0)
    return samples, path


def sample_along_path(plane: np.ndarray, path_xy: np.ndarray) -> np.ndarray:
    """Values of a 2-D plane at integer (x, y) path coordinates."""
    p = np.asarray(path_xy, dtype=np.int64)
    return np.asarray(plane, dtype=np.float64)[p[:, 1], p[:, 0]]


def bilinear_sample(plane: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a 2-D plane at fractional (y, x) positions."""
    g = np.asarray(plane, dtype=np.float64)
    h, w = g.shape
    ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, h - 1.0)
    xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, w - 1.0)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 2)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 2)
    fy = ys - y0
    fx = xs - x0
    a = g[y0, x0]
    b = g[y0, x0 + 1]
    c = g[y0 + 1, x0]
    d = g[y0 + 1, x0 + 1]
    top = a + fx * (b - a)
    bot = c + fx * (d - c)
    return top + fy * (bot - top)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom <= 0.0:
        return -2.0  # degenerate window; worse than any real correlation
    return float(a @ b) / denom


def realign_signals(s1, s2, max_lag: int = MAX_LAG) -> Realignment:
    """Align two signals by maximizing normalized cross-correlation over lags.

    A positive lag means ``s2`` is ``s1`` delayed by that many samples.  The
    returned signals are truncated to the overlapping support at the best lag
    and have equal length.  Constant inputs return lag 0 with the degenerate
    flag set.  Ties prefer the smallest absolute lag.
    """
    a1 = np.asarray(getattr(s1, "samples", s1), dtype=np.float64)
    a2 = np.asarray(getattr(s2, "samples", s2), dtype=np.float64)
    n1, n2 = len(a1), len(a2)
    if n1 < 2 or n2 < 2:
        raise ValueError("signals must have at least 2 samples")
    if np.ptp(a1) == 0.0 or np.ptp(a2) == 0.0:
        m = min(n1, n2)
        return Realignment(a1[:m], a2[:m], lag=0, degenerate=True, start1=0, start2=0)
    limit = min(int(max_lag), n1 - 1, n2 - 1)
    best = (-np.inf, 0)
    lags = sorted(range(-limit, limit + 1), key=lambda k: (abs(k), k))
    for k in lags:
        if k >= 0:
            m = min(n1, n2 - k)
            if m < 2:
                continue
            score = _pearson(a1[:m], a2[k : k + m])
        else:
            m = min(n1 + k, n2)
            if m < 2:
                continue
            score = _pearson(a1[-k : -k + m], a2[:m])
        if score > best[0]:
            best = (score, k)
    k = best[1]
    if k >= 0:
        m = min(n1, n2 - k)
        start1, start2 = 0, k
    else:
        m = min(n1 + k, n2)
        start1, start2 = -k, 0
    return Realignment(
        aligned1=a1[start1 : start1 + m],
        aligned2=a2[start2 : start2 + m],
        lag=k,
        degenerate=False,
        start1=start1,
        start2=start2,
    )
