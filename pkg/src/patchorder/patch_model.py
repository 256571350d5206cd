"""Overlapping patch extraction, smooth/edge classification, and class partitioning.

All (H - p + 1) * (W - p + 1) overlapping p x p patches are represented as
column-stacked vectors in R^n (n = p^2), enumerated in raster order of their
top-left corner.  The j-th "sub-image" of an image is then simply column j of
the vectors matrix: the 1D signal of within-patch pixel j across all patches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SMOOTH = 0
EDGE = 1


@dataclass(frozen=True)
class PatchGrid:
    """All overlapping patches of one image.

    vectors[i] holds patch i's pixels column-stacked: entry j is the image
    pixel at (row + j % p, col + j // p) for top-left (row, col).
    """

    patch_side: int
    image_shape: tuple[int, int]
    vectors: np.ndarray   # (num_patches, n) float64
    locations: np.ndarray  # (num_patches, 2) int32 top-left (row, col)

    @property
    def n(self) -> int:
        return self.patch_side * self.patch_side

    @property
    def num_patches(self) -> int:
        return self.vectors.shape[0]

    @property
    def grid_shape(self) -> tuple[int, int]:
        h, w = self.image_shape
        return (h - self.patch_side + 1, w - self.patch_side + 1)


@dataclass(frozen=True)
class Partition:
    """Disjoint subsets of the patch index set: W smooth subsets then X edge ones."""

    labels: np.ndarray          # (num_patches,) uint8, SMOOTH or EDGE
    threshold_used: float       # the std threshold behind labels (tau * sigma)
    subsets: list[np.ndarray]   # sorted int64 index arrays, smooth first
    W: int
    X: int
    empty_classes: tuple[str, ...] = field(default=())

    @property
    def num_subsets(self) -> int:
        return self.W + self.X

    def validate(self) -> None:
        if len(self.subsets) != self.W + self.X:
            raise ValueError("subset count does not match W + X")
        total = np.concatenate(self.subsets) if self.subsets else np.empty(0, np.int64)
        if total.size != self.labels.size or not np.array_equal(
            np.sort(total), np.arange(self.labels.size)
        ):
            raise ValueError("subsets are not a disjoint cover of the patch index set")
        for i, sub in enumerate(self.subsets):
            if sub.size == 0:
                raise ValueError(f"subset {i} is empty")
            want = SMOOTH if i < self.W else EDGE
            if not np.all(self.labels[sub] == want):
                raise ValueError(f"subset {i} mixes classes")


def resolve_patch_side(patch_side: int | None, sigma: float) -> int:
    """Default patch side by noise level: 5 up to sigma 30, 8 above."""
    if patch_side is not None:
        return patch_side
    return 5 if sigma <= 30 else 8


def extract_patches(img: np.ndarray, patch_side: int) -> PatchGrid:
    """Extract every overlapping patch_side x patch_side patch of *img*."""
    img = np.asarray(img, dtype=np.float64)
    if patch_side < 2:
        raise ValueError(f"patch_side must be >= 2, got {patch_side}")
    h, w = img.shape
    if h < patch_side or w < patch_side:
        raise ValueError(
            f"image {h}x{w} smaller than patch side {patch_side}"
        )
    wins = sliding_window_view(img, (patch_side, patch_side))
    gh, gw = wins.shape[:2]
    num = gh * gw
    # column-stacked: per patch, flatten the window transposed
    vectors = np.ascontiguousarray(
        wins.reshape(num, patch_side, patch_side).transpose(0, 2, 1).reshape(num, -1)
    )
    rows, cols = np.divmod(np.arange(num, dtype=np.int64), gw)
    locations = np.stack([rows, cols], axis=1).astype(np.int32)
    return PatchGrid(patch_side, (h, w), vectors, locations)


def classify_patches(grid: PatchGrid, sigma: float, tau: float) -> np.ndarray:
    """Label each patch SMOOTH iff its sample std is <= tau * sigma, else EDGE."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    stds = grid.vectors.std(axis=1, ddof=1)
    return np.where(stds <= tau * sigma, SMOOTH, EDGE).astype(np.uint8)


def partition_classes(
    labels: np.ndarray,
    cap: float,
    seed: int,
    threshold_used: float = math.nan,
) -> Partition:
    """Split each class into ceil(size / cap) balanced subsets, at random per seed.

    Membership is assigned by a uniform random permutation of each class;
    subset sizes within a class differ by at most one.  Each subset is stored
    in ascending index order.  cap may be math.inf, which reproduces the
    original method's one-subset-per-class structure.
    """
    if not (cap >= 1):
        raise ValueError(f"cap must be >= 1, got {cap}")
    labels = np.asarray(labels, dtype=np.uint8)
    rng = np.random.default_rng(seed)
    subsets: list[np.ndarray] = []
    counts = []
    empty = []
    for cls_value, cls_name in ((SMOOTH, "smooth"), (EDGE, "edge")):
        members = np.nonzero(labels == cls_value)[0].astype(np.int64)
        if members.size == 0:
            counts.append(0)
            empty.append(cls_name)
            continue
        k = 1 if math.isinf(cap) else int(math.ceil(members.size / cap))
        shuffled = rng.permutation(members)
        subsets.extend(np.sort(part) for part in np.array_split(shuffled, k))
        counts.append(k)
    part = Partition(
        labels=labels,
        threshold_used=threshold_used,
        subsets=subsets,
        W=counts[0],
        X=counts[1],
        empty_classes=tuple(empty),
    )
    part.validate()
    return part


def gather_signal(grid: PatchGrid, subset: np.ndarray, j: int) -> np.ndarray:
    """The 1D signal of within-patch pixel *j* over the patches in *subset*."""
    if not 0 <= j < grid.n:
        raise IndexError(f"within-patch index {j} out of range [0, {grid.n})")
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size and (subset.min() < 0 or subset.max() >= grid.num_patches):
        raise IndexError("subset contains out-of-range patch indices")
    return grid.vectors[subset, j]


def compute_overlap_weights(image_shape: tuple[int, int], patch_side: int) -> np.ndarray:
    """Per-pixel count of overlapping patches covering that pixel (diagonal of D)."""
    h, w = image_shape
    if h < patch_side or w < patch_side or patch_side < 1:
        raise ValueError(f"invalid dims {h}x{w} for patch side {patch_side}")

    def axis_counts(length: int) -> np.ndarray:
        pos = np.arange(length)
        first = np.maximum(0, pos - patch_side + 1)
        last = np.minimum(pos, length - patch_side)
        return (last - first + 1).astype(np.float64)

    return np.outer(axis_counts(h), axis_counts(w))


def scatter_add(acc: np.ndarray, values: np.ndarray, grid: PatchGrid, j: int) -> None:
    """Accumulate the full j-th sub-image signal back onto image positions.

    Exploits raster patch order: the scatter target of within-patch pixel j is
    the grid-shaped block of the image shifted by j's (row, col) offset.
    """
    gh, gw = grid.grid_shape
    p = grid.patch_side
    dr, dc = j % p, j // p
    acc[dr : dr + gh, dc : dc + gw] += values.reshape(gh, gw)


def reconstruct_from_patches(grid: PatchGrid) -> np.ndarray:
    """Scatter all patch pixels back and normalize by overlap counts.

    Identity up to float rounding: returns the image the grid was built from.
    """
    acc = np.zeros(grid.image_shape, dtype=np.float64)
    for j in range(grid.n):
        scatter_add(acc, grid.vectors[:, j], grid, j)
    return acc / compute_overlap_weights(grid.image_shape, grid.patch_side)
