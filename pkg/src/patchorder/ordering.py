"""Approximate TSP tours over patch vectors and composite K-fold orderings.

A Tour is an open greedy nearest-neighbor path through one subset's patches,
treated as points in R^n under plain Euclidean distance, with the candidate
search spatially windowed around the current patch location.  An OrderingSet
bundles the K independent composite permutations used by the pipeline: for
each k, one Tour per partition subset, in subset order.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._tour_kernel import greedy_tour
from .patch_model import Partition, PatchGrid

DEFAULT_BRANCH = 2
DEFAULT_WINDOW = 31


@dataclass(frozen=True)
class Tour:
    """Visiting order over a point set's local indices plus hop-length diagnostic."""

    order: np.ndarray  # (m,) int64 permutation of 0..m-1
    length_sum: float


@dataclass(frozen=True)
class OrderingSet:
    """K composite permutations, each a list of per-subset Tours in block order."""

    K: int
    per_k: list[list[Tour]]
    task_seconds: float = field(default=0.0, compare=False)  # summed tour build time

    def permutation(self, partition: Partition, k: int) -> np.ndarray:
        """Global patch order for composite permutation k (concatenated blocks)."""
        return np.concatenate(
            [sub[tour.order] for sub, tour in zip(partition.subsets, self.per_k[k])]
        )


def _prepare_points(points, locations):
    pts = np.ascontiguousarray(np.asarray(points), dtype=np.float32)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("points must be a non-empty (m, n) array")
    locs = np.asarray(locations, dtype=np.int64)
    if locs.shape != (pts.shape[0], 2):
        raise ValueError(f"locations must have shape ({pts.shape[0]}, 2)")
    if locs.size and locs.min() < 0:
        raise ValueError("locations must be nonnegative")
    return pts, locs


def build_tour(
    points,
    locations,
    seed: int,
    branch: int = DEFAULT_BRANCH,
    window: int = DEFAULT_WINDOW,
    start: int | None = None,
) -> Tour:
    """Build one randomized greedy nearest-neighbor tour.

    Each hop goes to a uniform-random choice among the `branch` nearest
    unvisited points within a (2*window+1)^2 box around the current point's
    location; when the box is exhausted, it jumps to the nearest of a random
    sample of min(100, remaining) unvisited points.  Deterministic per seed.
    """
    pts, locs = _prepare_points(points, locations)
    if branch < 1:
        raise ValueError(f"branch must be >= 1, got {branch}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    m = pts.shape[0]
    if start is None:
        start = -1
    elif not 0 <= start < m:
        raise ValueError(f"start index {start} out of range for {m} points")
    order, length_sum = greedy_tour(
        pts, locs[:, 0].copy(), locs[:, 1].copy(), np.uint64(seed), branch, window, start
    )
    return Tour(order=order, length_sum=float(length_sum))


def _task_seed(seed: int, k: int, subset_index: int) -> np.uint64:
    # stable per-(k, subset) stream, independent of scheduling
    ss = np.random.SeedSequence([int(seed), int(k), int(subset_index)])
    return np.uint64(ss.generate_state(1, np.uint64)[0])


def build_ordering_set(
    grid: PatchGrid,
    partition: Partition,
    K: int,
    seed: int,
    branch: int = DEFAULT_BRANCH,
    window: int = DEFAULT_WINDOW,
    workers: int | None = None,
) -> OrderingSet:
    """Build the K composite permutations: one tour per (k, subset).

    Tours for distinct (k, subset) pairs are independent; they are built on a
    thread pool (the kernel releases the GIL) with per-task RNG streams, so
    results are deterministic regardless of scheduling.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    num_subsets = partition.num_subsets
    subset_data = []
    for sub in partition.subsets:
        pts = np.ascontiguousarray(grid.vectors[sub], dtype=np.float32)
        locs = grid.locations[sub].astype(np.int64)
        subset_data.append((pts, locs[:, 0].copy(), locs[:, 1].copy()))

    task_time = [0.0] * (K * num_subsets)

    def run_task(task: int) -> Tour:
        k, si = divmod(task, num_subsets)
        pts, locr, locc = subset_data[si]
        t0 = time.perf_counter()
        order, length_sum = greedy_tour(
            pts, locr, locc, _task_seed(seed, k, si), branch, window, -1
        )
        task_time[task] = time.perf_counter() - t0
        return Tour(order=order, length_sum=float(length_sum))

    tasks = range(K * num_subsets)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tours = list(pool.map(run_task, tasks))
    else:
        tours = [run_task(t) for t in tasks]

    per_k = [tours[k * num_subsets : (k + 1) * num_subsets] for k in range(K)]
    return OrderingSet(K=K, per_k=per_k, task_seconds=sum(task_time))


def apply_permutation(signal: np.ndarray, tour) -> np.ndarray:
    """Reorder *signal* into tour order: out[t] = signal[order[t]]."""
    order = tour.order if isinstance(tour, Tour) else np.asarray(tour, dtype=np.int64)
    signal = np.asarray(signal)
    if signal.shape[0] != order.shape[0]:
        raise ValueError(
            f"signal length {signal.shape[0]} != tour size {order.shape[0]}"
        )
    return signal[order]


def invert_permutation(signal: np.ndarray, tour) -> np.ndarray:
    """Undo apply_permutation: out[order[t]] = signal[t]."""
    order = tour.order if isinstance(tour, Tour) else np.asarray(tour, dtype=np.int64)
    signal = np.asarray(signal)
    if signal.shape[0] != order.shape[0]:
        raise ValueError(
            f"signal length {signal.shape[0]} != tour size {order.shape[0]}"
        )
    out = np.empty_like(signal)
    out[order] = signal
    return out
