"""1D smoothing of ordered signals and ridge least-squares filter learning.

Ordered patch signals are smoothed with 25-tap filters applied as same-length
convolution with symmetric (mirror) boundary extension.  Filters live in a
FilterBank: two filters shared per class (default), or one per partition
subset.  Learning fits each filter slot by ridge least squares mapping the
ordered noisy signals onto the correspondingly ordered clean signals,
accumulating 25x25 normal equations across every sub-image, ordering, and
block assigned to the slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import image_core, patch_model
from .ordering import build_ordering_set
from .patch_model import Partition

FILTER_TAPS = 25
PER_CLASS = "per-class"
PER_SUBSET = "per-subset"


@dataclass(frozen=True)
class FilterBank:
    """Learned 25-tap filter vectors.

    per-class mode holds 2 filters (smooth, edge); per-subset mode holds one
    per subset of the partition it was trained against, smooth blocks first.
    """

    mode: str
    taps: np.ndarray  # (count, FILTER_TAPS) float64
    trained_sigma: float

    def __post_init__(self):
        if self.mode not in (PER_CLASS, PER_SUBSET):
            raise ValueError(f"unknown filter mode {self.mode!r}")
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[1] != FILTER_TAPS:
            raise ValueError(f"taps must be (count, {FILTER_TAPS}), got {taps.shape}")
        if self.mode == PER_CLASS and taps.shape[0] != 2:
            raise ValueError("per-class bank must hold exactly 2 filters")
        object.__setattr__(self, "taps", taps)

    @property
    def count(self) -> int:
        return self.taps.shape[0]


def delta_bank(count: int = 2, mode: str = PER_CLASS, sigma: float = 0.0) -> FilterBank:
    """Identity bank: centered unit impulses (useful for structural tests)."""
    taps = np.zeros((count, FILTER_TAPS))
    taps[:, FILTER_TAPS // 2] = 1.0
    return FilterBank(mode=mode, taps=taps, trained_sigma=sigma)


def convolve_same(signal: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Same-length convolution with symmetric (mirror) boundary extension."""
    taps = np.asarray(taps, dtype=np.float64)
    if taps.shape != (FILTER_TAPS,):
        raise ValueError(f"taps must have length {FILTER_TAPS}, got {taps.shape}")
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.size < 1:
        raise ValueError("signal must be a non-empty 1D array")
    half = FILTER_TAPS // 2
    padded = np.pad(signal, half, mode="symmetric")
    return np.convolve(padded, taps, mode="valid")


def _slot_of_block(mode: str, block: int, W: int) -> int:
    if mode == PER_CLASS:
        return 0 if block < W else 1
    return block


def bank_slots(bank: FilterBank, partition: Partition) -> list[int]:
    """Filter slot index for each partition block; validates arity."""
    if bank.mode == PER_SUBSET and bank.count != partition.num_subsets:
        raise ValueError(
            f"per-subset bank holds {bank.count} filters but partition has "
            f"{partition.num_subsets} subsets"
        )
    return [
        _slot_of_block(bank.mode, b, partition.W) for b in range(partition.num_subsets)
    ]


def apply_filter_block(
    blocks: list[np.ndarray], bank: FilterBank, partition: Partition
) -> list[np.ndarray]:
    """Convolve each ordered block signal with its assigned filter.

    Blocks never mix: block i is filtered independently with the class filter
    (per-class mode) or filter i (per-subset mode).
    """
    slots = bank_slots(bank, partition)
    if len(blocks) != partition.num_subsets:
        raise ValueError(
            f"got {len(blocks)} blocks for a {partition.num_subsets}-subset partition"
        )
    for block, sub in zip(blocks, partition.subsets):
        if len(block) != len(sub):
            raise ValueError("block length does not match its subset size")
    return [convolve_same(block, bank.taps[s]) for block, s in zip(blocks, slots)]


def _regression_matrix(ordered_noisy: np.ndarray) -> np.ndarray:
    """Rows A[i] such that A @ taps == convolve_same(ordered_noisy, taps)."""
    half = FILTER_TAPS // 2
    padded = np.pad(ordered_noisy, half, mode="symmetric")
    # convolution flips the kernel: column m multiplies padded[i + 24 - m]
    return sliding_window_view(padded, FILTER_TAPS)[:, ::-1]


def learn_filters(
    training: list[tuple[np.ndarray, float, int]],
    config,
    ridge_lambda: float = 1e-4,
) -> FilterBank:
    """Learn the FilterBank from (clean image, sigma, noise seed) pairs.

    Runs the forward pipeline (noise, classify, partition, order) on each
    training image, then solves, per filter slot, the ridge least-squares
    problem mapping ordered noisy signals to ordered clean signals.  Normal
    equations are accumulated in a fixed (image, k, sub-image, block) order.

    config supplies patch_side, tau, K, cap, B, window, filter_mode, seed,
    and workers (a DenoiseConfig works).
    """
    if not training:
        raise ValueError("need at least one training image")
    if ridge_lambda < 0:
        raise ValueError(f"ridge parameter must be >= 0, got {ridge_lambda}")
    sigmas = {float(s) for _, s, _ in training}
    if len(sigmas) != 1:
        raise ValueError(f"training pairs mix sigmas: {sorted(sigmas)}")
    sigma = sigmas.pop()

    mode = config.filter_mode
    slot_count = 2 if mode == PER_CLASS else None
    grams = None
    rhs = None

    def ensure_slots(count: int):
        nonlocal grams, rhs, slot_count
        if grams is None:
            slot_count = count
            grams = np.zeros((count, FILTER_TAPS, FILTER_TAPS))
            rhs = np.zeros((count, FILTER_TAPS))
        elif count != slot_count:
            raise ValueError(
                "per-subset training requires the same subset count on every "
                f"training image (got {count} after {slot_count})"
            )

    if mode == PER_CLASS:
        ensure_slots(2)

    for image_index, (clean, _, noise_seed) in enumerate(training):
        clean = image_core.as_image(clean)
        noisy = image_core.add_gaussian_noise(clean, sigma, noise_seed)
        patch_side = patch_model.resolve_patch_side(config.patch_side, sigma)
        grid = patch_model.extract_patches(noisy, patch_side)
        clean_grid = patch_model.extract_patches(clean, patch_side)
        labels = patch_model.classify_patches(grid, sigma, config.tau)
        partition = patch_model.partition_classes(
            labels, config.cap, _train_seed(config.seed, image_index),
            threshold_used=config.tau * sigma,
        )
        if mode == PER_SUBSET:
            ensure_slots(partition.num_subsets)
        orderings = build_ordering_set(
            grid, partition, config.K, _train_seed(config.seed, image_index),
            branch=config.B, window=config.window, workers=config.workers,
        )
        slots = [
            _slot_of_block(mode, b, partition.W)
            for b in range(partition.num_subsets)
        ]
        for k in range(config.K):
            tours = orderings.per_k[k]
            for j in range(grid.n):
                noisy_col = grid.vectors[:, j]
                clean_col = clean_grid.vectors[:, j]
                for b, (sub, tour) in enumerate(zip(partition.subsets, tours)):
                    ordered_noisy = noisy_col[sub][tour.order]
                    ordered_clean = clean_col[sub][tour.order]
                    A = _regression_matrix(ordered_noisy)
                    s = slots[b]
                    grams[s] += A.T @ A
                    rhs[s] += A.T @ ordered_clean

    taps = np.empty((slot_count, FILTER_TAPS))
    eye = np.eye(FILTER_TAPS)
    for s in range(slot_count):
        try:
            taps[s] = np.linalg.solve(grams[s] + ridge_lambda * eye, rhs[s])
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"normal matrix for filter slot {s} is singular; "
                "use ridge_lambda > 0"
            ) from exc
    return FilterBank(mode=mode, taps=taps, trained_sigma=sigma)


def _train_seed(seed: int, image_index: int) -> int:
    ss = np.random.SeedSequence([int(seed), 0x7261696E, int(image_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def save_filter_bank(bank: FilterBank, path) -> None:
    """Plain-text serialization: 'mode sigma count' header, one line per filter."""
    lines = [f"{bank.mode} {bank.trained_sigma:.17g} {bank.count}"]
    for row in bank.taps:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def load_filter_bank(path) -> FilterBank:
    with open(path, "r", encoding="ascii") as f:
        lines = [line.strip() for line in f if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty filter bank file")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"{path}: malformed header {lines[0]!r}")
    mode, sigma, count = head[0], float(head[1]), int(head[2])
    if len(lines) != 1 + count:
        raise ValueError(f"{path}: expected {count} filter lines, got {len(lines) - 1}")
    taps = np.array([[float(v) for v in line.split()] for line in lines[1:]])
    return FilterBank(mode=mode, taps=taps, trained_sigma=sigma)
