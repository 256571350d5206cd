"""Benchmark harness: single runs, the full experiment matrix, and the CLI.

The matrix reproduces the evaluation grid (test images x sigma in {25, 50} x
{original, prop20k, prop10k}), writing one CSV row per repetition plus an
appended summary block with per-scenario PSNR deltas against the original
mode and TSP / total time ratios.

Input images are clean; noise is injected here so that input and output PSNR
are both measured against the known clean image.  Runs are sequential by
default to keep wall-clock timings honest.
"""

from __future__ import annotations

import argparse
import math
import statistics
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import filtering, image_core, synth
from .pipeline import DenoiseConfig, denoise

SCHEMA = "patchorder-bench-1"
SCENARIO_CAPS = {"original": math.inf, "prop20k": 20_000.0, "prop10k": 10_000.0}
QUICK_SIZE = 256
SYNTH_PREFIX = "synth:"

CSV_COLUMNS = [
    "image", "sigma", "scenario", "cap", "rep", "seed", "W", "X", "tours",
    "psnr_in", "psnr_out", "classify_s", "partition_s", "tsp_wall_s",
    "tsp_task_s", "filter_s", "reconstruct_s", "total_s", "timing_comparable",
]


class BenchInputError(RuntimeError):
    """Missing input files; carries the list of absent paths."""

    def __init__(self, missing: list[str]):
        self.missing = missing
        super().__init__("missing benchmark inputs: " + ", ".join(missing))


@dataclass
class ExperimentRecord:
    image: str
    sigma: float
    scenario: str
    cap: float
    rep: int
    seed: int
    W: int
    X: int
    tours: int
    psnr_in: float
    psnr_out: float
    classify_s: float
    partition_s: float
    tsp_wall_s: float
    tsp_task_s: float
    filter_s: float
    reconstruct_s: float
    total_s: float
    timing_comparable: bool = True


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.6f}" if abs(value) < 1e6 else f"{value:.17g}"
    return str(value)


def _center_crop(img: np.ndarray, size: int) -> np.ndarray:
    h, w = img.shape
    if h <= size and w <= size:
        return img
    r0 = max(0, (h - size) // 2)
    c0 = max(0, (w - size) // 2)
    return img[r0 : r0 + min(h, size), c0 : c0 + min(w, size)]


def _run_seeds(base_seed: int, image_name: str, sigma: float, rep: int):
    ss = np.random.SeedSequence(
        [int(base_seed), zlib.crc32(image_name.encode()), int(round(sigma * 1000)), rep]
    )
    noise_seed, pipe_seed = (int(v) for v in ss.generate_state(2, np.uint64))
    return noise_seed, pipe_seed


def load_clean_image(spec: str, quick: bool = False, synth_size: int = 512) -> tuple[str, np.ndarray]:
    """Resolve an image spec: either a PGM path or 'synth:<preset>'."""
    if spec.startswith(SYNTH_PREFIX):
        name = spec[len(SYNTH_PREFIX):]
        img = synth.synthetic_image(name, synth_size)
    else:
        name = Path(spec).stem
        img = image_core.load_pgm(spec)
    if quick:
        img = _center_crop(img, QUICK_SIZE)
    return name, img


def check_inputs(specs: list[str]) -> list[str]:
    """Return the sub-list of specs that do not resolve to an input."""
    missing = []
    for spec in specs:
        if spec.startswith(SYNTH_PREFIX):
            if spec[len(SYNTH_PREFIX):] not in synth.ALL_NAMES:
                missing.append(spec)
        elif not Path(spec).is_file():
            missing.append(spec)
    return missing


def make_config(sigma: float, scenario: str, seed: int, overrides: dict | None = None) -> DenoiseConfig:
    if scenario not in SCENARIO_CAPS:
        raise ValueError(f"unknown scenario {scenario!r}")
    kwargs = dict(sigma=sigma, cap=SCENARIO_CAPS[scenario], seed=seed)
    if overrides:
        kwargs.update(overrides)
    return DenoiseConfig(**kwargs)


def train_bank(
    sigma: float,
    scenario: str,
    train_specs: list[str],
    seed: int,
    quick: bool = False,
    train_K: int = 3,
    ridge_lambda: float = 1e-4,
    overrides: dict | None = None,
) -> filtering.FilterBank:
    """Learn a filter bank for one (sigma, scenario) cell of the matrix.

    Training runs the same forward pipeline as evaluation (same cap), but a
    reduced ordering count train_K keeps learning cost bounded; the learned
    per-class filters are statistically insensitive to K.
    """
    missing = check_inputs(train_specs)
    if missing:
        raise BenchInputError(missing)
    train_seed = int(
        np.random.SeedSequence(
            [int(seed), zlib.crc32(b"train"), int(round(sigma * 1000)),
             zlib.crc32(scenario.encode())]
        ).generate_state(1, np.uint64)[0]
    )
    config = make_config(
        sigma, scenario, train_seed, {**(overrides or {}), "K": train_K}
    )
    pairs = []
    for i, spec in enumerate(train_specs):
        _, img = load_clean_image(spec, quick)
        pairs.append((img, sigma, train_seed + i + 1))
    return filtering.learn_filters(pairs, config, ridge_lambda=ridge_lambda)


def run_record(
    image_name: str,
    clean: np.ndarray,
    sigma: float,
    scenario: str,
    bank: filtering.FilterBank,
    base_seed: int,
    rep: int = 0,
    overrides: dict | None = None,
) -> ExperimentRecord:
    """Noise-inject and denoise one image under one scenario; collect metrics."""
    noise_seed, pipe_seed = _run_seeds(base_seed, image_name, sigma, rep)
    noisy = image_core.add_gaussian_noise(clean, sigma, noise_seed)
    config = make_config(sigma, scenario, pipe_seed, overrides)
    result = denoise(noisy, config, bank, clean=clean)
    t = result.timings
    return ExperimentRecord(
        image=image_name,
        sigma=sigma,
        scenario=scenario,
        cap=config.cap,
        rep=rep,
        seed=base_seed,
        W=result.W,
        X=result.X,
        tours=result.tour_count,
        psnr_in=image_core.psnr(noisy, clean),
        psnr_out=result.psnr_vs_clean,
        classify_s=t.classify_s,
        partition_s=t.partition_s,
        tsp_wall_s=t.tsp_wall_s,
        tsp_task_s=t.tsp_task_s,
        filter_s=t.filter_s,
        reconstruct_s=t.reconstruct_s,
        total_s=t.total_s,
    )


def single_run(
    image_spec: str,
    sigma: float,
    scenario: str,
    seed: int,
    quick: bool = False,
    bank: filtering.FilterBank | None = None,
    train_specs: list[str] | None = None,
    overrides: dict | None = None,
) -> ExperimentRecord:
    """One experiment: train (or reuse) filters, run, print a summary line."""
    missing = check_inputs([image_spec])
    if missing:
        raise BenchInputError(missing)
    if bank is None:
        specs = train_specs or [SYNTH_PREFIX + n for n in synth.TRAIN_NAMES]
        bank = train_bank(sigma, scenario, specs, seed, quick=quick, overrides=overrides)
    name, clean = load_clean_image(image_spec, quick)
    record = run_record(name, clean, sigma, scenario, bank, seed, overrides=overrides)
    print(
        f"{record.image} sigma={record.sigma:g} {record.scenario}: "
        f"PSNR {record.psnr_in:.2f} -> {record.psnr_out:.2f} dB | "
        f"W={record.W} X={record.X} tours={record.tours} | "
        f"tsp {record.tsp_wall_s:.2f}s (task {record.tsp_task_s:.2f}s) "
        f"of {record.total_s:.2f}s total"
    )
    return record


# --- matrix configuration ------------------------------------------------

MATRIX_DEFAULTS = {
    "test_images": ",".join(SYNTH_PREFIX + n for n in synth.TEST_NAMES),
    "train_images": ",".join(SYNTH_PREFIX + n for n in synth.TRAIN_NAMES),
    "sigmas": "25,50",
    "scenarios": "original,prop20k,prop10k",
    "reps": "3",
    "seed": "0",
    "quick": "0",
    "parallel": "0",
    "train_K": "3",
    "ridge_lambda": "1e-4",
}
CONFIG_OVERRIDE_KEYS = ("tau", "K", "B", "window", "filter_mode", "patch_side", "workers")


def parse_config_file(path) -> dict:
    """Parse plain-text key=value lines; '#' starts a comment."""
    values = dict(MATRIX_DEFAULTS)
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def _config_overrides(values: dict) -> dict:
    overrides = {}
    for key in CONFIG_OVERRIDE_KEYS:
        if key not in values:
            continue
        raw = values[key]
        if key in ("filter_mode",):
            overrides[key] = raw
        elif key in ("tau",):
            overrides[key] = float(raw)
        else:
            overrides[key] = int(raw)
    return overrides


def _median_by(records, key):
    return statistics.median(key(r) for r in records)


def summarize(records: list[ExperimentRecord]) -> list[str]:
    """Per-scenario summary vs the original mode, medianed over repetitions."""
    lines = []
    cells = {}
    for r in records:
        cells.setdefault((r.image, r.sigma, r.scenario), []).append(r)
    scenarios = sorted({r.scenario for r in records if r.scenario != "original"})
    for scenario in scenarios:
        dpsnr, tsp_ratios, total_ratios = [], [], []
        for (image, sigma, scen), group in cells.items():
            if scen != scenario:
                continue
            base = cells.get((image, sigma, "original"))
            if not base:
                continue
            dpsnr.append(
                abs(_median_by(group, lambda r: r.psnr_out)
                    - _median_by(base, lambda r: r.psnr_out))
            )
            tsp_ratios.append(
                _median_by(group, lambda r: r.tsp_wall_s)
                / _median_by(base, lambda r: r.tsp_wall_s)
            )
            total_ratios.append(
                _median_by(group, lambda r: r.total_s)
                / _median_by(base, lambda r: r.total_s)
            )
        if dpsnr:
            lines.append(
                f"# summary scenario={scenario} runs={len(dpsnr)} "
                f"mean_abs_dpsnr_db={statistics.mean(dpsnr):.4f} "
                f"tsp_wall_ratio={statistics.mean(tsp_ratios):.4f} "
                f"total_ratio={statistics.mean(total_ratios):.4f}"
            )
    return lines


def write_csv(records: list[ExperimentRecord], path) -> None:
    lines = [f"# schema={SCHEMA}", ",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_fmt(getattr(r, col)) for col in CSV_COLUMNS))
    lines.extend(summarize(records))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> list[ExperimentRecord]:
    """Parse a matrix CSV back into records (summary/comment lines skipped)."""
    txt = Path(path).read_text().splitlines()
    rows = [line for line in txt if line.strip() and not line.startswith("#")]
    if not rows or rows[0].split(",") != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected CSV header")
    types = {f.name: f.type for f in fields(ExperimentRecord)}
    records = []
    for row in rows[1:]:
        parts = row.split(",")
        kwargs = {}
        for col, raw in zip(CSV_COLUMNS, parts):
            t = types[col]
            if t == "bool":
                kwargs[col] = raw == "1"
            elif t == "float":
                kwargs[col] = float(raw)
            elif t == "int":
                kwargs[col] = int(raw)
            else:
                kwargs[col] = raw
        records.append(ExperimentRecord(**kwargs))
    return records


def run_matrix(config_path, out_csv) -> list[ExperimentRecord]:
    """Run the whole experiment matrix described by a config file."""
    values = parse_config_file(config_path)
    test_specs = [s.strip() for s in values["test_images"].split(",") if s.strip()]
    train_specs = [s.strip() for s in values["train_images"].split(",") if s.strip()]
    sigmas = [float(s) for s in values["sigmas"].split(",") if s.strip()]
    scenarios = [s.strip() for s in values["scenarios"].split(",") if s.strip()]
    reps = int(values["reps"])
    seed = int(values["seed"])
    quick = values["quick"] not in ("0", "", "false")
    parallel = values["parallel"] not in ("0", "", "false")
    overrides = _config_overrides(values)

    missing = check_inputs(test_specs) + check_inputs(train_specs)
    if missing:
        raise BenchInputError(missing)

    banks = {}
    for sigma in sigmas:
        for scenario in scenarios:
            t0 = time.perf_counter()
            banks[(sigma, scenario)] = train_bank(
                sigma, scenario, train_specs, seed, quick=quick,
                train_K=int(values["train_K"]),
                ridge_lambda=float(values["ridge_lambda"]),
                overrides=overrides,
            )
            print(
                f"trained filters sigma={sigma:g} {scenario} "
                f"({time.perf_counter() - t0:.1f}s)",
                file=sys.stderr,
            )

    images = [load_clean_image(spec, quick) for spec in test_specs]
    jobs = [
        (name, clean, sigma, scenario, rep)
        for name, clean in images
        for sigma in sigmas
        for scenario in scenarios
        for rep in range(reps)
    ]

    def run_job(job):
        name, clean, sigma, scenario, rep = job
        rec = run_record(
            name, clean, sigma, scenario, banks[(sigma, scenario)],
            seed, rep=rep, overrides=overrides,
        )
        rec.timing_comparable = not parallel
        print(
            f"{name} sigma={sigma:g} {scenario} rep={rep}: "
            f"{rec.psnr_in:.2f} -> {rec.psnr_out:.2f} dB, "
            f"tsp {rec.tsp_wall_s:.2f}s / total {rec.total_s:.2f}s",
            file=sys.stderr,
        )
        return rec

    if parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            records = list(pool.map(run_job, jobs))
    else:
        records = [run_job(job) for job in jobs]

    write_csv(records, out_csv)
    for line in summarize(records):
        print(line)
    return records


# --- CLI -------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="denoise", description="Patch-ordering denoiser benchmark harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="denoise one clean image under one scenario")
    p_run.add_argument("--image", required=True, help="clean PGM path or synth:<name>")
    p_run.add_argument("--sigma", type=float, required=True)
    p_run.add_argument("--scenario", choices=sorted(SCENARIO_CAPS), required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--quick", action="store_true", help="256x256 center crop")
    p_run.add_argument("--filters", help="pre-trained filter bank file")
    p_run.add_argument("--out", help="write the denoised image to this PGM path")

    p_matrix = sub.add_parser("matrix", help="run the full experiment matrix")
    p_matrix.add_argument("--config", required=True, help="key=value config file")
    p_matrix.add_argument("--out", required=True, help="output CSV path")

    p_train = sub.add_parser("train", help="learn a filter bank")
    p_train.add_argument("--sigma", type=float, required=True)
    p_train.add_argument("--images", required=True,
                         help="directory of clean PGM training images")
    p_train.add_argument("--out", required=True, help="output filter bank file")
    p_train.add_argument("--scenario", choices=sorted(SCENARIO_CAPS), default="original")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--quick", action="store_true")
    p_train.add_argument("--train-K", type=int, default=3)

    p_synth = sub.add_parser("synth", help="write the synthetic image suite as PGM")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--size", type=int, default=512)

    args = parser.parse_args(argv)

    if args.command == "run":
        bank = filtering.load_filter_bank(args.filters) if args.filters else None
        record = single_run(
            args.image, args.sigma, args.scenario, args.seed,
            quick=args.quick, bank=bank,
        )
        if args.out:
            _, clean = load_clean_image(args.image, args.quick)
            noise_seed, pipe_seed = _run_seeds(args.seed, record.image, args.sigma, 0)
            noisy = image_core.add_gaussian_noise(clean, args.sigma, noise_seed)
            config = make_config(args.sigma, args.scenario, pipe_seed)
            if bank is None:
                bank = train_bank(
                    args.sigma, args.scenario,
                    [SYNTH_PREFIX + n for n in synth.TRAIN_NAMES],
                    args.seed, quick=args.quick,
                )
            image_core.save_pgm(denoise(noisy, config, bank).output, args.out)
        return 0

    if args.command == "matrix":
        run_matrix(args.config, args.out)
        return 0

    if args.command == "train":
        image_dir = Path(args.images)
        specs = sorted(str(p) for p in image_dir.glob("*.pgm"))
        if not specs:
            raise BenchInputError([f"{image_dir}/*.pgm"])
        bank = train_bank(
            args.sigma, args.scenario, specs, args.seed,
            quick=args.quick, train_K=args.train_K,
        )
        filtering.save_filter_bank(bank, args.out)
        print(f"wrote {bank.mode} bank ({bank.count} filters) to {args.out}")
        return 0

    if args.command == "synth":
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in synth.ALL_NAMES:
            image_core.save_pgm(
                synth.synthetic_image(name, args.size), out_dir / f"{name}.pgm"
            )
        print(f"wrote {len(synth.ALL_NAMES)} images to {out_dir}")
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
