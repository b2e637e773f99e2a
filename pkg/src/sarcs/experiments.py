"""Monte Carlo harness: random scenes, single trials, and PSR sweeps.

A trial draws a random on-grid scene, synthesizes its echo, optionally
adds noise, keeps M randomly selected samples, and runs the sparse
recovery with the true target count. A recovery counts as successful
when the relative profile error is below 0.1. Sweeps aggregate trials
over a grid of (targets, measurements, SNR) points; every random draw is
seeded by a stable hash of (base seed, point, trial), so results are
identical for any worker count.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .echo import add_noise, noise_variance, scene_echo
from .model import ExtendedGrid, RadarParams, Scene, Target, physical_columns, unflatten
from .operator import SensingOperator, sample_without_replacement, select_measurements
from .recovery import RecoveryConfig, SparseProfile, cosamp, relative_error

__all__ = [
    "ExperimentSpec",
    "PsrPoint",
    "TrialResult",
    "derive_seed",
    "random_scene",
    "run_trial",
    "psr_sweep",
]

SUCCESS_THRESHOLD = 0.1

SWEEP_MODES = ("psr_vs_m", "psr_vs_snr")
MODES = ("fig2",) + SWEEP_MODES


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labeled parts (SHA-256 based)."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class ExperimentSpec:
    """Sweep description: which curves to trace and at what trial budget."""

    mode: str
    params: RadarParams
    grid: ExtendedGrid
    target_counts: tuple[int, ...] = ()
    measurement_counts: tuple[int, ...] = ()
    snr_values_db: tuple[float, ...] = ()
    trials_per_point: int = 1
    base_seed: int = 0
    cache_policy: str = "full-row-cache"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown experiment mode {self.mode!r}")
        if self.trials_per_point < 1:
            raise ValueError("need at least one trial per point")
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if self.mode in SWEEP_MODES:
            if not self.target_counts or not self.measurement_counts:
                raise ValueError(f"{self.mode} needs target and measurement counts")
            if self.mode == "psr_vs_snr" and not self.snr_values_db:
                raise ValueError("psr_vs_snr needs a list of SNR values")


@dataclass(frozen=True)
class PsrPoint:
    """Aggregated recovery statistics for one sweep point."""

    k: int
    m: int
    snr_db: float | None
    trials: int
    successes: int
    psr: float
    mean_rel_error: float


@dataclass(frozen=True)
class TrialResult:
    success: bool
    relative_error: float
    iterations: int
    halt_reason: str


def random_scene(k: int, grid: ExtendedGrid, seed: int) -> tuple[Scene, SparseProfile]:
    """Draw k distinct grid cells uniformly; unit reflectivity each."""
    if k < 0 or k > grid.size:
        raise ValueError(f"need 0 <= k <= {grid.size}, got {k}")
    if k == 0:
        return Scene(()), SparseProfile((), grid)
    flat = sample_without_replacement(k, grid.size, seed)
    xs, ys, vxs, vys = physical_columns(grid, flat)
    targets = tuple(
        Target(float(x), float(y), float(vx), float(vy), 1.0 + 0.0j)
        for x, y, vx, vy in zip(xs, ys, vxs, vys)
    )
    entries = tuple((unflatten(int(g), grid), 1.0 + 0.0j) for g in flat)
    return Scene(targets), SparseProfile(entries, grid)


def run_trial(
    scene: Scene,
    truth: SparseProfile,
    params: RadarParams,
    m: int,
    snr_db: float | None,
    selection_seed: int,
    noise_seed: int = 0,
    cache_policy: str = "full-row-cache",
    max_iterations: int = 50,
    stall_tolerance: float = 1e-4,
) -> TrialResult:
    """Simulate, subsample, recover, and score one scene.

    Noiseless trials evaluate the true echo directly at the selected
    samples (the dictionary atoms and the simulator share one kernel, so
    the restricted scene echo and the forward model agree); noisy trials
    synthesize the full echo, add noise at the requested SNR, and then
    subsample. The recovery runs with the true target count and, when the
    noise level is known, an error threshold of sqrt(M * noise variance).
    """
    k = len(truth.entries)
    if k < 1:
        raise ValueError("trial needs at least one target")
    selection = select_measurements(m, params.nr * params.na, selection_seed)
    op = SensingOperator(params, truth.grid, selection, cache_policy)
    threshold = None
    if snr_db is None or snr_db == math.inf:
        y = op.forward(truth)
    else:
        clean = scene_echo(scene, params)
        variance = noise_variance(clean, snr_db)
        noisy = add_noise(clean, snr_db, noise_seed)
        y = noisy.vec()[selection.indices]
        threshold = math.sqrt(m * variance)
    cfg = RecoveryConfig(
        sparsity=k,
        residual_threshold=threshold,
        max_iterations=max_iterations,
        stall_tolerance=stall_tolerance,
    )
    try:
        estimate, diag = cosamp(op, y, cfg)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        return TrialResult(False, float("nan"), 0, f"solver_failure: {exc}")
    rel = relative_error(estimate, truth)
    return TrialResult(rel < SUCCESS_THRESHOLD, rel, diag.iterations, diag.halt_reason)


@dataclass(frozen=True)
class _TrialTask:
    params: RadarParams
    grid: ExtendedGrid
    k: int
    m: int
    snr_db: float | None
    scene_seed: int
    selection_seed: int
    noise_seed: int
    cache_policy: str


def _run_task(task: _TrialTask) -> TrialResult:
    scene, truth = random_scene(task.k, task.grid, task.scene_seed)
    return run_trial(
        scene,
        truth,
        task.params,
        task.m,
        task.snr_db,
        task.selection_seed,
        task.noise_seed,
        task.cache_policy,
    )


def _sweep_points(spec: ExperimentSpec) -> list[tuple[int, int, float | None]]:
    points = []
    for k in spec.target_counts:
        for m in spec.measurement_counts:
            if spec.mode == "psr_vs_m":
                points.append((k, m, None))
            else:
                for snr in spec.snr_values_db:
                    points.append((k, m, float(snr)))
    return points


def psr_sweep(spec: ExperimentSpec) -> list[PsrPoint]:
    """Run every sweep point and aggregate successes into PSR values."""
    if spec.mode not in SWEEP_MODES:
        raise ValueError(
            f"mode {spec.mode!r} is not a sweep; use the simulate/image commands"
        )
    points = _sweep_points(spec)
    tasks = []
    for k, m, snr in points:
        for trial in range(spec.trials_per_point):
            label = (spec.base_seed, spec.mode, k, m, snr, trial)
            tasks.append(
                _TrialTask(
                    params=spec.params,
                    grid=spec.grid,
                    k=k,
                    m=m,
                    snr_db=snr,
                    scene_seed=derive_seed("scene", *label),
                    selection_seed=derive_seed("selection", *label),
                    noise_seed=derive_seed("noise", *label),
                    cache_policy=spec.cache_policy,
                )
            )
    if spec.workers > 1 and len(tasks) > 1:
        with Pool(processes=spec.workers) as pool:
            results = pool.map(_run_task, tasks, chunksize=1)
    else:
        results = [_run_task(task) for task in tasks]

    out = []
    per_point = spec.trials_per_point
    for index, (k, m, snr) in enumerate(points):
        chunk = results[index * per_point : (index + 1) * per_point]
        successes = sum(1 for r in chunk if r.success)
        errors = [r.relative_error for r in chunk if math.isfinite(r.relative_error)]
        mean_err = float(np.mean(errors)) if errors else float("nan")
        out.append(
            PsrPoint(
                k=k,
                m=m,
                snr_db=snr,
                trials=per_point,
                successes=successes,
                psr=successes / per_point,
                mean_rel_error=mean_err,
            )
        )
    return out
