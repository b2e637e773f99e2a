"""Structured-text run configuration.

INI-style sections (radar, grid, scene, recovery, baseline, experiment,
output) with key = value pairs. Every key has a default matching the
stock airborne X-band profile and its 31x31x11x11 search grid, so a
minimal config only states what differs. Unknown sections or keys are
rejected, and every parse error is reported with its section and key.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .experiments import ExperimentSpec, random_scene
from .model import (
    ExtendedGrid,
    GridCoord,
    RadarParams,
    Scene,
    Target,
    check_simulation_geometry,
)
from .recovery import SparseProfile

__all__ = ["ConfigError", "RunConfig", "RecoverySettings", "load_config"]


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


_KNOWN_KEYS = {
    "radar": {
        "platform_speed",
        "carrier_frequency",
        "wavelength",
        "chirp_rate",
        "pulse_width",
        "bandwidth",
        "range_sample_rate",
        "prf",
        "range_samples",
        "azimuth_samples",
        "range_window_start",
        "propagation_speed",
    },
    "grid": {
        "x_origin",
        "y_origin",
        "vx_origin",
        "vy_origin",
        "bin_x",
        "bin_y",
        "bin_vx",
        "bin_vy",
        "nx",
        "ny",
        "nvx",
        "nvy",
    },
    "scene": {"targets", "random_targets", "scene_seed", "snr_db", "noise_seed"},
    "recovery": {
        "sparsity",
        "measurements",
        "selection_seed",
        "residual_threshold",
        "max_iterations",
        "stall_tolerance",
        "cache_policy",
    },
    "baseline": {"velocity_hypotheses"},
    "experiment": {
        "mode",
        "target_counts",
        "measurement_counts",
        "snr_values_db",
        "trials_per_point",
        "base_seed",
        "threads",
    },
    "output": {"directory", "echo_magnitude_csv"},
}


@dataclass(frozen=True)
class RecoverySettings:
    sparsity: int | None
    measurements: int
    selection_seed: int
    residual_threshold: float | None
    max_iterations: int
    stall_tolerance: float
    cache_policy: str


@dataclass(frozen=True)
class RunConfig:
    params: RadarParams
    grid: ExtendedGrid
    targets: tuple[Target, ...]
    random_k: int | None
    scene_seed: int
    snr_db: float | None
    noise_seed: int
    recovery: RecoverySettings
    hypotheses: tuple[tuple[float, float], ...]
    experiment_mode: str | None
    target_counts: tuple[int, ...]
    measurement_counts: tuple[int, ...]
    snr_values_db: tuple[float, ...]
    trials_per_point: int
    base_seed: int
    threads: int
    output_dir: str
    echo_magnitude_csv: bool

    def build_scene(self) -> tuple[Scene, SparseProfile | None]:
        """Materialize the configured scene and, when possible, its
        on-grid truth profile."""
        if self.random_k is not None:
            return random_scene(self.random_k, self.grid, self.scene_seed)
        scene = Scene(self.targets)
        truth = _truth_profile(scene, self.grid)
        return scene, truth

    def scene_sparsity(self) -> int | None:
        if self.recovery.sparsity is not None:
            return self.recovery.sparsity
        if self.random_k is not None:
            return self.random_k if self.random_k > 0 else None
        return len(self.targets) if self.targets else None

    def experiment_spec(self) -> ExperimentSpec:
        if self.experiment_mode is None:
            raise ConfigError("[experiment] mode: required for sweep runs")
        try:
            return ExperimentSpec(
                mode=self.experiment_mode,
                params=self.params,
                grid=self.grid,
                target_counts=self.target_counts,
                measurement_counts=self.measurement_counts,
                snr_values_db=self.snr_values_db,
                trials_per_point=self.trials_per_point,
                base_seed=self.base_seed,
                cache_policy=self.recovery.cache_policy,
                workers=self.threads,
            )
        except ValueError as exc:
            raise ConfigError(f"[experiment]: {exc}") from exc

    def render_effective(self) -> str:
        """The fully resolved configuration, suitable for re-running."""
        p, g, r = self.params, self.grid, self.recovery
        lines = [
            "[radar]",
            f"platform_speed = {p.v!r}",
            f"carrier_frequency = {p.f0!r}",
            f"wavelength = {p.wavelength!r}",
            f"chirp_rate = {p.kr!r}",
            f"pulse_width = {p.tp!r}",
            f"bandwidth = {p.bandwidth!r}",
            f"range_sample_rate = {p.fs!r}",
            f"prf = {p.fa!r}",
            f"range_samples = {p.nr}",
            f"azimuth_samples = {p.na}",
            f"range_window_start = {p.tau0!r}",
            f"propagation_speed = {p.c!r}",
            "",
            "[grid]",
            f"x_origin = {g.x0!r}",
            f"y_origin = {g.y0!r}",
            f"vx_origin = {g.vx0!r}",
            f"vy_origin = {g.vy0!r}",
            f"bin_x = {g.dx!r}",
            f"bin_y = {g.dy!r}",
            f"bin_vx = {g.dvx!r}",
            f"bin_vy = {g.dvy!r}",
            f"nx = {g.nx}",
            f"ny = {g.ny}",
            f"nvx = {g.nvx}",
            f"nvy = {g.nvy}",
            "",
            "[scene]",
        ]
        if self.random_k is not None:
            lines.append(f"random_targets = {self.random_k}")
            lines.append(f"scene_seed = {self.scene_seed}")
        elif self.targets:
            rendered = "; ".join(
                f"{t.x!r},{t.y!r},{t.vx!r},{t.vy!r},"
                f"{t.reflectivity.real!r},{t.reflectivity.imag!r}"
                for t in self.targets
            )
            lines.append(f"targets = {rendered}")
        if self.snr_db is not None:
            lines.append(f"snr_db = {self.snr_db!r}")
            lines.append(f"noise_seed = {self.noise_seed}")
        lines.extend(
            [
                "",
                "[recovery]",
            ]
        )
        sparsity = self.scene_sparsity()
        if sparsity is not None:
            lines.append(f"sparsity = {sparsity}")
        lines.append(f"measurements = {r.measurements}")
        lines.append(f"selection_seed = {r.selection_seed}")
        if r.residual_threshold is not None:
            lines.append(f"residual_threshold = {r.residual_threshold!r}")
        lines.append(f"max_iterations = {r.max_iterations}")
        lines.append(f"stall_tolerance = {r.stall_tolerance!r}")
        lines.append(f"cache_policy = {r.cache_policy}")
        lines.extend(
            [
                "",
                "[baseline]",
                "velocity_hypotheses = "
                + "; ".join(f"{vx!r},{vy!r}" for vx, vy in self.hypotheses),
            ]
        )
        if self.experiment_mode is not None:
            lines.extend(
                [
                    "",
                    "[experiment]",
                    f"mode = {self.experiment_mode}",
                    "target_counts = " + ",".join(str(k) for k in self.target_counts),
                    "measurement_counts = "
                    + ",".join(str(m) for m in self.measurement_counts),
                    "snr_values_db = "
                    + ",".join(repr(s) for s in self.snr_values_db),
                    f"trials_per_point = {self.trials_per_point}",
                    f"base_seed = {self.base_seed}",
                    f"threads = {self.threads}",
                ]
            )
        lines.extend(
            [
                "",
                "[output]",
                f"directory = {self.output_dir}",
                f"echo_magnitude_csv = {str(self.echo_magnitude_csv).lower()}",
                "",
            ]
        )
        return "\n".join(lines)


def _truth_profile(scene: Scene, grid: ExtendedGrid) -> SparseProfile | None:
    """Map explicit targets onto grid cells; None if any target is off-grid."""
    entries = []
    for t in scene.targets:
        coord = []
        for value, origin, step, count in (
            (t.x, grid.x0, grid.dx, grid.nx),
            (t.y, grid.y0, grid.dy, grid.ny),
            (t.vx, grid.vx0, grid.dvx, grid.nvx),
            (t.vy, grid.vy0, grid.dvy, grid.nvy),
        ):
            index = round((value - origin) / step)
            if not 0 <= index < count or abs(origin + step * index - value) > 1e-9:
                return None
            coord.append(index)
        entries.append((GridCoord(*coord), t.reflectivity))
    try:
        return SparseProfile(tuple(entries), grid)
    except ValueError:
        return None


def _fail(section: str, key: str, message: str) -> None:
    raise ConfigError(f"[{section}] {key}: {message}")


def _get(cp, section, key, caster, default, caster_name):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return caster(raw)
    except ValueError:
        _fail(section, key, f"cannot parse {raw!r} as {caster_name}")


def _get_float(cp, section, key, default=None):
    return _get(cp, section, key, float, default, "a number")


def _get_int(cp, section, key, default=None):
    return _get(cp, section, key, lambda raw: int(raw, 0), default, "an integer")


def _get_bool(cp, section, key, default=False):
    raw = _get(cp, section, key, str, None, "a boolean")
    if raw is None:
        return default
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    _fail(section, key, f"cannot parse {raw!r} as a boolean")


def _parse_list(raw: str, caster):
    items = [piece.strip() for piece in raw.replace("\n", ",").split(",")]
    return tuple(caster(piece) for piece in items if piece)


def _parse_targets(raw: str) -> tuple[Target, ...]:
    targets = []
    for entry in raw.replace("\n", ";").split(";"):
        entry = entry.strip()
        if not entry:
            continue
        fields = [float(piece) for piece in entry.split(",")]
        if len(fields) < 4 or len(fields) > 6:
            raise ValueError(f"target {entry!r} needs 4 to 6 fields")
        x, y, vx, vy = fields[:4]
        re = fields[4] if len(fields) > 4 else 1.0
        im = fields[5] if len(fields) > 5 else 0.0
        targets.append(Target(x, y, vx, vy, complex(re, im)))
    return tuple(targets)


def load_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    # '#' only: ';' separates list entries (targets, velocity hypotheses)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"[{section}]: unknown section")
        for key in cp.options(section):
            if key not in _KNOWN_KEYS[section]:
                _fail(section, key, "unknown key")

    grid = ExtendedGrid(
        x0=_get_float(cp, "grid", "x_origin", 30000.0 - 7.5),
        y0=_get_float(cp, "grid", "y_origin", 0.0),
        vx0=_get_float(cp, "grid", "vx_origin", -10.0),
        vy0=_get_float(cp, "grid", "vy_origin", -10.0),
        dx=_get_float(cp, "grid", "bin_x", 0.5),
        dy=_get_float(cp, "grid", "bin_y", 0.5),
        dvx=_get_float(cp, "grid", "bin_vx", 2.0),
        dvy=_get_float(cp, "grid", "bin_vy", 2.0),
        nx=_get_int(cp, "grid", "nx", 31),
        ny=_get_int(cp, "grid", "ny", 31),
        nvx=_get_int(cp, "grid", "nvx", 11),
        nvy=_get_int(cp, "grid", "nvy", 11),
    )

    c = _get_float(cp, "radar", "propagation_speed", 3.0e8)
    tp = _get_float(cp, "radar", "pulse_width", 10e-6)
    bandwidth = _get_float(cp, "radar", "bandwidth", 100e6)
    tau0 = _get_float(cp, "radar", "range_window_start", 2.0 * grid.x0 / c)
    try:
        params = RadarParams(
            v=_get_float(cp, "radar", "platform_speed", 250.0),
            f0=_get_float(cp, "radar", "carrier_frequency", 9.375e9),
            wavelength=_get_float(cp, "radar", "wavelength", 0.032),
            kr=_get_float(cp, "radar", "chirp_rate", bandwidth / tp),
            tp=tp,
            bandwidth=bandwidth,
            fs=_get_float(cp, "radar", "range_sample_rate", 120e6),
            fa=_get_float(cp, "radar", "prf", 300.0),
            nr=_get_int(cp, "radar", "range_samples", 1213),
            na=_get_int(cp, "radar", "azimuth_samples", 595),
            tau0=tau0,
            c=c,
        )
        check_simulation_geometry(params, grid)
    except ValueError as exc:
        raise ConfigError(f"[radar]/[grid]: {exc}") from exc

    targets = ()
    if cp.has_option("scene", "targets"):
        try:
            targets = _parse_targets(cp.get("scene", "targets"))
        except ValueError as exc:
            _fail("scene", "targets", str(exc))
    random_k = _get_int(cp, "scene", "random_targets", None)
    if targets and random_k is not None:
        _fail("scene", "random_targets", "give either explicit targets or a random count")
    snr_db = _get_float(cp, "scene", "snr_db", None)
    if snr_db is not None and snr_db == math.inf:
        snr_db = None

    recovery = RecoverySettings(
        sparsity=_get_int(cp, "recovery", "sparsity", None),
        measurements=_get_int(cp, "recovery", "measurements", 100),
        selection_seed=_get_int(cp, "recovery", "selection_seed", 0),
        residual_threshold=_get_float(cp, "recovery", "residual_threshold", None),
        max_iterations=_get_int(cp, "recovery", "max_iterations", 50),
        stall_tolerance=_get_float(cp, "recovery", "stall_tolerance", 1e-4),
        cache_policy=_get(
            cp, "recovery", "cache_policy", str, "full-row-cache", "a string"
        ).strip(),
    )
    if recovery.cache_policy not in ("none", "full-row-cache"):
        _fail("recovery", "cache_policy", f"unknown policy {recovery.cache_policy!r}")
    if recovery.measurements < 1:
        _fail("recovery", "measurements", "must be at least 1")

    hypotheses = ((0.0, 0.0),)
    if cp.has_option("baseline", "velocity_hypotheses"):
        raw = cp.get("baseline", "velocity_hypotheses")
        try:
            pairs = []
            for entry in raw.replace("\n", ";").split(";"):
                entry = entry.strip()
                if not entry:
                    continue
                vx, vy = (float(piece) for piece in entry.split(","))
                pairs.append((vx, vy))
            hypotheses = tuple(pairs)
        except ValueError as exc:
            _fail("baseline", "velocity_hypotheses", f"cannot parse {raw!r}: {exc}")

    mode = _get(cp, "experiment", "mode", str, None, "a string")
    if mode is not None:
        mode = mode.strip()

    target_counts = ()
    if cp.has_option("experiment", "target_counts"):
        target_counts = _parse_list(cp.get("experiment", "target_counts"), int)
    measurement_counts = ()
    if cp.has_option("experiment", "measurement_counts"):
        measurement_counts = _parse_list(cp.get("experiment", "measurement_counts"), int)
    snr_values = ()
    if cp.has_option("experiment", "snr_values_db"):
        snr_values = _parse_list(cp.get("experiment", "snr_values_db"), float)

    threads = _get_int(cp, "experiment", "threads", 1)
    if threads < 1:
        _fail("experiment", "threads", "must be at least 1")

    return RunConfig(
        params=params,
        grid=grid,
        targets=targets,
        random_k=random_k,
        scene_seed=_get_int(cp, "scene", "scene_seed", 0),
        snr_db=snr_db,
        noise_seed=_get_int(cp, "scene", "noise_seed", 0),
        recovery=recovery,
        hypotheses=hypotheses,
        experiment_mode=mode,
        target_counts=target_counts,
        measurement_counts=measurement_counts,
        snr_values_db=snr_values,
        trials_per_point=_get_int(cp, "experiment", "trials_per_point", 1),
        base_seed=_get_int(cp, "experiment", "base_seed", 0),
        threads=threads,
        output_dir=_get(cp, "output", "directory", str, "out", "a string").strip(),
        echo_magnitude_csv=_get_bool(cp, "output", "echo_magnitude_csv", False),
    )
