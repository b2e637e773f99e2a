"""Matrix-free sensing operator over the 4-D target grid.

The implied dictionary has one column per grid cell: the vectorized echo
of a unit-reflectivity target at that cell, with matrix entry (m, n)
stacked to flat position m + nr * n. The full matrix (nr*na rows by
nx*ny*nvx*nvy columns, ~1.3 TB at production scale) is never formed;
only its restriction to M randomly selected sample rows is evaluated,
either on the fly in column blocks or into an optional M-by-N cache.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .echo import unit_echo_samples
from .model import (
    ExtendedGrid,
    GridCoord,
    RadarParams,
    check_simulation_geometry,
    grid_to_physical,
    physical_columns,
)
from .recovery import SparseProfile

__all__ = [
    "MeasurementSelection",
    "SensingOperator",
    "select_measurements",
    "sample_without_replacement",
]

# Columns per evaluation block, sized so a block stays ~tens of MB.
_BLOCK_ELEMENTS = 2_000_000

# Refuse caches beyond ~6.4 GB; fall back to cache_policy="none" instead.
_MAX_CACHE_ELEMENTS = 400_000_000


def _rand_below(rng: np.random.Generator, n: int) -> int:
    # Unbiased bounded draw by rejection on raw 64-bit Philox words, so the
    # selection depends only on the generator's bit stream.
    span = 1 << 64
    limit = span - span % n
    while True:
        word = int(rng.integers(0, span, dtype=np.uint64))
        if word < limit:
            return word % n


def sample_without_replacement(m: int, total: int, seed: int) -> np.ndarray:
    """Uniform m-subset of [0, total), sorted ascending, Philox-seeded.

    Partial Fisher-Yates over a virtual identity array; deterministic for
    a fixed seed.
    """
    if not 1 <= m <= total:
        raise ValueError(f"need 1 <= m <= total, got m={m}, total={total}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    picked = np.empty(m, dtype=np.int64)
    displaced: dict[int, int] = {}
    for i in range(m):
        j = i + _rand_below(rng, total - i)
        picked[i] = displaced.get(j, j)
        displaced[j] = displaced.get(i, i)
    picked.sort()
    return picked


@dataclass(frozen=True)
class MeasurementSelection:
    """Strictly increasing flat sample indices plus the seed that made them."""

    indices: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        indices = np.array(self.indices, dtype=np.int64)  # private copy
        if indices.ndim != 1 or indices.size < 1:
            raise ValueError("selection must be a non-empty 1-D index array")
        if indices[0] < 0 or np.any(np.diff(indices) <= 0):
            raise ValueError("selection indices must be strictly increasing and non-negative")
        indices.flags.writeable = False
        object.__setattr__(self, "indices", indices)

    @property
    def m(self) -> int:
        return int(self.indices.size)


def select_measurements(m: int, total: int, seed: int) -> MeasurementSelection:
    """Draw m of the total echo samples uniformly without replacement."""
    return MeasurementSelection(sample_without_replacement(m, total, seed), seed)


class SensingOperator:
    """Restriction of the echo dictionary to M selected sample rows.

    Parameters
    ----------
    params, grid
        Radar constants and the 4-D search grid; validated as a pair.
    selection
        Flat sample indices (into the column-stacked echo vector).
    cache_policy
        "none" evaluates atoms on the fly in column blocks;
        "full-row-cache" materializes the M-by-N restricted matrix once
        and reuses it across iterations (~16 * M * N bytes).
    """

    def __init__(
        self,
        params: RadarParams,
        grid: ExtendedGrid,
        selection: MeasurementSelection,
        cache_policy: str = "none",
    ) -> None:
        if cache_policy not in ("none", "full-row-cache"):
            raise ValueError(f"unknown cache policy {cache_policy!r}")
        check_simulation_geometry(params, grid)
        total = params.nr * params.na
        if selection.indices[-1] >= total:
            raise ValueError("selection index beyond nr * na")
        if cache_policy == "full-row-cache":
            if selection.m * grid.size > _MAX_CACHE_ELEMENTS:
                raise ValueError(
                    "full-row-cache would exceed the memory guard; use cache_policy='none'"
                )
        self.params = params
        self.grid = grid
        self.selection = selection
        self.cache_policy = cache_policy
        m_idx = selection.indices % params.nr
        n_idx = selection.indices // params.nr
        # Column vectors so a (G,) batch of grid columns broadcasts to (M, G).
        self._tau = (params.tau0 + m_idx / params.fs)[:, None]
        self._eta = ((n_idx - params.na / 2) / params.fa)[:, None]
        self._cache: np.ndarray | None = None
        self._norms: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.selection.m

    @property
    def n_cols(self) -> int:
        return self.grid.size

    def _evaluate_block(self, flat: np.ndarray) -> np.ndarray:
        x, y, vx, vy = physical_columns(self.grid, flat)
        return unit_echo_samples(self.params, x, y, vx, vy, self._tau, self._eta)

    def _block_size(self) -> int:
        return max(1, _BLOCK_ELEMENTS // self.n_rows)

    def _ensure_cache(self) -> np.ndarray | None:
        if self.cache_policy != "full-row-cache":
            return None
        if self._cache is None:
            cache = np.empty((self.n_rows, self.n_cols), dtype=np.complex128)
            step = self._block_size()
            for start in range(0, self.n_cols, step):
                stop = min(start + step, self.n_cols)
                cache[:, start:stop] = self._evaluate_block(np.arange(start, stop))
            self._cache = cache
        return self._cache

    def columns(self, flat: np.ndarray) -> np.ndarray:
        """Explicit M-by-K restricted columns for the given flat indices."""
        flat = np.asarray(flat, dtype=np.int64)
        cache = self._ensure_cache()
        if cache is not None:
            return cache[:, flat]
        return self._evaluate_block(flat)

    def atom_sample(self, coord, m: int, n: int) -> complex:
        """Single dictionary entry: atom of ``coord`` at sample (m, n)."""
        if not isinstance(coord, GridCoord):
            raise TypeError("coord must be a GridCoord")
        if not (0 <= m < self.params.nr and 0 <= n < self.params.na):
            raise ValueError("sample index outside the echo matrix")
        x, y, vx, vy = grid_to_physical(coord, self.grid)
        tau = self.params.tau0 + m / self.params.fs
        eta = (n - self.params.na / 2) / self.params.fa
        value = unit_echo_samples(self.params, x, y, vx, vy, tau, eta)
        return complex(value)

    def forward(self, profile) -> np.ndarray:
        """Apply the restricted dictionary: y[i] = sum_g a[g] * atom_g[i].

        Accepts a :class:`SparseProfile` (evaluates only its columns) or a
        dense length-N coefficient vector.
        """
        if isinstance(profile, SparseProfile):
            if profile.grid != self.grid:
                raise ValueError("profile grid does not match the operator grid")
            flat = profile.flat_indices()
            if flat.size == 0:
                return np.zeros(self.n_rows, dtype=np.complex128)
            return self.columns(flat) @ profile.coefficients()
        dense = np.asarray(profile, dtype=np.complex128)
        if dense.shape != (self.n_cols,):
            raise ValueError(f"dense profile must have shape ({self.n_cols},)")
        cache = self._ensure_cache()
        if cache is not None:
            return cache @ dense
        out = np.zeros(self.n_rows, dtype=np.complex128)
        step = self._block_size()
        for start in range(0, self.n_cols, step):
            stop = min(start + step, self.n_cols)
            out += self._evaluate_block(np.arange(start, stop)) @ dense[start:stop]
        return out

    def adjoint(self, residual: np.ndarray) -> np.ndarray:
        """Conjugate-transpose product: out[g] = sum_i conj(atom_g[i]) r[i]."""
        residual = np.asarray(residual, dtype=np.complex128)
        if residual.shape != (self.n_rows,):
            raise ValueError(f"residual must have shape ({self.n_rows},)")
        r_conj = residual.conj()
        cache = self._ensure_cache()
        if cache is not None:
            return np.conj(r_conj @ cache)
        out = np.empty(self.n_cols, dtype=np.complex128)
        step = self._block_size()
        for start in range(0, self.n_cols, step):
            stop = min(start + step, self.n_cols)
            out[start:stop] = np.conj(r_conj @ self._evaluate_block(np.arange(start, stop)))
        return out

    def save_cache(self, path) -> None:
        """Persist the restricted matrix so later runs skip regeneration."""
        from . import storage

        if self.cache_policy != "full-row-cache":
            raise ValueError("cache persistence requires cache_policy='full-row-cache'")
        storage.write_complex_matrix(path, self._ensure_cache(), storage.CACHE_MAGIC)

    def load_cache(self, path) -> None:
        """Adopt a previously saved restricted matrix (shape-checked)."""
        from . import storage

        if self.cache_policy != "full-row-cache":
            raise ValueError("cache persistence requires cache_policy='full-row-cache'")
        cache = storage.read_complex_matrix(path, storage.CACHE_MAGIC)
        if cache.shape != (self.n_rows, self.n_cols):
            raise ValueError(
                f"cached matrix is {cache.shape}, operator needs "
                f"({self.n_rows}, {self.n_cols})"
            )
        self._cache = cache
        self._norms = None

    def column_norms(self) -> np.ndarray:
        """l2 norm of every restricted column; zero marks unseen atoms."""
        if self._norms is None:
            cache = self._ensure_cache()
            if cache is not None:
                norms_sq = np.einsum("ij,ij->j", cache.real, cache.real)
                norms_sq += np.einsum("ij,ij->j", cache.imag, cache.imag)
            else:
                norms_sq = np.empty(self.n_cols)
                step = self._block_size()
                for start in range(0, self.n_cols, step):
                    stop = min(start + step, self.n_cols)
                    block = self._evaluate_block(np.arange(start, stop))
                    norms_sq[start:stop] = np.einsum(
                        "ij,ij->j", block.real, block.real
                    ) + np.einsum("ij,ij->j", block.imag, block.imag)
            self._norms = np.sqrt(norms_sq)
        return self._norms
