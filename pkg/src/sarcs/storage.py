"""File formats: echo container, profile/diagnostic CSVs, and graymaps.

The binary container is little-endian throughout: a 16-byte header
(8-byte magic, uint32 row count, uint32 column count) followed by the
row-major samples, each stored as a float64 real/imaginary pair. Magic
``SARECHO1`` marks a raw nr-by-na echo; ``SARCACH1`` marks a cached
M-by-N restricted dictionary saved to skip regeneration across sweeps.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .echo import EchoMatrix
from .model import ExtendedGrid, GridCoord, RadarParams, flat_index, grid_to_physical
from .recovery import CosampDiagnostics, SparseProfile

__all__ = [
    "ECHO_MAGIC",
    "CACHE_MAGIC",
    "write_echo",
    "read_echo",
    "write_complex_matrix",
    "read_complex_matrix",
    "write_magnitude_csv",
    "write_profile_csv",
    "read_profile_csv",
    "write_diagnostics_csv",
    "write_psr_csv",
    "write_pgm",
]

ECHO_MAGIC = b"SARECHO1"
CACHE_MAGIC = b"SARCACH1"
_HEADER = struct.Struct("<8sII")


def write_complex_matrix(path, matrix: np.ndarray, magic: bytes = ECHO_MAGIC) -> None:
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ValueError("container holds 2-D complex matrices")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, matrix.shape[0], matrix.shape[1]))
        fh.write(np.ascontiguousarray(matrix).astype("<c16").tobytes())


def read_complex_matrix(path, magic: bytes = ECHO_MAGIC) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        found, rows, cols = _HEADER.unpack(header)
        if found != magic:
            raise ValueError(f"{path}: expected magic {magic!r}, found {found!r}")
        payload = fh.read()
    expected = rows * cols * 16
    if len(payload) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return data.reshape(rows, cols)


def write_echo(path, echo: EchoMatrix) -> None:
    write_complex_matrix(path, echo.samples, ECHO_MAGIC)


def read_echo(path, params: RadarParams) -> EchoMatrix:
    samples = read_complex_matrix(path, ECHO_MAGIC)
    if samples.shape != (params.nr, params.na):
        raise ValueError(
            f"{path}: echo is {samples.shape}, config expects ({params.nr}, {params.na})"
        )
    return EchoMatrix(samples, params)


def write_magnitude_csv(path, samples: np.ndarray) -> None:
    """Debug export: one row per range bin, magnitudes only."""
    np.savetxt(path, np.abs(samples), fmt="%.9e", delimiter=",")


def _format_float(value: float) -> str:
    return repr(float(value))


def write_profile_csv(path, profile: SparseProfile, physical: bool = False) -> None:
    """Profile rows: flat index, grid coords, and (optionally) physical
    position/velocity, plus the complex coefficient split into re/im."""
    header = "flat_index,n1,n2,p,q"
    if physical:
        header += ",x,y,vx,vy"
    header += ",re,im"
    lines = [header]
    order = np.argsort(profile.flat_indices()) if profile.entries else []
    entries = [profile.entries[i] for i in order]
    for coord, value in entries:
        row = [
            str(flat_index(coord, profile.grid)),
            str(coord.n1),
            str(coord.n2),
            str(coord.p),
            str(coord.q),
        ]
        if physical:
            row.extend(_format_float(v) for v in grid_to_physical(coord, profile.grid))
        row.append(_format_float(value.real))
        row.append(_format_float(value.imag))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile_csv(path, grid: ExtendedGrid) -> SparseProfile:
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty profile file")
    columns = lines[0].split(",")
    entries = []
    for line in lines[1:]:
        fields = dict(zip(columns, line.split(",")))
        coord = GridCoord(
            int(fields["n1"]), int(fields["n2"]), int(fields["p"]), int(fields["q"])
        )
        entries.append((coord, complex(float(fields["re"]), float(fields["im"]))))
    return SparseProfile(tuple(entries), grid)


def write_diagnostics_csv(path, diag: CosampDiagnostics) -> None:
    lines = ["iteration,residual_norm,support_size"]
    for i, norm in enumerate(diag.residual_norms, start=1):
        size = len(diag.support_history[i - 1])
        lines.append(f"{i},{_format_float(norm)},{size}")
    lines.append(f"# halt_reason = {diag.halt_reason}")
    lines.append(f"# best_iteration = {diag.best_iteration}")
    lines.append(f"# final_residual_norm = {_format_float(diag.final_residual_norm)}")
    if diag.dropped_columns:
        dropped = ";".join(str(c) for c in diag.dropped_columns)
        lines.append(f"# dropped_columns = {dropped}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_psr_csv(path, points, mode: str, base_seed: int, comments=()) -> None:
    """Sweep output: one row per point, config echoed as comment lines."""
    lines = [f"# {line}" for line in comments]
    lines.append("mode,k,M,snr_db,trials,successes,psr,mean_rel_error,base_seed")
    for pt in points:
        snr = "" if pt.snr_db is None else _format_float(pt.snr_db)
        lines.append(
            ",".join(
                [
                    mode,
                    str(pt.k),
                    str(pt.m),
                    snr,
                    str(pt.trials),
                    str(pt.successes),
                    _format_float(pt.psr),
                    _format_float(pt.mean_rel_error),
                    str(base_seed),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_pgm(path, image) -> None:
    """8-bit binary graymap, max-normalized; row = range bin."""
    pixels = image.pixels
    peak = pixels.max()
    scaled = np.zeros(pixels.shape, dtype=np.uint8)
    if peak > 0:
        scaled = np.round(255.0 * pixels / peak).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes())
