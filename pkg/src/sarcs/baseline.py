"""Matched-filter reference imager.

Classical processing chain used as the comparison point for the sparse
recovery: pulse compression of each azimuth column against the conjugate
chirp replica, and a velocity-hypothesis correlation imager that projects
the full echo onto the unit-reflectivity atom of every spatial cell at
one hypothesized velocity. Resolution and side-lobe floor are therefore
bandwidth/aperture limited, which is exactly what the comparison is
meant to show.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .echo import EchoMatrix, unit_echo_samples
from .model import ExtendedGrid, GridCoord, RadarParams
from .recovery import SparseProfile

__all__ = [
    "IntensityImage",
    "chirp_replica",
    "range_compress",
    "matched_filter_image",
    "profile_to_image",
    "sidelobe_metrics",
]


@dataclass(frozen=True)
class IntensityImage:
    """Non-negative image over the spatial sub-grid (range by azimuth).

    ``velocity_hypothesis`` records the (vx, vy) the imager assumed, or
    None for images aggregated over all velocity cells.
    """

    pixels: np.ndarray
    velocity_hypothesis: tuple[float, float] | None

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=np.float64)
        object.__setattr__(self, "pixels", pixels)
        if pixels.ndim != 2:
            raise ValueError("image must be 2-D (range bins by azimuth bins)")
        if np.any(pixels < 0) or not np.all(np.isfinite(pixels)):
            raise ValueError("image pixels must be finite and non-negative")


def chirp_replica(params: RadarParams) -> np.ndarray:
    """Transmitted chirp sampled at fs: exp(j*pi*Kr*t^2), t in [0, tp)."""
    length = round(params.tp * params.fs)
    t = np.arange(length) / params.fs
    return np.exp(1j * np.pi * params.kr * t * t)


def range_compress(echo: EchoMatrix, method: str = "fft") -> EchoMatrix:
    """Correlate every azimuth column with the conjugate chirp replica.

    Output sample m holds sum_l echo[m + l] * conj(replica[l]), so a
    scatterer whose two-way delay falls on sample m0 compresses to a
    peak of magnitude tp*fs*|reflectivity| at row m0. The fft path and
    the direct path produce the same values; direct is quadratic and
    meant for small cross-checks.
    """
    replica = chirp_replica(echo.params)
    nr = echo.params.nr
    if method == "direct":
        padded = np.vstack(
            [echo.samples, np.zeros((len(replica) - 1, echo.params.na), dtype=np.complex128)]
        )
        out = np.empty_like(echo.samples)
        for m in range(nr):
            out[m] = replica.conj() @ padded[m : m + len(replica)]
        return EchoMatrix(out, echo.params)
    if method != "fft":
        raise ValueError(f"unknown method {method!r}")
    nfft = scipy.fft.next_fast_len(nr + len(replica) - 1)
    spectrum = scipy.fft.fft(echo.samples, n=nfft, axis=0)
    spectrum *= np.conj(scipy.fft.fft(replica, n=nfft))[:, None]
    compressed = scipy.fft.ifft(spectrum, axis=0)[:nr]
    return EchoMatrix(np.ascontiguousarray(compressed), echo.params)


def _hypothesis_on_grid(grid: ExtendedGrid, velocity_hypothesis) -> tuple[float, float]:
    vx, vy = velocity_hypothesis
    for value, axis, name in ((vx, grid.vx_axis(), "vx"), (vy, grid.vy_axis(), "vy")):
        if not np.any(np.isclose(axis, value, rtol=0.0, atol=1e-9)):
            raise ValueError(f"velocity hypothesis {name}={value} is not on the grid")
    return float(vx), float(vy)


def matched_filter_image(
    echo: EchoMatrix, grid: ExtendedGrid, velocity_hypothesis
) -> IntensityImage:
    """Normalized correlation of the echo with every spatial atom.

    pixel[n1, n2] = |<echo, atom(n1, n2, hypothesis)>| / ||atom||, using
    the full sample grid (no row selection). The hypothesis must lie on
    the velocity grid. Runtime is proportional to nr * na * nx * ny.
    """
    vx, vy = _hypothesis_on_grid(grid, velocity_hypothesis)
    params = echo.params
    xs = grid.x_axis()[:, None]
    ys = grid.y_axis()[None, :]
    taus = params.fast_times()[:, None, None]
    etas = params.slow_times()
    acc = np.zeros((grid.nx, grid.ny), dtype=np.complex128)
    norms_sq = np.zeros((grid.nx, grid.ny))
    for n in range(params.na):
        atoms = unit_echo_samples(params, xs, ys, vx, vy, taus, etas[n])
        acc += np.conj(np.tensordot(np.conj(echo.samples[:, n]), atoms, axes=(0, 0)))
        norms_sq += np.einsum("mij,mij->ij", atoms.real, atoms.real)
        norms_sq += np.einsum("mij,mij->ij", atoms.imag, atoms.imag)
    pixels = np.abs(acc)
    seen = norms_sq > 0
    pixels[seen] /= np.sqrt(norms_sq[seen])
    pixels[~seen] = 0.0
    return IntensityImage(pixels, (vx, vy))


def profile_to_image(profile: SparseProfile) -> IntensityImage:
    """Collapse a 4-D profile onto the spatial grid by summing magnitudes."""
    pixels = np.zeros((profile.grid.nx, profile.grid.ny))
    for coord, value in profile.entries:
        pixels[coord.n1, coord.n2] += abs(value)
    return IntensityImage(pixels, None)


def sidelobe_metrics(image: IntensityImage, true_coords) -> tuple[float, int]:
    """Peak sidelobe ratio (dB) and -3 dB mainlobe width (range bins).

    The sidelobe level is the largest pixel outside the union of the
    one-bin neighborhoods of the true coordinates, relative to the image
    peak; an image with no energy outside those neighborhoods reports
    -inf. Width counts the contiguous run of range bins within 3 dB of
    the strongest pixel, along its azimuth column.
    """
    coords = list(true_coords)
    if not coords:
        raise ValueError("need at least one true coordinate")
    pixels = image.pixels
    peak = pixels.max()
    if peak <= 0:
        raise ValueError("cannot measure sidelobes of an empty image")

    protect = np.zeros(pixels.shape, dtype=bool)
    for coord in coords:
        n1, n2 = (coord.n1, coord.n2) if isinstance(coord, GridCoord) else coord
        lo1, hi1 = max(n1 - 1, 0), min(n1 + 2, pixels.shape[0])
        lo2, hi2 = max(n2 - 1, 0), min(n2 + 2, pixels.shape[1])
        protect[lo1:hi1, lo2:hi2] = True
    outside = pixels[~protect]
    sidelobe = outside.max() if outside.size else 0.0
    pslr_db = -np.inf if sidelobe == 0.0 else 20.0 * np.log10(sidelobe / peak)

    i, j = np.unravel_index(np.argmax(pixels), pixels.shape)
    threshold = peak * 10.0 ** (-3.0 / 20.0)
    column = pixels[:, j]
    width = 1
    step = i - 1
    while step >= 0 and column[step] >= threshold:
        width += 1
        step -= 1
    step = i + 1
    while step < column.size and column[step] >= threshold:
        width += 1
        step += 1
    return float(pslr_db), width
