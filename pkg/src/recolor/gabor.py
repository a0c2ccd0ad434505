"""Discrete short-time Fourier analysis on a tight window lattice.

For a length-N window g, hop a | N and M | N frequency bins, the analysis
coefficients of a signal f are

    c(k, m) = sum_t f(t) conj(g(t - k a mod N)) exp(-2 pi i m t / M)

and synthesis is the adjoint up to the lattice normalization a / M,

    f~(t) = (a / M) sum_{k,m} c(k, m) exp(2 pi i m t / M) g(t - k a mod N).

After canonical tight normalization of the window (pointwise division by the
square root of the frame diagonal, then unit-norm scaling) the pair is an
exact left inverse: adjoint(stft(f)) == f, and stft(adjoint(.)) is the
orthogonal projection onto the range of the analysis map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_TIGHT_TOL = 1e-10
_NORM_TOL = 1e-12


def _shift_index(n: int, hop: int, offset: int = 0) -> np.ndarray:
    """Index matrix (K, n): entry [k, t] = (t + offset - k*hop) mod n."""
    k = np.arange(n // hop)[:, None]
    t = np.arange(n)[None, :]
    return (t + offset - hop * k) % n


def _frame_bands(window: np.ndarray, hop: int, bins: int) -> np.ndarray:
    """Walnut bands G_j(t) = sum_k g(t-ka) conj(g(t+jM-ka)), shape (n/M, n).

    The frame operator of the (window, hop, bins) system acts as
    (S f)(t) = sum_j G_j(t) f(t + jM); the system is tight exactly when
    G_0 is constant and every other band vanishes.
    """
    n = window.size
    base = window[_shift_index(n, hop)]
    bands = []
    for j in range(n // bins):
        shifted = window[_shift_index(n, hop, offset=j * bins)]
        bands.append(np.sum(base * np.conj(shifted), axis=0))
    return np.asarray(bands)


@dataclass(frozen=True)
class GaborFrame:
    """Unit-norm window on a (hop, bins) lattice forming a tight frame."""

    window: np.ndarray
    hop: int
    bins: int

    def __post_init__(self):
        window = np.asarray(self.window, dtype=np.float64).copy()
        n = window.size
        if window.ndim != 1 or n < 2:
            raise ParameterError("window must be a 1-d vector")
        if self.hop < 1 or n % self.hop:
            raise ParameterError(f"hop must divide the window length {n}")
        if self.bins < 1 or n % self.bins:
            raise ParameterError(f"bins must divide the window length {n}")
        if abs(float(np.linalg.norm(window)) - 1.0) > _NORM_TOL:
            raise ParameterError("window must have unit Euclidean norm")
        bands = _frame_bands(window, self.hop, self.bins)
        if float(np.ptp(bands[0].real)) > _TIGHT_TOL or (
            bands.shape[0] > 1 and float(np.abs(bands[1:]).max()) > _TIGHT_TOL
        ):
            raise ParameterError(
                "window/hop/bins do not form a tight frame; "
                "build frames with tight_frame()"
            )
        window.flags.writeable = False
        object.__setattr__(self, "window", window)

    @property
    def n(self) -> int:
        return self.window.size

    @property
    def shifts(self) -> int:
        return self.n // self.hop


def periodic_hann(length: int) -> np.ndarray:
    """Periodic Hann bump 0.5 (1 - cos(2 pi t / length)), zero at t = 0."""
    t = np.arange(length)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * t / length))


def tight_frame(n: int, hop: int, bins: int, window=None) -> GaborFrame:
    """Build a tight frame from a raw window (default: Hann of length `bins`).

    The raw window is divided pointwise by the square root of its frame
    diagonal sum_k |g(t - k hop)|^2 (a hop-periodic profile) and scaled to
    unit norm. The window's support must touch every residue class mod hop
    and fit inside `bins` consecutive samples for the result to be tight.
    """
    if n < 2:
        raise ParameterError("n must be at least 2")
    if hop < 1 or n % hop:
        raise ParameterError(f"hop must divide n={n}")
    if bins < 1 or n % bins:
        raise ParameterError(f"bins must divide n={n}")
    if window is None:
        if bins > n:
            raise ParameterError("default window needs bins <= n")
        window = np.zeros(n)
        window[:bins] = periodic_hann(bins)
    w = np.asarray(window, dtype=np.float64).copy()
    if w.shape != (n,):
        raise ParameterError(f"window must have length n={n}")
    power = w * w
    diagonal = np.zeros(n)
    for k in range(n // hop):
        diagonal += np.roll(power, k * hop)
    if diagonal.min() <= 0.0:
        raise ParameterError("window leaves gaps: frame diagonal vanishes somewhere")
    g = w / np.sqrt(diagonal)
    g /= np.linalg.norm(g)
    return GaborFrame(window=g, hop=hop, bins=bins)


def stft(frame: GaborFrame, f) -> np.ndarray:
    """Analysis coefficients, shape (n/hop, bins), complex."""
    f = np.asarray(f)
    if f.shape != (frame.n,):
        raise ValueError(f"signal must have length {frame.n}, got {f.shape}")
    f = f.astype(np.complex128)
    windows = frame.window[_shift_index(frame.n, frame.hop)]
    y = f[None, :] * np.conj(windows)
    folded = y.reshape(frame.shifts, frame.n // frame.bins, frame.bins).sum(axis=1)
    return np.fft.fft(folded, axis=1)


def adjoint(frame: GaborFrame, coefficients) -> np.ndarray:
    """Synthesis: the adjoint of stft under the (hop/bins)-weighted coefficient
    inner product; exact left inverse of stft for tight frames."""
    c = np.asarray(coefficients)
    if c.shape != (frame.shifts, frame.bins):
        raise ValueError(
            f"coefficients must have shape {(frame.shifts, frame.bins)}, got {c.shape}"
        )
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    c = c.astype(np.complex128)
    z = np.fft.ifft(c, axis=1)  # (K, bins): (1/M) sum_m c e^{2 pi i m r / M}
    tiled = np.tile(z, (1, frame.n // frame.bins))
    windows = frame.window[_shift_index(frame.n, frame.hop)]
    return frame.hop * np.sum(tiled * windows, axis=0)


def project(frame: GaborFrame, coefficients) -> np.ndarray:
    """Orthogonal projection of a coefficient grid onto the analysis range."""
    return stft(frame, adjoint(frame, coefficients))


def coefficient_inner(frame: GaborFrame, c, d) -> complex:
    """Inner product on coefficient grids under which adjoint is the adjoint."""
    c = np.asarray(c, dtype=np.complex128)
    d = np.asarray(d, dtype=np.complex128)
    return complex(frame.hop / frame.bins * np.sum(c * np.conj(d)))


def spectrogram(frame: GaborFrame, f) -> np.ndarray:
    """Coefficient magnitudes scaled to [0, 1], frequency rows by time columns."""
    mags = np.abs(stft(frame, f)).T  # (bins, shifts)
    peak = mags.max()
    return mags / peak if peak > 0 else mags
