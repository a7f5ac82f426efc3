"""Framing, magnitude spectra and band-limited tuning vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .corpus import AudioClip
from .errors import SilentInput, TooShort, ValidationError

FRAME_LEN = 2 ** 14
HOP = FRAME_LEN // 2
WINDOW = "hann"
TUNING_F_LO = 20.0
TUNING_F_HI = 1280.0
# log_cents axis resolution
CENTS_STEP = 10.0

# frames per FFT batch; bounds peak memory on long recordings
_BLOCK = 128


@dataclass(frozen=True, eq=False)
class FrameSeries:
    """Lazy 50%-overlap framing of a clip.

    Frames are views into the clip; the window is applied when spectra are
    taken, so long recordings never materialize as one 2-D array.
    """

    clip: AudioClip
    frame_len: int = FRAME_LEN
    hop: int = HOP
    window: str = WINDOW
    windowed: bool = True

    @property
    def sample_rate(self) -> int:
        return self.clip.sample_rate

    @property
    def n_frames(self) -> int:
        return (len(self.clip) - self.frame_len) // self.hop + 1

    @property
    def frame_rate(self) -> float:
        return self.clip.sample_rate / self.hop

    @property
    def starts(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.hop

    @property
    def bin_hz(self) -> float:
        return self.clip.sample_rate / self.frame_len

    def window_values(self) -> np.ndarray:
        if not self.windowed:
            return np.ones(self.frame_len)
        return get_window(self.window, self.frame_len, fftbins=True)

    def frames(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Windowed frames ``start:stop`` as an (n, frame_len) array."""
        stop = self.n_frames if stop is None else min(stop, self.n_frames)
        view = sliding_window_view(self.clip.samples, self.frame_len)[:: self.hop]
        return view[start:stop] * self.window_values()

    def iter_blocks(self, block: int = _BLOCK) -> Iterator[np.ndarray]:
        for start in range(0, self.n_frames, block):
            yield self.frames(start, start + block)


@dataclass(frozen=True, eq=False)
class MagnitudeSpectrum:
    magnitudes: np.ndarray
    bin_hz: float

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.magnitudes.shape[-1]) * self.bin_hz


@dataclass(frozen=True, eq=False)
class TuningVector:
    values: np.ndarray
    freqs: np.ndarray
    source_id: str = ""
    f_lo: float = TUNING_F_LO
    f_hi: float = TUNING_F_HI
    axis: str = "linear"

    def __len__(self):
        return self.values.size


def frame_signal(clip: AudioClip, window: str = WINDOW) -> FrameSeries:
    """Tile ``clip`` with 2**14-sample frames at 50% overlap.

    The trailing partial frame is dropped. Raises TooShort when the clip
    holds less than one full frame.
    """
    if len(clip) < FRAME_LEN:
        raise TooShort(f"clip {clip.source_id!r} has {len(clip)} samples, "
                       f"need at least {FRAME_LEN}")
    return FrameSeries(clip, window=window)


def magnitude_spectrum(frame: np.ndarray, sample_rate: float) -> MagnitudeSpectrum:
    """Real-FFT magnitude of one windowed frame (or a stack of frames)."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] != FRAME_LEN:
        raise ValidationError(f"frame length must be {FRAME_LEN}, got {frame.shape[-1]}")
    return MagnitudeSpectrum(np.abs(np.fft.rfft(frame, axis=-1)), sample_rate / FRAME_LEN)


def iter_spectra(frames: FrameSeries) -> Iterator[np.ndarray]:
    """Magnitude spectra of all frames, in blocks of shape (n, FRAME_LEN//2 + 1)."""
    for block in frames.iter_blocks():
        yield np.abs(np.fft.rfft(block, axis=-1))


def band_bins(sample_rate: float, f_lo: float = TUNING_F_LO, f_hi: float = TUNING_F_HI) -> np.ndarray:
    """Indices of rFFT bins whose center frequency lies in [f_lo, f_hi]."""
    bin_hz = sample_rate / FRAME_LEN
    lo = math.ceil(f_lo / bin_hz - 1e-9)
    hi = math.floor(f_hi / bin_hz + 1e-9)
    return np.arange(lo, hi + 1)


def mean_band_spectrum(frames: FrameSeries, bins: np.ndarray) -> np.ndarray:
    """Per-bin mean of frame magnitudes, exactly rounded (summation order free)."""
    rows = [spec[:, bins] for spec in iter_spectra(frames)]
    stacked = np.concatenate(rows, axis=0)
    n = stacked.shape[0]
    return np.array([math.fsum(col) / n for col in stacked.T])


def log_cents_axis(f_lo: float = TUNING_F_LO, f_hi: float = TUNING_F_HI,
                   step: float = CENTS_STEP) -> np.ndarray:
    n = int(round(1200.0 * math.log2(f_hi / f_lo) / step))
    return f_lo * 2.0 ** (np.arange(n) * step / 1200.0)


def tuning_vector(clip: AudioClip, axis: str = "linear", window: str = WINDOW,
                  f_lo: float = TUNING_F_LO, f_hi: float = TUNING_F_HI) -> TuningVector:
    """Frame-averaged magnitude spectrum between ``f_lo`` and ``f_hi``, unit L2 norm.

    ``axis="linear"`` keeps the FFT bins; ``axis="log_cents"`` interpolates the
    averaged spectrum onto a 10-cent grid so vector length no longer depends
    on the sample rate.
    """
    frames = frame_signal(clip, window=window)
    bins = band_bins(clip.sample_rate, f_lo, f_hi)
    mean = mean_band_spectrum(frames, bins)
    freqs = bins * frames.bin_hz
    if axis == "log_cents":
        grid = log_cents_axis(f_lo, f_hi)
        mean = np.interp(grid, freqs, mean)
        freqs = grid
    elif axis != "linear":
        raise ValidationError(f"unknown tuning axis {axis!r}")
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise SilentInput(f"clip {clip.source_id!r} has no energy in {f_lo}-{f_hi} Hz")
    return TuningVector(mean / norm, freqs, clip.source_id, f_lo, f_hi, axis)


def pick_peaks(tv: TuningVector, n: int | None = None, f_range: tuple[float, float] | None = None,
               rel_height: float = 0.05, min_separation_cents: float = 50.0) -> np.ndarray:
    """Frequencies of local maxima in a tuning vector, refined by parabolic interpolation.

    Interpolation runs on log magnitude, which is exact for a Gaussian lobe
    and within a few hundredths of a bin for a Hann lobe. Peaks are returned
    in decreasing height; ``n`` keeps only the tallest. A peak closer than
    ``min_separation_cents`` to a taller one is dropped, which folds a
    resolved ombak pair into one pitch.
    """
    v = tv.values
    freqs = tv.freqs
    if f_range is not None:
        keep = (freqs >= f_range[0]) & (freqs <= f_range[1])
    else:
        keep = np.ones(v.size, dtype=bool)
    idx = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
    idx = idx[keep[idx] & (v[idx] >= rel_height * v.max())]
    idx = idx[np.argsort(-v[idx], kind="stable")]
    kept = []
    for i in idx:
        if all(abs(1200 * np.log2(freqs[i] / freqs[j])) >= min_separation_cents for j in kept):
            kept.append(i)
    if n is not None:
        kept = kept[:n]
    out = []
    for i in kept:
        a, b, c = np.log(np.maximum(v[i - 1:i + 2], 1e-300))
        denom = a - 2 * b + c
        delta = 0.5 * (a - c) / denom if denom != 0 else 0.0
        step = freqs[i + 1] - freqs[i] if delta > 0 else freqs[i] - freqs[i - 1]
        out.append(freqs[i] + delta * step)
    return np.array(out)
