"""Timbre features per frame and the modulation spectrum of their trajectories.

Spectral centroid and spread follow the usual amplitude-weighted moments
over linear-frequency bins. Sharpness is a Zwicker-style Bark-weighted
estimate with band energy**0.23 standing in for specific loudness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import AudioClip
from .errors import AllSilent, FlatTrajectory, SilentFrame, TooFewFrames
from .spectral import FrameSeries, MagnitudeSpectrum, frame_signal, iter_spectra

N_BARK_BANDS = 24
SHARPNESS_SCALE = 0.11
LOUDNESS_EXPONENT = 0.23
MIN_TRAJECTORY_FRAMES = 8
PAD_FACTOR = 4


def hz_to_bark(f):
    return 13.0 * np.arctan(0.00076 * np.asarray(f)) + 3.5 * np.arctan((np.asarray(f) / 7500.0) ** 2)


def sharpness_weight(z):
    """g(z): unity up to 15.8 Bark, exponential boost above."""
    z = np.asarray(z, dtype=np.float64)
    return np.where(z <= 15.8, 1.0, 0.15 * np.exp(0.42 * (z - 15.8)) + 0.85)


@dataclass(frozen=True, eq=False)
class TimbreTrajectory:
    centroid: np.ndarray
    spread: np.ndarray
    sharpness: np.ndarray
    frame_rate: float
    source_id: str = ""

    def __len__(self):
        return self.centroid.size

    @property
    def duration(self) -> float:
        return self.centroid.size / self.frame_rate


@dataclass(frozen=True)
class ArticulationVector:
    centroid_std: float
    spread_std: float
    sharpness_mean: float
    source_id: str = ""

    def as_array(self) -> np.ndarray:
        return np.array([self.centroid_std, self.spread_std, self.sharpness_mean])


@dataclass(frozen=True, eq=False)
class TrajectorySpectrum:
    magnitudes: np.ndarray
    bin_hz: float
    peak_hz: float | None
    centroid_hz: float | None
    min_hz: float
    source_id: str = ""

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.magnitudes.size) * self.bin_hz


def _freqs_and_mags(spec):
    if isinstance(spec, MagnitudeSpectrum):
        return spec.freqs, spec.magnitudes
    freqs, mags = spec
    return np.asarray(freqs, dtype=np.float64), np.asarray(mags, dtype=np.float64)


def spectral_centroid(spec) -> float:
    """Amplitude-weighted mean frequency in Hz.

    ``spec`` is a MagnitudeSpectrum or a ``(freqs, magnitudes)`` pair.
    """
    f, a = _freqs_and_mags(spec)
    total = a.sum()
    if total <= 0:
        raise SilentFrame("spectrum has zero total magnitude")
    return float((f * a).sum() / total)


def spectral_spread(spec, centroid: float | None = None) -> float:
    f, a = _freqs_and_mags(spec)
    total = a.sum()
    if total <= 0:
        raise SilentFrame("spectrum has zero total magnitude")
    if centroid is None:
        centroid = float((f * a).sum() / total)
    return float(math.sqrt(((f - centroid) ** 2 * a).sum() / total))


class BarkBands:
    """Assignment of spectrum bins to 24 one-Bark bands, cached per bin layout."""

    def __init__(self, freqs: np.ndarray):
        self.freqs = np.asarray(freqs, dtype=np.float64)
        self.z = hz_to_bark(self.freqs)
        self.band = np.minimum(self.z.astype(np.int64), N_BARK_BANDS - 1)

    def sharpness(self, mags: np.ndarray) -> np.ndarray:
        """Sharpness in acum for one spectrum or a (frames, bins) stack."""
        mags = np.atleast_2d(mags)
        energy = mags ** 2
        band_energy = np.zeros((mags.shape[0], N_BARK_BANDS))
        band_zsum = np.zeros_like(band_energy)
        for b in range(N_BARK_BANDS):
            sel = self.band == b
            if not sel.any():
                continue
            e = energy[:, sel]
            band_energy[:, b] = e.sum(axis=1)
            band_zsum[:, b] = e @ self.z[sel]
        active = band_energy > 0
        # band position = energy-weighted mean Bark of its bins
        z_band = np.divide(band_zsum, band_energy, out=np.zeros_like(band_zsum), where=active)
        loud = np.where(active, band_energy, 0.0) ** LOUDNESS_EXPONENT
        num = (loud * sharpness_weight(z_band) * z_band).sum(axis=1)
        den = loud.sum(axis=1)
        out = SHARPNESS_SCALE * np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return out


def sharpness(spec) -> float:
    """Zwicker-style sharpness of one spectrum in acum; a silent spectrum gives 0."""
    f, a = _freqs_and_mags(spec)
    return float(BarkBands(f).sharpness(a)[0])


def _frame_features(mags: np.ndarray, freqs: np.ndarray, bark: BarkBands):
    total = mags.sum(axis=1)
    silent = total <= 0
    safe = np.where(silent, 1.0, total)
    centroid = (mags @ freqs) / safe
    spread = np.sqrt(((freqs[None, :] - centroid[:, None]) ** 2 * mags).sum(axis=1) / safe)
    sharp = bark.sharpness(mags)
    return centroid, spread, sharp, silent


def trajectory_from_spectra(blocks, freqs: np.ndarray, frame_rate: float,
                            source_id: str = "") -> TimbreTrajectory:
    """Build a trajectory from an iterable of magnitude blocks (frames x bins)."""
    bark = BarkBands(freqs)
    cs, ss, hs, sil = [], [], [], []
    for mags in blocks:
        c, s, h, silent = _frame_features(mags, freqs, bark)
        cs.append(c), ss.append(s), hs.append(h), sil.append(silent)
    centroid = np.concatenate(cs)
    spread = np.concatenate(ss)
    sharp = np.concatenate(hs)
    silent = np.concatenate(sil)
    if silent.all():
        raise AllSilent(f"every frame of {source_id!r} is silent")
    first = int(np.argmax(~silent))
    keep = np.arange(first, silent.size)
    # carry the last non-silent frame forward over silent ones
    last = np.maximum.accumulate(np.where(silent, -1, np.arange(silent.size)))[keep]
    return TimbreTrajectory(centroid[last], spread[last], sharp[last], frame_rate, source_id)


def timbre_trajectory(clip: AudioClip, frames: FrameSeries | None = None) -> TimbreTrajectory:
    """Per-frame centroid, spread and sharpness over 2**14-sample frames.

    Leading silent frames are dropped and later silent frames repeat the
    previous frame's values.
    """
    frames = frame_signal(clip) if frames is None else frames
    freqs = np.arange(frames.frame_len // 2 + 1) * frames.bin_hz
    return trajectory_from_spectra(iter_spectra(frames), freqs, frames.frame_rate, clip.source_id)


def _fmean(x: np.ndarray) -> float:
    return math.fsum(x) / x.size


def _fstd(x: np.ndarray) -> float:
    mu = _fmean(x)
    return math.sqrt(math.fsum((x - mu) ** 2) / x.size)


def articulation_vector(traj: TimbreTrajectory) -> ArticulationVector:
    """Population std of centroid and spread, mean of sharpness."""
    if len(traj) < 2:
        raise TooFewFrames(f"need at least 2 frames, got {len(traj)}")
    return ArticulationVector(_fstd(traj.centroid), _fstd(traj.spread),
                              _fmean(traj.sharpness), traj.source_id)


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def modulation_spectrum(series: np.ndarray, frame_rate: float, pad_factor: int = PAD_FACTOR):
    """Hann-windowed, mean-removed, zero-padded magnitude spectrum of a feature series.

    Returns ``(magnitudes, bin_hz)``.
    """
    x = np.asarray(series, dtype=np.float64)
    x = x - _fmean(x)
    n_fft = _next_pow2(pad_factor * x.size)
    mags = np.abs(np.fft.rfft(x * np.hanning(x.size), n=n_fft))
    return mags, frame_rate / n_fft


def _summarize(mags: np.ndarray, bin_hz: float, min_hz: float):
    freqs = np.arange(mags.size) * bin_hz
    sel = np.flatnonzero(freqs >= min_hz * (1 - 1e-12))
    sel = sel[sel > 0]
    m = mags[sel]
    if sel.size == 0 or not np.any(m > 0):
        return None, None
    peak = float(freqs[sel[int(np.argmax(m))]])
    centroid = float((freqs[sel] * m).sum() / m.sum())
    return peak, centroid


def trajectory_spectrum(traj: TimbreTrajectory, pad_factor: int = PAD_FACTOR) -> TrajectorySpectrum:
    """Modulation spectrum of the centroid trajectory.

    The most prominent peak and the spectral centroid are taken over bins at
    or above 1/T, T being the trajectory duration, which excludes DC and the
    leakage around it. A constant trajectory raises FlatTrajectory.
    """
    n = len(traj)
    if n < MIN_TRAJECTORY_FRAMES:
        raise TooFewFrames(f"need at least {MIN_TRAJECTORY_FRAMES} frames, got {n}")
    if np.ptp(traj.centroid) == 0:
        raise FlatTrajectory(f"centroid trajectory of {traj.source_id!r} is constant")
    mags, bin_hz = modulation_spectrum(traj.centroid, traj.frame_rate, pad_factor)
    min_hz = 1.0 / traj.duration
    peak, centroid = _summarize(mags, bin_hz, min_hz)
    if peak is None:
        raise FlatTrajectory(f"centroid trajectory of {traj.source_id!r} has no modulation")
    return TrajectorySpectrum(mags, bin_hz, peak, centroid, min_hz, traj.source_id)
