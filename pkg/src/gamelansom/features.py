"""Per-recording feature extraction and the feature file.

One pass over a clip's frame spectra yields the tuning vector, the timbre
trajectory (and from it the articulation vector) and the form scalars of the
centroid trajectory spectrum. The feature file is JSON::

    {"format": "gamelansom.features/1",
     "params": {"frame_len": 16384, "hop": 8192, "window": "hann", ...},
     "records": [{"id", "ensemble", "region", "clip", "tuning",
                  "articulation", "form"}, ...],
     "errors": [{"id", "error", "message"}],
     "provenance": {...}}
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import AudioClip, CorpusManifest, RecordingEntry, decode_audio
from .errors import FlatTrajectory, GamelanSomError, SilentInput, ValidationError
from .spectral import (FRAME_LEN, HOP, TUNING_F_HI, TUNING_F_LO, WINDOW, TuningVector,
                       band_bins, frame_signal, iter_spectra, log_cents_axis)
from .timbre import (ArticulationVector, TrajectorySpectrum, articulation_vector,
                     trajectory_from_spectra, trajectory_spectrum)

FEATURES_FORMAT = "gamelansom.features/1"


@dataclass(frozen=True)
class ExtractionParams:
    hop: int = HOP
    window: str = WINDOW
    f_lo: float = TUNING_F_LO
    f_hi: float = TUNING_F_HI
    axis: str = "linear"

    @property
    def frame_len(self) -> int:
        return FRAME_LEN

    def to_json(self) -> dict:
        return {"frame_len": FRAME_LEN, "hop": self.hop, "window": self.window,
                "tuning_f_lo": self.f_lo, "tuning_f_hi": self.f_hi, "tuning_axis": self.axis}


@dataclass(frozen=True, eq=False)
class PieceFeatures:
    source_id: str
    sample_rate: int
    n_samples: int
    n_frames: int
    tuning: TuningVector
    articulation: ArticulationVector
    form: TrajectorySpectrum | None

    def to_record(self, entry: RecordingEntry | None = None) -> dict:
        rec = {"id": self.source_id}
        if entry is not None:
            rec.update(ensemble=entry.ensemble, region=entry.region, title=entry.title)
        rec["clip"] = {"sample_rate": self.sample_rate, "n_samples": self.n_samples,
                       "n_frames": self.n_frames}
        tv = self.tuning
        rec["tuning"] = {"axis": tv.axis, "f_lo": tv.f_lo, "f_hi": tv.f_hi,
                         "freqs": tv.freqs.tolist(), "values": tv.values.tolist()}
        a = self.articulation
        rec["articulation"] = {"centroid_std": a.centroid_std, "spread_std": a.spread_std,
                               "sharpness_mean": a.sharpness_mean}
        f = self.form
        rec["form"] = {"peak_hz": None if f is None else f.peak_hz,
                       "centroid_hz": None if f is None else f.centroid_hz}
        return rec


class _BandAccumulator:
    """Exactly rounded per-bin sums of magnitudes, fed block by block."""

    def __init__(self, bins: np.ndarray):
        self.bins = bins
        self.parts: list[np.ndarray] = []

    def __call__(self, mags: np.ndarray) -> np.ndarray:
        self.parts.append(mags[:, self.bins])
        return mags

    def mean(self) -> np.ndarray:
        stacked = np.concatenate(self.parts, axis=0)
        n = stacked.shape[0]
        return np.array([math.fsum(col) / n for col in stacked.T])


def extract_clip(clip: AudioClip, params: ExtractionParams | None = None) -> PieceFeatures:
    """All features of one clip from a single pass over its frame spectra."""
    params = params or ExtractionParams()
    frames = frame_signal(clip, window=params.window)
    if params.hop != frames.hop:
        frames = type(frames)(clip, hop=params.hop, window=params.window)
    bins = band_bins(clip.sample_rate, params.f_lo, params.f_hi)
    acc = _BandAccumulator(bins)
    freqs = np.arange(frames.frame_len // 2 + 1) * frames.bin_hz
    blocks = (acc(m) for m in iter_spectra(frames))
    traj = trajectory_from_spectra(blocks, freqs, frames.frame_rate, clip.source_id)

    mean = acc.mean()
    tfreqs = bins * frames.bin_hz
    if params.axis == "log_cents":
        grid = log_cents_axis(params.f_lo, params.f_hi)
        mean, tfreqs = np.interp(grid, tfreqs, mean), grid
    elif params.axis != "linear":
        raise ValidationError(f"unknown tuning axis {params.axis!r}")
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise SilentInput(f"clip {clip.source_id!r} has no energy in {params.f_lo}-{params.f_hi} Hz")
    tuning = TuningVector(mean / norm, tfreqs, clip.source_id, params.f_lo, params.f_hi, params.axis)

    art = articulation_vector(traj)
    try:
        form = trajectory_spectrum(traj)
    except FlatTrajectory:
        form = None
    return PieceFeatures(clip.source_id, clip.sample_rate, len(clip), frames.n_frames,
                         tuning, art, form)


def extract_entry(entry: RecordingEntry, params: ExtractionParams | None = None) -> dict:
    return extract_clip(decode_audio(entry), params).to_record(entry)


def extract_corpus(manifest: CorpusManifest, params: ExtractionParams | None = None,
                   jobs: int = 1) -> tuple[list[dict], list[dict]]:
    """Extract every entry; returns ``(records, errors)`` in manifest order.

    A failing entry becomes an error item and does not stop the others.
    ``jobs`` bounds the worker pool; results do not depend on it.
    """
    params = params or ExtractionParams()

    def run(entry):
        try:
            return extract_entry(entry, params), None
        except (GamelanSomError, OSError) as exc:
            return None, {"id": entry.id, "error": type(exc).__name__, "message": str(exc)}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, manifest.entries))
    else:
        results = [run(e) for e in manifest.entries]
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    return records, errors


def feature_document(records: list[dict], errors: list[dict], params: ExtractionParams,
                     provenance: dict | None = None) -> dict:
    rates = sorted({r["clip"]["sample_rate"] for r in records})
    doc_params = params.to_json()
    doc_params["sample_rate"] = rates[0] if len(rates) == 1 else rates
    return {"format": FEATURES_FORMAT, "params": doc_params, "records": records,
            "errors": errors, "provenance": provenance or {}}
