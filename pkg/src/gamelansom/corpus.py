"""Corpus manifests and WAV decoding.

A manifest is a JSON document::

    {"corpus_name": "...",
     "entries": [{"id": "p1", "path": "p1.wav", "title": "...",
                  "ensemble": "...", "region": "Indonesian"}]}

Entry paths are resolved relative to the manifest's directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import IoError, ParseError, UnsupportedFormat, ValidationError

REGIONS = ("Indonesian", "Western")
_ENTRY_FIELDS = ("id", "path", "title", "ensemble", "region")


@dataclass(frozen=True)
class RecordingEntry:
    id: str
    path: Path
    title: str
    ensemble: str
    region: str

    def __post_init__(self):
        if self.region not in REGIONS:
            raise ValidationError(
                f"entry {self.id!r}: region must be one of {REGIONS}, got {self.region!r}")

    def to_json(self, base: Path | None = None) -> dict:
        path = self.path
        if base is not None:
            path = Path(os.path.relpath(path, base))
        return {"id": self.id, "path": path.as_posix(), "title": self.title,
                "ensemble": self.ensemble, "region": self.region}


@dataclass(frozen=True)
class CorpusManifest:
    corpus_name: str
    entries: tuple[RecordingEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValidationError("manifest has no entries")
        seen = set()
        for e in self.entries:
            if e.id in seen:
                raise ValidationError(f"duplicate recording id {e.id!r}")
            seen.add(e.id)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_id(self) -> dict[str, RecordingEntry]:
        return {e.id: e for e in self.entries}

    def to_json(self, base: Path | None = None) -> dict:
        return {"corpus_name": self.corpus_name,
                "entries": [e.to_json(base) for e in self.entries]}


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError("AudioClip samples must be one-dimensional")
        if int(self.sample_rate) <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("AudioClip samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def scaled(self, gain: float) -> "AudioClip":
        return AudioClip(self.samples * gain, self.sample_rate, self.source_id)


def load_manifest(path) -> CorpusManifest:
    """Read and validate a manifest JSON file.

    Raises ParseError when the file is not valid JSON or lacks required
    fields, ValidationError for duplicate ids, unknown regions, empty entry
    lists or entries whose audio file is missing.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return manifest_from_json(doc, base=path.parent)


def manifest_from_json(doc, base: Path | None = None, check_paths: bool = True) -> CorpusManifest:
    if not isinstance(doc, dict) or "entries" not in doc or "corpus_name" not in doc:
        raise ParseError("manifest must be an object with 'corpus_name' and 'entries'")
    if not isinstance(doc["entries"], list):
        raise ParseError("'entries' must be a list")
    base = Path(base) if base is not None else Path(".")
    entries = []
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict):
            raise ParseError(f"entry {i} is not an object")
        missing = [k for k in _ENTRY_FIELDS if k not in raw]
        if missing:
            raise ParseError(f"entry {i} lacks fields {missing}")
        if not all(isinstance(raw[k], str) for k in _ENTRY_FIELDS):
            raise ParseError(f"entry {i}: all fields must be strings")
        entry = RecordingEntry(id=raw["id"], path=base / raw["path"], title=raw["title"],
                               ensemble=raw["ensemble"], region=raw["region"])
        entries.append(entry)
    manifest = CorpusManifest(corpus_name=str(doc["corpus_name"]), entries=entries)
    if check_paths:
        for e in manifest:
            if not e.path.is_file():
                raise ValidationError(f"entry {e.id!r}: audio file {e.path} not found")
    return manifest


def save_manifest(manifest: CorpusManifest, path, provenance: dict | None = None) -> Path:
    path = Path(path)
    doc = manifest.to_json(base=path.parent)
    if provenance is not None:
        doc["provenance"] = provenance
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def _to_unit_range(data: np.ndarray) -> np.ndarray:
    # Full-scale division; scipy left-justifies 24-bit PCM into int32.
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.int32:
        return data.astype(np.float64) / 2147483648.0
    if data.dtype in (np.float32, np.float64):
        out = data.astype(np.float64)
        if not np.all(np.isfinite(out)):
            raise UnsupportedFormat("float WAV contains non-finite samples")
        return np.clip(out, -1.0, 1.0)
    raise UnsupportedFormat(f"unsupported sample type {data.dtype}")


def decode_audio(entry: RecordingEntry | str | os.PathLike) -> AudioClip:
    """Decode a PCM WAV file into a mono clip with samples in [-1, 1].

    Accepts 16/24/32-bit integer or float PCM with one or two channels.
    Stereo is averaged to mono; no resampling is done.
    """
    if isinstance(entry, RecordingEntry):
        path, source_id = entry.path, entry.id
    else:
        path, source_id = Path(entry), Path(entry).stem
    try:
        with open(path, "rb") as fh:
            sample_rate, data = wavfile.read(fh)
    except FileNotFoundError as exc:
        raise IoError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    except ValueError as exc:
        # scipy reports unknown codecs, truncated chunks and non-RIFF input this way
        raise UnsupportedFormat(f"{path}: {exc}") from exc

    if data.ndim == 2:
        if data.shape[1] not in (1, 2):
            raise UnsupportedFormat(f"{path}: {data.shape[1]} channels (only mono/stereo)")
        samples = _to_unit_range(data).mean(axis=1)
    else:
        samples = _to_unit_range(data)
    return AudioClip(samples, int(sample_rate), source_id)


def write_wav(clip: AudioClip, path) -> Path:
    """Write a clip as 32-bit float mono WAV."""
    path = Path(path)
    try:
        wavfile.write(path, clip.sample_rate, clip.samples.astype(np.float32))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path
