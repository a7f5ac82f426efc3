"""Synthetic gamelan-like test corpora.

Each piece is a sequence of inharmonic metallophone notes drawn from a
five-tone scale. Paired instruments are detuned by the ombak rate, so every
partial beats. Timbre articulation is injected by cross-fading the balance
between the fundamental and the upper partials, leaving pitch (and so the
tuning spectrum) untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .corpus import REGIONS, AudioClip, CorpusManifest, RecordingEntry, save_manifest, write_wav
from .errors import InvalidDegree, InvalidSpec, IoError

SAMPLE_RATE = 44100
DECAY_S = 0.8
ATTACK_S = 0.01
PARTIALS = ((1.0, 1.0), (2.76, 0.45), (5.40, 0.2), (8.93, 0.08))
PROFILES = ("flat", "articulated", "large_form")
PROFILE_MOD_HZ = {"flat": 0.0, "articulated": 0.5, "large_form": 0.01}
PEAK_LEVEL = 0.5


@dataclass(frozen=True)
class ScaleSpec:
    name: str
    steps_cents: tuple[float, ...]

    def __post_init__(self):
        steps = tuple(float(c) for c in self.steps_cents)
        object.__setattr__(self, "steps_cents", steps)
        if len(steps) < 2 or steps[0] != 0.0 or steps[-1] != 1200.0:
            raise InvalidSpec(f"scale {self.name!r} must start at 0 and end at 1200 cents")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise InvalidSpec(f"scale {self.name!r} steps must be strictly ascending")

    @property
    def n_tones(self) -> int:
        """Distinct tones per octave (the closing 1200 is the octave of degree 0)."""
        return len(self.steps_cents) - 1


TIRUS = ScaleSpec("tirus", (0, 197, 377, 724, 828, 1200))
BEGBEG = ScaleSpec("begbeg", (0, 120, 234, 666, 747, 1200))
SEDENG = ScaleSpec("sedeng", (0, 136, 291, 670, 804, 1200))
# equal five-tone division, a slendro-like stand-in for the fourth ensemble
CUSTOM = ScaleSpec("custom", (0, 240, 480, 720, 960, 1200))
SCALES = {s.name: s for s in (TIRUS, BEGBEG, SEDENG, CUSTOM)}


@dataclass(frozen=True)
class SynthPieceSpec:
    scale: ScaleSpec = TIRUS
    tonic_hz: float = 220.0
    duration_s: float = 60.0
    ombak_hz: float | None = 3.0
    partials: tuple[tuple[float, float], ...] = PARTIALS
    articulation_profile: str = "flat"
    mod_hz: float | None = None
    mod_depth: float = 1.0
    note_rate_hz: float = 4.0
    voices: int = 4
    decay_s: float = DECAY_S
    sample_rate: int = SAMPLE_RATE
    seed: int = 0

    def __post_init__(self):
        if self.articulation_profile not in PROFILES:
            raise InvalidSpec(f"unknown articulation profile {self.articulation_profile!r}")
        if self.mod_hz is None:
            object.__setattr__(self, "mod_hz", PROFILE_MOD_HZ[self.articulation_profile])
        object.__setattr__(self, "partials", tuple((float(r), float(a)) for r, a in self.partials))
        if self.ombak_hz is not None and not 2.0 <= self.ombak_hz <= 4.0:
            raise InvalidSpec(f"ombak_hz must lie in [2, 4], got {self.ombak_hz}")
        if self.tonic_hz <= 0 or self.duration_s <= 0 or self.note_rate_hz <= 0:
            raise InvalidSpec("tonic, duration and note rate must be positive")
        if self.decay_s <= 0 or self.sample_rate <= 0:
            raise InvalidSpec("decay and sample rate must be positive")
        if self.voices < 1:
            raise InvalidSpec("voices must be at least 1")
        if not self.partials:
            raise InvalidSpec("at least one partial is required")
        if not 0.0 <= self.mod_depth <= 1.0:
            raise InvalidSpec("mod_depth must lie in [0, 1]")
        if self.articulation_profile != "flat":
            if self.mod_hz <= 0:
                raise InvalidSpec("modulated profiles need mod_hz > 0")
            if self.duration_s * self.mod_hz < 2.0 - 1e-9:
                raise InvalidSpec(
                    f"duration {self.duration_s} s holds fewer than 2 periods of {self.mod_hz} Hz")

    def degree_hz(self, degree: int) -> float:
        if not 0 <= degree < len(self.scale.steps_cents):
            raise InvalidDegree(f"degree {degree} outside scale {self.scale.name!r}")
        return self.tonic_hz * 2.0 ** (self.scale.steps_cents[degree] / 1200.0)


def _envelope(spec: SynthPieceSpec, amp: float, n: int) -> np.ndarray:
    t = np.arange(n) / spec.sample_rate
    env = amp * np.exp(-t / spec.decay_s)
    # raised-cosine attack; an instant onset splatters energy across the band
    n_att = min(n, int(round(ATTACK_S * spec.sample_rate)))
    env[:n_att] *= 0.5 - 0.5 * np.cos(np.pi * np.arange(n_att) / n_att)
    return env


def _strike_envelope(spec: SynthPieceSpec, onsets: np.ndarray, n: int) -> np.ndarray:
    """Sum of attack-shaped exponential decays starting at ``onsets``."""
    impulses = np.bincount(onsets, minlength=n)[:n].astype(np.float64)
    a = np.exp(-1.0 / (spec.decay_s * spec.sample_rate))
    env = lfilter([1.0], [1.0, -a], impulses)
    n_att = int(round(ATTACK_S * spec.sample_rate))
    # remove the part of each decay that the attack ramp suppresses
    shortfall = a ** np.arange(n_att) - _envelope(spec, 1.0, n_att)
    for start in np.unique(onsets):
        stop = min(n, start + n_att)
        env[start:stop] -= impulses[start] * shortfall[: stop - start]
    return env.astype(np.float32)


def _component_freqs(spec: SynthPieceSpec, degree: int, ratio: float) -> tuple[float, ...]:
    f = spec.degree_hz(degree) * ratio
    if spec.ombak_hz is None:
        return (f,)
    # two instruments detuned symmetrically, so the pair is centred on the scale pitch
    d = 0.5 * spec.ombak_hz * ratio
    return (f - d, f + d)


def _sine(freq: float, phase: float, n: int, sample_rate: int) -> np.ndarray:
    """sin(2 pi f t + phase) for n samples, via sin(a + b) over one-second blocks."""
    block = sample_rate
    n_blocks = -(-n // block)
    w = 2 * np.pi * freq / sample_rate
    inner = w * np.arange(block)
    outer = w * block * np.arange(n_blocks) + phase
    f32 = np.float32
    out = np.multiply.outer(np.sin(outer).astype(f32), np.cos(inner).astype(f32))
    out += np.multiply.outer(np.cos(outer).astype(f32), np.sin(inner).astype(f32))
    return out.ravel()[:n]


def _partial_tone(spec: SynthPieceSpec, degree: int, ratio: float, amp: float, n: int,
                  phases=None) -> np.ndarray:
    t = np.arange(n) / spec.sample_rate
    freqs = _component_freqs(spec, degree, ratio)
    phases = np.zeros(len(freqs)) if phases is None else phases
    env = _envelope(spec, amp, n) / len(freqs)
    return env * sum(np.sin(2 * np.pi * f * t + p) for f, p in zip(freqs, phases))


def synth_tone(spec: SynthPieceSpec, scale_degree: int, length_s: float) -> np.ndarray:
    """One struck note: decaying inharmonic partials, each doubled at the ombak detuning."""
    spec.degree_hz(scale_degree)
    n = int(round(length_s * spec.sample_rate))
    out = np.zeros(n)
    for ratio, amp in spec.partials:
        out += _partial_tone(spec, scale_degree, ratio, amp, n)
    return out


def degree_sequence(n_notes: int, n_tones: int, rng: np.random.Generator) -> np.ndarray:
    """Concatenated random permutations of the scale degrees.

    Every degree sounds equally often per cycle, which keeps tuning spectra
    of pieces in one scale close and leaves no slow drift in the timbre.
    """
    cycles = -(-n_notes // n_tones)
    return np.concatenate([rng.permutation(n_tones) for _ in range(cycles)])[:n_notes]


def balance_curve(spec: SynthPieceSpec, t: np.ndarray) -> np.ndarray:
    """Share of the upper partials in [0, 1]; 0.5 reproduces the nominal amplitudes."""
    if spec.articulation_profile == "flat":
        return np.full(t.shape, 0.5)
    return 0.5 + 0.5 * spec.mod_depth * np.sin(2 * np.pi * spec.mod_hz * t)


def synth_piece(spec: SynthPieceSpec, source_id: str = "") -> AudioClip:
    """Render a piece: a seeded degree sequence at ``note_rate_hz`` with the
    profile's timbre modulation, peak-normalized to 0.5."""
    sr = spec.sample_rate
    n = int(round(spec.duration_s * sr))
    rng = np.random.default_rng(spec.seed)
    n_notes = max(1, int(np.floor(spec.duration_s * spec.note_rate_hz)))
    degrees = degree_sequence(n_notes * spec.voices, spec.scale.n_tones, rng)
    onsets = np.repeat(np.round(np.arange(n_notes) * sr / spec.note_rate_hz).astype(np.int64),
                       spec.voices)

    t = np.arange(n) / sr
    b = balance_curve(spec, t).astype(np.float32)
    # A struck bar that is still ringing is re-excited in its running phase, so
    # each degree is one carrier in absolute time under a summed envelope.
    envelopes = {d: _strike_envelope(spec, onsets[degrees == d], n) for d in np.unique(degrees)}
    # Beat phases of the degrees are spread evenly over one beat period so the
    # ombak of simultaneously sounding notes does not pulse in unison.
    phases = rng.uniform(0.0, 2 * np.pi, size=(len(spec.partials), spec.scale.n_tones, 2))
    phases[:, :, 1] = phases[:, :, 0] + 2 * np.pi * np.arange(spec.scale.n_tones) / spec.scale.n_tones
    out = np.zeros(n, dtype=np.float32)
    track = np.empty(n, dtype=np.float32)
    for k, (ratio, amp) in enumerate(spec.partials):
        track[:] = 0.0
        for d, e in envelopes.items():
            freqs = _component_freqs(spec, d, ratio)
            carrier = _sine(freqs[0], phases[k, d, 0], n, sr)
            for c, f in enumerate(freqs[1:], start=1):
                carrier += _sine(f, phases[k, d, c], n, sr)
            carrier *= e
            track += carrier
        gain = (1.0 - b) if k == 0 else b
        track *= gain
        out += np.float32(2.0 * amp / len(_component_freqs(spec, 0, ratio))) * track
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= np.float32(PEAK_LEVEL / peak)
    return AudioClip(out, sr, source_id)


@dataclass(frozen=True)
class EnsembleSpec:
    name: str
    scale: ScaleSpec
    tonic_hz: float
    ombak_hz: float
    region: str


ENSEMBLE_SCALES = (TIRUS, BEGBEG, SEDENG, CUSTOM)
ENSEMBLE_TONICS = (220.0, 196.0, 247.0, 175.0)
OMBAK_HZ = (2.5, 3.0, 3.5, 4.0, 2.0)


def default_ensembles(n_ensembles: int, regions) -> list[EnsembleSpec]:
    out = []
    for i in range(n_ensembles):
        scale = ENSEMBLE_SCALES[i % len(ENSEMBLE_SCALES)]
        # tonics shift by a fifth on every pass through the scale list
        tonic = ENSEMBLE_TONICS[i % len(ENSEMBLE_TONICS)] * 1.5 ** (i // len(ENSEMBLE_TONICS))
        tonic = tonic / 2 ** np.floor(np.log2(tonic / 160.0))
        ombak = OMBAK_HZ[i % len(OMBAK_HZ)]
        out.append(EnsembleSpec(f"ens{i + 1:02d}_{scale.name}", scale, float(tonic), ombak, regions[i]))
    return out


def _ensemble_regions(n_ensembles: int, region_assignment) -> tuple[list, bool]:
    """Resolve ``region_assignment`` into per-ensemble regions.

    Returns ``(regions, per_piece)``; ``per_piece`` means regions alternate
    inside each ensemble instead of being an ensemble property.
    """
    if isinstance(region_assignment, str):
        if region_assignment in REGIONS:
            return [region_assignment] * n_ensembles, False
        if region_assignment == "by_ensemble":
            return [REGIONS[i % 2] for i in range(n_ensembles)], False
        if region_assignment == "orthogonal":
            return [None] * n_ensembles, True
        raise InvalidSpec(f"unknown region assignment {region_assignment!r}")
    regions = list(region_assignment)
    if len(regions) != n_ensembles or any(r not in REGIONS for r in regions):
        raise InvalidSpec("region_assignment must give one valid region per ensemble")
    return regions, False


def piece_profile(region: str, index: int, indonesian_profiles=("articulated", "large_form")) -> str:
    if region == "Western":
        return "flat"
    return indonesian_profiles[index % len(indonesian_profiles)]


@dataclass
class CorpusPlan:
    """Everything needed to render a synthetic corpus, piece by piece."""

    name: str
    ensembles: list[EnsembleSpec]
    pieces: list[tuple[str, str, str, SynthPieceSpec]] = field(default_factory=list)


def plan_corpus(n_ensembles: int, pieces_per_ensemble: int, region_assignment="by_ensemble",
                seed: int = 0, duration_s: float = 200.0, note_rate_hz: float = 4.0,
                indonesian_profiles=("articulated", "large_form"), name: str = "synth",
                sample_rate: int = SAMPLE_RATE) -> CorpusPlan:
    if n_ensembles < 2:
        raise InvalidSpec("a corpus needs at least 2 ensembles")
    if pieces_per_ensemble < 1:
        raise InvalidSpec("pieces_per_ensemble must be at least 1")
    regions, per_piece = _ensemble_regions(n_ensembles, region_assignment)
    ensembles = default_ensembles(n_ensembles, regions)
    plan = CorpusPlan(name, ensembles)
    base = SynthPieceSpec(duration_s=duration_s, note_rate_hz=note_rate_hz, sample_rate=sample_rate)
    for e_idx, ens in enumerate(ensembles):
        for p in range(pieces_per_ensemble):
            region = REGIONS[p % 2] if per_piece else ens.region
            # count Indonesian pieces separately so profiles alternate within them
            profile = piece_profile(region, p // 2 if per_piece else p, indonesian_profiles)
            spec = replace(base, scale=ens.scale, tonic_hz=ens.tonic_hz, ombak_hz=ens.ombak_hz,
                           articulation_profile=profile, mod_hz=None,
                           seed=seed * 1_000_003 + e_idx * 1009 + p)
            pid = f"e{e_idx + 1:02d}p{p + 1:02d}"
            plan.pieces.append((pid, ens.name, region, spec))
    return plan


def synth_corpus(n_ensembles: int, pieces_per_ensemble: int, region_assignment, out_dir,
                 **plan_kwargs) -> CorpusManifest:
    """Render a labeled corpus into ``out_dir``: one float WAV per piece plus
    ``manifest.json``.

    ``region_assignment`` is a region name (all ensembles), ``"by_ensemble"``
    (alternating), ``"orthogonal"`` (alternating within each ensemble, so
    region is independent of scale), or an explicit per-ensemble list.
    """
    plan = plan_corpus(n_ensembles, pieces_per_ensemble, region_assignment, **plan_kwargs)
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_dir}: {exc}") from exc
    entries = []
    for pid, ensemble, region, spec in plan.pieces:
        clip = synth_piece(spec, pid)
        path = write_wav(clip, out_dir / f"{pid}.wav")
        title = f"{spec.scale.name} {spec.articulation_profile} {pid}"
        entries.append(RecordingEntry(pid, path, title, ensemble, region))
    manifest = CorpusManifest(plan.name, entries)
    try:
        save_manifest(manifest, out_dir / "manifest.json")
    except OSError as exc:
        raise IoError(f"cannot write manifest in {out_dir}: {exc}") from exc
    return manifest
