"""Tuning and timbre analysis of music corpora with self-organizing maps."""

__version__ = "0.1.0"

from .corpus import (AudioClip, CorpusManifest, RecordingEntry, decode_audio, load_manifest,
                     save_manifest, write_wav)
from .errors import GamelanSomError
from .features import ExtractionParams, extract_clip, extract_corpus
from .som import (FeatureMatrix, Placement, SomModel, TrainingParams, best_match,
                  build_feature_matrix, component_planes, place_all, quantization_error, train,
                  u_matrix)
from .spectral import frame_signal, magnitude_spectrum, pick_peaks, tuning_vector
from .synthcorpus import ScaleSpec, SynthPieceSpec, synth_corpus, synth_piece, synth_tone
from .timbre import (articulation_vector, sharpness, spectral_centroid, spectral_spread,
                     timbre_trajectory, trajectory_spectrum)
from .viz import plot_component_planes, plot_scalar_by_ensemble, plot_som_map

__all__ = [
    "AudioClip", "CorpusManifest", "RecordingEntry", "decode_audio", "load_manifest",
    "save_manifest", "write_wav", "GamelanSomError", "ExtractionParams", "extract_clip",
    "extract_corpus", "FeatureMatrix", "Placement", "SomModel", "TrainingParams", "best_match",
    "build_feature_matrix", "component_planes", "place_all", "quantization_error", "train", "u_matrix",
    "frame_signal", "magnitude_spectrum", "pick_peaks", "tuning_vector", "ScaleSpec",
    "SynthPieceSpec", "synth_corpus", "synth_piece", "synth_tone", "articulation_vector",
    "sharpness", "spectral_centroid", "spectral_spread", "timbre_trajectory",
    "trajectory_spectrum", "plot_component_planes", "plot_scalar_by_ensemble", "plot_som_map",
]
