"""Tuning fingerprints of three Balinese scales.

A short piece is synthesized in each scale, its band-limited tuning vector
is computed, and the five tallest peaks are compared with the scale table.
Each peak should sit within a few cents of a scale degree.
"""
import numpy as np

from gamelansom import SynthPieceSpec, pick_peaks, synth_piece, tuning_vector
from gamelansom.synthcorpus import BEGBEG, SEDENG, TIRUS

TONIC = 220.0

for scale in (TIRUS, BEGBEG, SEDENG):
    spec = SynthPieceSpec(scale=scale, tonic_hz=TONIC, duration_s=30.0, seed=1)
    tv = tuning_vector(synth_piece(spec))
    peaks = np.sort(pick_peaks(tv, n=5, f_range=(TONIC * 0.97, 2 * TONIC * 0.97)))
    cents = 1200 * np.log2(peaks / TONIC)
    print(f"{scale.name:7s} table  {np.array(scale.steps_cents[:-1]).round(0)}")
    print(f"{'':7s} found  {cents.round(1)}")
    # nearby scales differ by tens of cents, so the vectors themselves differ
    print(f"{'':7s} {len(tv)} bins, unit norm {np.linalg.norm(tv.values):.6f}")
