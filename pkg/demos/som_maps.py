"""Self-organizing maps of a synthetic corpus, from audio to SVG.

Four ensembles each play eight pieces in their own scale, with half the
pieces of every ensemble given Indonesian articulation and half Western.
A tuning map should group pieces by ensemble, and an articulation map
should group them by region. Figures go to the directory given as the
first argument (default ``som_maps_out``).
"""
import sys
from pathlib import Path

from gamelansom.cli import main

out = Path(sys.argv[1] if len(sys.argv) > 1 else "som_maps_out")
steps = [
    ["synth", "--out", str(out / "corpus")],
    ["extract", "--manifest", str(out / "corpus" / "manifest.json"),
     "--out", str(out / "features.json"), "--jobs", "4"],
]
for mode in ("tuning", "articulation"):
    steps += [
        ["train", "--features", str(out / "features.json"), "--mode", mode,
         "--out", str(out / f"model_{mode}.json")],
        ["map", "--model", str(out / f"model_{mode}.json"), "--features", str(out / "features.json"),
         "--manifest", str(out / "corpus" / "manifest.json"), "--out", str(out / "figures")],
    ]
for argv in steps:
    print("gamelansom", " ".join(argv))
    if main(argv) != 0:
        sys.exit(1)
print("figures:", *sorted(p.name for p in (out / "figures").iterdir()))
