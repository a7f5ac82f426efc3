"""Form statistics over a corpus: medians of trajectory-spectrum scalars and outlier flags."""

from __future__ import annotations

from .corpus import CorpusManifest
from .errors import InconsistentInputs, MissingFeature
from .viz import median

FORM_FIELDS = ("peak_hz", "centroid_hz")


def form_values(features: dict, field: str) -> dict[str, float]:
    """``{id: value}`` for records whose form scalar is defined (FlatTrajectory gives null)."""
    out = {}
    for rec in features["records"]:
        form = rec.get("form")
        if form is None or field not in form:
            raise MissingFeature(f"record {rec['id']!r} has no form scalars")
        if form[field] is not None:
            out[rec["id"]] = float(form[field])
    return out


def build_report(features: dict, manifest: CorpusManifest, flag_factor: float = 10.0) -> dict:
    """Per-ensemble and corpus medians of peak_hz and centroid_hz.

    Pieces whose peak_hz exceeds ``flag_factor`` times the corpus median are
    flagged as showing no clear large-scale form.
    """
    entries = manifest.by_id()
    for rec in features["records"]:
        if rec["id"] not in entries:
            raise InconsistentInputs(f"feature record {rec['id']!r} not in manifest")
    values = {f: form_values(features, f) for f in FORM_FIELDS}
    if not values["peak_hz"]:
        raise MissingFeature("no piece has a defined trajectory-spectrum peak")
    corpus = {f"median_{f}": median(values[f].values()) for f in FORM_FIELDS}
    corpus["n"] = len(values["peak_hz"])

    ensembles = sorted({entries[r["id"]].ensemble for r in features["records"]})
    per_ensemble = {}
    for ens in ensembles:
        stats = {}
        for f in FORM_FIELDS:
            vals = [v for rid, v in values[f].items() if entries[rid].ensemble == ens]
            stats[f"median_{f}"] = median(vals) if vals else None
        stats["n"] = sum(entries[rid].ensemble == ens for rid in values["peak_hz"])
        per_ensemble[ens] = stats

    threshold = flag_factor * corpus["median_peak_hz"]
    pieces, flagged, undefined = [], [], []
    for rec in features["records"]:
        rid = rec["id"]
        e = entries[rid]
        peak = values["peak_hz"].get(rid)
        flag = peak is not None and peak > threshold
        if peak is None:
            undefined.append(rid)
        if flag:
            flagged.append(rid)
        pieces.append({"id": rid, "ensemble": e.ensemble, "region": e.region,
                       "peak_hz": peak, "centroid_hz": values["centroid_hz"].get(rid),
                       "flagged": flag})
    return {"corpus": corpus, "per_ensemble": per_ensemble, "flag_factor": flag_factor,
            "flag_threshold_hz": threshold, "flagged": flagged, "undefined": undefined,
            "pieces": pieces}
