"""Command-line pipeline: synth, extract, train, map, plot, report.

Every artifact carries a provenance block with the hashes of the files it
was computed from; a stage fed inputs that disagree with those hashes stops
with ProvenanceMismatch. Exit status is 0 only when every entry succeeded;
partial results are still written.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import (config_hash, dump_json, extraction_params, file_hash, load_config,
                     parse_grid, provenance, read_json, training_params)
from .corpus import load_manifest, save_manifest
from .errors import GamelanSomError, IoError, ProvenanceMismatch
from .features import extract_corpus, feature_document
from .report import build_report, form_values
from .som import (build_feature_matrix, load_model, matrix_for_model, place_all,
                  quantization_error, save_model, train, u_matrix)
from .synthcorpus import synth_corpus
from .viz import (embed_metadata, figure_name, plot_component_planes, plot_scalar_by_ensemble,
                  plot_som_map)


def _overrides(args) -> dict:
    o: dict = {}
    if getattr(args, "seed", None) is not None:
        o.setdefault("synth", {})["seed"] = args.seed
        o.setdefault("som", {})["seed"] = args.seed
    if getattr(args, "grid", None):
        w, h = parse_grid(args.grid)
        o.setdefault("som", {}).update(width=w, height=h)
    if getattr(args, "epochs", None) is not None:
        o.setdefault("som", {})["epochs"] = args.epochs
    if getattr(args, "jobs", None) is not None:
        o.setdefault("run", {})["jobs"] = args.jobs
    return o


def _mkdir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {path}: {exc}") from exc
    return path


def _write_text(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def _check(expected: str | None, path, what: str):
    if expected is not None and expected != file_hash(path):
        raise ProvenanceMismatch(f"{path} does not match the {what} this artifact was built from")


def cmd_synth(cfg: dict, out_dir) -> Path:
    s = cfg["synth"]
    out_dir = Path(out_dir)
    manifest = synth_corpus(int(s["n_ensembles"]), int(s["pieces_per_ensemble"]),
                            s["region_assignment"], out_dir, seed=int(s["seed"]),
                            duration_s=float(s["duration_s"]), note_rate_hz=float(s["note_rate_hz"]),
                            indonesian_profiles=tuple(s["indonesian_profiles"]),
                            name=str(s["corpus_name"]))
    path = out_dir / "manifest.json"
    try:
        save_manifest(manifest, path, provenance(cfg, "synth", seed=int(s["seed"])))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def cmd_extract(cfg: dict, manifest_path, out_path) -> tuple[Path, int]:
    """Write the feature file; returns its path and the number of failed entries."""
    manifest = load_manifest(manifest_path)
    params = extraction_params(cfg)
    records, errors = extract_corpus(manifest, params, jobs=int(cfg["run"]["jobs"]))
    prov = provenance(cfg, "extraction", {"manifest": manifest_path})
    doc = feature_document(records, errors, params, prov)
    doc["corpus_name"] = manifest.corpus_name
    dump_json(doc, out_path)
    return Path(out_path), len(errors)


def cmd_train(cfg: dict, features_path, mode: str, out_path, allow_constant: bool = False) -> Path:
    features = read_json(features_path)
    matrix = build_feature_matrix(features, mode, allow_constant=allow_constant)
    seed = int(cfg["som"]["seed"])
    model = train(matrix, training_params(cfg), seed=seed)
    prov = provenance(cfg, "som", {"features": features_path}, seed=seed)
    prov["feature_mode"] = mode
    prov["extraction_config_sha256"] = features.get("provenance", {}).get("config_sha256")
    prov["corpus_name"] = features.get("corpus_name", "corpus")
    model.provenance = prov
    save_model(model, out_path)
    return Path(out_path)


def _load_stage_inputs(model_path, features_path, manifest_path):
    model = load_model(model_path)
    features = read_json(features_path)
    manifest = load_manifest(manifest_path)
    matrix = matrix_for_model(model, features)
    _check(model.provenance.get("features_sha256"), features_path, "feature file")
    _check(features.get("provenance", {}).get("manifest_sha256"), manifest_path, "manifest")
    return model, features, manifest, matrix


def _figures(model, placements, manifest, meta: dict) -> dict[str, str]:
    corpus = manifest.corpus_name
    mode = model.mode
    title = f"{corpus}: {mode} SOM {model.width}x{model.height}, seed {model.seed}"
    return {
        figure_name(corpus, "map", mode):
            embed_metadata(plot_som_map(model, u_matrix(model), placements, manifest, title=title), meta),
        figure_name(corpus, "planes", mode):
            embed_metadata(plot_component_planes(model, title=f"{corpus}: component planes ({mode})"), meta),
    }


def _stage_meta(model_path, features_path, manifest_path) -> dict:
    return {"tool": "gamelansom", "model_sha256": file_hash(model_path),
            "features_sha256": file_hash(features_path), "manifest_sha256": file_hash(manifest_path)}


def cmd_map(cfg: dict, model_path, features_path, manifest_path, out_dir, plots: bool = True
            ) -> list[Path]:
    model, features, manifest, matrix = _load_stage_inputs(model_path, features_path, manifest_path)
    placements = place_all(model, matrix)
    meta = _stage_meta(model_path, features_path, manifest_path)
    out_dir = _mkdir(Path(out_dir))
    doc = {"format": "gamelansom.placements/1", "mode": model.mode,
           "width": model.width, "height": model.height,
           "quantization_error": quantization_error(model, matrix),
           "placements": [{"id": p.recording_id, "cell": list(p.cell), "bmu_distance": p.bmu_distance}
                          for p in placements],
           "provenance": meta}
    written = [dump_json(doc, out_dir / f"{manifest.corpus_name}_placements_{model.mode}.json")]
    if plots:
        for name, svg in _figures(model, placements, manifest, meta).items():
            written.append(_write_text(out_dir / name, svg))
    return written


def cmd_plot(cfg: dict, model_path, features_path, manifest_path, out_dir) -> list[Path]:
    model, features, manifest, matrix = _load_stage_inputs(model_path, features_path, manifest_path)
    placements = place_all(model, matrix)
    meta = _stage_meta(model_path, features_path, manifest_path)
    out_dir = _mkdir(Path(out_dir))
    return [_write_text(out_dir / name, svg)
            for name, svg in _figures(model, placements, manifest, meta).items()]


def cmd_report(cfg: dict, features_path, manifest_path, out_dir) -> list[Path]:
    features = read_json(features_path)
    manifest = load_manifest(manifest_path)
    _check(features.get("provenance", {}).get("manifest_sha256"), manifest_path, "manifest")
    report = build_report(features, manifest, float(cfg["report"]["flag_factor"]))
    meta = {"tool": "gamelansom", "features_sha256": file_hash(features_path),
            "manifest_sha256": file_hash(manifest_path),
            "config_sha256": config_hash(cfg["report"]), "config": cfg["report"]}
    report["provenance"] = meta
    out_dir = _mkdir(Path(out_dir))
    corpus = manifest.corpus_name
    written = [dump_json(report, out_dir / f"{corpus}_report_form.json")]
    peaks = form_values(features, "peak_hz")
    cents = form_values(features, "centroid_hz")
    svgs = {
        figure_name(corpus, "peak", "form"): plot_scalar_by_ensemble(
            peaks, manifest, "most prominent peak (Hz)", log_y=True,
            title=f"{corpus}: trajectory spectrum peak"),
        figure_name(corpus, "centroid", "form"): plot_scalar_by_ensemble(
            cents, manifest, "trajectory spectrum centroid (Hz)",
            title=f"{corpus}: trajectory spectrum centroid"),
    }
    for name, svg in svgs.items():
        written.append(_write_text(out_dir / name, embed_metadata(svg, meta)))
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gamelansom",
                                description="Tuning and timbre SOM analysis of music corpora.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--seed", type=int)
        return sp

    sp = common(sub.add_parser("synth", help="render a labeled synthetic corpus"))
    sp.add_argument("--out", required=True, help="output directory")

    sp = common(sub.add_parser("extract", help="extract features for every manifest entry"))
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", default="features.json")
    sp.add_argument("--jobs", type=int, help="extraction worker threads")

    sp = common(sub.add_parser("train", help="train a SOM on a feature file"))
    sp.add_argument("--features", required=True)
    sp.add_argument("--mode", choices=("tuning", "articulation"), required=True)
    sp.add_argument("--out")
    sp.add_argument("--grid", help="grid size as WxH, e.g. 20x15")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--allow-constant", action="store_true",
                    help="map zero-variance articulation dimensions to 0")

    for name, helptext in (("map", "place pieces on a trained map, write placements and figures"),
                           ("plot", "render map and component-plane figures")):
        sp = common(sub.add_parser(name, help=helptext))
        sp.add_argument("--model", required=True)
        sp.add_argument("--features", required=True)
        sp.add_argument("--manifest", required=True)
        sp.add_argument("--out", default=".")

    sp = common(sub.add_parser("report", help="form statistics and strip plots"))
    sp.add_argument("--features", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", default=".")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        status = 0
        if args.command == "synth":
            outputs = [cmd_synth(cfg, args.out)]
        elif args.command == "extract":
            path, n_failed = cmd_extract(cfg, args.manifest, args.out)
            outputs = [path]
            if n_failed:
                print(f"error: {n_failed} entries failed, see 'errors' in {path}", file=sys.stderr)
                status = 1
        elif args.command == "train":
            out = args.out or f"model_{args.mode}.json"
            outputs = [cmd_train(cfg, args.features, args.mode, out, args.allow_constant)]
        elif args.command == "map":
            outputs = cmd_map(cfg, args.model, args.features, args.manifest, args.out)
        elif args.command == "plot":
            outputs = cmd_plot(cfg, args.model, args.features, args.manifest, args.out)
        else:
            outputs = cmd_report(cfg, args.features, args.manifest, args.out)
    except GamelanSomError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for path in outputs:
        print(path)
    return status


if __name__ == "__main__":
    sys.exit(main())
