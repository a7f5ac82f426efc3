"""Self-organizing Kohonen maps on a rectangular grid.

Neurons are stored row-major: neuron ``y * width + x`` sits at cell
``(x, y)``. Training is the classic online rule with a Gaussian
neighbourhood and exponentially decaying learning rate and radius. Every
reduction that feeds a comparison runs in a fixed order, so a model is a
pure function of (data, params, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DegenerateDimension, DimMismatch, InvalidParams, IoError, MissingFeature,
                     MixedSampleRates, ParseError)

MODEL_FORMAT = "gamelansom.som/1"
ARTICULATION_FEATURES = ("centroid_std", "spread_std", "sharpness_mean")
# (dy, dx) offsets of the 8-connected neighbourhood
NEIGHBOURS = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0))


@dataclass(frozen=True)
class TrainingParams:
    width: int = 20
    height: int = 15
    epochs: int = 100
    lr_start: float = 0.5
    lr_end: float = 0.01
    radius_start: float | None = None
    radius_end: float = 1.0

    def __post_init__(self):
        if self.radius_start is None:
            object.__setattr__(self, "radius_start", max(self.width, self.height) / 2.0)

    def validate(self):
        if self.width < 2 or self.height < 2:
            raise InvalidParams(f"grid must be at least 2x2, got {self.width}x{self.height}")
        if self.epochs < 1:
            raise InvalidParams(f"epochs must be >= 1, got {self.epochs}")
        if not (self.lr_start > 0 and self.lr_end > 0):
            raise InvalidParams("learning rates must be positive")
        if not (self.radius_start > 0 and self.radius_end > 0):
            raise InvalidParams("radii must be positive")


@dataclass(eq=False)
class FeatureMatrix:
    ids: list[str]
    rows: np.ndarray
    feature_names: list[str]
    normalization: str = "none"
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    mode: str = ""
    raw: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]

    def normalize(self, x: np.ndarray) -> np.ndarray:
        """Apply this matrix's stored normalization to new vectors."""
        x = np.asarray(x, dtype=np.float64)
        if self.normalization != "zscore":
            return x
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (x - self.mean) / safe, 0.0)


@dataclass(frozen=True)
class Placement:
    recording_id: str
    cell: tuple[int, int]
    bmu_distance: float


@dataclass(frozen=True, eq=False)
class ComponentPlane:
    feature_index: int
    name: str
    values: np.ndarray


@dataclass(eq=False)
class SomModel:
    width: int
    height: int
    weights: np.ndarray
    seed: int
    params: TrainingParams
    feature_names: list[str] = field(default_factory=list)
    mode: str = ""
    normalization: dict = field(default_factory=lambda: {"kind": "none"})
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def grid(self) -> np.ndarray:
        """Weights as a (height, width, dim) array."""
        return self.weights.reshape(self.height, self.width, self.dim)

    def to_json(self) -> dict:
        params = asdict(self.params)
        return {
            "format": MODEL_FORMAT,
            "topology": "rectangular",
            "umatrix_neighbourhood": 8,
            "width": self.width,
            "height": self.height,
            "dim": self.dim,
            "seed": self.seed,
            "training_params": params,
            "mode": self.mode,
            "feature_names": list(self.feature_names),
            "normalization": self.normalization,
            "weights": self.weights.tolist(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SomModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ParseError(f"not a model file (format {doc.get('format')!r})")
        params = TrainingParams(**doc["training_params"])
        weights = np.asarray(doc["weights"], dtype=np.float64)
        if weights.shape != (doc["width"] * doc["height"], doc["dim"]):
            raise ParseError("model weights do not match grid dimensions")
        return cls(doc["width"], doc["height"], weights, doc["seed"], params,
                   doc.get("feature_names", []), doc.get("mode", ""),
                   doc.get("normalization", {"kind": "none"}), doc.get("provenance", {}))


def save_model(model: SomModel, path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(model.to_json(), indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write model {path}: {exc}") from exc
    return path


def load_model(path) -> SomModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return SomModel.from_json(doc)


def build_feature_matrix(features: dict, mode: str, allow_constant: bool = False) -> FeatureMatrix:
    """Collect SOM input rows from a feature document.

    ``features`` is the parsed feature file (see :mod:`gamelansom.features`).
    Tuning mode takes the unit-norm tuning vectors as they are; articulation
    mode z-scores (centroid_std, spread_std, sharpness_mean) per dimension
    with the population std. A zero-variance dimension raises
    DegenerateDimension unless ``allow_constant``, which maps it to 0.
    """
    records = features["records"] if isinstance(features, dict) else features
    if not records:
        raise MissingFeature("feature set holds no records")
    ids = [r["id"] for r in records]
    if mode == "tuning":
        vecs = []
        for r in records:
            values = (r.get("tuning") or {}).get("values")
            if values is None:
                raise MissingFeature(f"record {r['id']!r} has no tuning vector")
            vecs.append(np.asarray(values, dtype=np.float64))
        lengths = {v.size for v in vecs}
        if len(lengths) > 1:
            raise MixedSampleRates(f"tuning vectors have differing lengths {sorted(lengths)}")
        rows = np.vstack(vecs)
        names = [f"{f:.2f} Hz" for f in records[0]["tuning"].get("freqs", range(rows.shape[1]))]
        return FeatureMatrix(ids, rows, names, "none", mode=mode, raw=rows)
    if mode == "articulation":
        rows = []
        for r in records:
            art = r.get("articulation") or {}
            row = []
            for name in ARTICULATION_FEATURES:
                v = art.get(name)
                if v is None:
                    raise MissingFeature(f"record {r['id']!r} lacks {name}")
                row.append(float(v))
            rows.append(row)
        rows = np.asarray(rows, dtype=np.float64)
        if not np.all(np.isfinite(rows)):
            raise MissingFeature("articulation features must be finite")
        mean = np.array([math.fsum(c) / c.size for c in rows.T])
        std = np.array([math.sqrt(math.fsum((c - m) ** 2) / c.size) for c, m in zip(rows.T, mean)])
        flat = np.flatnonzero(std == 0)
        if flat.size and not allow_constant:
            names = [ARTICULATION_FEATURES[i] for i in flat]
            raise DegenerateDimension(f"zero variance across the corpus in {names}")
        matrix = FeatureMatrix(ids, rows, list(ARTICULATION_FEATURES), "zscore", mean, std, mode,
                               raw=rows)
        matrix.rows = matrix.normalize(rows)
        return matrix
    raise InvalidParams(f"unknown feature mode {mode!r}")


def matrix_for_model(model: "SomModel", features: dict) -> FeatureMatrix:
    """Feature rows in the model's mode, normalized with the model's stored statistics."""
    if model.mode not in ("tuning", "articulation"):
        raise InvalidParams(f"model has no usable feature mode ({model.mode!r})")
    matrix = build_feature_matrix(features, model.mode, allow_constant=True)
    if matrix.dim != model.dim:
        raise DimMismatch(f"features have dim {matrix.dim}, model has {model.dim}")
    norm = model.normalization
    if norm.get("kind") == "zscore":
        mean = np.asarray(norm["mean"], dtype=np.float64)
        std = np.asarray(norm["std"], dtype=np.float64)
        matrix = FeatureMatrix(matrix.ids, matrix.raw, matrix.feature_names, "zscore",
                               mean, std, matrix.mode, raw=matrix.raw)
        matrix.rows = matrix.normalize(matrix.raw)
    return matrix


def grid_coords(width: int, height: int) -> np.ndarray:
    """(n_neurons, 2) array of (x, y) cell coordinates in row-major order."""
    ys, xs = np.divmod(np.arange(width * height), width)
    return np.stack([xs, ys], axis=1).astype(np.float64)


def neighbourhood(grid_dist2: np.ndarray, radius: float) -> np.ndarray:
    return np.exp(-grid_dist2 / (2.0 * radius * radius))


def decay(start: float, end: float, step: int, total: int) -> float:
    """Exponential interpolation from ``start`` (step 0) to ``end`` (last step)."""
    if total <= 1:
        return start
    return start * (end / start) ** (step / (total - 1))


def _sq_dists(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    diff = weights - x
    return np.einsum("ij,ij->i", diff, diff)


def train(matrix: FeatureMatrix | np.ndarray, params: TrainingParams | None = None,
          seed: int = 0) -> SomModel:
    """Online SOM training.

    Weights start as rows drawn (with replacement) by the seeded generator;
    each epoch visits the rows in a fresh seeded permutation and applies
    ``w += lr(t) * h(t, d) * (x - w)`` to every neuron.
    """
    params = params or TrainingParams()
    params.validate()
    if isinstance(matrix, FeatureMatrix):
        data, names, mode = matrix.rows, list(matrix.feature_names), matrix.mode
        norm = {"kind": matrix.normalization}
        if matrix.normalization == "zscore":
            norm.update(mean=matrix.mean.tolist(), std=matrix.std.tolist())
    else:
        data, names, mode, norm = np.asarray(matrix, dtype=np.float64), [], "", {"kind": "none"}
    if data.ndim != 2 or data.shape[0] < 2:
        raise InvalidParams("training needs at least 2 rows")
    if not np.all(np.isfinite(data)):
        raise InvalidParams("training data must be finite")

    rng = np.random.default_rng(seed)
    n_neurons = params.width * params.height
    weights = data[rng.integers(0, data.shape[0], size=n_neurons)].copy()
    coords = grid_coords(params.width, params.height)
    total = params.epochs * data.shape[0]
    step = 0
    for _ in range(params.epochs):
        for i in rng.permutation(data.shape[0]):
            x = data[i]
            lr = decay(params.lr_start, params.lr_end, step, total)
            radius = decay(params.radius_start, params.radius_end, step, total)
            bmu = int(np.argmin(_sq_dists(weights, x)))
            d2 = ((coords - coords[bmu]) ** 2).sum(axis=1)
            h = lr * neighbourhood(d2, radius)
            weights += h[:, None] * (x - weights)
            step += 1
    return SomModel(params.width, params.height, weights, int(seed), params, names, mode, norm)


def best_match(model: SomModel, x, recording_id: str = "") -> Placement:
    """Cell of the nearest neuron; ties go to the lowest row-major index."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DimMismatch(f"vector has shape {x.shape}, model expects ({model.dim},)")
    d2 = _sq_dists(model.weights, x)
    idx = int(np.argmin(d2))
    y, xcell = divmod(idx, model.width)
    return Placement(recording_id, (xcell, y), float(math.sqrt(d2[idx])))


def place_all(model: SomModel, matrix: FeatureMatrix) -> list[Placement]:
    if matrix.dim != model.dim:
        raise DimMismatch(f"features have dim {matrix.dim}, model has {model.dim}")
    return [best_match(model, row, rid) for rid, row in zip(matrix.ids, matrix.rows)]


def u_matrix(model: SomModel) -> np.ndarray:
    """Mean Euclidean weight distance from each neuron to its 8-connected neighbours.

    Returns a (height, width) array. Neighbour distances are sorted before
    summing so the result does not depend on enumeration order (transposing
    the grid transposes the output exactly).
    """
    g = model.grid
    h, w, _ = g.shape
    dists = np.full((len(NEIGHBOURS), h, w), np.nan)
    for k, (dy, dx) in enumerate(NEIGHBOURS):
        ys = slice(max(0, -dy), h - max(0, dy))
        xs = slice(max(0, -dx), w - max(0, dx))
        ys2 = slice(max(0, dy), h - max(0, -dy))
        xs2 = slice(max(0, dx), w - max(0, -dx))
        diff = g[ys, xs] - g[ys2, xs2]
        dists[k, ys, xs] = np.sqrt(np.einsum("...i,...i->...", diff, diff))
    dists.sort(axis=0)
    count = np.sum(~np.isnan(dists), axis=0)
    total = np.zeros((h, w))
    for k in range(len(NEIGHBOURS)):
        total += np.nan_to_num(dists[k], nan=0.0)
    return total / count


def component_planes(model: SomModel, feature_names=None) -> list[ComponentPlane]:
    names = list(feature_names or model.feature_names)
    if len(names) != model.dim:
        names = [f"dim{k}" for k in range(model.dim)]
    g = model.grid
    return [ComponentPlane(k, names[k], g[:, :, k].copy()) for k in range(model.dim)]


def quantization_error(model: SomModel, matrix: FeatureMatrix | np.ndarray) -> float:
    """Mean distance from each row to its best-matching neuron."""
    rows = matrix.rows if isinstance(matrix, FeatureMatrix) else np.asarray(matrix, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.dim:
        raise DimMismatch(f"rows have shape {rows.shape}, model dim is {model.dim}")
    return math.fsum(best_match(model, r).bmu_distance for r in rows) / rows.shape[0]


def transpose(model: SomModel) -> SomModel:
    """The same map with x and y swapped."""
    g = model.grid.transpose(1, 0, 2)
    return SomModel(model.height, model.width, g.reshape(-1, model.dim).copy(), model.seed,
                    model.params, model.feature_names, model.mode, model.normalization,
                    model.provenance)
