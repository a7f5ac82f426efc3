from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamelansom.errors import (DegenerateDimension, DimMismatch, InvalidParams, MissingFeature,
                               MixedSampleRates)
from gamelansom.som import (SomModel, TrainingParams, best_match, build_feature_matrix,
                            component_planes, grid_coords, load_model, matrix_for_model,
                            neighbourhood, place_all, quantization_error, save_model, train,
                            transpose, u_matrix)


def art_records(rows):
    return {"records": [{"id": f"r{i}", "articulation": dict(zip(
        ("centroid_std", "spread_std", "sharpness_mean"), row))} for i, row in enumerate(rows)]}


def tuning_records(lengths):
    return {"records": [{"id": f"r{i}", "tuning": {"values": list(np.ones(n) / np.sqrt(n))}}
                        for i, n in enumerate(lengths)]}


def test_zscore_two_points():
    fm = build_feature_matrix(art_records([(1, 2, 3), (3, 2, 5)]), "articulation", allow_constant=True)
    np.testing.assert_array_equal(fm.rows, [[-1, 0, -1], [1, 0, 1]])
    assert fm.normalization == "zscore"
    np.testing.assert_array_equal(fm.mean, [2, 2, 4])
    np.testing.assert_array_equal(fm.std, [1, 0, 1])
    with pytest.raises(DegenerateDimension):
        build_feature_matrix(art_records([(1, 2, 3), (3, 2, 5)]), "articulation")


def test_missing_sharpness():
    recs = art_records([(1, 2, 3), (3, 4, 5)])
    del recs["records"][1]["articulation"]["sharpness_mean"]
    with pytest.raises(MissingFeature):
        build_feature_matrix(recs, "articulation")


def test_mixed_tuning_lengths():
    with pytest.raises(MixedSampleRates):
        build_feature_matrix(tuning_records([720, 468]), "tuning")
    fm = build_feature_matrix(tuning_records([468, 468]), "tuning")
    assert fm.dim == 468 and fm.normalization == "none"


def test_repeated_row_is_fixed_point():
    row = np.array([0.2, -0.7, 1.5, 3.0])
    model = train(np.tile(row, (6, 1)), TrainingParams(6, 4, epochs=15), seed=2)
    assert np.abs(model.weights - row).max() <= 1e-6
    assert quantization_error(model, row[None, :]) <= 1e-6


def two_clusters(rng, sep=10.0, dim=3, n=20, axis=0):
    a = rng.normal(0, 1, (n, dim))
    b = rng.normal(0, 1, (n, dim))
    b[:, axis] += sep
    return a, b


@pytest.fixture(scope="module")
def cluster_model():
    a, b = two_clusters(np.random.default_rng(4))
    return train(np.vstack([a, b]), TrainingParams(20, 15), seed=1), a, b


def test_two_clusters_disjoint(cluster_model):
    model, a, b = cluster_model
    cells_a = {best_match(model, x).cell for x in a}
    cells_b = {best_match(model, x).cell for x in b}
    assert not cells_a & cells_b


def test_ridge_lies_between_clusters(cluster_model):
    model, a, b = cluster_model
    u = u_matrix(model)
    y, x = np.unravel_index(np.argmax(u), u.shape)
    ridge = model.grid[y, x]
    ca, cb = a.mean(axis=0), b.mean(axis=0)
    # the ridge neuron's weight sits between the cluster means along the split axis
    assert ca[0] + 2 < ridge[0] < cb[0] - 2


def test_separating_plane_has_largest_contrast(cluster_model):
    model, a, b = cluster_model
    cells_a = [best_match(model, x).cell for x in a]
    cells_b = [best_match(model, x).cell for x in b]
    contrast = []
    for plane in component_planes(model):
        va = np.mean([plane.values[y, x] for x, y in cells_a])
        vb = np.mean([plane.values[y, x] for x, y in cells_b])
        contrast.append(abs(va - vb))
    assert int(np.argmax(contrast)) == 0


def test_separation_at_six_sigma():
    rng = np.random.default_rng(11)
    pure = 0
    for seed in range(10):
        a, b = two_clusters(rng, sep=6.0)
        model = train(np.vstack([a, b]), TrainingParams(20, 15), seed=seed)
        ca = {best_match(model, x).cell for x in a}
        cb = {best_match(model, x).cell for x in b}
        pure += not ca & cb
    assert pure >= 9


def test_training_is_deterministic_across_threads():
    data = np.random.default_rng(0).normal(size=(25, 5))
    with ThreadPoolExecutor(4) as pool:
        models = list(pool.map(lambda _: train(data, TrainingParams(7, 5, epochs=10), seed=3), range(4)))
    ref = train(data, TrainingParams(7, 5, epochs=10), seed=3)
    for m in models:
        assert m.weights.tobytes() == ref.weights.tobytes()
    other = train(data, TrainingParams(7, 5, epochs=10), seed=4)
    assert other.weights.tobytes() != ref.weights.tobytes()


def test_invalid_params():
    data = np.zeros((3, 2))
    for params in (TrainingParams(1, 5), TrainingParams(5, 5, epochs=0),
                   TrainingParams(5, 5, lr_start=0.0)):
        with pytest.raises(InvalidParams):
            train(data, params)
    with pytest.raises(InvalidParams):
        train(np.zeros((1, 2)), TrainingParams(3, 3))


def grid_model(width, height, weights):
    return SomModel(width, height, np.asarray(weights, dtype=float), 0, TrainingParams(2, 2))


def test_best_match_examples():
    w = np.arange(5 * 6 * 2, dtype=float).reshape(30, 2)
    model = grid_model(5, 6, w)
    target = w[4 * 5 + 3]
    p = best_match(model, target)
    assert p.cell == (3, 4) and p.bmu_distance == 0.0
    ring = grid_model(2, 2, [[1, 0], [0, 1], [-1, 0], [0, -1]])
    assert best_match(ring, [0, 0]).cell == (0, 0)
    with pytest.raises(DimMismatch):
        best_match(model, [1.0, 2.0, 3.0])


def test_u_matrix_examples():
    assert not u_matrix(grid_model(3, 4, np.ones((12, 3)))).any()
    d = 2.5
    u = u_matrix(grid_model(2, 1, [[0.0, 0.0], [d, 0.0]]))
    np.testing.assert_array_equal(u, [[d, d]])
    # corner of a 3x3 grid averages its three neighbours
    w = np.zeros((9, 1))
    w[1], w[3], w[4] = 1.0, 2.0, 3.0
    assert u_matrix(grid_model(3, 3, w))[0, 0] == pytest.approx(2.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(2, 7), st.integers(0, 2 ** 31))
def test_u_matrix_transpose_symmetry(w, h, seed):
    weights = np.random.default_rng(seed).normal(size=(w * h, 3))
    model = grid_model(w, h, weights)
    assert np.array_equal(u_matrix(transpose(model)), u_matrix(model).T)
    assert np.all(u_matrix(model) >= 0)


def test_component_planes():
    model = grid_model(4, 3, np.random.default_rng(0).normal(size=(12, 3)))
    planes = component_planes(model, ["a", "b", "c"])
    assert len(planes) == 3 and [p.name for p in planes] == ["a", "b", "c"]
    assert planes[2].values[1, 3] == model.weights[1 * 4 + 3, 2]


def test_quantization_error():
    w = np.random.default_rng(1).normal(size=(6, 2))
    model = grid_model(3, 2, w)
    assert quantization_error(model, w[[0, 3, 5]]) == 0.0
    with pytest.raises(DimMismatch):
        quantization_error(model, np.zeros((2, 3)))


def test_quantization_error_shrinks_with_grid():
    rng = np.random.default_rng(5)
    small, large = [], []
    for seed in range(10):
        data = rng.normal(size=(40, 3))
        small.append(quantization_error(train(data, TrainingParams(2, 2, epochs=30), seed=seed), data))
        large.append(quantization_error(train(data, TrainingParams(10, 10, epochs=30), seed=seed), data))
    assert np.mean(large) < np.mean(small)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([0.25, 0.5, 2.0, 4.0]), st.integers(0, 1000))
def test_bmu_invariant_under_scaling(alpha, seed):
    data = np.random.default_rng(seed).normal(size=(12, 3))
    params = TrainingParams(5, 4, epochs=5)
    m1 = train(data, params, seed=seed)
    m2 = train(alpha * data, params, seed=seed)
    assert [best_match(m1, x).cell for x in data] == [best_match(m2, alpha * x).cell for x in data]


def test_neighbourhood_strictly_decreasing():
    # grid distances on a 20x15 map stay below 25 cells
    d2 = np.linspace(0, 25, 200) ** 2
    for radius in (1.0, 3.0, 10.0):
        assert np.all(np.diff(neighbourhood(d2, radius)) < 0)


def test_grid_coords_row_major():
    c = grid_coords(3, 2)
    assert c[4].tolist() == [1, 1] and c[2].tolist() == [2, 0]


def test_model_json_round_trip(tmp_path):
    data = np.random.default_rng(2).normal(size=(10, 3))
    model = train(data, TrainingParams(4, 3, epochs=3), seed=9)
    model.provenance = {"x": 1}
    path = save_model(model, tmp_path / "m.json")
    back = load_model(path)
    assert back.weights.tobytes() == model.weights.tobytes()
    assert (back.width, back.height, back.seed, back.params) == (4, 3, 9, model.params)
    assert back.provenance == {"x": 1}


def test_matrix_for_model_reuses_training_statistics():
    recs = art_records([(1, 10, 3), (3, 20, 5), (5, 60, 4)])
    fm = build_feature_matrix(recs, "articulation")
    model = train(fm, TrainingParams(3, 3, epochs=2), seed=0)
    again = matrix_for_model(model, recs)
    np.testing.assert_array_equal(again.rows, fm.rows)
    subset = {"records": recs["records"][:2]}
    np.testing.assert_array_equal(matrix_for_model(model, subset).rows, fm.rows[:2])
    assert [p.recording_id for p in place_all(model, again)] == ["r0", "r1", "r2"]
