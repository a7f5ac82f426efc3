"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test reports one PASS/FAIL line (collected in the terminal summary).
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from gamelansom.cli import main
from gamelansom.corpus import AudioClip, RecordingEntry
from gamelansom.features import extract_clip
from gamelansom.som import (SomModel, TrainingParams, best_match, build_feature_matrix,
                            component_planes, place_all, train, transpose, u_matrix)
from gamelansom.spectral import pick_peaks, tuning_vector
from gamelansom.synthcorpus import (BEGBEG, SEDENG, TIRUS, SynthPieceSpec, plan_corpus,
                                    synth_piece)
from gamelansom.timbre import (TimbreTrajectory, spectral_centroid, spectral_spread,
                               timbre_trajectory, trajectory_spectrum)

SEEDS = range(10)


def nearest_other_label(cells, labels):
    """Fraction of pieces whose nearest other piece on the grid shares their label."""
    c = np.asarray(cells, dtype=float)
    hits = 0
    for i in range(len(c)):
        d = np.hypot(*(c - c[i]).T)
        d[i] = np.inf
        hits += labels[int(np.argmin(d))] == labels[i]
    return hits / len(c)


@pytest.fixture(scope="module")
def orthogonal_corpus():
    """4 ensembles x 8 pieces; region alternates within every ensemble.

    Indonesian pieces carry articulated/large_form profiles, Western pieces
    are flat, so region is independent of scale but tied to articulation.
    """
    t0 = time.perf_counter()
    plan = plan_corpus(4, 8, "orthogonal", seed=0)
    records = []
    for pid, ens, region, spec in plan.pieces:
        feats = extract_clip(synth_piece(spec, pid))
        records.append(feats.to_record(RecordingEntry(pid, Path(pid), pid, ens, region)))
    return {"records": records}, time.perf_counter() - t0


# 1 ---------------------------------------------------------------------------

def naive_moments(freqs, mags):
    total = 0.0
    weighted = 0.0
    for f, a in zip(freqs, mags):
        total += a
        weighted += f * a
    c = weighted / total
    var = 0.0
    for f, a in zip(freqs, mags):
        var += (f - c) ** 2 * a
    return c, math.sqrt(var / total)


def naive_trajectory_scalars(x, frame_rate, pad_factor=4):
    n = len(x)
    mean = sum(x) / n
    w = [0.5 - 0.5 * math.cos(2 * math.pi * i / (n - 1)) for i in range(n)]
    y = [(v - mean) * wi for v, wi in zip(x, w)]
    n_fft = 1
    while n_fft < pad_factor * n:
        n_fft *= 2
    bin_hz = frame_rate / n_fft
    min_hz = frame_rate / n
    best, best_f, num, den = -1.0, None, 0.0, 0.0
    for k in range(1, n_fft // 2 + 1):
        f = k * bin_hz
        if f < min_hz * (1 - 1e-12):
            continue
        re = sum(y[t] * math.cos(2 * math.pi * k * t / n_fft) for t in range(n))
        im = -sum(y[t] * math.sin(2 * math.pi * k * t / n_fft) for t in range(n))
        m = math.hypot(re, im)
        if m > best:
            best, best_f = m, f
        num += f * m
        den += m
    return best_f, num / den


def test_criterion_1_feature_oracles(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 65))
        freqs = np.sort(rng.uniform(0, 22050, n))
        mags = rng.uniform(0, 1, n)
        mags[rng.integers(0, n)] += 0.1
        c, s = naive_moments(freqs, mags)
        got_c = spectral_centroid((freqs, mags))
        got_s = spectral_spread((freqs, mags))
        worst = max(worst, abs(got_c - c) / abs(c), abs(got_s - s) / max(abs(s), 1e-300))
    traj_worst = 0.0
    for _ in range(40):
        n = int(rng.integers(8, 65))
        fr = 44100 / 8192
        x = rng.normal(1000, 50, n)
        traj = TimbreTrajectory(x, np.zeros(n), np.zeros(n), fr)
        ts = trajectory_spectrum(traj)
        pk, ce = naive_trajectory_scalars(list(x), fr)
        traj_worst = max(traj_worst, abs(ts.peak_hz - pk) / pk, abs(ts.centroid_hz - ce) / ce)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and traj_worst <= 1e-9 and elapsed < 5
    record_criterion(1, ok, f"moments rel err {worst:.2e}, trajectory rel err {traj_worst:.2e}, "
                            f"{elapsed:.1f}s")
    assert ok


# 2 ---------------------------------------------------------------------------

def random_clip(rng, sr=44100):
    n = 16384 + int(rng.integers(8, 14)) * 8192
    t = np.arange(n) / sr
    x = np.zeros(n)
    for _ in range(int(rng.integers(1, 6))):
        f = rng.uniform(40, 8000)
        am = 1 + rng.uniform(0, 0.9) * np.sin(2 * np.pi * rng.uniform(0.1, 3) * t)
        x += rng.uniform(0.05, 0.3) * am * np.sin(2 * np.pi * f * t + rng.uniform(0, 6.3))
    x += rng.uniform(0, 0.02) * rng.standard_normal(n)
    return AudioClip(x / max(1.0, np.abs(x).max() * 1.01) * 0.9, sr, "r")


def test_criterion_2_gain_invariance(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        clip = random_clip(rng)
        base = extract_clip(clip)
        for alpha in (0.1, 0.5, 2.0):
            other = extract_clip(clip.scaled(alpha))
            tv = np.linalg.norm(other.tuning.values - base.tuning.values)
            errs = [tv / np.linalg.norm(base.tuning.values)]
            for a, b in zip(other.articulation.as_array(), base.articulation.as_array()):
                errs.append(abs(a - b) / abs(b))
            for a, b in ((other.form.peak_hz, base.form.peak_hz),
                         (other.form.centroid_hz, base.form.centroid_hz)):
                errs.append(abs(a - b) / abs(b))
            worst = max(worst, max(errs))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 30
    record_criterion(2, ok, f"worst relative change {worst:.2e} over 100 clips x 3 gains, "
                            f"{elapsed:.1f}s")
    assert ok


# 3 and 4 ---------------------------------------------------------------------

def test_criteria_3_4_tuning_clusters_and_region_chance(orthogonal_corpus, record_criterion):
    features, extract_s = orthogonal_corpus
    t0 = time.perf_counter()
    matrix = build_feature_matrix(features, "tuning")
    ens = [r["ensemble"] for r in features["records"]]
    reg = np.array([r["region"] for r in features["records"]])
    same = np.equal.outer(ens, ens)
    off = ~np.eye(len(ens), dtype=bool)
    good3, accs, detail = 0, [], []
    for seed in SEEDS:
        model = train(matrix, TrainingParams(20, 15), seed=seed)
        cells = np.array([p.cell for p in place_all(model, matrix)], dtype=float)
        d = np.hypot(*(cells[:, None] - cells[None]).transpose(2, 0, 1))
        within, between = d[same & off].mean(), d[~same].mean()
        purity = nearest_other_label(cells, ens)
        good3 += within < between and purity >= 0.9
        centroids = {g: cells[reg == g].mean(axis=0) for g in ("Indonesian", "Western")}
        pred = np.array([min(centroids, key=lambda g: np.hypot(*(c - centroids[g]))) for c in cells])
        accs.append(float(np.mean(pred == reg)))
        detail.append(f"{within:.1f}/{between:.1f}/{purity:.2f}")
    elapsed = extract_s + time.perf_counter() - t0
    ok3 = good3 >= 9 and elapsed < 600
    in_band = sum(abs(a - 0.5) <= 0.15 for a in accs)
    ok4 = in_band >= 9 and abs(np.mean(accs) - 0.5) <= 0.15
    record_criterion(3, ok3, f"{good3}/10 seeds clustered (within/between/purity {detail[0]} ...), "
                             f"{elapsed:.0f}s")
    record_criterion(4, ok4, f"region accuracy per seed {[round(a, 3) for a in accs]}, "
                             f"{in_band}/10 within 0.5+-0.15, mean {np.mean(accs):.3f}")
    assert ok3 and ok4


# 5 ---------------------------------------------------------------------------

def test_criterion_5_articulation_separation(orthogonal_corpus, record_criterion):
    features, extract_s = orthogonal_corpus
    t0 = time.perf_counter()
    matrix = build_feature_matrix(features, "articulation")
    reg = np.array([r["region"] for r in features["records"]])
    good, purities = 0, []
    for seed in SEEDS:
        model = train(matrix, TrainingParams(20, 15), seed=seed)
        cells = [p.cell for p in place_all(model, matrix)]
        purity = nearest_other_label(cells, list(reg))
        plane = component_planes(model)[0]
        assert plane.name == "centroid_std"
        vals = np.array([plane.values[y, x] for x, y in cells])
        plane_ok = vals[reg == "Indonesian"].mean() > vals[reg == "Western"].mean()
        # top-decile cells lie nearer to Indonesian BMUs than to Western ones
        flat = plane.values.ravel()
        top = np.flatnonzero(flat >= np.quantile(flat, 0.9))
        c = np.asarray(cells, dtype=float)
        near = [reg[int(np.argmin(np.hypot(*(c - [k % model.width, k // model.width]).T)))]
                for k in top]
        decile_ok = np.mean(np.array(near) == "Indonesian") > 0.5
        purities.append(purity)
        good += purity >= 0.9 and plane_ok and decile_ok
    elapsed = extract_s + time.perf_counter() - t0
    ok = good >= 9 and elapsed < 300
    record_criterion(5, ok, f"{good}/10 seeds with region purity >= 0.9 and Indonesian-side "
                            f"centroid_std plane (min purity {min(purities):.2f}), {elapsed:.0f}s")
    assert ok


# 6 ---------------------------------------------------------------------------

def test_criterion_6_form_regime_detection(record_criterion):
    t0 = time.perf_counter()
    slow, fast = [], []
    scales = (TIRUS, BEGBEG, SEDENG)
    for i in range(20):
        scale = scales[i % 3]
        base = SynthPieceSpec(scale=scale, tonic_hz=196 + 7 * i, ombak_hz=2.5 + 0.075 * i, seed=100 + i)
        slow_spec = replace(base, articulation_profile="large_form", mod_hz=None, duration_s=200.0)
        fast_spec = replace(base, articulation_profile="articulated", mod_hz=None, duration_s=60.0)
        slow.append(trajectory_spectrum(timbre_trajectory(synth_piece(slow_spec))).peak_hz)
        fast.append(trajectory_spectrum(timbre_trajectory(synth_piece(fast_spec))).peak_hz)
    elapsed = time.perf_counter() - t0
    ok = (all(0.005 <= p <= 0.02 for p in slow) and all(0.4 <= p <= 0.6 for p in fast)
          and max(slow) < min(fast) and elapsed < 300)
    record_criterion(6, ok, f"0.01 Hz pieces peak in [{min(slow):.4f}, {max(slow):.4f}] Hz, "
                            f"0.5 Hz pieces in [{min(fast):.4f}, {max(fast):.4f}] Hz, {elapsed:.0f}s")
    assert ok


# 7 ---------------------------------------------------------------------------

def test_criterion_7_scale_fidelity(record_criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for scale in (TIRUS, BEGBEG, SEDENG):
        spec = SynthPieceSpec(scale=scale, tonic_hz=220.0, duration_s=30.0, seed=3)
        tv = tuning_vector(synth_piece(spec))
        lo, hi = 220.0 * 2 ** (-50 / 1200), 220.0 * 2 ** (1150 / 1200)
        peaks = np.sort(pick_peaks(tv, n=5, f_range=(lo, hi)))
        cents = 1200 * np.log2(peaks / 220.0)
        assert peaks.size == 5
        worst = max(worst, float(np.max(np.abs(cents - np.array(scale.steps_cents[:5])))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 10.0 and elapsed < 60
    record_criterion(7, ok, f"worst step error {worst:.2f} cents over tirus/begbeg/sedeng, "
                            f"{elapsed:.1f}s")
    assert ok


# 8 ---------------------------------------------------------------------------

def test_criterion_8_som_invariants(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    checks = {}
    data = rng.normal(size=(30, 4))
    a = train(data, TrainingParams(8, 6, epochs=20), seed=5)
    b = train(data, TrainingParams(8, 6, epochs=20), seed=5)
    checks["determinism"] = a.weights.tobytes() == b.weights.tobytes()

    row = np.array([0.3, -1.2, 4.0])
    fixed = train(np.tile(row, (7, 1)), TrainingParams(5, 4, epochs=10), seed=1)
    checks["fixed point"] = float(np.abs(fixed.weights - row).max()) <= 1e-6

    # twelve distinct weights (+-e_i in 6-D), all exactly unit distance from the origin
    unit = np.vstack([np.eye(6), -np.eye(6)])[::-1].copy()
    tie = SomModel(4, 3, unit, 0, TrainingParams(4, 3))
    checks["tie-break"] = best_match(tie, np.zeros(6)).cell == (0, 0)

    const = train(np.tile(row, (3, 1)), TrainingParams(4, 3, epochs=2), seed=0)
    checks["u-matrix zero"] = bool(np.all(u_matrix(const) == 0.0))

    checks["u-matrix transpose"] = np.array_equal(u_matrix(transpose(a)), u_matrix(a).T)

    pure = 0
    for seed in SEEDS:
        c1 = rng.normal(0, 1, (20, 3))
        c2 = rng.normal(0, 1, (20, 3)) + np.array([10.0, 0, 0])
        model = train(np.vstack([c1, c2]), TrainingParams(20, 15), seed=seed)
        s1 = {best_match(model, x).cell for x in c1}
        s2 = {best_match(model, x).cell for x in c2}
        pure += not (s1 & s2)
    checks["two-cluster purity"] = pure == 10
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 60
    failed = [k for k, v in checks.items() if not v]
    record_criterion(8, ok, f"{len(checks) - len(failed)}/{len(checks)} invariants hold"
                            f"{' (failed: ' + ', '.join(failed) + ')' if failed else ''}, "
                            f"{elapsed:.1f}s")
    assert ok


# 9 ---------------------------------------------------------------------------

PIPELINE_CONFIG = """
[synth]
n_ensembles = 3
pieces_per_ensemble = 4
region_assignment = "orthogonal"
duration_s = 200.0

[som]
width = 10
height = 8
epochs = 30
"""


def run_pipeline(root: Path, jobs: int) -> dict[str, bytes]:
    root.mkdir(parents=True)
    cfg = root / "config.toml"
    cfg.write_text(PIPELINE_CONFIG)
    corpus, out = root / "corpus", root / "out"
    common = ["--config", str(cfg), "--seed", "7"]
    steps = [
        ["synth", "--out", str(corpus)],
        ["extract", "--manifest", str(corpus / "manifest.json"), "--out", str(root / "features.json"),
         "--jobs", str(jobs)],
    ]
    for mode in ("tuning", "articulation"):
        steps.append(["train", "--features", str(root / "features.json"), "--mode", mode,
                      "--out", str(root / f"model_{mode}.json")])
        steps.append(["map", "--model", str(root / f"model_{mode}.json"),
                      "--features", str(root / "features.json"),
                      "--manifest", str(corpus / "manifest.json"), "--out", str(out)])
    steps.append(["report", "--features", str(root / "features.json"),
                  "--manifest", str(corpus / "manifest.json"), "--out", str(out)])
    for step in steps:
        assert main(step[:1] + common + step[1:]) == 0, step
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_9_end_to_end_determinism(tmp_path, record_criterion):
    t0 = time.perf_counter()
    first = run_pipeline(tmp_path / "a", jobs=1)
    second = run_pipeline(tmp_path / "b", jobs=3)
    elapsed = time.perf_counter() - t0
    kinds = {".json": 0, ".svg": 0, ".wav": 0}
    for name in first:
        kinds[Path(name).suffix] = kinds.get(Path(name).suffix, 0) + 1
    differing = sorted(k for k in first if first[k] != second.get(k))
    ok = first.keys() == second.keys() and not differing and kinds[".svg"] >= 6 and elapsed < 600
    counts = ", ".join(f"{n} {ext.lstrip('.')}" for ext, n in sorted(kinds.items()))
    record_criterion(9, ok, f"{len(first)} artifacts ({counts}) byte-identical across two seed-7 runs"
                            f"{'; differing: ' + ', '.join(differing) if differing else ''}, "
                            f"{elapsed:.0f}s")
    assert ok
