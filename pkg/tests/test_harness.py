import csv
import json

import numpy as np
import pytest
from PIL import Image

from setlrc.errors import IngestError, InvalidConfigError, ProtocolError
from setlrc.harness import (
    ProtocolConfig,
    SynthParams,
    benchmark_timing,
    emit_report,
    generate_synthetic,
    ingest_dataset,
    load_raster,
    preset,
    run_protocol,
    strip_timing,
    synthesize,
)
from setlrc.harness.protocol import draw_split


def write_corpus(root, classes=2, sets=2, images=3, fmt="png", size=(10, 8)):
    rng = np.random.default_rng(0)
    for c in range(classes):
        for s in range(sets):
            d = root / f"cls{c}" / f"set{s}"
            d.mkdir(parents=True)
            for i in range(images):
                arr = rng.integers(0, 256, size, dtype=np.uint8)
                Image.fromarray(arr).save(d / f"im{i}.{fmt}")
    return root


# ingestion

@pytest.mark.parametrize("fmt", ["png", "pgm", "bmp"])
def test_ingest_counts_and_order(tmp_path, fmt):
    m = ingest_dataset(write_corpus(tmp_path, fmt=fmt))
    assert m.image_count == 12 and m.set_count == 4
    assert m.labels == ["cls0", "cls1"]
    assert [s.set_id for s in m.classes[1].sets] == ["cls1/set0", "cls1/set1"]
    paths = m.classes[0].sets[0].paths
    assert list(paths) == sorted(paths)
    assert load_raster(paths[0]).shape == (10, 8)


def test_pgm_is_binary_p5(tmp_path):
    m = ingest_dataset(write_corpus(tmp_path, fmt="pgm", classes=1, sets=1, images=1))
    with open(m.classes[0].sets[0].paths[0], "rb") as fh:
        assert fh.read(2) == b"P5"


def test_ingest_is_deterministic(tmp_path):
    write_corpus(tmp_path)
    assert ingest_dataset(tmp_path) == ingest_dataset(tmp_path)


def test_ingest_names_non_image_file(tmp_path):
    write_corpus(tmp_path)
    bad = tmp_path / "cls1" / "set0" / "notes.txt"
    bad.write_text("hello")
    with pytest.raises(IngestError, match="notes.txt"):
        ingest_dataset(tmp_path)


def test_ingest_reports_unreadable_image(tmp_path):
    write_corpus(tmp_path)
    (tmp_path / "cls0" / "set1" / "broken.png").write_bytes(b"\x89PNG garbage")
    with pytest.raises(IngestError, match="broken.png"):
        ingest_dataset(tmp_path)


def test_ingest_empty_root_and_empty_class(tmp_path):
    with pytest.raises(IngestError):
        ingest_dataset(tmp_path)
    (tmp_path / "lonely").mkdir()
    with pytest.raises(IngestError, match="lonely"):
        ingest_dataset(tmp_path)


def test_ingest_ignores_root_level_files(tmp_path):
    write_corpus(tmp_path)
    (tmp_path / "README.txt").write_text("corpus notes")
    assert ingest_dataset(tmp_path).image_count == 12


def test_rgb_images_load_with_three_channels(tmp_path):
    d = tmp_path / "c" / "s"
    d.mkdir(parents=True)
    Image.fromarray(np.zeros((4, 5, 3), np.uint8)).save(d / "x.bmp")
    assert load_raster(d / "x.bmp").shape == (4, 5, 3)


# synthetic corpora

def test_synth_params_validation():
    with pytest.raises(InvalidConfigError):
        SynthParams(2, 2, 2, (2, 2), rank=5)
    with pytest.raises(InvalidConfigError):
        SynthParams(2, 2, 2, (4, 4), rank=2, sigma=-1)


def test_synth_same_seed_is_byte_identical(tmp_path):
    p = SynthParams(2, 2, 3, (6, 6), rank=2, sigma=3.0, seed=9)
    generate_synthetic(p, tmp_path / "a")
    generate_synthetic(p, tmp_path / "b")
    files_a = sorted(f.relative_to(tmp_path / "a") for f in (tmp_path / "a").rglob("*") if f.is_file())
    files_b = sorted(f.relative_to(tmp_path / "b") for f in (tmp_path / "b").rglob("*") if f.is_file())
    assert files_a == files_b and len(files_a) == 13
    for f in files_a:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    truth = json.loads((tmp_path / "a" / "truth.json").read_text())
    assert truth["params"]["rank"] == 2 and len(truth["sets"]) == 4


def test_synth_zero_noise_images_lie_on_class_subspace():
    p = SynthParams(2, 1, 12, (8, 8), rank=3, sigma=0.0, seed=1)
    sets = synthesize(p)["class_00"][0]
    X = np.column_stack([im.ravel(order="F") for im in sets]).astype(float)
    s = np.linalg.svd(X, compute_uv=False)
    # rank + constant offset, up to 8-bit rounding
    assert s[4] / s[0] < 0.01


def test_synth_hand_check_two_classes():
    # C=2, T=4: each zero-noise test image is closer to its own class subspace.
    from setlrc.classifier import TestSet, VoteConfig, classify_set, gallery_from_vectors
    from setlrc.preprocess import PreprocessConfig, vectorize
    p = SynthParams(2, 2, 2, (2, 2), rank=1, sigma=0.0, seed=3, amplitude=40)
    corpus = synthesize(p)
    cfg = PreprocessConfig((2, 2))
    g = gallery_from_vectors(
        [(lbl, [vectorize(im) for im in sets[0]]) for lbl, sets in corpus.items()], cfg)
    for c, (lbl, sets) in enumerate(corpus.items()):
        X = np.column_stack([vectorize(im).values for im in sets[1]])
        res = classify_set(g, TestSet(X), VoteConfig(alpha=0.2))
        assert res.predicted == c
        assert np.all(res.distances[c] < res.distances[1 - c])


# protocol

@pytest.fixture(scope="module")
def synth_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    generate_synthetic(SynthParams(4, 4, 8, (10, 10), rank=3, sigma=0.0, seed=2), root)
    return ingest_dataset(root)


def test_protocol_config_validation():
    with pytest.raises(InvalidConfigError):
        ProtocolConfig(repeats=0)
    with pytest.raises(InvalidConfigError):
        ProtocolConfig(strategy="knn", k=2)
    with pytest.raises(InvalidConfigError):
        preset("lfw")


def test_presets_carry_dataset_settings():
    assert preset("mobo").dims == (40, 40) and preset("mobo").gallery_images_per_set == 50
    assert preset("ytc").alpha == 10.5 and preset("ytc").gallery_sets_per_class == 3
    assert preset("ytc").gallery_images_per_set == 20
    assert preset("honda").dims == (20, 20) and preset("honda").standardize
    eth = preset("eth80")
    assert (eth.dims, eth.alpha, eth.standardize, eth.gallery_sets_per_class) == \
        ((32, 32), 0.2, True, 5)
    assert preset("eth80", repeats=3).repeats == 3


def test_zero_noise_synthetic_is_perfect(synth_corpus):
    rep = run_protocol(synth_corpus, ProtocolConfig(dims=(10, 10), repeats=4, seed=1))
    assert rep.accuracies == [1.0] * 4 and rep.std_accuracy == 0.0


def test_gallery_and_test_sets_are_disjoint(synth_corpus):
    cfg = ProtocolConfig(dims=(10, 10), repeats=5, gallery_sets_per_class=2, seed=3)
    for r in range(cfg.repeats):
        gallery, tests = draw_split(synth_corpus, cfg, r)
        gallery_ids = {i for _, ids, _ in gallery for i in ids}
        test_ids = {s.set_id for _, s in tests}
        assert not gallery_ids & test_ids
        assert len(gallery_ids) + len(test_ids) == synth_corpus.set_count


def test_repeats_draw_different_splits(synth_corpus):
    cfg = ProtocolConfig(dims=(10, 10), repeats=6, seed=3)
    splits = {tuple(i for _, ids, _ in draw_split(synth_corpus, cfg, r)[0] for i in ids)
              for r in range(6)}
    assert len(splits) > 1


def test_report_accuracy_bounds_and_recompute(synth_corpus):
    rep = run_protocol(synth_corpus, ProtocolConfig(dims=(10, 10), repeats=3,
                                                    strategy="majority", seed=4))
    d = rep.to_dict()
    assert all(0 <= a <= 1 for a in d["accuracies"])
    assert d["mean_accuracy"] == pytest.approx(np.mean(d["accuracies"]))
    assert d["std_accuracy"] == pytest.approx(np.std(d["accuracies"]))
    for r in d["repeats"]:
        ok = [p["predicted_label"] == p["true_label"] for p in r["predictions"]]
        assert r["accuracy"] == pytest.approx(np.mean(ok))


def test_self_classification_when_tests_equal_gallery(tmp_path):
    # each class's two sets hold identical images: test sets equal gallery sets
    rng = np.random.default_rng(5)
    for c in range(3):
        imgs = [rng.integers(0, 256, (8, 8), dtype=np.uint8) for _ in range(4)]
        for s in range(2):
            d = tmp_path / f"c{c}" / f"s{s}"
            d.mkdir(parents=True)
            for i, im in enumerate(imgs):
                Image.fromarray(im).save(d / f"{i}.png")
    rep = run_protocol(ingest_dataset(tmp_path), ProtocolConfig(dims=(8, 8), repeats=1))
    assert rep.accuracies == [1.0] and rep.std_accuracy == 0.0


def test_single_class_corpus(tmp_path):
    generate_synthetic(SynthParams(1, 3, 4, (6, 6), rank=2, sigma=5, seed=1), tmp_path)
    rep = run_protocol(ingest_dataset(tmp_path), ProtocolConfig(dims=(6, 6), repeats=2))
    assert rep.accuracies == [1.0, 1.0]


def test_split_infeasible(synth_corpus):
    with pytest.raises(ProtocolError, match="5 gallery sets required.*class_00 has 4"):
        run_protocol(synth_corpus, ProtocolConfig(dims=(10, 10), gallery_sets_per_class=5))
    with pytest.raises(ProtocolError, match="no test sets"):
        run_protocol(synth_corpus, ProtocolConfig(dims=(10, 10), gallery_sets_per_class=4))


def test_gallery_image_sampling_per_set(synth_corpus):
    cfg = ProtocolConfig(dims=(10, 10), repeats=2, gallery_sets_per_class=2,
                         gallery_images_per_set=3)
    rep = run_protocol(synth_corpus, cfg)
    assert all(r["gallery_sizes"] == [6] * 4 for r in rep.repeats)


def test_kfold_protocol(tmp_path):
    generate_synthetic(SynthParams(2, 6, 4, (8, 8), rank=2, sigma=0.0, seed=8), tmp_path)
    m = ingest_dataset(tmp_path)
    cfg = ProtocolConfig(dims=(8, 8), repeats=3, folds=3, gallery_sets_per_class=1)
    seen = []
    for r in range(3):
        gallery, tests = draw_split(m, cfg, r)
        ids = {i for _, gi, _ in gallery for i in gi} | {s.set_id for _, s in tests}
        assert len(ids) == 4  # 2 sets per class per fold
        seen.append(ids)
    assert not (seen[0] & seen[1]) and not (seen[1] & seen[2])
    assert run_protocol(m, cfg).accuracies == [1.0] * 3


def test_protocol_is_deterministic_modulo_timing(synth_corpus):
    cfg = ProtocolConfig(dims=(10, 10), repeats=3, seed=21, gallery_images_per_set=5)
    a = strip_timing(run_protocol(synth_corpus, cfg).to_dict())
    b = strip_timing(run_protocol(synth_corpus, cfg).to_dict())
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert "seconds" not in json.dumps(a)


@pytest.mark.parametrize("remedy", ["perturb", "qr"])
def test_protocol_with_duplicate_gallery_frames(tmp_path, remedy):
    # a corpus whose sets repeat frames, so gallery regressors are rank deficient
    rng = np.random.default_rng(11)
    for c in range(3):
        base = [rng.integers(0, 256, (8, 8), dtype=np.uint8) for _ in range(3)]
        for s in range(2):
            d = tmp_path / f"c{c}" / f"s{s}"
            d.mkdir(parents=True)
            for i in range(6):
                Image.fromarray(base[i % 3]).save(d / f"{i}.png")
    cfg = ProtocolConfig(dims=(8, 8), repeats=2, remedy=remedy)
    rep = run_protocol(ingest_dataset(tmp_path), cfg)
    assert rep.accuracies == [1.0, 1.0]
    if remedy == "perturb":
        assert all(len(r["perturbed"]) == 3 for r in rep.repeats)


# benchmark timing

def test_benchmark_modes_agree(synth_corpus):
    cfg = ProtocolConfig(dims=(10, 10), gallery_sets_per_class=2, seed=5)
    fast = benchmark_timing(synth_corpus, cfg, "fast", loops=2)
    naive = benchmark_timing(synth_corpus, cfg, "naive", loops=2)
    assert fast["predictions"] == naive["predictions"]
    assert fast["per_set_seconds"] > 0 and naive["gallery_seconds"] >= 0
    assert fast["test_sets"] == 8
    with pytest.raises(InvalidConfigError):
        benchmark_timing(synth_corpus, cfg, "turbo")


def test_protocol_modes_agree(synth_corpus):
    cfg = ProtocolConfig(dims=(10, 10), repeats=2, seed=6, standardize=True)
    fast = strip_timing(run_protocol(synth_corpus, cfg, "fast").to_dict())
    naive = strip_timing(run_protocol(synth_corpus, cfg, "naive").to_dict())
    assert fast["repeats"] == naive["repeats"]


# reports

def test_emit_json_and_csv_agree(synth_corpus, tmp_path):
    rep = run_protocol(synth_corpus, ProtocolConfig(dims=(10, 10), repeats=3, seed=7))
    jpath = emit_report(rep, "json", str(tmp_path / "r.json"))
    cpath = emit_report(rep, "csv", str(tmp_path / "r.csv"))
    d = json.loads(open(jpath).read())
    rows = list(csv.DictReader(open(cpath)))
    assert list(rows[0]) == ["repeat", "set_id", "true_label", "predicted_label",
                             "decided_by_tie", "seconds"]
    per_repeat = {}
    for row in rows:
        per_repeat.setdefault(int(row["repeat"]), []).append(
            row["true_label"] == row["predicted_label"])
    accs = [np.mean(per_repeat[r]) for r in sorted(per_repeat)]
    assert accs == d["accuracies"]
    assert np.mean(accs) == d["mean_accuracy"] and np.std(accs) == d["std_accuracy"]


def test_csv_row_count(tmp_path):
    rng = np.random.default_rng(2)
    for c in range(3):
        for s in range(2):
            d = tmp_path / "data" / f"c{c}" / f"s{s}"
            d.mkdir(parents=True)
            for i in range(3):
                Image.fromarray(rng.integers(0, 256, (6, 6), dtype=np.uint8)).save(d / f"{i}.png")
    rep = run_protocol(ingest_dataset(tmp_path / "data"), ProtocolConfig(dims=(6, 6), repeats=1))
    path = emit_report(rep, "csv", str(tmp_path / "r.csv"))
    lines = open(path).read().splitlines()
    assert len(lines) == 1 + 3


def test_emit_errors(synth_corpus, tmp_path):
    rep = run_protocol(synth_corpus, ProtocolConfig(dims=(10, 10), repeats=1))
    with pytest.raises(ValueError):
        emit_report(rep, "json", "")
    with pytest.raises(ValueError):
        emit_report(rep, "xml", str(tmp_path / "r.xml"))
    with pytest.raises(OSError):
        emit_report(rep, "json", str(tmp_path / "missing" / "dir" / "r.json"))
