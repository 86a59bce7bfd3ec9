"""Acceptance suite: one test per release criterion, each printing a
PASS line (run with -s to see them live). Tolerances and runtime budgets
are pinned here, not tuned at runtime.
"""

import hashlib
import time
from pathlib import Path

import numpy as np

from blurcull.apeval import IOU_THRESHOLDS, Detection, average_precision, evaluate
from blurcull.blur import (
    BoxBlur,
    DegradationSpec,
    GaussianBlur,
    blur_score,
    degrade,
    make_kernel,
    save_scores,
)
from blurcull.dataset import Box, count_table, filter_training, load_manifest
from blurcull.images import BorderMode, Kernel, KernelClass, convolve, laplacian_kernel, variance
from blurcull.rng import UniformStream, derive_seed
from blurcull.stub import stub_detect
from blurcull.sweep import SweepConfig, run_score, run_sweep
from blurcull.synth import SynthConfig, generate_corpus
from conftest import build_manifest
from reference import ref_blur_score, ref_evaluate

SEED = 20260808


def report(name):
    print(f"ACCEPTANCE {name}: PASS", flush=True)


# ---------------------------------------------------------------------------
# 1. Blur-score oracle: 50 randomized 64x64 fixtures, |impl - oracle| < 1e-9,
#    under a 5 s budget.


def test_blur_score_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        u = UniformStream(derive_seed(SEED, f"fixture_{i}")).uniform(64 * 64)
        img = (u * 255.0).reshape(64, 64)
        got = blur_score(img)
        want = ref_blur_score(img.tolist())
        worst = max(worst, abs(got - want))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-9, f"worst deviation {worst}"
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report("blur-score oracle (50 fixtures, <1e-9, <5s)")


# ---------------------------------------------------------------------------
# 2. Contraction: blurring with any LOWPASS kernel never raises the Laplacian
#    variance under periodic borders; 100 random pairs, zero violations, <30 s.


def test_low_pass_contraction():
    t0 = time.perf_counter()
    lap = laplacian_kernel()
    violations = 0
    for i in range(100):
        s = UniformStream(derive_seed(SEED, f"contract_{i}"))
        h = 16 + int(s.uniform(1)[0] * 17)
        w = 16 + int(s.uniform(1)[0] * 17)
        img = (s.uniform(h * w) * 255.0).reshape(h, w)
        r = 1 + int(s.uniform(1)[0] * 3)
        k = 2 * r + 1
        weights = s.uniform(k * k).reshape(k, k)
        kernel = Kernel(weights / weights.sum(), KernelClass.LOWPASS)
        before = variance(convolve(img, lap, BorderMode.PERIODIC))
        blurred = convolve(img, kernel, BorderMode.PERIODIC)
        after = variance(convolve(blurred, lap, BorderMode.PERIODIC))
        if after > before * (1 + 1e-12) + 1e-12:  # double-precision slack only
            violations += 1
    elapsed = time.perf_counter() - t0
    assert violations == 0
    assert elapsed < 30.0, f"took {elapsed:.2f}s"
    report("low-pass contraction (100 pairs, 0 violations, <30s)")


# ---------------------------------------------------------------------------
# 3. Severity monotonicity: scores strictly decrease across sigma
#    {0.5, 1, 2, 4} (noise 0) for 100% of 20 scenes under periodic borders
#    and >= 95% under replicate borders.


def test_blur_severity_monotonicity(tmp_path):
    config = SynthConfig(out_dir=str(tmp_path / "scenes"), n_train=20, n_val=0,
                         n_test=0, seed=SEED, sigma_grid=(0.0,),
                         corrupt_fraction=0.0, noise_sigma=0.0)
    manifest = generate_corpus(config)
    sigmas = (0.5, 1.0, 2.0, 4.0)
    ok = {BorderMode.PERIODIC: 0, BorderMode.REPLICATE: 0}
    from blurcull.images import decode_image

    for rec in manifest.images:
        img = decode_image(tmp_path / "scenes" / rec.path)
        for mode in ok:
            scores = [
                blur_score(convolve(img, make_kernel(GaussianBlur(s)), mode), mode)
                for s in sigmas
            ]
            if all(a > b for a, b in zip(scores, scores[1:])):
                ok[mode] += 1
    assert ok[BorderMode.PERIODIC] == 20, f"periodic {ok[BorderMode.PERIODIC]}/20"
    assert ok[BorderMode.REPLICATE] >= 19, f"replicate {ok[BorderMode.REPLICATE]}/20"
    report("blur severity monotonicity (periodic 20/20, replicate >=19/20)")


# ---------------------------------------------------------------------------
# 4. Degradation noise statistics: identity kernel, noise sigma 5, 1000x1000;
#    empirical mean within +-0.05 and std within 1% of 5.


def test_degradation_noise_statistics():
    img = np.zeros((1000, 1000))
    spec = DegradationSpec(kernel=BoxBlur(1), noise_sigma=5.0, seed=SEED)
    noise = degrade(img, spec) - img
    mean = float(noise.mean())
    std = float(noise.std())
    assert -0.05 <= mean <= 0.05, f"mean {mean}"
    assert abs(std - 5.0) <= 0.05, f"std {std}"
    report(f"noise statistics (mean {mean:+.4f}, std {std:.4f})")


# ---------------------------------------------------------------------------
# 5. AP oracle equivalence: 200 randomized micro-instances match the naive
#    reference evaluator within 1e-9, plus the exact endpoints.


def _random_instance(stream, max_images=3, max_dets=4, max_gt=3):
    n_img = 1 + int(stream.uniform(1)[0] * max_images)
    gt, dets = [], []
    for i in range(n_img):
        image_id = f"va_{i:05d}"
        for _ in range(int(stream.uniform(1)[0] * (max_gt + 1))):
            u = stream.uniform(5)
            box = Box(u[0] * 60, u[1] * 60, 2 + u[2] * 30, 2 + u[3] * 30)
            gt.append((image_id, "food" if u[4] < 0.5 else "beverage", box))
        for _ in range(int(stream.uniform(1)[0] * (max_dets + 1))):
            u = stream.uniform(6)
            box = Box(u[0] * 60, u[1] * 60, 2 + u[2] * 30, 2 + u[3] * 30)
            dets.append(Detection(image_id, box,
                                  "food" if u[4] < 0.5 else "beverage",
                                  round(float(u[5]), 2)))
    return n_img, gt, dets


def _manifest_for(n_img, gt):
    from blurcull.dataset import Annotation, DatasetManifest, ImageRecord

    images = [ImageRecord(f"va_{i:05d}", "x.pgm", 100, 100, "validation")
              for i in range(n_img)]
    images.append(ImageRecord("tr_0", "x.pgm", 100, 100, "training"))
    anns = tuple(Annotation(i, b, c) for (i, c, b) in gt)
    return DatasetManifest(tuple(images), anns)


def test_ap_oracle_equivalence():
    stream = UniformStream(derive_seed(SEED, "ap_oracle"))
    for _ in range(200):
        n_img, gt, dets = _random_instance(stream)
        manifest = _manifest_for(n_img, gt)
        result = evaluate(manifest, "validation", dets)
        ref_overall, ref_cats, _ = ref_evaluate(
            [(i, c, (b.x, b.y, b.w, b.h)) for (i, c, b) in gt],
            [(d.image_id, d.category, (d.box.x, d.box.y, d.box.w, d.box.h), d.score)
             for d in dets],
            manifest.categories,
            IOU_THRESHOLDS,
        )
        assert abs(result.overall_ap - ref_overall) < 1e-9
        for c, v in ref_cats.items():
            assert abs(result.per_category_ap[c] - v) < 1e-9

    # exact endpoints, tolerance 0
    m = build_manifest({"validation": 2, "training": 1, "testing": 1},
                       {("validation", "food"): 2, ("validation", "beverage"): 1})
    split_ids = {r.image_id for r in m.split_images("validation")}
    perfect = [Detection(a.image_id, a.box, a.category, 1.0)
               for a in m.annotations if a.image_id in split_ids]
    assert evaluate(m, "validation", perfect).overall_ap == 100.0
    assert evaluate(m, "validation", []).overall_ap == 0.0
    assert average_precision([], 3) == 0.0
    report("AP oracle equivalence (200 instances <1e-9; 100/0 exact)")


# ---------------------------------------------------------------------------
# 6. Evaluator invariances: monotone score transforms and input permutation
#    leave results exactly unchanged on 50 instances with distinct scores.


def test_evaluator_invariances():
    stream = UniformStream(derive_seed(SEED, "invariance"))
    for _ in range(50):
        n_img, gt, dets = _random_instance(stream)
        n = len(dets)
        base_scores = [(i + 1) / (n + 1) for i in range(n)]
        order = np.argsort(stream.uniform(max(n, 1))[:n])
        dets = [Detection(d.image_id, d.box, d.category, base_scores[order[i]])
                for i, d in enumerate(dets)]
        manifest = _manifest_for(n_img, gt)
        base = evaluate(manifest, "validation", dets)

        squared = [Detection(d.image_id, d.box, d.category, d.score**2) for d in dets]
        transformed = evaluate(manifest, "validation", squared)
        assert transformed.overall_ap == base.overall_ap
        assert transformed.per_category_ap == base.per_category_ap
        assert transformed.per_iou_ap == base.per_iou_ap

        perm = np.argsort(stream.uniform(max(n, 1))[:n])
        shuffled = [dets[i] for i in perm]
        permuted = evaluate(manifest, "validation", shuffled)
        assert permuted.overall_ap == base.overall_ap
        assert permuted.per_category_ap == base.per_category_ap
        assert permuted.per_iou_ap == base.per_iou_ap
    report("evaluator invariances (50 instances, exact)")


# ---------------------------------------------------------------------------
# 7. Filtering monotonicity and table shape; exact echo of a known fixture.


def test_filter_monotonicity_and_table_shape():
    grid = (0.0, 5.0, 10.0, 15.0, 20.0)

    # 200-image synthetic training split with seeded score spread
    m = build_manifest({"training": 200, "validation": 5, "testing": 5},
                       {("training", "food"): 160, ("training", "beverage"): 110})
    u = UniformStream(derive_seed(SEED, "filter")).uniform(len(m.images))
    scores = {rec.image_id: float(30.0 * u[i]) for i, rec in enumerate(m.images)}
    reports = [filter_training(m, scores, bt)[1] for bt in grid]
    table = count_table(reports)
    assert table.row_labels == ("#images", "#food", "#beverage")
    for row in table.cells:
        assert all(a >= b for a, b in zip(row, row[1:])), "rows must not increase"
    assert [row[0] for row in table.cells] == [200, 160, 110]  # BT=0 unfiltered

    # a manifest with the known training counts echoes them exactly at BT=0
    fixture = build_manifest(
        {"training": 4333, "validation": 585, "testing": 500},
        {("training", "food"): 4033, ("training", "beverage"): 2239},
    )
    fixture_scores = {rec.image_id: 50.0 for rec in fixture.images}
    bt0 = count_table([filter_training(fixture, fixture_scores, 0.0)[1]])
    assert [row[0] for row in bt0.cells] == [4333, 4033, 2239]
    report("filter monotonicity and table shape (BT=0 echo 4333/4033/2239)")


# ---------------------------------------------------------------------------
# 8. End-to-end sweep: synth -> score -> sweep with the stub detector on a
#    corpus with planted extreme-blur noisy-label training images; < 2 min,
#    byte-identical across two runs and worker counts {1, 4}, exhaustively
#    verified argmax selection, all three tables emitted.


def _tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(Path(root).rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_end_to_end_sweep(tmp_path):
    t0 = time.perf_counter()
    corpus = tmp_path / "corpus"
    synth = SynthConfig(out_dir=str(corpus), n_train=80, n_val=30, n_test=30,
                        seed=7, corrupt_fraction=0.10)
    manifest = generate_corpus(synth)
    scores, errors = run_score(manifest, image_root=corpus, workers=4)
    assert errors == []
    scores_path = tmp_path / "scores.csv"
    save_scores(scores_path, scores)

    def sweep(out_dir, workers):
        return run_sweep(SweepConfig(
            manifest_path=str(corpus / "manifest.json"),
            scores_path=str(scores_path),
            out_dir=str(out_dir),
            stub_detector="colorblob",
            seed=7,
            workers=workers,
        ))

    first = sweep(tmp_path / "run_a", 1)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0, f"pipeline took {elapsed:.1f}s"

    # byte-identical across a rerun and across worker counts
    sweep(tmp_path / "run_b", 1)
    sweep(tmp_path / "run_c", 4)
    d_a = _tree_digest(tmp_path / "run_a")
    assert d_a == _tree_digest(tmp_path / "run_b")
    assert d_a == _tree_digest(tmp_path / "run_c")

    # filtering must matter: the corrupted cells score strictly worse
    assert first.selected_bt > 0.0

    # exhaustive argmax verification through independent library calls
    loaded = load_manifest(corpus / "manifest.json")
    score_map = {s.image_id: s.variance_of_laplacian for s in scores}
    cell_ap = {}
    for bt in (0.0, 5.0, 10.0, 15.0, 20.0):
        filtered, _ = filter_training(loaded, score_map, bt)
        dets = stub_detect(filtered, "validation", image_root=corpus)
        cell_ap[bt] = evaluate(filtered, "validation", dets).overall_ap
    best = max(cell_ap.values())
    expected_bt = min(bt for bt, ap in cell_ap.items() if ap == best)
    assert first.selected_bt == expected_bt
    for cell in first.cells:
        assert cell.validation_ap.overall_ap == cell_ap[cell.bt]

    # all three tables, in the expected layout
    tables = tmp_path / "run_a" / "tables"
    counts = (tables / "counts.txt").read_text().splitlines()
    assert counts[0].split() == ["BT=0", "BT=5", "BT=10", "BT=15", "BT=20"]
    assert [line.split()[0] for line in counts[1:]] == ["#images", "#food", "#beverage"]
    val = (tables / "validation_ap.txt").read_text().splitlines()
    assert val[1].startswith("Overall AP")
    assert val[2].startswith("AP of food")
    assert val[3].startswith("AP of beverage")
    test_tbl = (tables / "test_ap.txt").read_text().splitlines()
    assert test_tbl[0].split() == [f"BT={first.selected_bt:g}"]

    report(
        f"end-to-end sweep (selected BT={first.selected_bt:g}, "
        f"{elapsed:.1f}s, byte-identical, argmax verified)"
    )
