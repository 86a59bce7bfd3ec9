from pathlib import Path

import pytest

from blurcull.dataset import Annotation, Box, DatasetManifest, ImageRecord
from blurcull.synth import SynthConfig, generate_corpus


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """One shared synthetic corpus: (root, config, manifest)."""
    root = Path(tmp_path_factory.mktemp("corpus"))
    config = SynthConfig(
        out_dir=str(root), n_train=30, n_val=12, n_test=12, seed=20260808
    )
    manifest = generate_corpus(config)
    return root, config, manifest


def build_manifest(split_sizes, ann_counts, width=100, height=100):
    """In-memory manifest with given image counts per split and annotation
    counts per (split, category), annotations spread round-robin."""
    images = []
    per_split_ids = {}
    for split, n in split_sizes.items():
        ids = [f"{split[:2]}_{i:05d}" for i in range(n)]
        per_split_ids[split] = ids
        images.extend(
            ImageRecord(i, f"{i}.pgm", width, height, split) for i in ids
        )
    annotations = []
    for (split, category), n in ann_counts.items():
        ids = per_split_ids[split]
        for j in range(n):
            annotations.append(
                Annotation(ids[j % len(ids)], Box(0.0, 0.0, 4.0, 4.0), category)
            )
    return DatasetManifest(tuple(images), tuple(annotations))


@pytest.fixture(scope="session")
def large_split_manifest():
    """Split sizes 4333/585/500 with the matching per-split object counts."""
    return build_manifest(
        {"training": 4333, "validation": 585, "testing": 500},
        {
            ("training", "food"): 4033,
            ("training", "beverage"): 2239,
            ("validation", "food"): 570,
            ("validation", "beverage"): 288,
            ("testing", "food"): 472,
            ("testing", "beverage"): 264,
        },
    )
