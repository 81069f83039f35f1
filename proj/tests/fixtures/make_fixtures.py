#!/usr/bin/env python3
"""Regenerates the committed test fixtures.

Writes .femb files with an independent (numpy) implementation of the format so
the C++ reader is checked against a second writer.
"""
import json
import pathlib
import struct

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent


def write_femb(path, data, ids):
    data = np.asarray(data, dtype="<f4")
    n, d = data.shape
    header = b"FEMB" + struct.pack("<HH", 1, 0) + struct.pack("<QQ", n, d)
    header += b"\0" * (64 - len(header))
    with open(path, "wb") as f:
        f.write(header)
        f.write(data.tobytes(order="C"))
        for i in ids:
            f.write(i.encode("utf-8") + b"\n")


def write_labels(path, labels, names, ids):
    with open(path, "w", newline="\n") as f:
        f.write("id,label_index,label_name\n")
        for i, l in zip(ids, labels):
            f.write(f"{i},{l},{names[l]}\n")


def count_labels(path, counts, prefix):
    labels = [c for c, k in enumerate(counts) for _ in range(k)]
    ids = [f"{prefix}_{i:04d}" for i in range(len(labels))]
    write_labels(path, labels, [f"type_{c:02d}" for c in range(len(counts))], ids)


def main():
    # 3 x 4 matrix of known constants.
    write_femb(HERE / "small.femb", np.arange(12, dtype=np.float32).reshape(3, 4) * 0.5 - 1.0,
               ["a", "b", "c"])

    # Label tables with the class-count shape of the two census datasets.
    count_labels(HERE / "labels_441x5.csv", [48, 112, 95, 100, 86], "us")
    count_labels(HERE / "labels_591x14.csv", [11, 61] + [40] * 9 + [53] * 3, "fr")

    # Small end-to-end grid: 3 classes x 20 samples, two models, two variants.
    rng = np.random.default_rng(7)
    classes, per = 3, 20
    labels = np.repeat(np.arange(classes), per)
    ids = [f"s{i:03d}" for i in range(classes * per)]
    order = rng.permutation(len(ids))
    grid = HERE / "grid"
    grid.mkdir(exist_ok=True)
    write_labels(grid / "labels.csv", labels[order].tolist(), ["alpha", "beta", "gamma"],
                 [ids[i] for i in order])
    for model, dim in (("toyA", 32), ("toyB", 24)):
        for variant, sep in (("NoSeg", 0.2), ("Seg", 6.0)):
            centers = rng.normal(size=(classes, dim)) * sep
            x = centers[labels] + rng.normal(size=(len(ids), dim))
            write_femb(grid / f"{model}_{variant}.femb", x, ids)
    config = {
        "schema_version": 1,
        "master_seed": 2024,
        "variants": ["NoSeg", "Seg"],
        "dims": [5, 8],
        "umap": {"n_neighbors": 10, "min_dist": 0.1, "n_epochs": 150},
        "eval": {"knn_k": 5, "kmeans_k": "auto", "kmeans_trials": 3},
        "probe": {"epochs": 20, "batch_size": 16, "base_lr": 0.01, "folds": 5},
        "datasets": [{
            "tag": "synthetic",
            "labels": "labels.csv",
            "cells": [
                {"model": m, "variant": v, "embeddings": f"{m}_{v}.femb"}
                for m in ("toyA", "toyB") for v in ("NoSeg", "Seg")
            ] + [{"model": "toyC", "variant": "Seg", "embeddings": "missing.femb"}],
        }],
    }
    (grid / "config.json").write_text(json.dumps(config, indent=2) + "\n")

    # Reference results for the report tests.
    def cell(dataset, model, variant, ari, v, knn, probe):
        return {
            "dataset": dataset, "model": model, "variant": variant, "status": "ok",
            "n": 10, "dim": 16, "embedding_sha256": "0" * 64,
            "kmeans": {"k": 5, "ari": {"mean": ari, "std": 0.0},
                       "v_measure": {"mean": v, "std": 0.0}, "best_inertia": []},
            "knn": {"k": 10, "accuracy": knn, "per_dim": [knn]},
            "probe": {"accuracy": probe, "per_fold": [probe]},
        }
    results = {
        "schema": "formbench.results", "schema_version": 1, "config_sha256": "fixture",
        "results": [
            cell("french", "CLIP-ViT-L/14-336", "NoSeg", 0.833, 0.875, 0.928, 0.964),
            cell("french", "CLIP-ViT-L/14-336", "Seg", 0.809, 0.868, 0.938, 0.976),
            cell("french", "ResNet50", "NoSeg", 0.772, 0.853, 0.948, 0.980),
            cell("french", "ResNet50", "Seg", 0.864, 0.906, 0.955, 0.981),
            cell("us1950", "ResNet18", "NoSeg", 0.015, 0.030, 0.484, 0.895),
            cell("us1950", "ResNet18", "Seg", 0.166, 0.241, 0.688, 0.924),
            cell("us1950", "ResNet50", "NoSeg", 0.000, 0.023, 0.555, 0.900),
            cell("us1950", "ResNet50", "Seg", 0.275, 0.372, 0.728, 0.930),
        ],
    }
    (HERE / "table_results.json").write_text(json.dumps(results, indent=2) + "\n")


if __name__ == "__main__":
    main()
