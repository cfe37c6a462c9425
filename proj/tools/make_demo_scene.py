#!/usr/bin/env python3
"""Regenerate data/demo_scene: heightfield, class map and scene description.

The walker follows a gentle S-curve; the first half runs along a dirt path,
the second half crosses open grass. Rocks and trees are scattered away from
the walking corridor.
"""

import argparse
from pathlib import Path

import numpy as np

PATH, GRASS, ROCK, TREE, SKY = range(5)

CELL = 0.5
SIZE = 100.0
CORRIDOR = 4.0


def centreline(x):
    return 50.0 + 3.0 * np.sin(x / 10.0)


def build(seed):
    rng = np.random.default_rng(seed)
    n = int(SIZE / CELL)
    ys, xs = np.mgrid[0 : n + 1, 0 : n + 1] * CELL
    elevation = 0.3 * np.sin(xs / 9.0) * np.cos(ys / 11.0)

    cy, cx = (np.mgrid[0:n, 0:n] + 0.5) * CELL
    off = np.abs(cy - centreline(cx))
    classes = np.full((n, n), GRASS, dtype=np.int32)
    classes[(off < 1.5) & (cx < 50.0)] = PATH

    def place(count, radius, cls, clearance):
        placed = 0
        while placed < count:
            px, py = rng.uniform(0.0, SIZE, 2)
            if abs(py - centreline(px)) < clearance:
                continue
            r = rng.uniform(*radius)
            classes[(cx - px) ** 2 + (cy - py) ** 2 <= r * r] = cls
            placed += 1

    place(90, (0.6, 1.2), ROCK, CORRIDOR)
    place(140, (0.5, 0.9), TREE, CORRIDOR + 1.0)
    return elevation, classes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "demo_scene")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    elevation, classes = build(args.seed)
    np.savetxt(args.out / "heights.csv", elevation, fmt="%.4f", delimiter=",")
    np.savetxt(args.out / "classes.csv", classes, fmt="%d", delimiter=",")

    knots = np.arange(15.0, 86.0, 5.0)
    spline = "; ".join(f"{x:g}, {centreline(x):.4f}" for x in knots)
    (args.out / "scene.txt").write_text(
        "# Demo scene for the end-to-end pipeline; regenerate with tools/make_demo_scene.py\n"
        "heightfield = heights.csv\n"
        "classes = classes.csv\n"
        f"cell_size = {CELL:g}\n"
        "origin = 0, 0\n"
        "class.0 = path, traversable, 170 140 100, 0\n"
        "class.1 = grass, traversable, 90 150 60, 0\n"
        "class.2 = rock, non_traversable, 120 120 125, 0.8\n"
        "class.3 = tree, non_traversable, 40 80 35, 4.5\n"
        "class.4 = sky, unlabeled, 150 190 240, 0\n"
        "sky_class = 4\n"
        f"spline = {spline}\n"
        "spacing = 0.25\n"
        "walker_height = 1.5\n"
        "velocity = 1\n"
        "image_width = 350\n"
        "image_height = 350\n"
        "fx = 175\n"
        "feature_height = 50\n"
        "feature_width = 50\n"
        "feature_dim = 384\n"
        "feature_noise = 0.1\n"
        "feature_seed = 1\n"
        "texture_seed = 5\n"
        "frame_stride = 6\n"
        "eval_every = 4\n"
        "max_distance = 60\n"
    )


if __name__ == "__main__":
    main()
