"""Reproduce the photo benchmark end to end.

Exports the five bundled photos, turns them into a puzzle dataset, and
benchmarks the solver over it with the default settings. Everything
lands under one output directory:

    images/    source photos, resized and saved as PNG
    dataset/   puzzle manifests plus image copies
    bench/     per-image reports, best-run renders, set_summary.csv

The photos ship with scikit-image and scikit-learn, which the package
itself does not depend on; install both before running this script.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from jigsaw_ga import cli

log = logging.getLogger("jigsaw_ga.experiment")

PHOTOS = ("astronaut", "chelsea", "china", "coffee", "immunohistochemistry")
PHOTO_SIZE = (672, 504)


def export_photos(out_dir: Path) -> None:
    try:
        from skimage import data as skdata
        from sklearn.datasets import load_sample_image
    except ImportError as exc:
        raise SystemExit(f"this script needs scikit-image and scikit-learn: {exc}")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in PHOTOS:
        if name == "china":
            arr = load_sample_image("china.jpg")
        else:
            arr = getattr(skdata, name)()
        resized = Image.fromarray(np.asarray(arr)).resize(PHOTO_SIZE, Image.LANCZOS)
        resized.save(out_dir / f"{name}.png")
        log.info("exported %s.png (%d x %d)", name, *PHOTO_SIZE)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results/photo_benchmark"))
    parser.add_argument("--runs", type=int, default=10, help="solver runs per photo")
    parser.add_argument("--piece-size", type=int, default=28)
    parser.add_argument("--population", type=int, default=1000)
    parser.add_argument("--generations", type=int, default=100)
    parser.add_argument("--elitism", type=int, default=4)
    parser.add_argument("--mutation-rate", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--engine", choices=("fast", "reference"), default="fast")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    images = args.out / "images"
    dataset = args.out / "dataset"
    bench = args.out / "bench"
    export_photos(images)

    rc = cli.main(
        [
            "make-dataset",
            "--src", str(images),
            "--out", str(dataset),
            "--piece-size", str(args.piece_size),
            "--seed", str(args.seed),
        ]
    )
    if rc != 0:
        return rc

    return cli.main(
        [
            "bench",
            "--dataset", str(dataset),
            "--runs", str(args.runs),
            "--out-dir", str(bench),
            "--population", str(args.population),
            "--generations", str(args.generations),
            "--elitism", str(args.elitism),
            "--mutation-rate", str(args.mutation_rate),
            "--seed", str(args.seed),
            "--jobs", str(args.jobs),
            "--engine", args.engine,
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
