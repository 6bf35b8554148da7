"""Command-line interface.

Three subcommands: ``solve`` reconstructs one puzzle and writes its
score, per-generation stats, and renders; ``make-dataset`` turns a
directory of images into a self-contained puzzle dataset; ``bench``
runs the solver several times over such a dataset and writes per-image
reports plus a set-level summary.

Progress goes to stderr. Result files never contain wall-clock timing
except the stats stream and bench reports, so a solve's score and
renders are byte-identical across reruns and thread counts.

Exit codes: 0 on success, 2 for bad arguments or malformed inputs,
3 for filesystem and image-decoding failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
import time
from pathlib import Path

import numpy as np
from PIL import UnidentifiedImageError

from . import compat, ga, metrics, puzzle, reporting

log = logging.getLogger("jigsaw_ga")

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def _solver_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--population", type=int, default=1000, help="individuals per generation")
    group.add_argument("--generations", type=int, default=100, help="reproduction cycles")
    group.add_argument("--elitism", type=int, default=4, help="top individuals copied unchanged")
    group.add_argument("--mutation-rate", type=float, default=0.05, help="per-placement mutation probability")
    group.add_argument("--seed", type=int, default=0, help="master random seed")
    group.add_argument("--engine", choices=("fast", "reference"), default="fast", help="child assembly implementation")
    group.add_argument("--jobs", type=int, default=1, help="worker threads for child assembly")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jigsaw-ga",
        description="Square-tile jigsaw solver built on a genetic algorithm.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="reconstruct one puzzle")
    src = solve.add_mutually_exclusive_group(required=True)
    src.add_argument("--image", type=Path, help="image file to slice and solve")
    src.add_argument("--manifest", type=Path, help="puzzle manifest to solve")
    solve.add_argument("--piece-size", type=int, default=28, help="tile edge length in pixels (with --image)")
    solve.add_argument("--out-dir", type=Path, help="directory for score, stats, and renders")
    solve.add_argument(
        "--snapshots",
        default="1,2,final",
        help="comma list of generations to render the best of, 'final' allowed, or 'none'",
    )
    _solver_arguments(solve)

    bench = sub.add_parser("bench", help="run the solver over a dataset")
    bench.add_argument(
        "--dataset", type=Path, required=True, help="directory of puzzle manifests or images"
    )
    bench.add_argument("--runs", type=int, default=10, help="solver runs per puzzle")
    bench.add_argument("--out-dir", type=Path, required=True, help="directory for reports and summary")
    bench.add_argument("--piece-size", type=int, default=28, help="tile edge length in pixels (image datasets)")
    _solver_arguments(bench)

    mkds = sub.add_parser("make-dataset", help="turn an image directory into puzzle manifests")
    mkds.add_argument("--src", type=Path, required=True, help="directory of source images")
    mkds.add_argument("--out", type=Path, required=True, help="output dataset directory")
    mkds.add_argument("--piece-size", type=int, default=28, help="tile edge length in pixels")
    mkds.add_argument("--seed", type=int, default=0, help="base seed for per-puzzle shuffles")

    return parser


def _ga_config(args: argparse.Namespace, seed: int | None = None) -> ga.GaConfig:
    return ga.GaConfig(
        population_size=args.population,
        generations=args.generations,
        elitism=args.elitism,
        mutation_rate=args.mutation_rate,
        seed=args.seed if seed is None else seed,
        jobs=args.jobs,
        engine=args.engine,
    )


def _parse_snapshots(text: str, generations: int) -> set[int]:
    text = text.strip().lower()
    if text in ("", "none"):
        return set()
    wanted = set()
    for token in text.split(","):
        token = token.strip()
        if token == "final":
            wanted.add(generations)
        elif token.isdigit():
            wanted.add(int(token))
        else:
            raise puzzle.PuzzleError(f"bad --snapshots token {token!r}")
    return {g for g in wanted if 0 <= g <= generations}


def _load_puzzle(args: argparse.Namespace) -> tuple[puzzle.PuzzleInstance, puzzle.Arrangement, str]:
    if args.image is not None:
        image = puzzle.load_image(args.image)
        instance = puzzle.slice_image(image, args.piece_size, shuffle_seed=args.seed)
        shuffled = puzzle.shuffle(instance, args.seed)
        return instance, shuffled, args.image.stem
    manifest = puzzle.load_manifest(args.manifest)
    instance, shuffled = puzzle.instance_from_manifest(manifest, args.manifest.parent)
    return instance, shuffled, args.manifest.stem


def _solve_payload(name: str, instance: puzzle.PuzzleInstance, config: ga.GaConfig, run_score: metrics.Score) -> dict:
    # No timing and no thread count here: this payload must not vary
    # between reruns of the same solve.
    return {
        "image": name,
        "rows": instance.dims.rows,
        "cols": instance.dims.cols,
        "piece_size": instance.dims.piece_size,
        "piece_count": instance.dims.piece_count,
        "population_size": config.population_size,
        "generations": config.generations,
        "elitism": config.elitism,
        "mutation_rate": config.mutation_rate,
        "seed": config.seed,
        "engine": config.engine,
        "score": run_score.to_dict(),
    }


def _cmd_solve(args: argparse.Namespace) -> int:
    instance, shuffled, name = _load_puzzle(args)
    config = _ga_config(args)
    snapshot_gens = _parse_snapshots(args.snapshots, config.generations)
    log.info(
        "solving %s: %dx%d, %d pieces",
        name,
        instance.dims.rows,
        instance.dims.cols,
        instance.dims.piece_count,
    )

    cache = compat.build_cache(instance.pieces)
    snapshots: dict[int, np.ndarray] = {}

    def observer(stats: ga.GenerationStats, best_grid: np.ndarray) -> None:
        if stats.generation in snapshot_gens:
            snapshots[stats.generation] = best_grid
        if stats.generation % 10 == 0 or stats.generation == config.generations:
            log.info(
                "generation %d: best %.4f, mean %.4f",
                stats.generation,
                stats.best_fitness,
                stats.mean_fitness,
            )

    result = ga.run(cache, instance.dims, config, observer=observer)
    run_score = metrics.score(result.best, instance.ground_truth, cache)
    payload = _solve_payload(name, instance, config, run_score)

    if args.out_dir is not None:
        out = args.out_dir
        out.mkdir(parents=True, exist_ok=True)
        (out / "score.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        reporting.write_generation_stats_csv(out / "stats.csv", result.history)
        puzzle.save_png(out / "shuffled.png", puzzle.render(instance, shuffled))
        puzzle.save_png(out / "reconstructed.png", puzzle.render(instance, result.best))
        for gen, grid in sorted(snapshots.items()):
            arrangement = puzzle.Arrangement(instance.dims, grid)
            puzzle.save_png(
                out / f"snapshot_gen_{gen:04d}.png", puzzle.render(instance, arrangement)
            )
        log.info("wrote results under %s", out)

    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _bench_seed(base_seed: int, image_index: int, run_index: int) -> int:
    seq = np.random.SeedSequence(base_seed, spawn_key=(image_index, run_index))
    return int(seq.generate_state(1, np.uint64)[0])


def _derived_shuffle_seed(base_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _bench_instances(args: argparse.Namespace) -> list[tuple[str, puzzle.PuzzleInstance]]:
    """Load a dataset directory: manifests if present, raw images otherwise."""
    manifests = sorted(args.dataset.glob("*.json"))
    if manifests:
        out = []
        for path in manifests:
            manifest = puzzle.load_manifest(path)
            instance, _ = puzzle.instance_from_manifest(manifest, path.parent)
            out.append((path.stem, instance))
        return out
    images = sorted(
        p for p in args.dataset.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if not images:
        raise puzzle.PuzzleError(f"no manifests or images under {args.dataset}")
    return [
        (
            path.stem,
            puzzle.slice_image(
                puzzle.load_image(path),
                args.piece_size,
                shuffle_seed=_derived_shuffle_seed(args.seed, path.name),
            ),
        )
        for path in images
    ]


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.runs < 1:
        raise puzzle.PuzzleError(f"--runs must be >= 1, got {args.runs}")
    instances = _bench_instances(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    reports = []
    for image_index, (name, instance) in enumerate(instances):
        log.info(
            "bench %s: %d pieces, %d runs",
            name,
            instance.dims.piece_count,
            args.runs,
        )
        cache = compat.build_cache(instance.pieces)

        records = []
        best_run = None
        for run_index in range(args.runs):
            seed = _bench_seed(args.seed, image_index, run_index)
            config = _ga_config(args, seed=seed)
            t0 = time.perf_counter()
            result = ga.run(cache, instance.dims, config)
            runtime = time.perf_counter() - t0
            run_score = metrics.score(result.best, instance.ground_truth, cache)
            records.append(
                reporting.RunRecord.from_score(name, run_index, seed, run_score, runtime)
            )
            if best_run is None or run_score.neighbor > best_run[0]:
                best_run = (run_score.neighbor, result.best)
            log.info(
                "  run %d: neighbor %.4f, direct %.4f, %.1fs",
                run_index,
                run_score.neighbor,
                run_score.direct,
                runtime,
            )

        report = reporting.make_report(
            name,
            instance.dims.rows,
            instance.dims.cols,
            instance.dims.piece_size,
            {
                "population_size": args.population,
                "generations": args.generations,
                "elitism": args.elitism,
                "mutation_rate": args.mutation_rate,
                "engine": args.engine,
                "base_seed": args.seed,
            },
            records,
        )
        reporting.save_report(report, args.out_dir / f"{name}_report.json")
        puzzle.save_png(
            args.out_dir / f"{name}_best.png",
            puzzle.render(instance, best_run[1]),
        )
        reports.append(report)

    reporting.write_set_csv(args.out_dir / "set_summary.csv", reports)
    summary = {
        report.image: {
            "piece_count": report.piece_count,
            "neighbor_best": report.aggregates["neighbor_best"],
            "neighbor_mean": report.aggregates["neighbor_mean"],
            "direct_mean": report.aggregates["direct_mean"],
        }
        for report in reports
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    log.info("wrote reports under %s", args.out_dir)
    return 0


def _cmd_make_dataset(args: argparse.Namespace) -> int:
    if not args.src.is_dir():
        raise FileNotFoundError(f"source directory {args.src} does not exist")
    sources = sorted(
        p for p in args.src.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if not sources:
        raise puzzle.PuzzleError(f"no images under {args.src}")
    args.out.mkdir(parents=True, exist_ok=True)

    written = 0
    skipped = []
    for src in sources:
        image = puzzle.load_image(src)
        if image.shape[0] < args.piece_size or image.shape[1] < args.piece_size:
            skipped.append(src.name)
            log.warning("skipping %s: smaller than one %dx%d tile", src.name, args.piece_size, args.piece_size)
            continue
        shuffle_seed = _derived_shuffle_seed(args.seed, src.name)
        instance = puzzle.slice_image(image, args.piece_size, shuffle_seed=shuffle_seed)
        shutil.copyfile(src, args.out / src.name)
        manifest = puzzle.make_manifest(src.name, instance)
        puzzle.save_manifest(manifest, args.out / f"{src.stem}.json")
        written += 1
        log.info(
            "%s: %dx%d grid, %d pieces",
            src.name,
            instance.dims.rows,
            instance.dims.cols,
            instance.dims.piece_count,
        )

    log.info("wrote %d manifests to %s, skipped %d", written, args.out, len(skipped))
    print(json.dumps({"written": written, "skipped": skipped}, indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "bench": _cmd_bench,
        "make-dataset": _cmd_make_dataset,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, KeyError) as exc:
        # PuzzleError and manifest/JSON parsing problems land here.
        log.error("%s", exc)
        return 2
    except UnidentifiedImageError as exc:
        log.error("cannot decode image: %s", exc)
        return 3
    except OSError as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
