"""Draw how one crossover grows its child from a single seed tile.

Runs two short solver passes to obtain decent parents, performs one
traced crossover between their best arrangements, and renders the
partially assembled child at several stages. Each stage becomes a PNG
panel and the panels are pasted side by side into ``growth_sheet.png``;
the full placement trace is written as JSON lines next to them.

Tile borders encode how each piece was placed:

    white    seed tile
    green    both parents agree on the neighbor
    blue     one parent's neighbor, confirmed by the cache as mutual
    orange   greedy fill with the most compatible unused piece
    red      mutated placement (overrides the phase color)
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from jigsaw_ga import GaConfig, build_cache, ga, load_image, puzzle, save_png
from jigsaw_ga.crossover import (
    PHASE_AGREEMENT,
    PHASE_BEST_BUDDY,
    PHASE_GREEDY,
    PHASE_SEED,
    CrossoverConfig,
    PlacementRecord,
    crossover,
)

log = logging.getLogger("jigsaw_ga.growth")

PHASE_COLORS = {
    PHASE_SEED: (255, 255, 255),
    PHASE_AGREEMENT: (60, 200, 60),
    PHASE_BEST_BUDDY: (70, 120, 255),
    PHASE_GREEDY: (255, 160, 40),
}
MUTATION_COLOR = (230, 40, 40)
BACKGROUND = (40, 40, 40)
PHASE_NAMES = {
    PHASE_SEED: "seed",
    PHASE_AGREEMENT: "agreement",
    PHASE_BEST_BUDDY: "best-buddy",
    PHASE_GREEDY: "greedy",
}


def parse_stages(text: str) -> list[float]:
    stages = []
    for token in text.split(","):
        value = float(token)
        if not 0.0 < value <= 1.0:
            raise argparse.ArgumentTypeError(f"stage {value} outside (0, 1]")
        stages.append(value)
    return sorted(set(stages))


def default_image() -> np.ndarray:
    try:
        from skimage import data as skdata
    except ImportError as exc:
        raise SystemExit(f"pass --image, or install scikit-image for the default: {exc}")
    return skdata.astronaut()


def render_stage(
    instance: puzzle.PuzzleInstance, records: list[PlacementRecord], count: int
) -> np.ndarray:
    """Paint the first ``count`` placements; empty cells stay dark."""
    rows, cols, k = instance.dims.rows, instance.dims.cols, instance.dims.piece_size
    canvas = np.empty((rows * k, cols * k, 3), dtype=np.uint8)
    canvas[:] = BACKGROUND
    border = max(1, k // 14)
    for record in records[:count]:
        tile = instance.rgb_tiles[record.piece].copy()
        color = MUTATION_COLOR if record.mutated else PHASE_COLORS[record.phase]
        tile[:border, :] = color
        tile[-border:, :] = color
        tile[:, :border] = color
        tile[:, -border:] = color
        r, c = record.row * k, record.col * k
        canvas[r : r + k, c : c + k] = tile
    return canvas


def paste_sheet(panels: list[np.ndarray], gap: int = 6) -> np.ndarray:
    height = panels[0].shape[0]
    separator = np.full((height, gap, 3), 255, dtype=np.uint8)
    strips = []
    for i, panel in enumerate(panels):
        if i:
            strips.append(separator)
        strips.append(panel)
    return np.concatenate(strips, axis=1)


def write_trace_jsonl(path: Path, records: list[PlacementRecord]) -> None:
    with path.open("w") as fh:
        for record in records:
            fh.write(
                json.dumps(
                    {
                        "step": record.step,
                        "phase": PHASE_NAMES[record.phase],
                        "mutated": record.mutated,
                        "piece": record.piece,
                        "row": record.row,
                        "col": record.col,
                        "anchor_piece": record.anchor_piece,
                        "anchor_relation": None
                        if record.anchor_relation is None
                        else record.anchor_relation.name,
                    }
                )
                + "\n"
            )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--image", type=Path, help="source image (default: a bundled photo)")
    parser.add_argument("--piece-size", type=int, default=28)
    parser.add_argument("--out", type=Path, default=Path("results/growth"))
    parser.add_argument(
        "--stages",
        type=parse_stages,
        default=[0.1, 0.3, 0.6, 1.0],
        help="comma list of assembly fractions to render",
    )
    parser.add_argument("--population", type=int, default=300, help="parent-search population")
    parser.add_argument("--generations", type=int, default=8, help="parent-search generations")
    parser.add_argument("--mutation-rate", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    image = default_image() if args.image is None else load_image(args.image)
    instance = puzzle.slice_image(image, args.piece_size, shuffle_seed=args.seed)
    piece_count = instance.dims.piece_count
    log.info(
        "puzzle: %d x %d, %d pieces",
        instance.dims.rows,
        instance.dims.cols,
        piece_count,
    )
    cache = build_cache(instance.pieces)

    parents = []
    for offset in (0, 1):
        config = GaConfig(
            population_size=args.population,
            generations=args.generations,
            mutation_rate=args.mutation_rate,
            seed=args.seed + offset,
        )
        result = ga.run(cache, instance.dims, config)
        log.info("parent %d: fitness %.4f", offset, result.best_fitness)
        parents.append(result.best)

    child, records = crossover(
        parents[0],
        parents[1],
        cache,
        CrossoverConfig(mutation_rate=args.mutation_rate, rng_seed=args.seed),
        collect_trace=True,
    )
    counts = {name: 0 for name in PHASE_NAMES.values()}
    for record in records:
        counts[PHASE_NAMES[record.phase]] += 1
    mutations = sum(record.mutated for record in records)
    log.info(
        "child fitness %.4f; placements: %s; mutations: %d",
        ga.fitness(child, cache),
        ", ".join(f"{name} {n}" for name, n in counts.items()),
        mutations,
    )

    args.out.mkdir(parents=True, exist_ok=True)
    panels = []
    for stage in args.stages:
        count = max(1, round(stage * piece_count))
        panel = render_stage(instance, records, count)
        panels.append(panel)
        save_png(args.out / f"stage_{round(stage * 100):03d}.png", panel)
    save_png(args.out / "growth_sheet.png", paste_sheet(panels))
    write_trace_jsonl(args.out / "growth_trace.jsonl", records)
    log.info("wrote %d panels, growth_sheet.png, growth_trace.jsonl under %s", len(panels), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
