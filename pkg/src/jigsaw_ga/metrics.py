"""Solution quality measures.

Two standard reconstruction metrics plus the fitness comparison against
the original image. Direct accuracy is the fraction of pieces sitting
at exactly their original position, which is harsh: a reconstruction
shifted by one column scores near zero even when every seam is correct.
Neighbor accuracy instead counts how many abutting pairs of the
solution also abut, same orientation, in the original, normalized by
the total number of abutting pairs in a grid.

A solution can score below the original image on fitness while not
matching it; the score records that case explicitly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .compat import CompatCache
from .ga import fitness_of_grid
from .puzzle import Arrangement, PuzzleError


def direct_accuracy(solution: Arrangement, ground_truth: Arrangement) -> float:
    if solution.dims != ground_truth.dims:
        raise PuzzleError("solution and ground truth dims differ")
    return float(np.mean(solution.grid == ground_truth.grid))


def adjacency_count(rows: int, cols: int) -> int:
    """Number of abutting piece pairs in a rows x cols grid."""
    return rows * (cols - 1) + (rows - 1) * cols


def neighbor_accuracy(solution: Arrangement, ground_truth: Arrangement) -> float:
    """Fraction of the solution's abutting pairs that the original also has.

    Each horizontal pair is matched left-to-right and each vertical pair
    top-to-bottom, so a pair in the wrong order does not count. A
    one-piece puzzle has no pairs and scores 1.0.
    """
    if solution.dims != ground_truth.dims:
        raise PuzzleError("solution and ground truth dims differ")
    total = adjacency_count(solution.dims.rows, solution.dims.cols)
    if total == 0:
        return 1.0

    p = solution.dims.piece_count
    gt = ground_truth.grid
    right_of = np.full(p, -1, dtype=np.int64)
    below_of = np.full(p, -1, dtype=np.int64)
    right_of[gt[:, :-1].ravel()] = gt[:, 1:].ravel()
    below_of[gt[:-1, :].ravel()] = gt[1:, :].ravel()

    g = solution.grid
    matched = int((right_of[g[:, :-1]] == g[:, 1:]).sum())
    matched += int((below_of[g[:-1, :]] == g[1:, :]).sum())
    return matched / total


@dataclass(frozen=True)
class Score:
    """All quality measures of one solution against its ground truth."""

    direct: float
    neighbor: float
    solution_fitness: float
    ground_truth_fitness: float
    better_than_perfect: bool

    def to_dict(self) -> dict:
        return asdict(self)


def score(solution: Arrangement, ground_truth: Arrangement, cache: CompatCache) -> Score:
    solution_fitness = fitness_of_grid(solution.grid, cache)
    ground_truth_fitness = fitness_of_grid(ground_truth.grid, cache)
    return Score(
        direct=direct_accuracy(solution, ground_truth),
        neighbor=neighbor_accuracy(solution, ground_truth),
        solution_fitness=solution_fitness,
        ground_truth_fitness=ground_truth_fitness,
        better_than_perfect=bool(solution_fitness < ground_truth_fitness),
    )
