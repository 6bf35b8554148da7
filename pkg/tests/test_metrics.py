import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jigsaw_ga import compat, metrics, puzzle
from jigsaw_ga.metrics import adjacency_count, direct_accuracy, neighbor_accuracy, score
from jigsaw_ga.puzzle import Arrangement, Piece, PuzzleDims, identity_arrangement

from _util import make_instance, oracle_direct, oracle_neighbor


def arrangement(grid) -> Arrangement:
    g = np.asarray(grid, dtype=np.int32)
    return Arrangement(PuzzleDims(g.shape[0], g.shape[1], piece_size=2), g)


class TestAdjacencyCount:
    def test_known_values(self):
        assert adjacency_count(1, 1) == 0
        assert adjacency_count(1, 2) == 1
        assert adjacency_count(2, 2) == 4
        assert adjacency_count(5, 5) == 40
        assert adjacency_count(10, 10) == 180

    @given(rows=st.integers(1, 30), cols=st.integers(1, 30))
    def test_counts_grid_edges(self, rows, cols):
        # Every cell has degree up to 4; the sum of degrees is twice
        # the number of abutting pairs.
        grid = np.arange(rows * cols).reshape(rows, cols)
        degrees = 0
        for r in range(rows):
            for c in range(cols):
                degrees += (r > 0) + (r < rows - 1) + (c > 0) + (c < cols - 1)
        assert adjacency_count(rows, cols) * 2 == degrees


class TestDirectAccuracy:
    def test_perfect_match(self):
        truth = identity_arrangement(PuzzleDims(3, 3, piece_size=2))
        assert direct_accuracy(truth, truth) == 1.0

    def test_one_swapped_pair_in_a_square(self):
        truth = arrangement([[0, 1], [2, 3]])
        swapped = arrangement([[1, 0], [2, 3]])
        assert direct_accuracy(swapped, truth) == 0.5

    def test_dims_must_match(self):
        with pytest.raises(puzzle.PuzzleError):
            direct_accuracy(arrangement([[0, 1]]), arrangement([[0], [1]]))


class TestNeighborAccuracy:
    def test_single_piece_scores_one_by_convention(self):
        solo = arrangement([[0]])
        assert neighbor_accuracy(solo, solo) == 1.0

    def test_cyclic_column_shift_keeps_most_seams(self):
        # All vertical pairs survive a one-column rotation; horizontal
        # pairs lose exactly the wrap-around seam per row: 170 of 180.
        truth = identity_arrangement(PuzzleDims(10, 10, piece_size=2))
        shifted = Arrangement(truth.dims, np.roll(truth.grid, -1, axis=1))
        assert direct_accuracy(shifted, truth) == 0.0
        assert neighbor_accuracy(shifted, truth) == 170 / 180
        assert neighbor_accuracy(shifted, truth) >= 0.85

    def test_swapping_two_far_apart_interior_pieces(self):
        # Each interior piece carries four seams; two swapped pieces
        # break eight of the forty in a 5x5 grid.
        truth = identity_arrangement(PuzzleDims(5, 5, piece_size=2))
        grid = truth.grid.copy()
        grid[1, 1], grid[3, 3] = truth.grid[3, 3], truth.grid[1, 1]
        assert neighbor_accuracy(Arrangement(truth.dims, grid), truth) == 32 / 40
        assert direct_accuracy(Arrangement(truth.dims, grid), truth) == 23 / 25

    def test_reversed_order_does_not_count(self):
        truth = arrangement([[0, 1]])
        flipped = arrangement([[1, 0]])
        assert neighbor_accuracy(flipped, truth) == 0.0

    def test_relabeling_both_sides_is_invariant(self):
        rng = np.random.default_rng(1)
        truth = rng.permutation(12).reshape(3, 4)
        solution = rng.permutation(12).reshape(3, 4)
        relabel = rng.permutation(12)
        a = neighbor_accuracy(arrangement(solution), arrangement(truth))
        b = neighbor_accuracy(arrangement(relabel[solution]), arrangement(relabel[truth]))
        assert a == b

    @given(seed=st.integers(0, 10**6), rows=st.integers(1, 5), cols=st.integers(1, 5))
    @settings(max_examples=80)
    def test_matches_set_oracle(self, seed, rows, cols):
        rng = np.random.default_rng(seed)
        truth = rng.permutation(rows * cols).reshape(rows, cols)
        solution = rng.permutation(rows * cols).reshape(rows, cols)
        got = neighbor_accuracy(arrangement(solution), arrangement(truth))
        assert got == oracle_neighbor(solution, truth)
        assert direct_accuracy(arrangement(solution), arrangement(truth)) == oracle_direct(
            solution, truth
        )

    def test_full_accuracy_only_for_the_exact_grid(self):
        # Every seam correct forces every piece into its original cell.
        rng = np.random.default_rng(2)
        truth = identity_arrangement(PuzzleDims(4, 4, piece_size=2))
        for _ in range(200):
            grid = rng.permutation(16).reshape(4, 4)
            if np.array_equal(grid, truth.grid):
                continue
            assert neighbor_accuracy(Arrangement(truth.dims, grid), truth) < 1.0


class TestScore:
    def test_perfect_solution(self):
        instance = make_instance(2, 3, piece_size=3, seed=3)
        cache = compat.build_cache(instance.pieces)
        s = score(instance.ground_truth, instance.ground_truth, cache)
        assert s.direct == 1.0
        assert s.neighbor == 1.0
        assert s.solution_fitness == s.ground_truth_fitness
        assert not s.better_than_perfect

    def test_lower_fitness_than_the_original_is_flagged(self):
        # Two tiles whose swapped seam is a perfect color match while
        # the original seam is not.
        a = np.zeros((2, 2, 3))
        a[:, 0, :] = 0.5
        b = np.full((2, 2, 3), 0.5)
        b[:, 0, :] = 1.0
        cache = compat.build_cache([Piece(id=0, lab=a), Piece(id=1, lab=b)])
        dims = PuzzleDims(1, 2, piece_size=2)
        truth = Arrangement(dims, [[0, 1]])
        swapped = Arrangement(dims, [[1, 0]])
        s = score(swapped, truth, cache)
        assert s.solution_fitness < s.ground_truth_fitness
        assert s.better_than_perfect
        assert s.direct == 0.0

    def test_degenerate_ties_are_not_better(self):
        img = np.full((4, 8, 3), 200, dtype=np.uint8)
        instance = puzzle.slice_image(img, 4)
        cache = compat.build_cache(instance.pieces)
        swapped = Arrangement(instance.dims, [[1, 0]])
        s = score(swapped, instance.ground_truth, cache)
        assert s.solution_fitness == s.ground_truth_fitness == 0.0
        assert not s.better_than_perfect

    def test_to_dict_round_trips_every_field(self):
        instance = make_instance(2, 2, piece_size=3, seed=4)
        cache = compat.build_cache(instance.pieces)
        s = score(puzzle.shuffle(instance, 5), instance.ground_truth, cache)
        d = s.to_dict()
        assert set(d) == {
            "direct",
            "neighbor",
            "solution_fitness",
            "ground_truth_fitness",
            "better_than_perfect",
        }
        assert metrics.Score(**d) == s
