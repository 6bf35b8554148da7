import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from jigsaw_ga import compat, ga, puzzle
from jigsaw_ga.ga import (
    GaConfig,
    fitness,
    fitness_of_grid,
    fitness_of_population,
    roulette_pick,
    selection_weights,
)

from _util import continuous_image, make_instance, oracle_fitness


@pytest.fixture(scope="module")
def small_puzzle():
    instance = make_instance(3, 3, piece_size=3, seed=1)
    return instance, compat.build_cache(instance.pieces)


class TestFitness:
    def test_matches_loop_oracle_on_random_arrangements(self, small_puzzle):
        instance, cache = small_puzzle
        labs = instance.lab_stack()
        rng = np.random.default_rng(2)
        for _ in range(50):
            grid = rng.permutation(9).reshape(3, 3)
            got = fitness_of_grid(grid, cache)
            want = oracle_fitness(grid, labs)
            assert got == pytest.approx(want, rel=1e-9)

    def test_single_piece_puzzle_scores_zero(self):
        instance = make_instance(1, 1, piece_size=3)
        cache = compat.build_cache(instance.pieces)
        assert fitness_of_grid([[0]], cache) == 0.0

    def test_uniform_image_scores_zero_everywhere(self):
        img = np.full((6, 9, 3), 77, dtype=np.uint8)
        instance = puzzle.slice_image(img, 3)
        cache = compat.build_cache(instance.pieces)
        rng = np.random.default_rng(3)
        for _ in range(5):
            assert fitness_of_grid(rng.permutation(6).reshape(2, 3), cache) == 0.0

    def test_population_evaluation_matches_singles(self, small_puzzle):
        _, cache = small_puzzle
        rng = np.random.default_rng(4)
        pop = np.stack([rng.permutation(9).reshape(3, 3) for _ in range(20)])
        batch = fitness_of_population(pop, cache)
        singles = [fitness_of_grid(g, cache) for g in pop]
        assert np.array_equal(batch, singles)

    def test_arrangement_wrapper_agrees_with_grid_form(self, small_puzzle):
        instance, cache = small_puzzle
        arr = puzzle.shuffle(instance, 5)
        assert fitness(arr, cache) == fitness_of_grid(arr.grid, cache)

    def test_true_layout_beats_random_rearrangements(self):
        # Needs an image with real edge continuity; on interpolated
        # noise the correct layout should beat 100 of 100 shuffles.
        instance = puzzle.slice_image(continuous_image(4, 4, 8, seed=5), 8)
        cache = compat.build_cache(instance.pieces)
        truth_fit = fitness(instance.ground_truth, cache)
        rng = np.random.default_rng(6)
        for _ in range(100):
            grid = rng.permutation(16).reshape(4, 4)
            if np.array_equal(grid, instance.ground_truth.grid):
                continue
            assert fitness_of_grid(grid, cache) > truth_fit


class TestSelection:
    def test_weight_formula_on_known_values(self):
        w = selection_weights(np.array([2.0, 6.0]))
        # deficit + floor * (spread + 1): [4, 0] + 0.01 * 5.
        assert np.allclose(w, [4.05, 0.05])

    def test_equal_fitness_gives_uniform_positive_weights(self):
        w = selection_weights(np.array([3.0, 3.0, 3.0]))
        assert np.all(w > 0)
        assert len(set(w.tolist())) == 1

    @given(
        npst.arrays(
            dtype=np.float64,
            shape=st.integers(2, 30),
            elements=st.floats(0, 1e6, allow_nan=False),
        )
    )
    def test_weights_reverse_fitness_order(self, fitnesses):
        w = selection_weights(fitnesses)
        assert np.all(w > 0)
        order = np.argsort(fitnesses, kind="stable")
        sorted_weights = w[order]
        assert np.all(np.diff(sorted_weights) <= 0), "lower fitness must weigh more"

    def test_equal_weights_split_picks_evenly(self):
        cum = np.cumsum([1.0, 1.0])
        rng = np.random.default_rng(7)
        picks = np.array([roulette_pick(cum, float(u)) for u in rng.random(100_000)])
        assert abs((picks == 0).mean() - 0.5) < 0.01

    def test_three_to_one_weights_split_picks_accordingly(self):
        cum = np.cumsum([3.0, 1.0])
        rng = np.random.default_rng(8)
        picks = np.array([roulette_pick(cum, float(u)) for u in rng.random(100_000)])
        assert abs((picks == 0).mean() - 0.75) < 0.01

    def test_pick_never_leaves_range(self):
        cum = np.cumsum([1.0, 2.0, 0.5])
        for u in (0.0, 0.5, 0.999999, 1.0 - 1e-16):
            assert 0 <= roulette_pick(cum, u) <= 2


class TestRun:
    def test_population_of_one_elite_never_changes(self, small_puzzle):
        _, cache = small_puzzle
        dims = puzzle.PuzzleDims(3, 3, piece_size=3)
        config = GaConfig(population_size=1, generations=5, elitism=1, seed=11)
        result = ga.run(cache, dims, config)
        first = [s.best_fitness for s in result.history]
        assert len(set(first)) == 1, "the lone elite must persist unchanged"
        assert result.best_fitness == first[0]

    def test_history_covers_every_generation(self, small_puzzle):
        _, cache = small_puzzle
        dims = puzzle.PuzzleDims(3, 3, piece_size=3)
        config = GaConfig(population_size=8, generations=6, elitism=2, seed=12)
        result = ga.run(cache, dims, config)
        assert [s.generation for s in result.history] == list(range(7))
        assert all(s.elapsed_ms >= 0 for s in result.history)
        assert all(
            s.best_fitness <= s.mean_fitness <= s.worst_fitness for s in result.history
        )

    def test_best_fitness_never_worsens_with_elitism(self):
        instance = puzzle.slice_image(continuous_image(3, 4, 8, seed=13), 8)
        cache = compat.build_cache(instance.pieces)
        config = GaConfig(population_size=30, generations=15, elitism=2, seed=13)
        result = ga.run(cache, instance.dims, config)
        best = [s.best_fitness for s in result.history]
        assert all(b <= a for a, b in zip(best, best[1:]))

    def test_same_seed_reproduces_the_run(self, small_puzzle):
        _, cache = small_puzzle
        dims = puzzle.PuzzleDims(3, 3, piece_size=3)
        config = GaConfig(population_size=12, generations=8, elitism=2, seed=14)
        a = ga.run(cache, dims, config)
        b = ga.run(cache, dims, config)
        assert a.best == b.best
        assert [s.best_fitness for s in a.history] == [s.best_fitness for s in b.history]

    def test_thread_count_does_not_change_the_result(self, small_puzzle):
        _, cache = small_puzzle
        dims = puzzle.PuzzleDims(3, 3, piece_size=3)
        serial = ga.run(cache, dims, GaConfig(population_size=16, generations=6, seed=15, jobs=1))
        threaded = ga.run(cache, dims, GaConfig(population_size=16, generations=6, seed=15, jobs=4))
        assert serial.best == threaded.best
        assert [s.best_fitness for s in serial.history] == [
            s.best_fitness for s in threaded.history
        ]

    def test_observer_sees_every_generation_and_the_running_best(self, small_puzzle):
        _, cache = small_puzzle
        dims = puzzle.PuzzleDims(3, 3, piece_size=3)
        seen = []

        def observer(stats, best_grid):
            seen.append((stats.generation, best_grid.copy(), stats.best_fitness))

        config = GaConfig(population_size=10, generations=5, elitism=1, seed=16)
        ga.run(cache, dims, config, observer=observer)
        assert [g for g, _, _ in seen] == list(range(6))
        for _, grid, best_fit in seen:
            assert sorted(grid.ravel()) == list(range(9))
            assert fitness_of_grid(grid, cache) == best_fit

    def test_result_best_is_the_lowest_fitness_seen(self, small_puzzle):
        _, cache = small_puzzle
        dims = puzzle.PuzzleDims(3, 3, piece_size=3)
        config = GaConfig(population_size=10, generations=10, elitism=2, seed=17)
        result = ga.run(cache, dims, config)
        assert result.best_fitness == min(s.best_fitness for s in result.history)
        assert fitness(result.best, cache) == result.best_fitness

    def test_zero_generations_returns_initial_best(self, small_puzzle):
        _, cache = small_puzzle
        dims = puzzle.PuzzleDims(3, 3, piece_size=3)
        result = ga.run(cache, dims, GaConfig(population_size=6, generations=0, seed=18))
        assert len(result.history) == 1

    def test_rejects_cache_dims_mismatch(self, small_puzzle):
        _, cache = small_puzzle
        with pytest.raises(puzzle.PuzzleError):
            ga.run(cache, puzzle.PuzzleDims(2, 2, piece_size=3), GaConfig(population_size=4, generations=1))


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"population_size": 0},
            {"elitism": -1},
            {"population_size": 4, "elitism": 5},
            {"generations": -1},
            {"mutation_rate": 1.5},
            {"jobs": 0},
        ],
    )
    def test_bad_values_are_rejected(self, kwargs):
        with pytest.raises(puzzle.PuzzleError):
            GaConfig(**kwargs)
