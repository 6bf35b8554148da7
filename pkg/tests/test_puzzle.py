import json
from collections import Counter
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jigsaw_ga import puzzle
from jigsaw_ga.puzzle import (
    Arrangement,
    InvalidArrangementError,
    Piece,
    PuzzleDims,
    PuzzleError,
    Relation,
    identity_arrangement,
)

from _util import make_instance, textured_image


class TestRelation:
    def test_complement_pairs(self):
        assert Relation.LEFT.complement is Relation.RIGHT
        assert Relation.RIGHT.complement is Relation.LEFT
        assert Relation.UP.complement is Relation.DOWN
        assert Relation.DOWN.complement is Relation.UP

    def test_complement_is_involution(self):
        for rel in Relation:
            assert rel.complement.complement is rel

    def test_deltas_are_unit_steps(self):
        seen = {rel.delta for rel in Relation}
        assert seen == {(0, -1), (0, 1), (-1, 0), (1, 0)}

    def test_complement_delta_is_negated(self):
        for rel in Relation:
            dr, dc = rel.delta
            assert rel.complement.delta == (-dr, -dc)


class TestDims:
    def test_piece_count(self):
        assert PuzzleDims(3, 5, piece_size=4).piece_count == 15

    @pytest.mark.parametrize("rows,cols,k", [(0, 2, 4), (2, 0, 4), (1, 1, 0), (-1, 3, 2)])
    def test_rejects_degenerate_dimensions(self, rows, cols, k):
        with pytest.raises(PuzzleError):
            PuzzleDims(rows, cols, piece_size=k)


class TestPiece:
    def test_stores_readonly_copy(self):
        lab = np.zeros((3, 3, 3))
        piece = Piece(id=0, lab=lab)
        lab[0, 0, 0] = 0.5
        assert piece.lab[0, 0, 0] == 0.0
        with pytest.raises(ValueError):
            piece.lab[0, 0, 0] = 1.0

    def test_rejects_non_square(self):
        with pytest.raises(PuzzleError):
            Piece(id=0, lab=np.zeros((2, 3, 3)))

    def test_rejects_out_of_range_values(self):
        with pytest.raises(PuzzleError):
            Piece(id=0, lab=np.full((2, 2, 3), 1.5))
        with pytest.raises(PuzzleError):
            Piece(id=0, lab=np.full((2, 2, 3), np.nan))


class TestArrangement:
    def test_rejects_duplicate_ids(self):
        dims = PuzzleDims(2, 2, piece_size=2)
        with pytest.raises(InvalidArrangementError):
            Arrangement(dims, [[0, 1], [2, 2]])

    def test_rejects_wrong_shape(self):
        dims = PuzzleDims(2, 2, piece_size=2)
        with pytest.raises(InvalidArrangementError):
            Arrangement(dims, [[0, 1, 2, 3]])

    def test_rejects_out_of_range_ids(self):
        dims = PuzzleDims(2, 2, piece_size=2)
        with pytest.raises(InvalidArrangementError):
            Arrangement(dims, [[0, 1], [2, 4]])

    def test_grid_is_readonly(self):
        arr = identity_arrangement(PuzzleDims(2, 3, piece_size=2))
        with pytest.raises(ValueError):
            arr.grid[0, 0] = 5

    def test_equality_is_by_value(self):
        dims = PuzzleDims(2, 2, piece_size=2)
        a = Arrangement(dims, [[3, 1], [2, 0]])
        b = Arrangement(dims, np.array([[3, 1], [2, 0]]))
        c = Arrangement(dims, [[0, 1], [2, 3]])
        assert a == b
        assert a != c


class TestSlicing:
    def test_render_identity_recovers_cropped_image(self):
        img = textured_image(3, 4, piece_size=5, seed=1)
        instance = puzzle.slice_image(img, 5)
        out = puzzle.render(instance, instance.ground_truth)
        assert np.array_equal(out, img)

    def test_center_crop_drops_equal_margins(self):
        img = textured_image(2, 2, piece_size=4, seed=2)
        padded = np.pad(img, ((1, 1), (1, 1), (0, 0)), constant_values=7)
        instance = puzzle.slice_image(padded, 4)
        assert (instance.dims.rows, instance.dims.cols) == (2, 2)
        assert np.array_equal(puzzle.render(instance, instance.ground_truth), img)

    def test_pieces_are_numbered_row_major(self):
        img = textured_image(2, 3, piece_size=2, seed=3)
        instance = puzzle.slice_image(img, 2)
        for pid in range(6):
            r, c = divmod(pid, 3)
            tile = img[2 * r : 2 * r + 2, 2 * c : 2 * c + 2]
            assert np.array_equal(instance.rgb_tiles[pid], tile)

    def test_reslicing_a_permuted_render_recovers_the_piece_set(self):
        instance = make_instance(3, 3, piece_size=4, seed=4)
        arrangement = puzzle.shuffle(instance, seed=11)
        resliced = puzzle.slice_image(puzzle.render(instance, arrangement), 4)
        for cell, pid in enumerate(arrangement.grid.ravel()):
            assert np.array_equal(resliced.rgb_tiles[cell], instance.rgb_tiles[pid])

    def test_rejects_image_smaller_than_one_tile(self):
        with pytest.raises(PuzzleError):
            puzzle.slice_image(np.zeros((3, 10, 3), dtype=np.uint8), 4)

    def test_rejects_wrong_dtype_and_shape(self):
        with pytest.raises(PuzzleError):
            puzzle.slice_image(np.zeros((8, 8, 3), dtype=np.float32), 4)
        with pytest.raises(PuzzleError):
            puzzle.slice_image(np.zeros((8, 8), dtype=np.uint8), 4)

    def test_lab_stack_matches_piece_order(self):
        instance = make_instance(2, 2, piece_size=3, seed=5)
        stack = instance.lab_stack()
        assert stack.shape == (4, 3, 3, 3)
        for piece in instance.pieces:
            assert np.array_equal(stack[piece.id], piece.lab)


class TestShuffle:
    def test_same_seed_same_arrangement(self):
        instance = make_instance(3, 4, piece_size=2)
        assert puzzle.shuffle(instance, 9) == puzzle.shuffle(instance, 9)
        assert puzzle.shuffle(instance, 9) != puzzle.shuffle(instance, 10)

    def test_two_by_two_shuffles_are_uniform_over_seeds(self):
        # 10,000 seeds over the 24 arrangements of 4 pieces: every
        # arrangement's frequency should sit within 0.01 of 1/24.
        instance = make_instance(2, 2, piece_size=2)
        counts = Counter(
            tuple(puzzle.shuffle(instance, seed).grid.ravel()) for seed in range(10_000)
        )
        assert set(counts) == set(permutations(range(4)))
        for perm in counts:
            assert abs(counts[perm] / 10_000 - 1 / 24) < 0.01


class TestRender:
    def test_render_rejects_mismatched_dims(self):
        instance = make_instance(2, 3, piece_size=2)
        other = identity_arrangement(PuzzleDims(3, 2, piece_size=2))
        with pytest.raises(InvalidArrangementError):
            puzzle.render(instance, other)

    def test_png_round_trip(self, tmp_path):
        img = textured_image(2, 2, piece_size=4, seed=6)
        path = tmp_path / "img.png"
        puzzle.save_png(path, img)
        assert np.array_equal(puzzle.load_image(path), img)


class TestManifest:
    def _write_dataset(self, tmp_path, seed=21):
        img = textured_image(3, 3, piece_size=4, seed=7)
        instance = puzzle.slice_image(img, 4, shuffle_seed=seed)
        puzzle.save_png(tmp_path / "img.png", img)
        manifest = puzzle.make_manifest("img.png", instance)
        puzzle.save_manifest(manifest, tmp_path / "img.json")
        return instance

    def test_round_trip_restores_instance_and_shuffle(self, tmp_path):
        original = self._write_dataset(tmp_path)
        manifest = puzzle.load_manifest(tmp_path / "img.json")
        restored, shuffled = puzzle.instance_from_manifest(manifest, tmp_path)
        assert restored.dims == original.dims
        assert shuffled == puzzle.shuffle(original, original.shuffle_seed)
        for a, b in zip(restored.pieces, original.pieces):
            assert np.array_equal(a.lab, b.lab)

    def test_rerun_writes_identical_manifest_bytes(self, tmp_path):
        self._write_dataset(tmp_path)
        first = (tmp_path / "img.json").read_bytes()
        self._write_dataset(tmp_path)
        assert (tmp_path / "img.json").read_bytes() == first

    def test_tampered_piece_order_is_rejected(self, tmp_path):
        self._write_dataset(tmp_path)
        payload = json.loads((tmp_path / "img.json").read_text())
        payload["piece_order"][0] = payload["piece_order"][1]
        (tmp_path / "img.json").write_text(json.dumps(payload))
        manifest = puzzle.load_manifest(tmp_path / "img.json")
        with pytest.raises(PuzzleError):
            puzzle.instance_from_manifest(manifest, tmp_path)

    def test_dimension_mismatch_is_rejected(self, tmp_path):
        self._write_dataset(tmp_path)
        payload = json.loads((tmp_path / "img.json").read_text())
        payload["rows"] = 4
        (tmp_path / "img.json").write_text(json.dumps(payload))
        with pytest.raises(PuzzleError):
            puzzle.instance_from_manifest(puzzle.load_manifest(tmp_path / "img.json"), tmp_path)


@given(
    rows=st.integers(1, 4),
    cols=st.integers(1, 4),
    k=st.integers(1, 5),
    seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=40)
def test_slice_dimensions_follow_image(rows, cols, k, seed):
    instance = puzzle.slice_image(textured_image(rows, cols, k, seed), k, shuffle_seed=seed)
    assert instance.dims == PuzzleDims(rows, cols, piece_size=k)
    assert len(instance.pieces) == rows * cols
    shuffled = puzzle.shuffle(instance, seed)
    assert sorted(shuffled.grid.ravel()) == list(range(rows * cols))
