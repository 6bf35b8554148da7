"""Pieces, arrangements, and puzzle instances.

A puzzle is an image cut into an N x M grid of square K x K tiles.
Pieces are numbered row-major by their position in the source image, so
the ground-truth arrangement is always the identity grid. Solvers work
on piece ids only; pixel data lives here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image

from .color import srgb_to_normalized_lab


class PuzzleError(ValueError):
    """Invalid input to a puzzle operation."""


class InvalidArrangementError(PuzzleError):
    """A grid is not a permutation of the piece ids, or dims mismatch."""


class ContractViolationError(PuzzleError):
    """An operation was invoked outside its preconditions."""


class ExhaustedBankError(PuzzleError):
    """No unused piece remains to satisfy a candidate query."""


class Relation(IntEnum):
    """Spatial relation of a second piece relative to a first.

    ``Relation.RIGHT`` means "the second piece sits to the right of the
    first". Complement pairs: LEFT/RIGHT, UP/DOWN. The integer order
    (LEFT < RIGHT < UP < DOWN) is the canonical order used wherever
    relations are sorted for deterministic scans.
    """

    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3

    @property
    def complement(self) -> "Relation":
        return Relation(self.value ^ 1)

    @property
    def delta(self) -> tuple[int, int]:
        """(row, col) offset of the adjacent cell in this direction."""
        return _DELTAS[self.value]


_DELTAS = ((0, -1), (0, 1), (-1, 0), (1, 0))


@dataclass(frozen=True)
class PuzzleDims:
    """Grid shape and tile size of a puzzle."""

    rows: int
    cols: int
    piece_size: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.piece_size < 1:
            raise PuzzleError(
                f"dims must be positive, got {self.rows}x{self.cols}, "
                f"piece_size={self.piece_size}"
            )

    @property
    def piece_count(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True, eq=False)
class Piece:
    """One tile: its ground-truth id and K x K x 3 normalized Lab pixels."""

    id: int
    lab: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.lab, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 3:
            raise PuzzleError(f"piece pixels must be KxKx3, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise PuzzleError("piece pixels must be finite values in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "lab", arr)

    @property
    def size(self) -> int:
        return self.lab.shape[0]


@dataclass(frozen=True, eq=False)
class Arrangement:
    """A complete candidate solution: an N x M grid of piece ids.

    Construction validates that the grid is a permutation of
    [0, rows*cols); the stored grid is an immutable int32 copy.
    """

    dims: PuzzleDims
    grid: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.int32)
        if g.shape != (self.dims.rows, self.dims.cols):
            raise InvalidArrangementError(
                f"grid shape {g.shape} does not match dims "
                f"{self.dims.rows}x{self.dims.cols}"
            )
        p = self.dims.piece_count
        flat = g.ravel()
        if flat.min() < 0 or flat.max() >= p or len(np.unique(flat)) != p:
            raise InvalidArrangementError("grid is not a permutation of piece ids")
        g = g.copy()
        g.flags.writeable = False
        object.__setattr__(self, "grid", g)

    def __eq__(self, other):
        if not isinstance(other, Arrangement):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.grid, other.grid)


def identity_arrangement(dims: PuzzleDims) -> Arrangement:
    grid = np.arange(dims.piece_count, dtype=np.int32).reshape(dims.rows, dims.cols)
    return Arrangement(dims, grid)


@dataclass(frozen=True, eq=False)
class PuzzleInstance:
    """A sliced puzzle: pieces, ground truth, and the original RGB tiles.

    ``rgb_tiles`` keeps the source pixels (uint8, shape P x K x K x 3) so
    arrangements can be rendered back to an inspectable image; all metric
    computation uses the pieces' normalized Lab data.
    """

    dims: PuzzleDims
    pieces: tuple[Piece, ...]
    ground_truth: Arrangement
    shuffle_seed: int
    rgb_tiles: np.ndarray

    def lab_stack(self) -> np.ndarray:
        """Pieces' Lab pixels stacked in id order, shape (P, K, K, 3)."""
        return np.stack([piece.lab for piece in self.pieces])


def slice_image(image: np.ndarray, piece_size: int, shuffle_seed: int = 0) -> PuzzleInstance:
    """Cut an RGB image into a puzzle of square ``piece_size`` tiles.

    The image is center-cropped to the largest tile-aligned region, each
    tile is converted to normalized Lab, and pieces are numbered
    row-major. Raises PuzzleError if the image is smaller than one tile.
    """
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise PuzzleError(f"expected HxWx3 RGB image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise PuzzleError(f"expected uint8 image, got dtype {arr.dtype}")
    k = int(piece_size)
    if k < 1:
        raise PuzzleError(f"piece_size must be positive, got {piece_size}")
    h, w = arr.shape[:2]
    if h < k or w < k:
        raise PuzzleError(f"image {h}x{w} is smaller than one {k}x{k} tile")

    rows, cols = h // k, w // k
    top = (h - rows * k) // 2
    left = (w - cols * k) // 2
    cropped = arr[top : top + rows * k, left : left + cols * k]

    dims = PuzzleDims(rows=rows, cols=cols, piece_size=k)
    lab = srgb_to_normalized_lab(cropped)

    pieces = []
    tiles = np.empty((dims.piece_count, k, k, 3), dtype=np.uint8)
    for i in range(rows):
        for j in range(cols):
            pid = i * cols + j
            tiles[pid] = cropped[i * k : (i + 1) * k, j * k : (j + 1) * k]
            pieces.append(Piece(id=pid, lab=lab[i * k : (i + 1) * k, j * k : (j + 1) * k]))

    tiles.flags.writeable = False
    return PuzzleInstance(
        dims=dims,
        pieces=tuple(pieces),
        ground_truth=identity_arrangement(dims),
        shuffle_seed=shuffle_seed,
        rgb_tiles=tiles,
    )


def shuffle(instance: PuzzleInstance, seed: int) -> Arrangement:
    """A uniformly random arrangement of the instance, reproducible from seed."""
    rng = np.random.default_rng(seed)
    grid = rng.permutation(instance.dims.piece_count).reshape(
        instance.dims.rows, instance.dims.cols
    )
    return Arrangement(instance.dims, grid.astype(np.int32))


def render(instance: PuzzleInstance, arrangement: Arrangement) -> np.ndarray:
    """Paint an arrangement back to an (N*K) x (M*K) x 3 uint8 image.

    Tiles keep their original RGB pixels; only their grid positions follow
    the arrangement.
    """
    if arrangement.dims != instance.dims:
        raise InvalidArrangementError(
            f"arrangement dims {arrangement.dims} do not match instance dims "
            f"{instance.dims}"
        )
    n, m, k = instance.dims.rows, instance.dims.cols, instance.dims.piece_size
    tiles = instance.rgb_tiles[arrangement.grid]  # (N, M, K, K, 3)
    return tiles.transpose(0, 2, 1, 3, 4).reshape(n * k, m * k, 3).copy()


def load_image(path: str | Path) -> np.ndarray:
    """Read a raster image file (PNG, JPEG, ...) as an HxWx3 uint8 array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_png(path: str | Path, image: np.ndarray) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(path, format="PNG")


# ---------------------------------------------------------------------------
# Puzzle manifests: enough to rebuild a shuffled instance bit-exactly.

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class PuzzleManifest:
    """On-disk description of a shuffled puzzle built from an image file."""

    image_path: str
    piece_size: int
    rows: int
    cols: int
    shuffle_seed: int
    piece_order: tuple[int, ...]


def make_manifest(image_path: str | Path, instance: PuzzleInstance) -> PuzzleManifest:
    arrangement = shuffle(instance, instance.shuffle_seed)
    return PuzzleManifest(
        image_path=str(image_path),
        piece_size=instance.dims.piece_size,
        rows=instance.dims.rows,
        cols=instance.dims.cols,
        shuffle_seed=instance.shuffle_seed,
        piece_order=tuple(int(x) for x in arrangement.grid.ravel()),
    )


def save_manifest(manifest: PuzzleManifest, path: str | Path) -> None:
    payload = {
        "version": MANIFEST_VERSION,
        "image_path": manifest.image_path,
        "piece_size": manifest.piece_size,
        "rows": manifest.rows,
        "cols": manifest.cols,
        "shuffle_seed": manifest.shuffle_seed,
        "piece_order": list(manifest.piece_order),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_manifest(path: str | Path) -> PuzzleManifest:
    payload = json.loads(Path(path).read_text())
    if payload.get("version") != MANIFEST_VERSION:
        raise PuzzleError(f"unsupported manifest version in {path}")
    return PuzzleManifest(
        image_path=payload["image_path"],
        piece_size=int(payload["piece_size"]),
        rows=int(payload["rows"]),
        cols=int(payload["cols"]),
        shuffle_seed=int(payload["shuffle_seed"]),
        piece_order=tuple(int(x) for x in payload["piece_order"]),
    )


def instance_from_manifest(
    manifest: PuzzleManifest, manifest_dir: str | Path | None = None
) -> tuple[PuzzleInstance, Arrangement]:
    """Rebuild the instance and its shuffled arrangement from a manifest.

    The image path is tried as given, then relative to ``manifest_dir``.
    Raises PuzzleError if the rebuilt puzzle does not match the manifest.
    """
    path = Path(manifest.image_path)
    if not path.exists() and manifest_dir is not None:
        candidate = Path(manifest_dir) / path
        if candidate.exists():
            path = candidate
    image = load_image(path)
    instance = slice_image(image, manifest.piece_size, shuffle_seed=manifest.shuffle_seed)
    if (instance.dims.rows, instance.dims.cols) != (manifest.rows, manifest.cols):
        raise PuzzleError(
            f"manifest expects {manifest.rows}x{manifest.cols} but image slices to "
            f"{instance.dims.rows}x{instance.dims.cols}"
        )
    arrangement = shuffle(instance, manifest.shuffle_seed)
    if tuple(int(x) for x in arrangement.grid.ravel()) != manifest.piece_order:
        raise PuzzleError("manifest piece_order does not match the recorded shuffle")
    return instance, arrangement
