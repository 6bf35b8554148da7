"""Pairwise edge compatibility between pieces.

The dissimilarity of an ordered pair (i, j) under a spatial relation is
the Euclidean distance between the abutting pixel edges in normalized
Lab space: for "j right of i" that is the last column of i against the
first column of j, summed over rows and channels, square-rooted. Lower
is more compatible.

Only the RIGHT and DOWN matrices are stored; LEFT and UP are the same
numbers with the piece order swapped, so every relation is served from
two P x P tables. Derived tables (per-piece candidate rankings, row
minima, mutual-best pairs) are computed once so the hot queries used by
the solver are O(1) lookups or short scans.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import AbstractSet, Sequence

import numpy as np

from .puzzle import ExhaustedBankError, Piece, PuzzleError, Relation

_CHUNK_ELEMS = 8_000_000  # cap on temporary (chunk, P, K*3) blocks during the build


def dissimilarity(lab_i: np.ndarray, lab_j: np.ndarray, relation: Relation) -> float:
    """Edge dissimilarity of piece j placed at ``relation`` of piece i.

    Both inputs are K x K x 3 normalized Lab arrays. The measure is
    asymmetric in general, but swapping both the pieces and the relation
    for its complement gives the identical value.
    """
    a = np.asarray(lab_i, dtype=np.float64)
    b = np.asarray(lab_j, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 3:
        raise PuzzleError(f"piece shapes differ or are not KxKx3: {a.shape} vs {b.shape}")
    if relation == Relation.RIGHT:
        d = (a[:, -1, :] - b[:, 0, :]).reshape(-1)
    elif relation == Relation.DOWN:
        d = (a[-1, :, :] - b[0, :, :]).reshape(-1)
    elif relation == Relation.LEFT:
        return dissimilarity(lab_j, lab_i, Relation.RIGHT)
    else:
        return dissimilarity(lab_j, lab_i, Relation.DOWN)
    return float(np.sqrt((d * d).sum()))


def _edge_distance_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """All-pairs distances between P source edges and P destination edges.

    ``src`` and ``dst`` are (P, K*3) edge strips. Row i, column j holds
    the distance from piece i's trailing edge to piece j's leading edge,
    accumulated in the same order as ``dissimilarity`` so the two paths
    agree to the last bit.
    """
    p, width = src.shape
    out = np.empty((p, p), dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, p * width))
    for start in range(0, p, step):
        stop = min(p, start + step)
        diff = src[start:stop, None, :] - dst[None, :, :]
        out[start:stop] = (diff * diff).sum(axis=-1)
    return np.sqrt(out, out=out)


@dataclass(eq=False)
class CompatCache:
    """Precomputed compatibility tables for one puzzle's piece set.

    Attributes
    ----------
    d_right, d_down:
        (P, P) float64; entry [i, j] is the dissimilarity of j placed
        right of (below) i. Diagonals hold the self-pair value, which no
        query path treats as a candidate.
    min_excl_self:
        (4, P) float64 indexed by relation code; the smallest
        dissimilarity from each piece in that direction over all other
        pieces. +inf for a one-piece puzzle.
    sorted_candidates:
        (4, P, P-1) int32; for each relation and piece, every other
        piece id ordered by ascending dissimilarity, ties broken by
        lowest id.
    best_buddy:
        (4, P) int32; the piece that is a mutual best match in that
        direction, or -1. Where several pieces tie, the lowest id wins.
    """

    piece_count: int
    d_right: np.ndarray
    d_down: np.ndarray
    min_excl_self: np.ndarray
    sorted_candidates: np.ndarray
    best_buddy: np.ndarray

    def lookup(self, i: int, j: int, relation: Relation) -> float:
        """Dissimilarity of piece j placed at ``relation`` of piece i."""
        if relation == Relation.RIGHT:
            return float(self.d_right[i, j])
        if relation == Relation.LEFT:
            return float(self.d_right[j, i])
        if relation == Relation.DOWN:
            return float(self.d_down[i, j])
        return float(self.d_down[j, i])

    def are_best_buddies(self, i: int, j: int, relation: Relation) -> bool:
        """True when i and j are each other's best match across this edge."""
        if i == j:
            return False
        v = self.lookup(i, j, relation)
        return (
            v <= self.min_excl_self[relation, i]
            and v <= self.min_excl_self[Relation(relation).complement, j]
        )

    def best_buddy_of(self, piece: int, relation: Relation) -> int:
        """Mutual best match of ``piece`` in ``relation``, or -1 if none."""
        return int(self.best_buddy[relation, piece])

    def most_compatible_available(
        self, piece: int, relation: Relation, used: "np.ndarray | AbstractSet[int]"
    ) -> int:
        """Best-ranked piece for this edge that is not marked used.

        ``used`` is a boolean mask indexed by piece id, or a set of used
        ids. Raises ExhaustedBankError when every other piece is used.
        """
        if isinstance(used, (set, frozenset)):
            ids = used
            used = np.zeros(self.piece_count, dtype=bool)
            used[list(ids)] = True
        for j in self.sorted_candidates[relation, piece]:
            if not used[j]:
                return int(j)
        raise ExhaustedBankError(
            f"no unused piece available for piece {piece}, relation {Relation(relation).name}"
        )


def _derive_tables(d_right: np.ndarray, d_down: np.ndarray):
    p = d_right.shape[0]
    eye = np.eye(p, dtype=bool)

    # Directional views: entry [i, j] is D(i, j, relation).
    views = {
        Relation.LEFT: d_right.T,
        Relation.RIGHT: d_right,
        Relation.UP: d_down.T,
        Relation.DOWN: d_down,
    }

    min_excl_self = np.full((4, p), np.inf, dtype=np.float64)
    sorted_candidates = np.empty((4, p, max(p - 1, 0)), dtype=np.int32)
    for rel, view in views.items():
        masked = np.where(eye, np.inf, view)
        if p > 1:
            min_excl_self[rel] = masked.min(axis=1)
        order = np.argsort(masked, axis=1, kind="stable")
        sorted_candidates[rel] = order[:, : p - 1].astype(np.int32)

    best_buddy = np.full((4, p), -1, dtype=np.int32)
    for rel, view in views.items():
        comp = Relation(rel).complement
        mutual = (
            (view <= min_excl_self[rel][:, None])
            & (view <= min_excl_self[comp][None, :])
            & ~eye
        )
        hit = mutual.any(axis=1)
        best_buddy[rel] = np.where(hit, mutual.argmax(axis=1), -1).astype(np.int32)

    return min_excl_self, sorted_candidates, best_buddy


def build_cache(pieces: Sequence[Piece] | np.ndarray) -> CompatCache:
    """Compute all compatibility tables for a piece set.

    Accepts either the pieces of a puzzle instance or an already stacked
    (P, K, K, 3) normalized-Lab array.
    """
    if isinstance(pieces, np.ndarray):
        lab = np.asarray(pieces, dtype=np.float64)
        if lab.ndim != 4 or lab.shape[3] != 3:
            raise PuzzleError(f"expected a (P, K, K, 3) array, got {lab.shape}")
    else:
        ordered = sorted(pieces, key=lambda piece: piece.id)
        if [piece.id for piece in ordered] != list(range(len(ordered))):
            raise PuzzleError("piece ids must be exactly 0..P-1")
        lab = np.stack([piece.lab for piece in ordered])
    p = lab.shape[0]
    if p < 1:
        raise PuzzleError("a puzzle needs at least one piece")

    right_edge = np.ascontiguousarray(lab[:, :, -1, :]).reshape(p, -1)
    left_edge = np.ascontiguousarray(lab[:, :, 0, :]).reshape(p, -1)
    bottom_edge = np.ascontiguousarray(lab[:, -1, :, :]).reshape(p, -1)
    top_edge = np.ascontiguousarray(lab[:, 0, :, :]).reshape(p, -1)

    d_right = _edge_distance_matrix(right_edge, left_edge)
    d_down = _edge_distance_matrix(bottom_edge, top_edge)

    min_excl_self, sorted_candidates, best_buddy = _derive_tables(d_right, d_down)
    return CompatCache(
        piece_count=p,
        d_right=d_right,
        d_down=d_down,
        min_excl_self=min_excl_self,
        sorted_candidates=sorted_candidates,
        best_buddy=best_buddy,
    )


CACHE_FORMAT_VERSION = 1


def save_cache(cache: CompatCache, path: str | Path) -> None:
    """Write the two base matrices; derived tables are rebuilt on load."""
    np.savez(
        path,
        version=np.int64(CACHE_FORMAT_VERSION),
        d_right=cache.d_right,
        d_down=cache.d_down,
    )


def load_cache(path: str | Path) -> CompatCache:
    with np.load(path) as data:
        if int(data["version"]) != CACHE_FORMAT_VERSION:
            raise PuzzleError(f"unsupported cache version in {path}")
        d_right = np.array(data["d_right"], dtype=np.float64)
        d_down = np.array(data["d_down"], dtype=np.float64)
    if d_right.shape != d_down.shape or d_right.ndim != 2 or d_right.shape[0] != d_right.shape[1]:
        raise PuzzleError(f"malformed cache file {path}")
    min_excl_self, sorted_candidates, best_buddy = _derive_tables(d_right, d_down)
    return CompatCache(
        piece_count=d_right.shape[0],
        d_right=d_right,
        d_down=d_down,
        min_excl_self=min_excl_self,
        sorted_candidates=sorted_candidates,
        best_buddy=best_buddy,
    )
