"""Kernel-growing crossover.

A child arrangement is assembled piece by piece around a random seed
piece on an open board. Every placement fills a slot on the kernel
boundary, chosen by the first of three phases that yields a candidate:

1. agreement: both parents put the same unused piece next to a boundary
   piece, in the same direction;
2. best buddy: one parent's neighbor which is also a mutual best match
   across that edge;
3. greedy: a uniformly random boundary slot, filled with the most
   compatible unused piece.

After every single placement control returns to phase 1. In phases 1
and 3 the chosen piece is, with small probability, replaced by a
uniformly random unused piece. The kernel floats freely: only relative
positions matter, and a placement is legal only while the kernel's
bounding box still fits the target grid.

Two engines build children: a plain Python one (`engine="reference"`,
instrumentable, verbose) and a compiled one (`engine="fast"`). Both
consume the same pre-drawn array of uniform variates in the same order,
so for equal inputs they return identical children.

Draw consumption order, with P the piece count: one draw picks the seed
piece; each later placement uses one draw to pick among the phase's
candidates (phase 3 picks a boundary slot), then, in phases 1 and 3
only, one mutation coin and, when the coin fires, one draw to pick the
substitute. The array length is fixed at ``draw_budget(P)`` which
over-provisions slightly; unused tail draws are ignored.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from . import _fastcross
from .compat import CompatCache
from .puzzle import (
    Arrangement,
    ContractViolationError,
    PuzzleError,
    Relation,
)

PHASE_SEED = 0
PHASE_AGREEMENT = 1
PHASE_BEST_BUDDY = 2
PHASE_GREEDY = 3

_ENGINES = ("fast", "reference")


def draw_budget(piece_count: int) -> int:
    """Length of the uniform-draws array one child consumes at most."""
    return 3 * piece_count + 4


@dataclass(frozen=True)
class CrossoverConfig:
    """Knobs for a standalone crossover call."""

    mutation_rate: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise PuzzleError(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")


@dataclass(frozen=True)
class PlacementRecord:
    """One step of child assembly, in final-grid coordinates."""

    step: int
    phase: int
    mutated: bool
    piece: int
    row: int
    col: int
    anchor_piece: int
    anchor_relation: Relation | None


def records_from_trace(trace: np.ndarray) -> list[PlacementRecord]:
    records = []
    for step, (phase, mutated, piece, row, col, anchor_key) in enumerate(trace.tolist()):
        records.append(
            PlacementRecord(
                step=step,
                phase=int(phase),
                mutated=bool(mutated),
                piece=int(piece),
                row=int(row),
                col=int(col),
                anchor_piece=-1 if anchor_key < 0 else int(anchor_key) >> 2,
                anchor_relation=None if anchor_key < 0 else Relation(int(anchor_key) & 3),
            )
        )
    return records


def neighbor_tables(grid: np.ndarray) -> np.ndarray:
    """Per-piece neighbors of an N x M grid, shape (4, N*M) int32.

    Entry [relation, piece] is the id adjacent to ``piece`` in that
    direction, or -1 at the grid edge.
    """
    g = np.asarray(grid, dtype=np.int32)
    nbr = np.full((4, g.size), -1, dtype=np.int32)
    nbr[Relation.RIGHT, g[:, :-1].ravel()] = g[:, 1:].ravel()
    nbr[Relation.LEFT, g[:, 1:].ravel()] = g[:, :-1].ravel()
    nbr[Relation.DOWN, g[:-1, :].ravel()] = g[1:, :].ravel()
    nbr[Relation.UP, g[1:, :].ravel()] = g[:-1, :].ravel()
    return nbr


def _uniform_index(u: float, n: int) -> int:
    """Map a uniform draw in [0, 1) to an index in [0, n)."""
    idx = int(u * n)
    return n - 1 if idx >= n else idx


class KernelAssembly:
    """Mutable state of one child being grown, reference flavor.

    The board is a (2N-1) x (2M-1) plane with the seed at its center,
    which is exactly large enough for every kernel whose bounding box
    fits N x M. Boundary slots are kept as sorted integer keys
    ``piece * 4 + relation`` so iterating them visits (piece id,
    relation code) in ascending order; a key is present exactly while
    its piece is placed and the adjacent cell in that direction is an
    empty board cell. Frame legality is checked at query time, not
    stored.
    """

    def __init__(self, rows: int, cols: int):
        self.rows = rows
        self.cols = cols
        self.piece_count = rows * cols
        self.board = np.full((2 * rows - 1, 2 * cols - 1), -1, dtype=np.int32)
        self.pos = np.full((self.piece_count, 2), -1, dtype=np.int64)
        self.used = np.zeros(self.piece_count, dtype=bool)
        self.keys: list[int] = []
        self.placed = 0
        self.min_r = self.max_r = rows - 1
        self.min_c = self.max_c = cols - 1

    def target_of(self, key: int) -> tuple[int, int]:
        piece, rel = key >> 2, Relation(key & 3)
        dr, dc = rel.delta
        return int(self.pos[piece, 0]) + dr, int(self.pos[piece, 1]) + dc

    def in_frame(self, row: int, col: int) -> bool:
        """Would a piece at (row, col) keep the bounding box legal?"""
        height = max(self.max_r, row) - min(self.min_r, row) + 1
        width = max(self.max_c, col) - min(self.min_c, col) + 1
        return height <= self.rows and width <= self.cols

    def place(self, piece: int, row: int, col: int) -> None:
        if self.used[piece]:
            raise ContractViolationError(f"piece {piece} is already placed")
        if self.board[row, col] >= 0:
            raise ContractViolationError(f"cell ({row}, {col}) is occupied")
        if self.placed > 0 and not self.in_frame(row, col):
            raise ContractViolationError(f"cell ({row}, {col}) breaks the frame")
        self.board[row, col] = piece
        self.pos[piece] = (row, col)
        self.used[piece] = True
        if self.placed == 0:
            self.min_r = self.max_r = row
            self.min_c = self.max_c = col
        else:
            self.min_r = min(self.min_r, row)
            self.max_r = max(self.max_r, row)
            self.min_c = min(self.min_c, col)
            self.max_c = max(self.max_c, col)
        self.placed += 1
        for rel in Relation:
            rr, cc = row + rel.delta[0], col + rel.delta[1]
            if not (0 <= rr < self.board.shape[0] and 0 <= cc < self.board.shape[1]):
                continue
            other = int(self.board[rr, cc])
            if other >= 0:
                # The neighbor's slot pointing into this cell is gone.
                dead = other * 4 + rel.complement.value
                at = bisect.bisect_left(self.keys, dead)
                if at >= len(self.keys) or self.keys[at] != dead:
                    raise ContractViolationError("boundary bookkeeping out of sync")
                self.keys.pop(at)
            else:
                bisect.insort(self.keys, piece * 4 + rel.value)

    def legal_boundaries(self) -> list[tuple[int, Relation]]:
        """Open slots that keep the frame legal, as (piece, relation) pairs.

        Ordered by piece id then relation code; empty once the kernel is
        complete because no empty adjacent cell remains inside the frame.
        """
        return [
            (key >> 2, Relation(key & 3))
            for key in self.keys
            if self.in_frame(*self.target_of(key))
        ]

    def to_grid(self) -> np.ndarray:
        if self.placed != self.piece_count:
            raise ContractViolationError("assembly is not complete")
        return self.board[
            self.min_r : self.min_r + self.rows, self.min_c : self.min_c + self.cols
        ].copy()

    def check_invariants(self) -> None:
        """Verify the full state from scratch; raises on any breach."""
        occupied = np.argwhere(self.board >= 0)
        if len(occupied) != self.placed or int(self.used.sum()) != self.placed:
            raise ContractViolationError("placed count disagrees with board or flags")
        for r, c in occupied:
            piece = int(self.board[r, c])
            if tuple(self.pos[piece]) != (int(r), int(c)):
                raise ContractViolationError(f"position of piece {piece} is stale")
        height = self.max_r - self.min_r + 1
        width = self.max_c - self.min_c + 1
        if height > self.rows or width > self.cols:
            raise ContractViolationError("bounding box exceeds the frame")
        rows = occupied[:, 0]
        cols = occupied[:, 1]
        if (
            rows.min() != self.min_r
            or rows.max() != self.max_r
            or cols.min() != self.min_c
            or cols.max() != self.max_c
        ):
            raise ContractViolationError("tracked bounding box is stale")

        # Contiguity: flood fill from any placed cell must reach all of them.
        stack = [tuple(occupied[0])]
        seen = {tuple(occupied[0])}
        while stack:
            r, c = stack.pop()
            for rel in Relation:
                rr, cc = r + rel.delta[0], c + rel.delta[1]
                if (
                    0 <= rr < self.board.shape[0]
                    and 0 <= cc < self.board.shape[1]
                    and self.board[rr, cc] >= 0
                    and (rr, cc) not in seen
                ):
                    seen.add((rr, cc))
                    stack.append((rr, cc))
        if len(seen) != self.placed:
            raise ContractViolationError("kernel is not contiguous")

        expected = []
        for r, c in occupied:
            piece = int(self.board[r, c])
            for rel in Relation:
                rr, cc = int(r) + rel.delta[0], int(c) + rel.delta[1]
                if (
                    0 <= rr < self.board.shape[0]
                    and 0 <= cc < self.board.shape[1]
                    and self.board[rr, cc] < 0
                ):
                    expected.append(piece * 4 + rel.value)
        if sorted(expected) != self.keys:
            raise ContractViolationError("boundary key set is stale")


def _phase_agreement(asm: KernelAssembly, nbr1, nbr2) -> list[tuple[int, int]]:
    """(key, piece) pairs where both parents name the same unused neighbor."""
    out = []
    for key in asm.keys:
        piece, rel = key >> 2, key & 3
        if not asm.in_frame(*asm.target_of(key)):
            continue
        q = int(nbr1[rel, piece])
        if q >= 0 and q == int(nbr2[rel, piece]) and not asm.used[q]:
            out.append((key, q))
    return out


def _phase_best_buddy(asm: KernelAssembly, nbr1, nbr2, cache: CompatCache):
    """(key, piece) pairs where a parent's neighbor is a mutual best match."""
    out = []
    for key in asm.keys:
        piece, rel = key >> 2, key & 3
        if not asm.in_frame(*asm.target_of(key)):
            continue
        for table in (nbr1, nbr2):
            q = int(table[rel, piece])
            if q >= 0 and not asm.used[q] and cache.are_best_buddies(piece, q, Relation(rel)):
                out.append((key, q))
    return out


def _phase_greedy_slots(asm: KernelAssembly) -> list[int]:
    return [key for key in asm.keys if asm.in_frame(*asm.target_of(key))]


def _pick_unused(used: np.ndarray, draw: float) -> int:
    """The k-th unused piece in ascending id order, k from the draw."""
    unused = np.flatnonzero(~used)
    return int(unused[_uniform_index(draw, len(unused))])


def _assemble_reference(
    rows: int,
    cols: int,
    nbr1: np.ndarray,
    nbr2: np.ndarray,
    cache: CompatCache,
    mutation_rate: float,
    draws: np.ndarray,
    verify_each_step: bool,
) -> tuple[np.ndarray, np.ndarray, int]:
    p = rows * cols
    asm = KernelAssembly(rows, cols)
    trace = np.empty((p, 6), dtype=np.int32)
    cursor = 0

    seed = _uniform_index(float(draws[cursor]), p)
    cursor += 1
    asm.place(seed, rows - 1, cols - 1)
    trace[0] = (PHASE_SEED, 0, seed, rows - 1, cols - 1, -1)
    if verify_each_step:
        asm.check_invariants()

    while asm.placed < p:
        candidates = _phase_agreement(asm, nbr1, nbr2)
        phase = PHASE_AGREEMENT
        if not candidates:
            candidates = _phase_best_buddy(asm, nbr1, nbr2, cache)
            phase = PHASE_BEST_BUDDY
        if candidates:
            key, piece = candidates[_uniform_index(float(draws[cursor]), len(candidates))]
            cursor += 1
        else:
            phase = PHASE_GREEDY
            slots = _phase_greedy_slots(asm)
            if not slots:
                raise ContractViolationError("no legal boundary slot on a partial kernel")
            key = slots[_uniform_index(float(draws[cursor]), len(slots))]
            cursor += 1
            piece = cache.most_compatible_available(key >> 2, Relation(key & 3), asm.used)

        mutated = False
        if phase != PHASE_BEST_BUDDY:
            coin = float(draws[cursor])
            cursor += 1
            if coin < mutation_rate:
                piece = _pick_unused(asm.used, float(draws[cursor]))
                cursor += 1
                mutated = True

        row, col = asm.target_of(key)
        step = asm.placed
        asm.place(piece, row, col)
        trace[step] = (phase, int(mutated), piece, row, col, key)
        if verify_each_step:
            asm.check_invariants()

    trace[:, 3] -= asm.min_r
    trace[:, 4] -= asm.min_c
    return asm.to_grid(), trace, cursor


def crossover_grid(
    grid1: np.ndarray,
    grid2: np.ndarray,
    cache: CompatCache,
    mutation_rate: float,
    draws: np.ndarray,
    engine: str = "fast",
    want_trace: bool = False,
    verify_each_step: bool = False,
):
    """Assemble one child grid from two parent grids.

    ``draws`` must hold exactly ``draw_budget(P)`` uniform variates in
    [0, 1); the same array fed to either engine yields the same child.
    Returns the child grid, or (grid, trace) when ``want_trace`` is
    set, where trace is a (P, 6) int32 array of
    (phase, mutated, piece, row, col, anchor key) rows.
    """
    g1 = np.ascontiguousarray(grid1, dtype=np.int32)
    g2 = np.ascontiguousarray(grid2, dtype=np.int32)
    if g1.shape != g2.shape or g1.ndim != 2:
        raise PuzzleError(f"parent shapes differ: {g1.shape} vs {g2.shape}")
    rows, cols = g1.shape
    p = rows * cols
    if cache.piece_count != p:
        raise PuzzleError(
            f"cache holds {cache.piece_count} pieces but parents have {p}"
        )
    if engine not in _ENGINES:
        raise PuzzleError(f"unknown engine {engine!r}, expected one of {_ENGINES}")
    draws = np.asarray(draws, dtype=np.float64)
    if draws.shape != (draw_budget(p),):
        raise ContractViolationError(
            f"need exactly {draw_budget(p)} draws for {p} pieces, got shape {draws.shape}"
        )
    if verify_each_step and engine != "reference":
        raise ContractViolationError("per-step verification requires the reference engine")

    nbr1 = neighbor_tables(g1)
    nbr2 = neighbor_tables(g2)

    if engine == "reference":
        grid, trace, _ = _assemble_reference(
            rows, cols, nbr1, nbr2, cache, float(mutation_rate), draws, verify_each_step
        )
    else:
        grid = np.empty((rows, cols), dtype=np.int32)
        trace = np.empty((p, 6), dtype=np.int32)
        rc = _fastcross.assemble(
            rows,
            cols,
            nbr1,
            nbr2,
            cache.d_right,
            cache.d_down,
            cache.min_excl_self,
            cache.sorted_candidates,
            draws,
            float(mutation_rate),
            grid,
            trace,
        )
        if rc < 0:
            raise ContractViolationError(f"child assembly failed with code {rc}")

    return (grid, trace) if want_trace else grid


def crossover(
    parent1: Arrangement,
    parent2: Arrangement,
    cache: CompatCache,
    config: CrossoverConfig | None = None,
    *,
    engine: str = "fast",
    rng: np.random.Generator | None = None,
    collect_trace: bool = False,
    verify_each_step: bool = False,
):
    """Produce a child Arrangement from two parents.

    Randomness comes from ``rng`` when given, otherwise from a fresh
    generator seeded with ``config.rng_seed``. With ``collect_trace``
    the return value is (child, list of PlacementRecord).
    """
    if parent1.dims != parent2.dims:
        raise PuzzleError("parents must share dims")
    config = config or CrossoverConfig()
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    draws = rng.random(draw_budget(parent1.dims.piece_count))
    out = crossover_grid(
        parent1.grid,
        parent2.grid,
        cache,
        config.mutation_rate,
        draws,
        engine=engine,
        want_trace=collect_trace,
        verify_each_step=verify_each_step,
    )
    if collect_trace:
        grid, trace = out
        return Arrangement(parent1.dims, grid), records_from_trace(trace)
    return Arrangement(parent1.dims, out)
