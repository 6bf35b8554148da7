"""Compiled child-assembly core.

Mirrors the reference engine in ``crossover`` step for step: same
boundary bookkeeping, same candidate ordering, same draw consumption.
Any behavioral change here must be made in the reference engine too;
the equivalence tests compare the two on identical draw arrays.

State is kept in plain arrays so the whole loop stays in machine code:
``state`` packs (boundary size, min row, max row, min col, max col,
placed count) as int64. Boundary keys are piece * 4 + relation, kept
sorted ascending, with relation codes LEFT=0 RIGHT=1 UP=2 DOWN=3 and
complement = code ^ 1.
"""

import numpy as np
from numba import njit

# Cell offset per relation code, indexed LEFT, RIGHT, UP, DOWN.
_DR = np.array([0, 0, -1, 1], dtype=np.int64)
_DC = np.array([-1, 1, 0, 0], dtype=np.int64)

_NKEYS, _MIN_R, _MAX_R, _MIN_C, _MAX_C, _PLACED = 0, 1, 2, 3, 4, 5


@njit(cache=True, nogil=True)
def _uniform_index(u, n):
    idx = int(u * n)
    if idx >= n:
        idx = n - 1
    return idx


@njit(cache=True, nogil=True)
def _find(keys, n, key):
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def _insert_key(keys, state, key):
    n = state[_NKEYS]
    at = _find(keys, n, key)
    for t in range(n, at, -1):
        keys[t] = keys[t - 1]
    keys[at] = key
    state[_NKEYS] = n + 1


@njit(cache=True, nogil=True)
def _remove_key(keys, state, key):
    n = state[_NKEYS]
    at = _find(keys, n, key)
    if at >= n or keys[at] != key:
        return False
    for t in range(at, n - 1):
        keys[t] = keys[t + 1]
    state[_NKEYS] = n - 1
    return True


@njit(cache=True, nogil=True)
def _place(board, pos_r, pos_c, used, keys, state, piece, r, c):
    board[r, c] = piece
    pos_r[piece] = r
    pos_c[piece] = c
    used[piece] = True
    if state[_PLACED] == 0:
        state[_MIN_R] = r
        state[_MAX_R] = r
        state[_MIN_C] = c
        state[_MAX_C] = c
    else:
        if r < state[_MIN_R]:
            state[_MIN_R] = r
        if r > state[_MAX_R]:
            state[_MAX_R] = r
        if c < state[_MIN_C]:
            state[_MIN_C] = c
        if c > state[_MAX_C]:
            state[_MAX_C] = c
    state[_PLACED] += 1
    for rel in range(4):
        rr = r + _DR[rel]
        cc = c + _DC[rel]
        if rr < 0 or rr >= board.shape[0] or cc < 0 or cc >= board.shape[1]:
            continue
        other = board[rr, cc]
        if other >= 0:
            if not _remove_key(keys, state, np.int64(other) * 4 + (rel ^ 1)):
                return False
        else:
            _insert_key(keys, state, np.int64(piece) * 4 + rel)
    return True


@njit(cache=True, nogil=True)
def _in_frame(state, rows, cols, tr, tc):
    lo_r = tr if tr < state[_MIN_R] else state[_MIN_R]
    hi_r = tr if tr > state[_MAX_R] else state[_MAX_R]
    if hi_r - lo_r + 1 > rows:
        return False
    lo_c = tc if tc < state[_MIN_C] else state[_MIN_C]
    hi_c = tc if tc > state[_MAX_C] else state[_MAX_C]
    return hi_c - lo_c + 1 <= cols


@njit(cache=True, nogil=True)
def _is_best_buddy(d_right, d_down, minexc, p, q, rel):
    if rel == 1:
        v = d_right[p, q]
    elif rel == 0:
        v = d_right[q, p]
    elif rel == 3:
        v = d_down[p, q]
    else:
        v = d_down[q, p]
    return v <= minexc[rel, p] and v <= minexc[rel ^ 1, q]


@njit(cache=True, nogil=True)
def assemble(
    rows,
    cols,
    nbr1,
    nbr2,
    d_right,
    d_down,
    minexc,
    sorted_cands,
    draws,
    mutation_rate,
    out_grid,
    trace,
):
    """Fill ``out_grid`` and ``trace`` with one child; negative on bug.

    Returns the number of draws consumed, or -1 when no legal boundary
    slot exists on a partial kernel, -2 when no unused piece remains for
    a greedy slot, -3 when boundary bookkeeping desyncs. All three mean
    a broken invariant, not bad input.
    """
    p = rows * cols
    board = np.full((2 * rows - 1, 2 * cols - 1), -1, dtype=np.int32)
    pos_r = np.full(p, -1, dtype=np.int64)
    pos_c = np.full(p, -1, dtype=np.int64)
    used = np.zeros(p, dtype=np.bool_)
    keys = np.empty(4 * p + 4, dtype=np.int64)
    cand_key = np.empty(8 * p + 8, dtype=np.int64)
    cand_piece = np.empty(8 * p + 8, dtype=np.int64)
    state = np.zeros(6, dtype=np.int64)

    cursor = 0
    seed = _uniform_index(draws[cursor], p)
    cursor += 1
    if not _place(board, pos_r, pos_c, used, keys, state, seed, rows - 1, cols - 1):
        return -3
    trace[0, 0] = 0
    trace[0, 1] = 0
    trace[0, 2] = seed
    trace[0, 3] = rows - 1
    trace[0, 4] = cols - 1
    trace[0, 5] = -1

    while state[_PLACED] < p:
        nkeys = state[_NKEYS]

        # Phase 1: slots where both parents agree on an unused piece.
        ncand = 0
        for t in range(nkeys):
            k = keys[t]
            anchor = k >> 2
            rel = k & 3
            tr = pos_r[anchor] + _DR[rel]
            tc = pos_c[anchor] + _DC[rel]
            if not _in_frame(state, rows, cols, tr, tc):
                continue
            q = nbr1[rel, anchor]
            if q >= 0 and q == nbr2[rel, anchor] and not used[q]:
                cand_key[ncand] = k
                cand_piece[ncand] = q
                ncand += 1
        phase = 1

        # Phase 2: a parent's neighbor that is also a mutual best match.
        if ncand == 0:
            phase = 2
            for t in range(nkeys):
                k = keys[t]
                anchor = k >> 2
                rel = k & 3
                tr = pos_r[anchor] + _DR[rel]
                tc = pos_c[anchor] + _DC[rel]
                if not _in_frame(state, rows, cols, tr, tc):
                    continue
                q = nbr1[rel, anchor]
                if q >= 0 and not used[q] and _is_best_buddy(d_right, d_down, minexc, anchor, q, rel):
                    cand_key[ncand] = k
                    cand_piece[ncand] = q
                    ncand += 1
                q = nbr2[rel, anchor]
                if q >= 0 and not used[q] and _is_best_buddy(d_right, d_down, minexc, anchor, q, rel):
                    cand_key[ncand] = k
                    cand_piece[ncand] = q
                    ncand += 1

        if ncand > 0:
            idx = _uniform_index(draws[cursor], ncand)
            cursor += 1
            k = cand_key[idx]
            piece = cand_piece[idx]
        else:
            # Phase 3: random legal slot, most compatible unused piece.
            phase = 3
            ncand = 0
            for t in range(nkeys):
                k = keys[t]
                anchor = k >> 2
                rel = k & 3
                tr = pos_r[anchor] + _DR[rel]
                tc = pos_c[anchor] + _DC[rel]
                if _in_frame(state, rows, cols, tr, tc):
                    cand_key[ncand] = k
                    ncand += 1
            if ncand == 0:
                return -1
            idx = _uniform_index(draws[cursor], ncand)
            cursor += 1
            k = cand_key[idx]
            anchor = k >> 2
            rel = k & 3
            piece = np.int64(-1)
            row = sorted_cands[rel, anchor]
            for t in range(row.shape[0]):
                if not used[row[t]]:
                    piece = np.int64(row[t])
                    break
            if piece < 0:
                return -2

        mutated = 0
        if phase != 2:
            coin = draws[cursor]
            cursor += 1
            if coin < mutation_rate:
                pick = draws[cursor]
                cursor += 1
                want = _uniform_index(pick, p - state[_PLACED])
                seen = 0
                for j in range(p):
                    if not used[j]:
                        if seen == want:
                            piece = j
                            break
                        seen += 1
                mutated = 1

        anchor = k >> 2
        rel = k & 3
        tr = pos_r[anchor] + _DR[rel]
        tc = pos_c[anchor] + _DC[rel]
        step = state[_PLACED]
        if not _place(board, pos_r, pos_c, used, keys, state, piece, tr, tc):
            return -3
        trace[step, 0] = phase
        trace[step, 1] = mutated
        trace[step, 2] = piece
        trace[step, 3] = tr
        trace[step, 4] = tc
        trace[step, 5] = k

    for i in range(rows):
        for j in range(cols):
            out_grid[i, j] = board[state[_MIN_R] + i, state[_MIN_C] + j]
    for t in range(p):
        trace[t, 3] -= state[_MIN_R]
        trace[t, 4] -= state[_MIN_C]
    return cursor
