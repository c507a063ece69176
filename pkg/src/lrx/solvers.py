"""Constructive decompositions into L, R, X.

``longest_word`` writes out the closed-form word for the longest element.
``constructive_solve`` sorts any permutation by carrying elements around the
circle through the two-slot window at positions 0 and 1.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .perm import Word, apply_word, as_perm


def longest_word_length(n: int) -> int:
    m = n // 2
    delta = 1 if n % 2 == 0 else 0
    return (m - delta) * (m - delta + 1) + (m - 1) * m + m


def longest_word(n: int) -> Word:
    """Word of length n(n-1)/2 taking ``e`` to the longest element.

    Factors are emitted in written order and applied left to right.  The
    longest element is an involution, so the same word also takes it back to
    ``e``.
    """
    if n < 4:
        raise ValueError("longest_word needs n >= 4")
    m = n // 2
    delta = 1 if n % 2 == 0 else 0
    parts = []
    for i in range(1, m - delta + 1):
        parts.append(("X" + ("L" if (i - 1) % 2 == 0 else "R")) * i)
    for i in range(m - 1, 0, -1):
        parts.append((("L" if (i - delta) % 2 == 0 else "R") + "X") * i)
    parts.append("R" * m)
    return "".join(parts)


def upper_bound(n: int) -> int:
    return n * (n - 1) // 2 + 3 * n


def axial_lower_bound(n: int) -> int:
    """floor(n^2 / 2) - n - 1: distance floor for pairs related by a reflection."""
    if n < 4:
        raise ValueError("axial_lower_bound needs n >= 4")
    return n * n // 2 - n - 1


def simplify(word: str, n: int) -> Word:
    """Cancel XX, LR and RL; fuse rotation runs modulo n."""
    runs: list = []  # entries are "X" or a signed rotation count
    for g in word:
        if g == "X":
            if runs and runs[-1] == "X":
                runs.pop()
            else:
                runs.append("X")
            continue
        step = 1 if g == "L" else -1
        if runs and runs[-1] != "X":
            k = (runs[-1] + step) % n
            if 2 * k > n:
                k -= n
            if k:
                runs[-1] = k
            else:
                runs.pop()
        else:
            runs.append(step)
    out = []
    for r in runs:
        if r == "X":
            out.append("X")
        elif r > 0:
            out.append("L" * r)
        else:
            out.append("R" * -r)
    return "".join(out)


# ---------------------------------------------------------------------------
# carrying solver


def _rotation_displacements(p: np.ndarray) -> tuple:
    """Signed shortest displacement of every value for every target rotation.

    Row ``r`` targets the circular arrangement where value ``v`` sits at
    circle position ``(v + r) mod n``.  Also returns, per row, how many
    entries must wrap (by -/+n) so that the displacements sum to zero.
    """
    n = p.size
    pos = np.empty(n, dtype=np.int64)
    pos[p] = np.arange(n)
    disp = (np.arange(n)[None, :] + np.arange(n)[:, None] - pos[None, :]) % n
    disp = np.where(2 * disp > n, disp - n, disp)
    return disp, disp.sum(axis=1) // n


def _rotation_costs(disp: np.ndarray, wraps: np.ndarray, n: int) -> np.ndarray:
    cost = np.abs(disp).sum(axis=1)
    desc = -np.sort(-disp, axis=1)
    asc = np.sort(disp, axis=1)
    up = np.cumsum(n - 2 * desc, axis=1)
    down = np.cumsum(n + 2 * asc, axis=1)
    extra = np.zeros(len(wraps), dtype=np.int64)
    pos = wraps > 0
    neg = wraps < 0
    extra[pos] = up[pos, wraps[pos] - 1]
    extra[neg] = down[neg, -wraps[neg] - 1]
    return cost + extra


def _balance(row: np.ndarray, wraps: int, n: int) -> list:
    d = row.copy()
    if wraps > 0:
        d[np.argsort(-d, kind="stable")[:wraps]] -= n
    elif wraps < 0:
        d[np.argsort(d, kind="stable")[:-wraps]] += n
    return [int(x) for x in d]


def _carry(p: Sequence[int], rotation: int, disp: list) -> str:
    """Greedy carrying under fixed affine displacements.

    ``rem[v]`` is the remaining signed travel of value ``v`` along the circle
    (the unwrapped coordinate; a pass across the 0/n-1 seam still counts as
    +-1).  The adjacent pair at circle positions ``(i, i+1)`` is out of order
    iff ``rem[a] - rem[b] >= 2``; every X fixes exactly one such pair.  After a
    swap the window follows whichever of the two elements still has an
    out-of-order neighbour ahead, so most swaps cost one rotation.
    """
    n = len(p)
    c = list(p)
    rem = [0] * n
    for v in range(n):
        rem[v] = disp[v]
    o = 0
    out: list = []
    put = out.append
    while True:
        a = c[o]
        o1 = o + 1 if o + 1 < n else 0
        b = c[o1]
        if rem[a] - rem[b] >= 2:
            c[o] = b
            c[o1] = a
            rem[a] -= 1
            rem[b] += 1
            put("X")
            o2 = o1 + 1 if o1 + 1 < n else 0
            om = o - 1 if o else n - 1
            ahead = rem[a] - rem[c[o2]] >= 2
            behind = rem[c[om]] - rem[b] >= 2
            if ahead and (not behind or abs(rem[a]) >= abs(rem[b])):
                o = o1
                put("L")
            elif behind:
                o = om
                put("R")
            continue
        step = 0
        for k in range(1, n):
            i = (o + k) % n
            if rem[c[i]] - rem[c[(i + 1) % n]] >= 2:
                step = k
                break
            i = (o - k) % n
            if rem[c[i]] - rem[c[(i + 1) % n]] >= 2:
                step = -k
                break
        if not step:
            break
        put("L" * step if step > 0 else "R" * -step)
        o = (o + step) % n
    if any(rem):
        raise RuntimeError("carrying stalled with unsorted elements")
    k = (rotation - o) % n
    put("L" * k if k <= n - k else "R" * (n - k))
    return "".join(out)


def constructive_solve(p: Sequence[int], candidates: int = 1) -> Word:
    """Word ``w`` with ``apply_word(p, w) == e``.

    The target rotation is chosen by minimal total displacement (the best
    ``candidates`` rotations are tried, the shortest word is kept).  Output
    length never exceeded n(n-1)/2 + 3n in testing (exhaustive for n <= 8).
    """
    p = as_perm(p)
    n = len(p)
    if p == tuple(range(n)):
        return ""
    arr = np.array(p)
    disp, wraps = _rotation_displacements(arr)
    costs = _rotation_costs(disp, wraps, n)
    best = None
    for r in np.argsort(costs, kind="stable")[: max(1, candidates)]:
        r = int(r)
        w = simplify(_carry(p, r, _balance(disp[r], int(wraps[r]), n)), n)
        if best is None or len(w) < len(best):
            best = w
    return best


def verify(p: Sequence[int], word: str) -> bool:
    return apply_word(p, word) == tuple(range(len(p)))
