"""Density-independent redistribution weights over velocity classes.

Every branch of the interaction table factors into a density coefficient
times a weight profile over destination classes.  The profiles depend only
on the class count, so they are tabulated once (0-based indices) and shared
by both compute backends:

* ``acc[h, p, i]``: acceleration weights 1/(i-h) over i = h+1..p,
  normalized over that same range (zero outside, zero row if h >= p);
* ``acc_short[h, i]``: the capped variant whose normalizer stops one class
  short of the top while entries still reach the top class (zero row when
  the normalizer range is empty);
* ``brk[h, i]``: braking weights (h-i) over i = 0..h-1, normalized
  (zero row for h = 0);
* ``brk_from[h, p, i]``: braking weights (h-i) over i = p+1..h for p < h,
  normalized (zero row when h = p+1, where every numerator vanishes).

A zero row marks a degenerate branch; fill code then collapses the branch
to a point mass at the candidate's class so row mass is preserved.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class WeightTables(NamedTuple):
    acc: np.ndarray
    acc_short: np.ndarray
    brk: np.ndarray
    brk_from: np.ndarray


def build_weight_tables(n: int) -> WeightTables:
    """Tabulate the class-redistribution weights for an n-class grid."""
    acc = np.zeros((n, n, n))
    for h in range(n):
        for p in range(h + 1, n):
            norm = sum(1.0 / (z - h) for z in range(h + 1, p + 1))
            for i in range(h + 1, p + 1):
                acc[h, p, i] = (1.0 / (i - h)) / norm

    acc_short = np.zeros((n, n))
    for h in range(n):
        norm = sum(1.0 / (z - h) for z in range(h + 1, n - 1))
        if norm > 0.0:
            for i in range(h + 1, n):
                acc_short[h, i] = (1.0 / (i - h)) / norm

    brk = np.zeros((n, n))
    for h in range(1, n):
        norm = h * (h + 1) / 2.0
        for i in range(h):
            brk[h, i] = (h - i) / norm

    brk_from = np.zeros((n, n, n))
    for h in range(n):
        for p in range(h):
            norm = float(sum(h - z for z in range(p + 1, h + 1)))
            if norm > 0.0:
                for i in range(p + 1, h + 1):
                    brk_from[h, p, i] = (h - i) / norm

    return WeightTables(acc=acc, acc_short=acc_short, brk=brk, brk_from=brk_from)


_CACHE: dict = {}


def weight_tables(n: int) -> WeightTables:
    """Cached weight tables (read-only arrays)."""
    tables = _CACHE.get(n)
    if tables is None:
        tables = build_weight_tables(n)
        for arr in tables:
            arr.setflags(write=False)
        _CACHE[n] = tables
    return tables
