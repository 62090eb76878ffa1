"""Independent oracles: a second transcription of the interaction table,
conservation meters and convergence-order estimation.

``oracle_row`` re-derives every transition-probability branch from scratch
with 1-based indices and explicit loops.  It deliberately shares no code
with the production dispatcher (no weight tables, no backends); agreement
between the two over random contexts is itself a test.

Shared modeling conventions (applied identically on both sides):

* perceived density is used wherever the formulas mix it with the real
  density; in homogeneous conditions the two coincide;
* the acceleration normalizer in the slow-lane branch of the
  catching-up case runs over the same class range as its entries;
* the acceleration normalizer of the standing-pair mid-lane branch is
  sum_{z=2..n} 1/(z-1), the same family used by its slow/fast-lane twins
  (the printed normalizer divides by zero);
* a branch whose class range is empty or whose weight normalizer sums to
  zero collapses to a point mass at the candidate's current class in the
  branch's destination lane, so the row's mass budget is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np


def oracle_row(h: int, p: int, r: int, alpha: float, lrho, n: int, L: int) -> Dict[Tuple[int, int], float]:
    """Raw transition row {(i, lane): probability} for one interaction.

    All indices 1-based; ``lrho[k]`` is L times the perceived density of
    lane k+1, each entry in [0, 1].
    """
    if not (1 <= h <= n and 1 <= p <= n):
        raise ValueError(f"classes ({h}, {p}) out of range 1..{n}")
    if not 1 <= r <= L:
        raise ValueError(f"lane {r} out of range 1..{L}")
    D = [float(x) for x in lrho]
    a = float(alpha)
    row: Dict[Tuple[int, int], float] = {}

    def add(i, ell, value):
        row[(i, ell)] = row.get((i, ell), 0.0) + value

    def spread_accel(lo, hi, norm_hi, coeff, ell):
        # weights 1/(i-h) over i = lo..hi, normalizer over z = lo..norm_hi
        s = sum(1.0 / (z - h) for z in range(lo, norm_hi + 1))
        if hi < lo or s <= 0.0:
            add(h, ell, coeff)
            return
        for i in range(lo, hi + 1):
            add(i, ell, coeff * (1.0 / (i - h)) / s)

    def spread_brake(lo, hi, top, coeff, ell):
        # weights (top-i) over i = lo..hi, normalizer sum_{z=lo..hi} (top-z)
        s = sum(top - z for z in range(lo, hi + 1))
        if hi < lo or s <= 0.0:
            add(h, ell, coeff)
            return
        for i in range(lo, hi + 1):
            add(i, ell, coeff * (top - i) / s)

    if h < p:
        # candidate meets a faster particle: keep lane (maybe accelerate)
        # or drop to the slower lane
        if r == 1:
            add(h, 1, 1.0 - a * (1.0 - D[0]))
            spread_accel(h + 1, p, p, a * (1.0 - D[0]), 1)
        elif h == 1:
            add(1, r, D[r - 1])
            spread_accel(2, p, p, 1.0 - D[r - 1], r)
        else:
            keep = 1.0 - D[r - 1] * (1.0 - D[r - 2])
            move = D[r - 1] * (1.0 - D[r - 2])
            add(h, r, (1.0 - a) * keep)
            spread_accel(h + 1, p, p, a * keep, r)
            spread_brake(1, h - 1, h, (1.0 - a) * move, r - 1)
            add(h, r - 1, a * move)
    elif h > p:
        # candidate catches a slower particle: adapt to its speed or
        # overtake into the faster lane
        if r == L:
            add(p, L, 1.0)
        elif h == n:
            add(p, r, D[r])
            spread_brake(p + 1, n, n, 1.0 - D[r], r + 1)
        else:
            add(p, r, D[r])
            spread_brake(p + 1, h, h, (1.0 - a) * (1.0 - D[r]), r + 1)
            spread_accel(h + 1, n - 1, n - 1, a * (1.0 - D[r]), r + 1)
    else:
        # equal speeds in the same lane
        if h == 1:
            if r == 1:
                add(1, 1, 1.0 - a * D[0] * (1.0 - D[1]))
                spread_accel(2, n, n, a * D[0] * (1.0 - D[1]), 2)
            elif r == L:
                add(1, L, 1.0 - a * D[L - 1] * (1.0 - D[L - 2]))
                spread_accel(2, n, n, a * D[L - 1] * (1.0 - D[L - 2]), L - 1)
            else:
                add(1, r, 1.0 - a * D[r - 1] * (1.0 - 0.5 * (D[r - 2] + D[r])))
                spread_accel(2, n, n, 0.5 * a * D[r - 1] * (1.0 - D[r - 2]), r - 1)
                spread_accel(2, n, n, 0.5 * a * D[r - 1] * (1.0 - D[r]), r + 1)
        elif h == n:
            if r == 1:
                spread_brake(1, n - 1, n, D[0] * D[1], 1)
                add(n, 1, (1.0 - D[0]) * D[1])
                add(n, 2, 1.0 - D[1])
            elif r == L:
                spread_brake(1, n - 1, n, D[L - 2] * D[L - 1], L)
                add(n, L, (1.0 - D[L - 1]) * D[L - 2])
                spread_brake(1, n - 1, n, (1.0 - a) * (1.0 - D[L - 2]), L - 1)
                add(n, L - 1, a * (1.0 - D[L - 2]))
            else:
                both = D[r - 2] + D[r]
                spread_brake(1, n - 1, n, 0.5 * both * D[r - 1], r)
                add(n, r, 0.5 * both * (1.0 - D[r - 1]))
                spread_brake(1, n - 1, n, 0.5 * (1.0 - a) * (1.0 - D[r - 2]), r - 1)
                add(n, r - 1, 0.5 * a * (1.0 - D[r - 2]))
                add(n, r + 1, 0.5 * (1.0 - D[r]))
        else:
            if r == 1:
                spread_brake(1, h - 1, h, (1.0 - a) * D[0] * D[1], 1)
                add(h, 1, (1.0 - a) * (1.0 - D[0]) * D[1])
                spread_accel(h + 1, n, n, a * D[1], 1)
                add(h, 2, (1.0 - a) * (1.0 - D[1]))
                spread_accel(h + 1, n, n - 1, a * (1.0 - D[1]), 2)
            elif r == L:
                spread_brake(1, h - 1, h, (1.0 - a) * D[L - 2] * D[L - 1], L)
                add(h, L, (1.0 - a) * (1.0 - D[L - 1]) * D[L - 2])
                spread_accel(h + 1, n, n, a * D[L - 2], L)
                spread_brake(1, h - 1, h, (1.0 - a) * (1.0 - D[L - 2]), L - 1)
                add(h, L - 1, a * (1.0 - D[L - 2]))
            else:
                both = D[r - 2] + D[r]
                spread_brake(1, h - 1, h, 0.5 * (1.0 - a) * D[r - 1] * both, r)
                add(h, r, 0.5 * (1.0 - a) * (1.0 - D[r - 1]) * both)
                spread_accel(h + 1, n, n, 0.5 * a * both, r)
                spread_brake(1, h - 1, h, 0.5 * (1.0 - a) * D[r - 1] * (1.0 - D[r - 2]), r - 1)
                add(h, r - 1, 0.5 * a * (1.0 - D[r - 2]))
                add(h, r + 1, 0.5 * (1.0 - a) * (1.0 - D[r]))
                spread_accel(h + 1, n, n, 0.5 * a * (1.0 - D[r]), r + 1)
    return row


def brute_force_row_sum(h, p, r, alpha, lrho, n, L) -> float:
    """Sum of all raw transition probabilities for one interaction."""
    return sum(oracle_row(h, p, r, alpha, lrho, n, L).values())


def check_conservation(mass_series) -> float:
    """Max relative drift of total mass along a trajectory.

    Returns max_t |m(t) - m(0)| / max(m(0), eps) with a tiny eps guard so
    an identically empty road reports zero drift.
    """
    m = np.asarray(mass_series, dtype=np.float64)
    if m.size == 0:
        raise ValueError("empty mass series")
    return float(np.max(np.abs(m - m[0])) / max(abs(m[0]), 1e-300))


def convergence_order(err_coarse: float, err_fine: float) -> float:
    """Observed order between two resolutions differing by a factor 2."""
    if err_coarse <= 0 or err_fine <= 0:
        raise ValueError("convergence order undefined for non-positive errors")
    return float(np.log2(err_coarse / err_fine))


@dataclass
class AuditFinding:
    case: str
    h: int
    p: int
    r: int
    alpha: float
    sample: int
    raw_sum: float
    min_entry: float


@dataclass
class AuditReport:
    """Machine-readable summary of a normalization audit.

    ``findings`` holds one record per (interaction, sample); ``coverage``
    maps every dispatcher branch label to the number of rows it produced;
    ``uncovered`` lists labels never hit (unreachable ones for the given
    lane count are annotated by the caller).
    """

    findings: List[AuditFinding] = field(default_factory=list)
    coverage: Dict[str, int] = field(default_factory=dict)
    max_deviation: float = 0.0
    worst_case: str = ""
    defective_rows: int = 0
    negative_rows: int = 0
    uncovered: List[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "rows_checked": len(self.findings),
            "max_deviation": self.max_deviation,
            "worst_case": self.worst_case,
            "defective_rows": self.defective_rows,
            "negative_rows": self.negative_rows,
            "coverage": dict(sorted(self.coverage.items())),
            "uncovered": list(self.uncovered),
        }
