"""Public interface to the stochastic interaction table ("table of games").

A row gives, for a candidate vehicle at class h meeting a field vehicle at
class p in lane r, the probability of every outcome (class i, lane ell).
Rows are evaluated by the active compute backend; by default they are
renormalized to unit mass, with the raw sum always recorded so the audit
can surface rows whose printed form is sub- or super-stochastic.  Strict
mode (renormalize=False) leaves rows exactly as written.

Indices in this module are 1-based (lane 1 slowest, class 1 standing);
the 0-based array layout is confined to the backends.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Sequence, Tuple

import numpy as np

from . import backends
from .core import admissible_lanes
from .errors import DegenerateRowError, ModelViolationError
from .validation import AuditFinding, AuditReport
from .weights import weight_tables

#: every dispatcher branch, grouped by the speed relation of the pair
CASE_LABELS = (
    "meets-faster-interior",
    "meets-faster-stopped",
    "meets-faster-lane1",
    "meets-slower-interior",
    "meets-slower-top",
    "meets-slower-laneL",
    "equal-interior",
    "equal-lane1",
    "equal-laneL",
    "equal-stopped-interior",
    "equal-stopped-lane1",
    "equal-stopped-laneL",
    "equal-top-interior",
    "equal-top-lane1",
    "equal-top-laneL",
)


def case_label(h: int, p: int, r: int, n: int, lanes: int) -> str:
    """Dispatcher branch handling the interaction (1-based indices)."""
    if h < p:
        if r == 1:
            return "meets-faster-lane1"
        if h == 1:
            return "meets-faster-stopped"
        return "meets-faster-interior"
    if h > p:
        if r == lanes:
            return "meets-slower-laneL"
        if h == n:
            return "meets-slower-top"
        return "meets-slower-interior"
    if h == 1:
        if r == 1:
            return "equal-stopped-lane1"
        if r == lanes:
            return "equal-stopped-laneL"
        return "equal-stopped-interior"
    if h == n:
        if r == 1:
            return "equal-top-lane1"
        if r == lanes:
            return "equal-top-laneL"
        return "equal-top-interior"
    if r == 1:
        return "equal-lane1"
    if r == lanes:
        return "equal-laneL"
    return "equal-interior"


def reachable_cases(n: int, lanes: int) -> set:
    """Branch labels reachable for the given grid sizes."""
    return {
        case_label(h, p, r, n, lanes)
        for h, p, r in product(range(1, n + 1), range(1, n + 1), range(1, lanes + 1))
    }


@dataclass(frozen=True)
class InteractionContext:
    """One (candidate, field, lane) interaction with its local environment.

    ``rho_star`` holds the perceived density of every lane; each entry must
    satisfy 0 <= L * rho_star <= 1.
    """

    h: int
    p: int
    r: int
    alpha: float
    rho_star: Tuple[float, ...]
    n: int
    lanes: int

    def __post_init__(self):
        object.__setattr__(self, "rho_star", tuple(float(x) for x in self.rho_star))
        if not (1 <= self.h <= self.n and 1 <= self.p <= self.n):
            raise ValueError(f"classes ({self.h}, {self.p}) out of range 1..{self.n}")
        if not 1 <= self.r <= self.lanes:
            raise ValueError(f"lane {self.r} out of range 1..{self.lanes}")
        if len(self.rho_star) != self.lanes:
            raise ValueError(f"expected {self.lanes} lane densities, got {len(self.rho_star)}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 1]")
        for k, rs in enumerate(self.rho_star):
            if not 0.0 <= self.lanes * rs <= 1.0 + 1e-12:
                raise ValueError(f"lane {k + 1} scaled density L*rho*={self.lanes * rs} outside [0, 1]")

    @property
    def case(self) -> str:
        return case_label(self.h, self.p, self.r, self.n, self.lanes)


@dataclass(frozen=True)
class TransitionRow:
    """Sparse outcome distribution of one interaction.

    ``entries`` maps (class, lane), 1-based, to a probability; ``raw_sum``
    is the pre-renormalization mass of the row.
    """

    entries: Dict[Tuple[int, int], float]
    raw_sum: float
    renormalized: bool
    case: str

    def total(self) -> float:
        return sum(self.entries.values())


def transition_tensor(ctx: InteractionContext, renormalize: bool = True):
    """Full (n, L) destination array for one context (production path)."""
    tables = weight_tables(ctx.n)
    lrho = np.clip(np.array([ctx.rho_star]) * ctx.lanes, 0.0, 1.0)
    A, raw = backends.current().fill_tables(
        np.array([ctx.alpha]), lrho, tables, renormalize
    )
    return A[0, ctx.r - 1, ctx.h - 1, ctx.p - 1], float(raw[0, ctx.r - 1, ctx.h - 1, ctx.p - 1])


def transition_row(ctx: InteractionContext, renormalize: bool = True) -> TransitionRow:
    """Evaluate one interaction row with the active backend.

    Raises ModelViolationError if any probability comes out negative and
    DegenerateRowError if renormalization is requested on a zero-mass row.
    """
    block, raw = transition_tensor(ctx, renormalize)
    label = ctx.case
    if block.min() < 0.0:
        raise ModelViolationError(
            f"negative probability in branch {label} at ctx {ctx}", case=label
        )
    if renormalize and raw <= 0.0:
        raise DegenerateRowError(
            f"zero-mass row in branch {label}, cannot renormalize", context=ctx
        )
    lanes_ok = admissible_lanes(ctx.r, ctx.lanes)
    entries: Dict[Tuple[int, int], float] = {}
    for i0, l0 in zip(*np.nonzero(block)):
        if (l0 + 1) not in lanes_ok:
            raise ModelViolationError(
                f"branch {label} emitted inadmissible lane {l0 + 1} from lane {ctx.r}",
                case=label,
            )
        entries[(int(i0) + 1, int(l0) + 1)] = float(block[i0, l0])
    return TransitionRow(entries=entries, raw_sum=raw, renormalized=renormalize, case=label)


def density_sample_grid(levels: Sequence[float], lanes: int) -> np.ndarray:
    """Cartesian grid of scaled lane densities (values are L*rho*)."""
    return np.array(list(product(levels, repeat=lanes)), dtype=np.float64)


def audit_table(
    lrho_samples: np.ndarray,
    alphas: Sequence[float],
    n: int,
    lanes: int,
    renormalize: bool = False,
) -> AuditReport:
    """Scan every interaction over sampled environments.

    Records the raw row sum and the minimum entry of every (h, p, r) at
    every (alpha, density sample); defects are report content, never
    failures.  Branch coverage of the dispatcher is accounted so a gap in
    the scan is visible in the report itself.
    """
    tables = weight_tables(n)
    lrho_samples = np.asarray(lrho_samples, dtype=np.float64)
    report = AuditReport()
    hit: Dict[str, int] = {}
    backend = backends.current()
    for alpha in alphas:
        batch_alpha = np.full(lrho_samples.shape[0], float(alpha))
        A, raw = backend.fill_tables(batch_alpha, lrho_samples, tables, renormalize)
        for s in range(lrho_samples.shape[0]):
            for r in range(1, lanes + 1):
                for h in range(1, n + 1):
                    for p in range(1, n + 1):
                        label = case_label(h, p, r, n, lanes)
                        hit[label] = hit.get(label, 0) + 1
                        rsum = float(raw[s, r - 1, h - 1, p - 1])
                        block = A[s, r - 1, h - 1, p - 1]
                        mine = float(block.min())
                        dev = abs(rsum - 1.0)
                        if dev > report.max_deviation:
                            report.max_deviation = dev
                            report.worst_case = label
                        if dev > 1e-12:
                            report.defective_rows += 1
                        if mine < 0.0:
                            report.negative_rows += 1
                        report.findings.append(
                            AuditFinding(
                                case=label, h=h, p=p, r=r, alpha=float(alpha),
                                sample=s, raw_sum=rsum, min_entry=mine,
                            )
                        )
    report.coverage = hit
    reachable = reachable_cases(n, lanes)
    report.uncovered = sorted(
        set(CASE_LABELS) - set(hit) - (set(CASE_LABELS) - reachable)
    )
    return report
