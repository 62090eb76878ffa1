"""Grids, lane topology, model parameters and macroscopic moments.

State is carried as plain numpy arrays of per-class occupancies, indexed
``f[lane, cls]`` in homogeneous mode and ``f[lane, cls, cell]`` in spatial
mode.  Lanes and velocity classes are 0-based internally; lane 0 is the
slowest lane, class 0 is the standing class (speed 0) and class n-1 moves
at the maximum dimensionless speed 1.  Public helpers that mirror the
1-based lane/class convention used in the interaction-table API say so
explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, InvalidGridError


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform grid of n dimensionless speeds spanning [0, 1]."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise InvalidGridError(f"need at least 2 velocity classes, got {self.n}")


def build_velocity_grid(n: int) -> VelocityGrid:
    """Build the uniform speed grid v_k = k/(n-1), k = 0..n-1.

    Endpoints are exactly 0 and 1; spacing is uniform to within one ulp
    (exact uniformity and exact endpoints cannot both hold in binary
    floating point).
    """
    if n < 2:
        raise InvalidGridError(f"need at least 2 velocity classes, got {n}")
    values = np.arange(n, dtype=np.float64) / (n - 1)
    return VelocityGrid(n=n, values=values)


def admissible_lanes(r: int, lanes: int) -> frozenset:
    """Lanes reachable from lane r in a single interaction (1-based).

    Only adjacent lanes are admissible: {1,2} from the slowest lane,
    {L-1,L} from the fastest, {r-1,r,r+1} in between.
    """
    if lanes < 2:
        raise IndexError(f"need at least 2 lanes, got {lanes}")
    if not 1 <= r <= lanes:
        raise IndexError(f"lane {r} out of range 1..{lanes}")
    if r == 1:
        return frozenset((1, 2))
    if r == lanes:
        return frozenset((lanes - 1, lanes))
    return frozenset((r - 1, r, r + 1))


@dataclass(frozen=True)
class LaneTopology:
    """Lane count with the adjacency rule for lane changes."""

    lanes: int

    def __post_init__(self):
        if self.lanes < 2:
            raise IndexError(f"need at least 2 lanes, got {self.lanes}")

    def admissible(self, r: int) -> frozenset:
        return admissible_lanes(r, self.lanes)


@dataclass(frozen=True)
class ExternalAction:
    """Relaxation target for imposed speeds (tollgates, signs).

    ``f_target`` has the same shape as the kinetic state ((L, n) or
    (L, n, cells)); ``speed`` records the imposed speed for bookkeeping.
    """

    f_target: np.ndarray
    speed: Optional[float] = None


def external_target(speed: float, lane_density: Sequence[float], grid: VelocityGrid) -> np.ndarray:
    """Build a relaxation target concentrated at the imposed speed.

    Mass is split between the two classes bracketing ``speed`` so the lane
    mean speed equals ``speed`` exactly.
    """
    if not 0.0 <= speed <= 1.0:
        raise ConfigError(f"imposed speed {speed} outside [0, 1]")
    dens = np.asarray(lane_density, dtype=np.float64)
    n = grid.n
    pos = speed * (n - 1)
    lo = min(int(np.floor(pos)), n - 2)
    w_hi = pos - lo
    f_t = np.zeros((dens.size, n))
    f_t[:, lo] = dens * (1.0 - w_hi)
    f_t[:, lo + 1] = dens * w_hi
    return f_t


def _as_lane_vector(value: Union[float, Sequence[float]], lanes: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if arr.size == 1:
        arr = np.full(lanes, float(arr[0]))
    if arr.shape != (lanes,):
        raise ConfigError(f"{name} must be a scalar or a length-{lanes} sequence")
    if np.any(arr < 0):
        raise ConfigError(f"{name} must be nonnegative")
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Closure parameters of the interaction model.

    alpha may be a constant, a per-cell array, or a callable evaluated on
    cell centers.  ``renormalize_rows`` selects whether transition rows are
    rescaled to unit mass (the default) or used exactly as written
    (strict mode, surfaced by the audit).
    """

    lanes: int
    eta0: float = 1.0
    gamma_eta: Union[float, Sequence[float]] = 1.0
    gamma_mu: Union[float, Sequence[float]] = 1.0
    alpha: Union[float, np.ndarray, Callable] = 1.0
    xi_max: float = 0.1
    renormalize_rows: bool = True
    external_action: Optional[ExternalAction] = None
    gamma_eta_vec: np.ndarray = field(init=False, repr=False)
    gamma_mu_vec: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.lanes < 2:
            raise ConfigError(f"need at least 2 lanes, got {self.lanes}")
        if self.eta0 <= 0:
            raise ConfigError(f"eta0 must be positive, got {self.eta0}")
        if not 0 < self.xi_max <= 1:
            raise ConfigError(f"xi_max must lie in (0, 1], got {self.xi_max}")
        object.__setattr__(
            self, "gamma_eta_vec", _as_lane_vector(self.gamma_eta, self.lanes, "gamma_eta")
        )
        object.__setattr__(
            self, "gamma_mu_vec", _as_lane_vector(self.gamma_mu, self.lanes, "gamma_mu")
        )
        if isinstance(self.alpha, (int, float)) and not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")

    def alpha_at(self, x: np.ndarray) -> np.ndarray:
        """Road-quality profile evaluated at positions x (vectorized)."""
        x = np.asarray(x, dtype=np.float64)
        if callable(self.alpha):
            a = np.asarray(self.alpha(x), dtype=np.float64) * np.ones_like(x)
        elif isinstance(self.alpha, np.ndarray):
            if self.alpha.shape != x.shape:
                raise ConfigError(
                    f"alpha array has shape {self.alpha.shape}, expected {x.shape}"
                )
            a = self.alpha.astype(np.float64)
        else:
            a = np.full_like(x, float(self.alpha))
        if np.any(a < 0) or np.any(a > 1):
            raise ConfigError("alpha profile leaves [0, 1]")
        return a

    def alpha_const(self) -> float:
        """Road quality as a single number (homogeneous mode)."""
        if callable(self.alpha) or isinstance(self.alpha, np.ndarray):
            raise ConfigError("homogeneous mode needs a constant alpha")
        return float(self.alpha)


@dataclass(frozen=True)
class Macroscopics:
    """Per-lane and global moments of a kinetic state.

    For an empty lane the mean speed and variance are NaN (undefined), not
    zero; the global mean speed inherits NaN in that case.  In spatial mode
    every field carries a trailing cell axis.
    """

    rho: np.ndarray
    q: np.ndarray
    U: np.ndarray
    Theta: np.ndarray
    rho_total: np.ndarray
    q_total: np.ndarray
    U_mean: np.ndarray
    Theta_total: np.ndarray


def macroscopics(f: np.ndarray, grid: VelocityGrid) -> Macroscopics:
    """Density, flux, mean speed and speed variance, per lane and global.

    Accepts (L, n) or (L, n, cells) arrays.  Lane moments:
    rho = sum_i f_i, q = sum_i v_i f_i, U = q/rho,
    Theta = sum_i (v_i - U)^2 f_i / rho.  Globals: rho and q summed over
    lanes, U averaged over lanes, Theta summed over lanes.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim not in (2, 3):
        raise ValueError(f"expected (L, n) or (L, n, cells) array, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("kinetic state contains non-finite entries")
    v = grid.values if f.ndim == 2 else grid.values[:, None]
    rho = f.sum(axis=1)
    q = (v * f).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        U = np.where(rho > 0, q / np.where(rho > 0, rho, 1.0), np.nan)
        dev = v - np.expand_dims(U, 1)
        Theta = np.where(rho > 0, (dev * dev * f).sum(axis=1) / np.where(rho > 0, rho, 1.0), np.nan)
    return Macroscopics(
        rho=rho,
        q=q,
        U=U,
        Theta=Theta,
        rho_total=rho.sum(axis=0),
        q_total=q.sum(axis=0),
        U_mean=U.mean(axis=0),
        Theta_total=Theta.sum(axis=0),
    )


def lane_density_report(f: np.ndarray, lanes: int) -> dict:
    """Admissibility diagnostic: per-lane densities against the 1/L cap.

    Violations are reported, never clamped; solvers print or log this at
    run start so out-of-regime inputs stay visible.
    """
    f = np.asarray(f, dtype=np.float64)
    rho = f.sum(axis=1)
    cap = 1.0 / lanes
    worst = float(rho.max(initial=0.0))
    return {
        "max_lane_density": worst,
        "cap": cap,
        "violates": bool(worst > cap + 1e-12),
        "min_entry": float(f.min(initial=0.0)),
    }
