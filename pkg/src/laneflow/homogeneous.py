"""Space-independent dynamics: relaxation to equilibrium and steady-state
sweeps for fundamental diagrams.

The state f[lane, cls] obeys

    df_i^l/dt = sum_r eta(rho_r) sum_{h,p} A_{hp,r}^{i,l} f_h^r f_p^r
                - eta(rho_l) rho_l f_i^l,

integrated with classical fixed-step RK4.  With renormalized interaction
rows the total density is a conserved quantity; the integrator tracks the
drift and the minimum entry along the way and refuses to continue through
NaNs or negative excursions beyond tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import backends
from .core import Macroscopics, ModelParams, VelocityGrid, build_velocity_grid, macroscopics
from .errors import ConfigError, DivergenceError, PositivityError
from .weights import weight_tables

NEGATIVE_FLOOR = -1e-10


@dataclass
class HomogeneousState:
    """Kinetic state of the space-independent problem."""

    f: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.f = np.ascontiguousarray(self.f, dtype=np.float64)
        if self.f.ndim != 2:
            raise ConfigError(f"expected (lanes, classes) state, got shape {self.f.shape}")

    @property
    def lanes(self) -> int:
        return self.f.shape[0]

    @property
    def classes(self) -> int:
        return self.f.shape[1]

    def mass(self) -> float:
        return float(self.f.sum())

    def copy(self) -> "HomogeneousState":
        return HomogeneousState(self.f.copy(), self.t)


def initial_state(
    rho: float,
    lanes: int,
    classes: int,
    split: Union[str, Sequence[float]] = "equal",
    speed_profile: str = "uniform",
) -> HomogeneousState:
    """Build an admissible initial state carrying global density rho.

    ``split`` is either "equal" (rho/L per lane), "slowest-first" (fill
    lanes from lane 1 up to the 1/L cap), or an explicit per-lane density
    sequence.  Within each lane the mass is spread uniformly over classes
    ("uniform") or placed on the standing class ("standing").
    """
    if not 0.0 <= rho <= 1.0:
        raise ConfigError(f"global density {rho} outside [0, 1]")
    cap = 1.0 / lanes
    if isinstance(split, str):
        if split == "equal":
            lane_rho = np.full(lanes, rho / lanes)
        elif split == "slowest-first":
            lane_rho = np.zeros(lanes)
            left = rho
            for l in range(lanes):
                lane_rho[l] = min(left, cap)
                left -= lane_rho[l]
        elif split == "fastest-first":
            lane_rho = np.zeros(lanes)
            left = rho
            for l in range(lanes - 1, -1, -1):
                lane_rho[l] = min(left, cap)
                left -= lane_rho[l]
        else:
            raise ConfigError(f"unknown split policy {split!r}")
    else:
        lane_rho = np.asarray(split, dtype=np.float64)
        if lane_rho.shape != (lanes,):
            raise ConfigError(f"need {lanes} per-lane densities, got {lane_rho.shape}")
        if abs(lane_rho.sum() - rho) > 1e-12:
            raise ConfigError(
                f"lane split sums to {lane_rho.sum()}, expected global density {rho}"
            )
    if np.any(lane_rho > cap + 1e-12):
        raise ConfigError(f"a lane exceeds the admissible density 1/L = {cap}")
    f = np.zeros((lanes, classes))
    if speed_profile == "uniform":
        f[:] = lane_rho[:, None] / classes
    elif speed_profile == "standing":
        f[:, 0] = lane_rho
    else:
        raise ConfigError(f"unknown speed profile {speed_profile!r}")
    return HomogeneousState(f)


def rhs_homogeneous(state: HomogeneousState, params: ModelParams) -> np.ndarray:
    """Interaction gain minus loss for every (lane, class)."""
    return backends.current().homogeneous_rhs(
        state.f,
        params.alpha_const(),
        params.eta0,
        params.gamma_eta_vec,
        weight_tables(state.classes),
        params.renormalize_rows,
    )


@dataclass
class Trajectory:
    """Sampled states of one homogeneous run plus run diagnostics."""

    times: np.ndarray
    states: np.ndarray  # (samples, lanes, classes)
    mass_drift: float
    min_entry: float

    def masses(self) -> np.ndarray:
        return self.states.sum(axis=(1, 2))

    def final_state(self) -> HomogeneousState:
        return HomogeneousState(self.states[-1].copy(), float(self.times[-1]))


def _advance_checked(f, steps, dt, alpha, params, tables, step_base) -> float:
    backend = backends.current()
    min_entry = backend.homogeneous_advance(
        f, steps, dt, alpha, params.eta0, params.gamma_eta_vec, tables,
        params.renormalize_rows,
    )
    if not np.all(np.isfinite(f)):
        raise DivergenceError(
            f"non-finite state within steps {step_base}..{step_base + steps}",
            step=step_base + steps,
        )
    if min_entry < NEGATIVE_FLOOR:
        raise PositivityError(
            f"entry {min_entry:.3e} below {NEGATIVE_FLOOR:g} near step {step_base + steps}; "
            "reduce dt", step=step_base + steps,
        )
    return min_entry


def integrate(
    state0: HomogeneousState,
    params: ModelParams,
    t_end: float,
    dt: float = 1e-2,
    sample_stride: int = 10,
) -> Trajectory:
    """Fixed-step RK4 integration with sampled snapshots.

    The positivity step bound dt * eta_max * rho_max < 1 is checked up
    front and reported in the exception if violated later anyway.
    """
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    f = state0.f.copy()
    alpha = params.alpha_const()
    tables = weight_tables(state0.classes)
    nsteps = max(1, int(round(t_end / dt)))
    stride = max(1, int(sample_stride))
    times = [state0.t]
    samples = [f.copy()]
    mass0 = f.sum()
    drift = 0.0
    min_entry = float(f.min())
    done = 0
    while done < nsteps:
        chunk = min(stride, nsteps - done)
        m = _advance_checked(f, chunk, dt, alpha, params, tables, done)
        done += chunk
        min_entry = min(min_entry, m)
        drift = max(drift, abs(f.sum() - mass0))
        times.append(state0.t + done * dt)
        samples.append(f.copy())
    return Trajectory(
        times=np.array(times),
        states=np.array(samples),
        mass_drift=float(drift),
        min_entry=float(min_entry),
    )


@dataclass
class SteadyResult:
    state: HomogeneousState
    converged: bool
    t_elapsed: float
    residual: float
    mass_drift: float
    min_entry: float


def steady_state(
    state0: HomogeneousState,
    params: ModelParams,
    steady_tol: float = 1e-9,
    t_max: float = 200.0,
    dt: float = 1e-2,
    check_every: float = 1.0,
) -> SteadyResult:
    """Integrate until the interaction residual falls below tolerance.

    The stopping rule is ||rhs||_1 <= steady_tol * eta0 * rho^2, a scale
    proportional to the interaction term itself; hitting t_max first
    returns a flagged (not failed) result.
    """
    if steady_tol <= 0:
        raise ConfigError(f"steady_tol must be positive, got {steady_tol}")
    f = state0.f.copy()
    alpha = params.alpha_const()
    tables = weight_tables(state0.classes)
    backend = backends.current()
    rho = f.sum()
    tol_abs = steady_tol * params.eta0 * rho * rho
    chunk = max(1, int(round(check_every / dt)))
    mass0 = rho
    drift = 0.0
    min_entry = float(f.min())
    t = 0.0
    nmax = int(np.ceil(t_max / dt))
    done = 0

    def residual() -> float:
        r = backend.homogeneous_rhs(
            f, alpha, params.eta0, params.gamma_eta_vec, tables, params.renormalize_rows
        )
        return float(np.abs(r).sum())

    res = residual()
    while res > tol_abs and done < nmax:
        steps = min(chunk, nmax - done)
        m = _advance_checked(f, steps, dt, alpha, params, tables, done)
        done += steps
        t = done * dt
        min_entry = min(min_entry, m)
        drift = max(drift, abs(f.sum() - mass0))
        res = residual()
    return SteadyResult(
        state=HomogeneousState(f, state0.t + t),
        converged=res <= tol_abs,
        t_elapsed=t,
        residual=res,
        mass_drift=float(drift),
        min_entry=float(min_entry),
    )


@dataclass(frozen=True)
class SweepSpec:
    """Density sweep for a fundamental diagram."""

    rho_values: Sequence[float]
    alpha: float
    init_policy: Union[str, Callable] = "equal"
    dt: float = 1e-2
    steady_tol: float = 1e-9
    t_max: float = 200.0

    def __post_init__(self):
        for rho in self.rho_values:
            if not 0.0 <= rho <= 1.0:
                raise ConfigError(f"sweep density {rho} outside [0, 1]")


@dataclass
class DiagramRow:
    """One record of a fundamental diagram (lane 0 means global)."""

    rho_sweep: float
    lane: int
    rho: float
    q: float
    U: float
    Theta: float
    alpha: float
    status: str
    t_converged: float
    min_entry: float


def _sweep_point(rho, spec: SweepSpec, params: ModelParams, classes: int) -> List[DiagramRow]:
    grid = build_velocity_grid(classes)
    rows: List[DiagramRow] = []
    try:
        state0 = initial_state(rho, params.lanes, classes, split=spec.init_policy)
        result = steady_state(
            state0, params, steady_tol=spec.steady_tol, t_max=spec.t_max, dt=spec.dt
        )
        status = "converged" if result.converged else "timed-out"
        mac = macroscopics(result.state.f, grid)
        for l in range(params.lanes):
            rows.append(DiagramRow(
                rho_sweep=rho, lane=l + 1, rho=float(mac.rho[l]), q=float(mac.q[l]),
                U=float(mac.U[l]), Theta=float(mac.Theta[l]), alpha=spec.alpha,
                status=status, t_converged=result.t_elapsed, min_entry=result.min_entry,
            ))
        rows.append(DiagramRow(
            rho_sweep=rho, lane=0, rho=float(mac.rho_total), q=float(mac.q_total),
            U=float(mac.U_mean), Theta=float(mac.Theta_total), alpha=spec.alpha,
            status=status, t_converged=result.t_elapsed, min_entry=result.min_entry,
        ))
    except (DivergenceError, PositivityError) as exc:
        rows.append(DiagramRow(
            rho_sweep=rho, lane=0, rho=np.nan, q=np.nan, U=np.nan, Theta=np.nan,
            alpha=spec.alpha, status=f"failed: {exc}", t_converged=np.nan,
            min_entry=np.nan,
        ))
    return rows


def fundamental_diagram(spec: SweepSpec, params: ModelParams, classes: int = 6) -> List[DiagramRow]:
    """Relax every sweep density to steady state and record its moments.

    Rows with lane 0 carry the global quantities; solver failures yield a
    single row with a failure status instead of aborting the sweep.
    """
    if callable(spec.init_policy):
        raise ConfigError("callable init policies are not supported in sweeps")
    run_params = params if params.alpha == spec.alpha else _with_alpha(params, spec.alpha)
    rows: List[DiagramRow] = []
    for rho in spec.rho_values:
        rows.extend(_sweep_point(float(rho), spec, run_params, classes))
    return rows


def _with_alpha(params: ModelParams, alpha: float) -> ModelParams:
    return ModelParams(
        lanes=params.lanes, eta0=params.eta0, gamma_eta=params.gamma_eta,
        gamma_mu=params.gamma_mu, alpha=alpha, xi_max=params.xi_max,
        renormalize_rows=params.renormalize_rows, external_action=params.external_action,
    )


@dataclass
class RelaxationRun:
    """Per-lane density history of one relaxation experiment."""

    trajectory: Trajectory
    lane_density: np.ndarray  # (samples, lanes)
    grid: VelocityGrid


def lane_relaxation(
    state0: HomogeneousState,
    params: ModelParams,
    t_end: float,
    dt: float = 1e-2,
    sample_stride: int = 10,
) -> RelaxationRun:
    """Integrate and record how mass redistributes across lanes."""
    traj = integrate(state0, params, t_end, dt=dt, sample_stride=sample_stride)
    return RelaxationRun(
        trajectory=traj,
        lane_density=traj.states.sum(axis=2),
        grid=build_velocity_grid(state0.classes),
    )
