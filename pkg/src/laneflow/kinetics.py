"""Closure terms: perceived density, encounter rate, visibility weights and
the external-action relaxation.

Drivers react to a perceived density rather than the measured one: positive
spatial gradients bias the lane density up toward its admissible cap 1/L,
negative gradients bias it down toward 0,

    rho* = rho + g / sqrt(1 + g^2) * ((1/L - rho) H(g) + rho H(-g)),

with g the density gradient and H the Heaviside step, H(0) = 1.  Encounter
rate and action intensity are affine in the perceived density with the
vacuum rate eta0 as intercept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelParams


def perceived_density(rho, drho_dx, lanes: int):
    """Effective density seen by drivers; maps [0, 1/L] into itself.

    Vectorized: ``rho`` and ``drho_dx`` may be arrays of equal shape.
    """
    rho = np.asarray(rho, dtype=np.float64)
    g = np.asarray(drho_dx, dtype=np.float64)
    s = g / np.sqrt(1.0 + g * g)
    bias = np.where(g >= 0.0, 1.0 / lanes - rho, rho)
    out = rho + s * bias
    if out.ndim == 0:
        return float(out)
    return out


def encounter_rate(rho_star, lane: int, params: ModelParams):
    """Interactions per unit time in the given lane (1-based lane index)."""
    gamma = params.gamma_eta_vec[lane - 1]
    return params.eta0 * (1.0 + gamma * params.lanes * np.asarray(rho_star, dtype=np.float64))


def action_intensity(rho_star, lane: int, params: ModelParams):
    """Strength of the relaxation toward an externally imposed speed."""
    gamma = params.gamma_mu_vec[lane - 1]
    return params.eta0 * (1.0 + gamma * params.lanes * np.asarray(rho_star, dtype=np.float64))


def external_action(f, f_target, rho_star, lane: int, params: ModelParams):
    """Relaxation term mu(rho*) * (f_target - f); zero at the fixed point."""
    return action_intensity(rho_star, lane, params) * (np.asarray(f_target) - np.asarray(f))


@dataclass(frozen=True)
class VisibilityZone:
    """Forward road interval [x, x + xi] sensed by a driver at x.

    xi = alpha(x) * xi_max scales with road quality; the zone wraps
    periodically on the unit road.
    """

    x: float
    xi: float

    def __post_init__(self):
        if not 0.0 < self.xi <= 1.0:
            raise ValueError(f"visibility length must lie in (0, 1], got {self.xi}")

    def contains(self, x_star: float) -> bool:
        return ((x_star - self.x) % 1.0) <= self.xi


def weight(x: float, x_star: float, zone: VisibilityZone) -> float:
    """Uniform sensing weight: 1/xi inside the zone, 0 outside.

    The same profile is used in every lane; it integrates to one over the
    zone by construction.
    """
    return 1.0 / zone.xi if zone.contains(x_star) else 0.0


def zone_cell_weights(xi: float, dx: float, ncells: int):
    """Discrete quadrature weights of the visibility zone from one cell.

    The zone is anchored at the observing cell's left edge and covers
    xi/dx cell widths: full cells carry equal weight and the trailing
    partial cell its covered fraction, the row normalized to sum to one.
    Returns (offsets, weights); offsets are cell shifts mod ncells.
    """
    m = max(xi, dx) / dx
    full = int(np.floor(m))
    frac = m - full
    offs = np.arange(full + 1)
    w = np.ones(full + 1)
    w[-1] = frac
    if frac == 0.0:
        offs, w = offs[:-1], w[:-1]
    w = w / w.sum()
    return offs % ncells, w


def zone_windows(alpha_cells: np.ndarray, xi_max: float, dx: float):
    """Per-cell window description (full-cell count, trailing fraction).

    Used by the compute backends; xi is floored at one cell width so the
    zone always contains the local cell.
    """
    xi = np.maximum(alpha_cells * xi_max, dx)
    m = xi / dx
    full = np.floor(m).astype(np.int64)
    frac = m - full
    return full, frac
