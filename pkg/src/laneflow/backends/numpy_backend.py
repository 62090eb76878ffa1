"""Pure-numpy compute kernels (fallback path, no JIT).

All functions take plain arrays so the numba backend can expose identical
signatures.  Contexts are batched along the leading axis: ``alpha`` has
shape (B,), ``lrho`` shape (B, L) with entries in [0, 1] (L times the
perceived lane densities), and the transition tensor comes back as
``A[b, r, h, p, i, lane]`` (0-based classes and lanes, lane 0 slowest).

The case dispatch below is one of the two production transcriptions of
the interaction table; ``laneflow.validation.oracle_row`` is the
independent one used to cross-check it.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def fill_tables(alpha, lrho, tables, renormalize):
    """Transition tensors and raw row sums for a batch of contexts.

    Returns ``(A, raw)`` with ``A`` of shape (B, L, n, n, n, L) and
    ``raw[b, r, h, p]`` the row sum before any renormalization.  When
    ``renormalize`` is set, rows with positive mass are rescaled to 1.
    """
    acc, acc_short, brk, brk_from = tables
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    lrho = np.ascontiguousarray(lrho, dtype=np.float64)
    B, L = lrho.shape
    n = acc.shape[0]
    A = np.zeros((B, L, n, n, n, L))
    a = alpha
    na = 1.0 - alpha

    for r in range(L):
        Dr = lrho[:, r]
        Dm = lrho[:, r - 1] if r > 0 else None
        Dp = lrho[:, r + 1] if r < L - 1 else None

        # field particle faster: keep lane (maybe accelerating) or drop
        # to the slower lane
        for h in range(n - 1):
            for p in range(h + 1, n):
                T = A[:, r, h, p]
                if r == 0:
                    c = a * (1.0 - Dr)
                    T[:, h, 0] += 1.0 - c
                    T[:, :, 0] += c[:, None] * acc[h, p]
                elif h == 0:
                    T[:, 0, r] += Dr
                    T[:, :, r] += (1.0 - Dr)[:, None] * acc[0, p]
                else:
                    keep = 1.0 - Dr * (1.0 - Dm)
                    move = Dr * (1.0 - Dm)
                    T[:, h, r] += na * keep
                    T[:, :, r] += (a * keep)[:, None] * acc[h, p]
                    T[:, :, r - 1] += (na * move)[:, None] * brk[h]
                    T[:, h, r - 1] += a * move

        # field particle slower: adapt to its speed or overtake left
        for p in range(n - 1):
            for h in range(p + 1, n):
                T = A[:, r, h, p]
                if r == L - 1:
                    T[:, p, L - 1] += 1.0
                elif h == n - 1:
                    T[:, p, r] += Dp
                    if p <= n - 3:
                        T[:, :, r + 1] += (1.0 - Dp)[:, None] * brk_from[n - 1, p]
                    else:
                        T[:, n - 1, r + 1] += 1.0 - Dp
                else:
                    T[:, p, r] += Dp
                    if h - p >= 2:
                        T[:, :, r + 1] += (na * (1.0 - Dp))[:, None] * brk_from[h, p]
                    else:
                        T[:, h, r + 1] += na * (1.0 - Dp)
                    if h <= n - 3:
                        T[:, :, r + 1] += (a * (1.0 - Dp))[:, None] * acc[h, n - 2]
                    else:
                        T[:, h, r + 1] += a * (1.0 - Dp)

        # equal speeds in the same lane
        for h in range(n):
            T = A[:, r, h, h]
            if h == 0:
                full = acc[0, n - 1]
                if r == 0:
                    c = a * Dr * (1.0 - Dp)
                    T[:, 0, 0] += 1.0 - c
                    T[:, :, 1] += c[:, None] * full
                elif r == L - 1:
                    c = a * Dr * (1.0 - Dm)
                    T[:, 0, L - 1] += 1.0 - c
                    T[:, :, L - 2] += c[:, None] * full
                else:
                    T[:, 0, r] += 1.0 - a * Dr * (1.0 - 0.5 * (Dm + Dp))
                    T[:, :, r - 1] += (0.5 * a * Dr * (1.0 - Dm))[:, None] * full
                    T[:, :, r + 1] += (0.5 * a * Dr * (1.0 - Dp))[:, None] * full
            elif h == n - 1:
                bn = brk[n - 1]
                if r == 0:
                    T[:, :, 0] += (Dr * Dp)[:, None] * bn
                    T[:, n - 1, 0] += (1.0 - Dr) * Dp
                    T[:, n - 1, 1] += 1.0 - Dp
                elif r == L - 1:
                    T[:, :, L - 1] += (Dm * Dr)[:, None] * bn
                    T[:, n - 1, L - 1] += (1.0 - Dr) * Dm
                    T[:, :, L - 2] += (na * (1.0 - Dm))[:, None] * bn
                    T[:, n - 1, L - 2] += a * (1.0 - Dm)
                else:
                    both = Dm + Dp
                    T[:, :, r] += (0.5 * both * Dr)[:, None] * bn
                    T[:, n - 1, r] += 0.5 * both * (1.0 - Dr)
                    T[:, :, r - 1] += (0.5 * na * (1.0 - Dm))[:, None] * bn
                    T[:, n - 1, r - 1] += 0.5 * a * (1.0 - Dm)
                    T[:, n - 1, r + 1] += 0.5 * (1.0 - Dp)
            else:
                up = acc[h, n - 1]
                dn = brk[h]
                if r == 0:
                    T[:, :, 0] += (na * Dr * Dp)[:, None] * dn
                    T[:, h, 0] += na * (1.0 - Dr) * Dp
                    T[:, :, 0] += (a * Dp)[:, None] * up
                    T[:, h, 1] += na * (1.0 - Dp)
                    if h <= n - 3:
                        T[:, :, 1] += (a * (1.0 - Dp))[:, None] * acc_short[h]
                    else:
                        T[:, h, 1] += a * (1.0 - Dp)
                elif r == L - 1:
                    T[:, :, L - 1] += (na * Dm * Dr)[:, None] * dn
                    T[:, h, L - 1] += na * (1.0 - Dr) * Dm
                    T[:, :, L - 1] += (a * Dm)[:, None] * up
                    T[:, :, L - 2] += (na * (1.0 - Dm))[:, None] * dn
                    T[:, h, L - 2] += a * (1.0 - Dm)
                else:
                    both = Dm + Dp
                    T[:, :, r] += (0.5 * na * Dr * both)[:, None] * dn
                    T[:, h, r] += 0.5 * na * (1.0 - Dr) * both
                    T[:, :, r] += (0.5 * a * both)[:, None] * up
                    T[:, :, r - 1] += (0.5 * na * Dr * (1.0 - Dm))[:, None] * dn
                    T[:, h, r - 1] += 0.5 * a * (1.0 - Dm)
                    T[:, h, r + 1] += 0.5 * na * (1.0 - Dp)
                    T[:, :, r + 1] += (0.5 * a * (1.0 - Dp))[:, None] * up

    raw = A.sum(axis=(4, 5))
    if renormalize:
        scale = np.where(raw > 0.0, raw, 1.0)
        A /= scale[:, :, :, :, None, None]
    return A, raw


def homogeneous_rhs(f, alpha, eta0, gamma_eta, tables, renormalize):
    """Time derivative of the space-independent system for state (L, n)."""
    L, n = f.shape
    rho = f.sum(axis=1)
    lrho_ctx = np.clip(L * rho, 0.0, 1.0)
    A, _ = fill_tables(np.array([alpha]), lrho_ctx[None, :], tables, renormalize)
    eta = eta0 * (1.0 + gamma_eta * (L * rho))
    gain = np.einsum("r,rhpil,rh,rp->li", eta, A[0], f, f, optimize=True)
    return gain - (eta * rho)[:, None] * f


def homogeneous_advance(f, nsteps, dt, alpha, eta0, gamma_eta, tables, renormalize):
    """Advance ``f`` in place by nsteps classical RK4 steps.

    Returns the minimum entry seen after any step (positivity monitor);
    finiteness and mass tracking are the caller's job.
    """
    min_entry = np.inf
    for _ in range(nsteps):
        k1 = homogeneous_rhs(f, alpha, eta0, gamma_eta, tables, renormalize)
        k2 = homogeneous_rhs(f + (0.5 * dt) * k1, alpha, eta0, gamma_eta, tables, renormalize)
        k3 = homogeneous_rhs(f + (0.5 * dt) * k2, alpha, eta0, gamma_eta, tables, renormalize)
        k4 = homogeneous_rhs(f + dt * k3, alpha, eta0, gamma_eta, tables, renormalize)
        f += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        m = f.min()
        if m < min_entry:
            min_entry = m
    return float(min_entry)


def perceived_lane_densities(f, dx):
    """Perceived per-lane densities on the periodic cell grid.

    Central-difference gradients; positive gradients bias the density up
    toward the lane capacity 1/L, negative ones down toward 0.
    """
    L = f.shape[0]
    rho = f.sum(axis=1)
    grad = (np.roll(rho, -1, axis=1) - np.roll(rho, 1, axis=1)) / (2.0 * dx)
    s = grad / np.sqrt(1.0 + grad * grad)
    rstar = rho + s * np.where(grad >= 0.0, 1.0 / L - rho, rho)
    return rho, rstar


def interaction_rhs(f, alpha_cells, eta0, gamma_eta, dx, win_full, win_frac, tables, renormalize):
    """Nonlocal interaction operator for a spatial state (L, n, cells).

    Gains collect field particles over the forward visibility window of
    each cell (full cells plus a fractional end cell, weights normalized
    to unit total); losses integrate the encounter rate against the real
    density over the same window.
    """
    L, n, C = f.shape
    rho, rstar = perceived_lane_densities(f, dx)
    lr = np.clip(L * rstar, 0.0, 1.0)
    eta = eta0 * (1.0 + gamma_eta[:, None] * (L * rstar))
    A, _ = fill_tables(alpha_cells, lr.T, tables, renormalize)
    # field-side contraction at the observed cell
    Ct = np.einsum("crhpil,rpc,rc->crhil", A, f, eta, optimize=True)
    WC = _window_average(Ct, win_full, win_frac)
    WL = _window_average((eta * rho).T, win_full, win_frac)
    gain = np.einsum("rhc,crhil->lic", f, WC, optimize=True)
    return gain - f * WL.T[:, None, :]


def _window_average(arr, win_full, win_frac):
    """Normalized forward-window sums along the periodic leading axis."""
    C = arr.shape[0]
    kmax = int(win_full.max())
    pad = np.concatenate([arr, arr[: kmax + 1]], axis=0)
    prefix = np.concatenate([np.zeros_like(arr[:1]), np.cumsum(pad, axis=0)], axis=0)
    idx = np.arange(C)
    end = idx + win_full
    shape = (-1,) + (1,) * (arr.ndim - 1)
    frac = win_frac.reshape(shape)
    norm = (win_full + win_frac).reshape(shape)
    return (prefix[end] - prefix[idx] + frac * pad[end]) / norm


def transport_step(f, speeds, dt_over_dx, use_limiter):
    """One upwind transport step for every (lane, class) profile.

    Linear reconstruction with the minmod slope and the time-centered
    face value; with the limiter off the scheme falls back to first-order
    upwinding.  Periodic in space; zero-speed classes are untouched.
    """
    out = np.empty_like(f)
    for k in range(f.shape[1]):
        v = speeds[k]
        u = f[:, k, :]
        nu = v * dt_over_dx
        if nu == 0.0:
            out[:, k, :] = u
            continue
        if use_limiter:
            dm = u - np.roll(u, 1, axis=-1)
            dp = np.roll(u, -1, axis=-1) - u
            sigma = np.where(dm * dp > 0.0, np.sign(dm) * np.minimum(np.abs(dm), np.abs(dp)), 0.0)
            face = u + 0.5 * (1.0 - nu) * sigma
        else:
            face = u
        out[:, k, :] = u - nu * (face - np.roll(face, 1, axis=-1))
    return out
