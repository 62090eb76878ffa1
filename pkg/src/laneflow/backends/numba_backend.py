"""JIT-compiled compute kernels (default path when numba is importable).

Signatures mirror ``numpy_backend`` exactly; the two paths must agree to
floating-point roundoff and both are cross-checked against the
independent oracle in ``laneflow.validation``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def _fill_one(a, D, acc, acc_short, brk, brk_from, renormalize, A, raw):
    """Transition tensor for a single (alpha, densities) context.

    ``A`` has shape (L, n, n, n, L) and is zeroed here; ``raw`` collects
    row sums before renormalization.  Branches whose class range is empty
    or whose weight normalizer vanishes collapse to a point mass at the
    candidate's class (see laneflow.validation for the convention).
    """
    L = D.shape[0]
    n = acc.shape[0]
    na = 1.0 - a
    A[:, :, :, :, :] = 0.0

    for r in range(L):
        Dr = D[r]
        Dm = D[r - 1] if r > 0 else 0.0
        Dp = D[r + 1] if r < L - 1 else 0.0

        # field particle faster
        for h in range(n - 1):
            for p in range(h + 1, n):
                if r == 0:
                    c = a * (1.0 - Dr)
                    A[r, h, p, h, 0] += 1.0 - c
                    for i in range(h + 1, p + 1):
                        A[r, h, p, i, 0] += c * acc[h, p, i]
                elif h == 0:
                    A[r, 0, p, 0, r] += Dr
                    for i in range(1, p + 1):
                        A[r, 0, p, i, r] += (1.0 - Dr) * acc[0, p, i]
                else:
                    keep = 1.0 - Dr * (1.0 - Dm)
                    move = Dr * (1.0 - Dm)
                    A[r, h, p, h, r] += na * keep
                    for i in range(h + 1, p + 1):
                        A[r, h, p, i, r] += a * keep * acc[h, p, i]
                    for i in range(h):
                        A[r, h, p, i, r - 1] += na * move * brk[h, i]
                    A[r, h, p, h, r - 1] += a * move

        # field particle slower
        for p in range(n - 1):
            for h in range(p + 1, n):
                if r == L - 1:
                    A[r, h, p, p, L - 1] += 1.0
                elif h == n - 1:
                    A[r, h, p, p, r] += Dp
                    if p <= n - 3:
                        for i in range(p + 1, n):
                            A[r, h, p, i, r + 1] += (1.0 - Dp) * brk_from[n - 1, p, i]
                    else:
                        A[r, h, p, n - 1, r + 1] += 1.0 - Dp
                else:
                    A[r, h, p, p, r] += Dp
                    if h - p >= 2:
                        for i in range(p + 1, h + 1):
                            A[r, h, p, i, r + 1] += na * (1.0 - Dp) * brk_from[h, p, i]
                    else:
                        A[r, h, p, h, r + 1] += na * (1.0 - Dp)
                    if h <= n - 3:
                        for i in range(h + 1, n - 1):
                            A[r, h, p, i, r + 1] += a * (1.0 - Dp) * acc[h, n - 2, i]
                    else:
                        A[r, h, p, h, r + 1] += a * (1.0 - Dp)

        # equal speeds
        for h in range(n):
            if h == 0:
                if r == 0:
                    c = a * Dr * (1.0 - Dp)
                    A[r, 0, 0, 0, 0] += 1.0 - c
                    for i in range(1, n):
                        A[r, 0, 0, i, 1] += c * acc[0, n - 1, i]
                elif r == L - 1:
                    c = a * Dr * (1.0 - Dm)
                    A[r, 0, 0, 0, L - 1] += 1.0 - c
                    for i in range(1, n):
                        A[r, 0, 0, i, L - 2] += c * acc[0, n - 1, i]
                else:
                    A[r, 0, 0, 0, r] += 1.0 - a * Dr * (1.0 - 0.5 * (Dm + Dp))
                    for i in range(1, n):
                        A[r, 0, 0, i, r - 1] += 0.5 * a * Dr * (1.0 - Dm) * acc[0, n - 1, i]
                        A[r, 0, 0, i, r + 1] += 0.5 * a * Dr * (1.0 - Dp) * acc[0, n - 1, i]
            elif h == n - 1:
                m = n - 1
                if r == 0:
                    for i in range(m):
                        A[r, m, m, i, 0] += Dr * Dp * brk[m, i]
                    A[r, m, m, m, 0] += (1.0 - Dr) * Dp
                    A[r, m, m, m, 1] += 1.0 - Dp
                elif r == L - 1:
                    for i in range(m):
                        A[r, m, m, i, L - 1] += Dm * Dr * brk[m, i]
                        A[r, m, m, i, L - 2] += na * (1.0 - Dm) * brk[m, i]
                    A[r, m, m, m, L - 1] += (1.0 - Dr) * Dm
                    A[r, m, m, m, L - 2] += a * (1.0 - Dm)
                else:
                    both = Dm + Dp
                    for i in range(m):
                        A[r, m, m, i, r] += 0.5 * both * Dr * brk[m, i]
                        A[r, m, m, i, r - 1] += 0.5 * na * (1.0 - Dm) * brk[m, i]
                    A[r, m, m, m, r] += 0.5 * both * (1.0 - Dr)
                    A[r, m, m, m, r - 1] += 0.5 * a * (1.0 - Dm)
                    A[r, m, m, m, r + 1] += 0.5 * (1.0 - Dp)
            else:
                if r == 0:
                    for i in range(h):
                        A[r, h, h, i, 0] += na * Dr * Dp * brk[h, i]
                    A[r, h, h, h, 0] += na * (1.0 - Dr) * Dp
                    for i in range(h + 1, n):
                        A[r, h, h, i, 0] += a * Dp * acc[h, n - 1, i]
                    A[r, h, h, h, 1] += na * (1.0 - Dp)
                    if h <= n - 3:
                        for i in range(h + 1, n):
                            A[r, h, h, i, 1] += a * (1.0 - Dp) * acc_short[h, i]
                    else:
                        A[r, h, h, h, 1] += a * (1.0 - Dp)
                elif r == L - 1:
                    for i in range(h):
                        A[r, h, h, i, L - 1] += na * Dm * Dr * brk[h, i]
                        A[r, h, h, i, L - 2] += na * (1.0 - Dm) * brk[h, i]
                    A[r, h, h, h, L - 1] += na * (1.0 - Dr) * Dm
                    for i in range(h + 1, n):
                        A[r, h, h, i, L - 1] += a * Dm * acc[h, n - 1, i]
                    A[r, h, h, h, L - 2] += a * (1.0 - Dm)
                else:
                    both = Dm + Dp
                    for i in range(h):
                        A[r, h, h, i, r] += 0.5 * na * Dr * both * brk[h, i]
                        A[r, h, h, i, r - 1] += 0.5 * na * Dr * (1.0 - Dm) * brk[h, i]
                    A[r, h, h, h, r] += 0.5 * na * (1.0 - Dr) * both
                    A[r, h, h, h, r - 1] += 0.5 * a * (1.0 - Dm)
                    A[r, h, h, h, r + 1] += 0.5 * na * (1.0 - Dp)
                    for i in range(h + 1, n):
                        A[r, h, h, i, r] += 0.5 * a * both * acc[h, n - 1, i]
                        A[r, h, h, i, r + 1] += 0.5 * a * (1.0 - Dp) * acc[h, n - 1, i]

    for r in range(L):
        for h in range(n):
            for p in range(n):
                s = 0.0
                for i in range(n):
                    for l in range(L):
                        s += A[r, h, p, i, l]
                raw[r, h, p] = s
                if renormalize and s > 0.0:
                    for i in range(n):
                        for l in range(L):
                            A[r, h, p, i, l] /= s


@njit(cache=True, nogil=True)
def _fill_batch(alpha, lrho, acc, acc_short, brk, brk_from, renormalize, A, raw):
    for b in range(alpha.shape[0]):
        _fill_one(alpha[b], lrho[b], acc, acc_short, brk, brk_from, renormalize, A[b], raw[b])


def fill_tables(alpha, lrho, tables, renormalize):
    """Transition tensors and raw row sums for a batch of contexts."""
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    lrho = np.ascontiguousarray(lrho, dtype=np.float64)
    B, L = lrho.shape
    n = tables.acc.shape[0]
    A = np.empty((B, L, n, n, n, L))
    raw = np.empty((B, L, n, n))
    _fill_batch(alpha, lrho, tables.acc, tables.acc_short, tables.brk, tables.brk_from,
                renormalize, A, raw)
    return A, raw


@njit(cache=True, nogil=True)
def _homog_rhs_into(f, alpha, eta0, gamma_eta, acc, acc_short, brk, brk_from,
                    renormalize, A, raw, out):
    L, n = f.shape
    rho = np.empty(L)
    D = np.empty(L)
    eta = np.empty(L)
    for l in range(L):
        s = 0.0
        for i in range(n):
            s += f[l, i]
        rho[l] = s
        D[l] = min(max(L * s, 0.0), 1.0)
        eta[l] = eta0 * (1.0 + gamma_eta[l] * (L * s))
    _fill_one(alpha, D, acc, acc_short, brk, brk_from, renormalize, A, raw)
    for l in range(L):
        for i in range(n):
            out[l, i] = -eta[l] * rho[l] * f[l, i]
    for r in range(L):
        for h in range(n):
            if f[r, h] == 0.0:
                continue
            for p in range(n):
                w = eta[r] * f[r, h] * f[r, p]
                if w == 0.0:
                    continue
                for i in range(n):
                    for l in range(L):
                        v = A[r, h, p, i, l]
                        if v != 0.0:
                            out[l, i] += w * v


def homogeneous_rhs(f, alpha, eta0, gamma_eta, tables, renormalize):
    """Time derivative of the space-independent system for state (L, n)."""
    L, n = f.shape
    A = np.empty((L, n, n, n, L))
    raw = np.empty((L, n, n))
    out = np.empty((L, n))
    _homog_rhs_into(np.ascontiguousarray(f), float(alpha), float(eta0),
                    np.ascontiguousarray(gamma_eta, dtype=np.float64),
                    tables.acc, tables.acc_short, tables.brk, tables.brk_from,
                    renormalize, A, raw, out)
    return out


@njit(cache=True, nogil=True)
def _advance_impl(f, nsteps, dt, alpha, eta0, gamma_eta, acc, acc_short, brk,
                  brk_from, renormalize):
    L, n = f.shape
    A = np.empty((L, n, n, n, L))
    raw = np.empty((L, n, n))
    k1 = np.empty((L, n))
    k2 = np.empty((L, n))
    k3 = np.empty((L, n))
    k4 = np.empty((L, n))
    tmp = np.empty((L, n))
    min_entry = np.inf
    for _ in range(nsteps):
        _homog_rhs_into(f, alpha, eta0, gamma_eta, acc, acc_short, brk, brk_from,
                        renormalize, A, raw, k1)
        for l in range(L):
            for i in range(n):
                tmp[l, i] = f[l, i] + 0.5 * dt * k1[l, i]
        _homog_rhs_into(tmp, alpha, eta0, gamma_eta, acc, acc_short, brk, brk_from,
                        renormalize, A, raw, k2)
        for l in range(L):
            for i in range(n):
                tmp[l, i] = f[l, i] + 0.5 * dt * k2[l, i]
        _homog_rhs_into(tmp, alpha, eta0, gamma_eta, acc, acc_short, brk, brk_from,
                        renormalize, A, raw, k3)
        for l in range(L):
            for i in range(n):
                tmp[l, i] = f[l, i] + dt * k3[l, i]
        _homog_rhs_into(tmp, alpha, eta0, gamma_eta, acc, acc_short, brk, brk_from,
                        renormalize, A, raw, k4)
        for l in range(L):
            for i in range(n):
                f[l, i] += (dt / 6.0) * (k1[l, i] + 2.0 * k2[l, i] + 2.0 * k3[l, i] + k4[l, i])
                if f[l, i] < min_entry:
                    min_entry = f[l, i]
    return min_entry


def homogeneous_advance(f, nsteps, dt, alpha, eta0, gamma_eta, tables, renormalize):
    """Advance ``f`` in place by nsteps classical RK4 steps."""
    return float(_advance_impl(f, nsteps, float(dt), float(alpha), float(eta0),
                               np.ascontiguousarray(gamma_eta, dtype=np.float64),
                               tables.acc, tables.acc_short, tables.brk,
                               tables.brk_from, renormalize))


@njit(cache=True, nogil=True)
def _perceived(f, dx, rho, rstar):
    L, n, C = f.shape
    cap = 1.0 / L
    for l in range(L):
        for c in range(C):
            s = 0.0
            for i in range(n):
                s += f[l, i, c]
            rho[l, c] = s
    for l in range(L):
        for c in range(C):
            g = (rho[l, (c + 1) % C] - rho[l, (c - 1) % C]) / (2.0 * dx)
            sg = g / np.sqrt(1.0 + g * g)
            bias = (cap - rho[l, c]) if g >= 0.0 else rho[l, c]
            rstar[l, c] = rho[l, c] + sg * bias


def perceived_lane_densities(f, dx):
    """Perceived per-lane densities on the periodic cell grid."""
    L, n, C = f.shape
    rho = np.empty((L, C))
    rstar = np.empty((L, C))
    _perceived(np.ascontiguousarray(f), float(dx), rho, rstar)
    return rho, rstar


@njit(cache=True, nogil=True)
def _interaction_impl(f, alpha_cells, eta0, gamma_eta, dx, win_full, win_frac,
                      acc, acc_short, brk, brk_from, renormalize, J):
    L, n, C = f.shape
    rho = np.empty((L, C))
    rstar = np.empty((L, C))
    _perceived(f, dx, rho, rstar)
    eta = np.empty((L, C))
    lr = np.empty((L, C))
    for l in range(L):
        for c in range(C):
            eta[l, c] = eta0 * (1.0 + gamma_eta[l] * (L * rstar[l, c]))
            lr[l, c] = min(max(L * rstar[l, c], 0.0), 1.0)

    # field-side contraction per observed cell
    Ct = np.zeros((C, L, n, n, L))
    A = np.empty((L, n, n, n, L))
    raw = np.empty((L, n, n))
    D = np.empty(L)
    for c in range(C):
        for l in range(L):
            D[l] = lr[l, c]
        _fill_one(alpha_cells[c], D, acc, acc_short, brk, brk_from, renormalize, A, raw)
        for r in range(L):
            for p in range(n):
                w = eta[r, c] * f[r, p, c]
                if w == 0.0:
                    continue
                for h in range(n):
                    for i in range(n):
                        for l in range(L):
                            v = A[r, h, p, i, l]
                            if v != 0.0:
                                Ct[c, r, h, i, l] += w * v

    # forward-window averages (periodic, fractional end cell)
    WC = np.zeros((C, L, n, n, L))
    WL = np.zeros((L, C))
    for c in range(C):
        m = win_full[c] + win_frac[c]
        for j in range(win_full[c] + 1):
            w = (1.0 if j < win_full[c] else win_frac[c]) / m
            if w == 0.0:
                continue
            cc = (c + j) % C
            for r in range(L):
                for h in range(n):
                    for i in range(n):
                        for l in range(L):
                            WC[c, r, h, i, l] += w * Ct[cc, r, h, i, l]
            for l in range(L):
                WL[l, c] += w * eta[l, cc] * rho[l, cc]

    for c in range(C):
        for l in range(L):
            for i in range(n):
                g = 0.0
                for r in range(L):
                    for h in range(n):
                        if f[r, h, c] != 0.0:
                            g += f[r, h, c] * WC[c, r, h, i, l]
                J[l, i, c] = g - f[l, i, c] * WL[l, c]


def interaction_rhs(f, alpha_cells, eta0, gamma_eta, dx, win_full, win_frac, tables, renormalize):
    """Nonlocal interaction operator for a spatial state (L, n, cells)."""
    J = np.empty_like(f)
    _interaction_impl(np.ascontiguousarray(f), np.ascontiguousarray(alpha_cells, dtype=np.float64),
                      float(eta0), np.ascontiguousarray(gamma_eta, dtype=np.float64),
                      float(dx), np.ascontiguousarray(win_full, dtype=np.int64),
                      np.ascontiguousarray(win_frac, dtype=np.float64),
                      tables.acc, tables.acc_short, tables.brk, tables.brk_from,
                      renormalize, J)
    return J


@njit(cache=True, nogil=True)
def _transport_impl(f, speeds, dt_over_dx, use_limiter, out):
    L, n, C = f.shape
    for k in range(n):
        nu = speeds[k] * dt_over_dx
        if nu == 0.0:
            for l in range(L):
                for c in range(C):
                    out[l, k, c] = f[l, k, c]
            continue
        for l in range(L):
            for c in range(C):
                # time-centered face values at the right edges of c and c-1
                fc = _face(f, l, k, c, C, nu, use_limiter)
                fm = _face(f, l, k, (c - 1) % C, C, nu, use_limiter)
                out[l, k, c] = f[l, k, c] - nu * (fc - fm)


@njit(cache=True, nogil=True)
def _face(f, l, k, c, C, nu, use_limiter):
    u = f[l, k, c]
    if not use_limiter:
        return u
    dm = u - f[l, k, (c - 1) % C]
    dp = f[l, k, (c + 1) % C] - u
    if dm * dp > 0.0:
        s = min(abs(dm), abs(dp))
        sigma = s if dm > 0.0 else -s
    else:
        sigma = 0.0
    return u + 0.5 * (1.0 - nu) * sigma


def transport_step(f, speeds, dt_over_dx, use_limiter):
    """One upwind transport step for every (lane, class) profile."""
    out = np.empty_like(f)
    _transport_impl(np.ascontiguousarray(f), np.ascontiguousarray(speeds, dtype=np.float64),
                    float(dt_over_dx), use_limiter, out)
    return out
