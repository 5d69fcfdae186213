"""Pure-numpy implementations of the hot kernels.

Every function here has a twin in ``numba_backend`` with identical
semantics. ``rts_smooth`` is written in scalar form so the numba backend
compiles this exact source.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def frac_delay_add(out, src, src_idx, gain):
    """Accumulate ``gain * src(src_idx)`` into ``out`` with linear interpolation.

    ``src_idx`` holds fractional indices into ``src``, which is treated as
    zero outside its support, so indices within one sample of either end
    ramp toward zero.
    """
    if len(src) == 0:
        return out
    padded = np.concatenate(([0.0], src, [0.0]))
    grid = np.arange(-1, len(src) + 1, dtype=np.float64)
    out += gain * np.interp(src_idx, grid, padded, left=0.0, right=0.0)
    return out


def channel_response(delays, gains, freqs):
    """Sum of per-path phasors: ``H[a, k] = sum_p g_p exp(-2j pi f_k tau[p, a])``."""
    phase = (-2.0 * np.pi) * delays[:, :, None] * freqs[None, None, :]
    return np.einsum("p,pak->ak", gains, np.exp(1j * phase))


def ransac_tdoa(mics, pairs, ranges, ref_rows, subsets, thresh, planar, z_fixed):
    """Evaluate RANSAC hypotheses from minimal reference-pair subsets.

    Each hypothesis solves the range-difference equations linearized with
    the reference range as an extra unknown (reference mic at the origin).
    Returns ``(positions, counts, costs, n_eval)``; evaluation stops at the
    first hypothesis whose consensus covers every measurement and entries
    past ``n_eval`` are undefined.
    """
    n_iter = subsets.shape[0]
    n_meas = ranges.shape[0]
    ref = mics[0]
    rows = ref_rows[subsets]
    m = mics[pairs[rows, 1]] - ref
    d = ranges[rows]
    b = d * d - np.sum(m * m, axis=-1)
    if planar:
        b = b + 2.0 * m[..., 2] * (z_fixed - ref[2])
        A = np.stack([-2.0 * m[..., 0], -2.0 * m[..., 1], -2.0 * d], axis=-1)
    else:
        A = np.concatenate([-2.0 * m, -2.0 * d[..., None]], axis=-1)
    sol = np.einsum("ijk,ik->ij", np.linalg.pinv(A, rcond=1e-10), b)

    pos = np.empty((n_iter, 3))
    pos[:, 0] = sol[:, 0] + ref[0]
    pos[:, 1] = sol[:, 1] + ref[1]
    pos[:, 2] = z_fixed if planar else sol[:, 2] + ref[2]

    di = np.linalg.norm(pos[:, None, :] - mics[pairs[:, 0]][None], axis=-1)
    dj = np.linalg.norm(pos[:, None, :] - mics[pairs[:, 1]][None], axis=-1)
    res = np.abs(dj - di - ranges[None, :])
    counts = (res < thresh).sum(axis=1).astype(np.int64)
    costs = (np.minimum(res, thresh) ** 2).sum(axis=1)
    bad = ~np.all(np.isfinite(pos), axis=1)
    counts[bad] = -1
    costs[bad] = np.inf
    full = np.flatnonzero(counts == n_meas)
    n_eval = int(full[0]) + 1 if full.size else n_iter
    return pos, counts, costs, n_eval


def _residuals(p, mi, mj, ranges):
    vi = p - mi
    vj = p - mj
    di = np.sqrt(np.sum(vi * vi, axis=1))
    dj = np.sqrt(np.sum(vj * vj, axis=1))
    return dj - di - ranges, vi, vj, di, dj


def refine_tdoa(mics, pairs, ranges, mask, x0, planar, max_iter, tol):
    """Levenberg-Marquardt on the range-difference residuals of masked rows.

    Returns ``(position, cost, converged)``. In planar mode z stays at
    ``x0[2]``.
    """
    nvar = 2 if planar else 3
    sel = np.flatnonzero(mask)
    mi = mics[pairs[sel, 0]]
    mj = mics[pairs[sel, 1]]
    rg = ranges[sel]
    p = np.array(x0, dtype=np.float64)
    r, vi, vj, di, dj = _residuals(p, mi, mj, rg)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        safe = (di > 1e-12) & (dj > 1e-12)
        J = np.zeros((len(rg), 3))
        J[safe] = vj[safe] / dj[safe, None] - vi[safe] / di[safe, None]
        J = J[:, :nvar]
        JtJ = J.T @ J
        Jtr = J.T @ r
        improved = False
        for _inner in range(10):
            M = JtJ + lam * np.diag(np.diag(JtJ) + 1e-12)
            step = np.linalg.solve(M, -Jtr)
            cand = p.copy()
            cand[:nvar] += step
            r_new, vi_n, vj_n, di_n, dj_n = _residuals(cand, mi, mj, rg)
            c_new = float(r_new @ r_new)
            if np.isfinite(c_new) and c_new <= cost:
                p, r, vi, vj, di, dj = cand, r_new, vi_n, vj_n, di_n, dj_n
                cost = c_new
                lam = max(lam * 0.3, 1e-12)
                improved = True
                if np.sqrt(step @ step) < tol:
                    converged = True
                break
            lam *= 10.0
        if not improved:
            converged = True
            break
        if converged:
            break
    return p, cost, converged


def rts_smooth(z, valid, dt, q, r, p0_pos, p0_vel):
    """Constant-velocity Kalman filter and Rauch-Tung-Striebel pass on one axis.

    The white-acceleration process noise has spectral density ``q``; ``r`` is
    the measurement variance. Returns smoothed ``(pos, vel, pos_var)``.
    """
    n = z.shape[0]
    fx = np.zeros(n)
    fv = np.zeros(n)
    f00 = np.zeros(n)
    f01 = np.zeros(n)
    f11 = np.zeros(n)
    px = np.zeros(n)
    pv = np.zeros(n)
    p00 = np.zeros(n)
    p01 = np.zeros(n)
    p11 = np.zeros(n)
    q00 = q * dt ** 3 / 3.0
    q01 = q * dt ** 2 / 2.0
    q11 = q * dt

    x = 0.0
    for k in range(n):
        if valid[k]:
            x = z[k]
            break
    v = 0.0
    a, b, c = p0_pos, 0.0, p0_vel
    for k in range(n):
        if k > 0:
            x = x + dt * v
            a, b, c = (a + 2.0 * dt * b + dt * dt * c + q00,
                       b + dt * c + q01,
                       c + q11)
        px[k] = x
        pv[k] = v
        p00[k] = a
        p01[k] = b
        p11[k] = c
        if valid[k]:
            s = a + r
            k0 = a / s
            k1 = b / s
            innov = z[k] - x
            x = x + k0 * innov
            v = v + k1 * innov
            a, b, c = a - k0 * a, b - k0 * b, c - k1 * b
        fx[k] = x
        fv[k] = v
        f00[k] = a
        f01[k] = b
        f11[k] = c

    sx = fx.copy()
    sv = fv.copy()
    s00 = f00.copy()
    s01 = f01.copy()
    s11 = f11.copy()
    for k in range(n - 2, -1, -1):
        # C = Pf[k] F^T inv(Pp[k+1])
        m00 = f00[k] + dt * f01[k]
        m01 = f01[k]
        m10 = f01[k] + dt * f11[k]
        m11 = f11[k]
        det = p00[k + 1] * p11[k + 1] - p01[k + 1] * p01[k + 1]
        i00 = p11[k + 1] / det
        i01 = -p01[k + 1] / det
        i11 = p00[k + 1] / det
        c00 = m00 * i00 + m01 * i01
        c01 = m00 * i01 + m01 * i11
        c10 = m10 * i00 + m11 * i01
        c11 = m10 * i01 + m11 * i11
        dx = sx[k + 1] - px[k + 1]
        dv = sv[k + 1] - pv[k + 1]
        sx[k] = fx[k] + c00 * dx + c01 * dv
        sv[k] = fv[k] + c10 * dx + c11 * dv
        d00 = s00[k + 1] - p00[k + 1]
        d01 = s01[k + 1] - p01[k + 1]
        d11 = s11[k + 1] - p11[k + 1]
        # P_s = Pf + C D C^T
        t00 = c00 * d00 + c01 * d01
        t01 = c00 * d01 + c01 * d11
        t10 = c10 * d00 + c11 * d01
        t11 = c10 * d01 + c11 * d11
        s00[k] = f00[k] + t00 * c00 + t01 * c01
        s01[k] = f01[k] + t00 * c10 + t01 * c11
        s11[k] = f11[k] + t10 * c10 + t11 * c11
    return sx, sv, s00
