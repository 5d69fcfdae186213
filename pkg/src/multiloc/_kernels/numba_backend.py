"""Numba-compiled twins of ``numpy_backend``."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from . import numpy_backend

NAME = "numba"

rts_smooth = njit(cache=True)(numpy_backend.rts_smooth)


@njit(cache=True)
def frac_delay_add(out, src, src_idx, gain):
    n_src = src.shape[0]
    if n_src == 0:
        return out
    for n in range(out.shape[0]):
        x = src_idx[n]
        if not (x > -1.0 and x < n_src):
            continue
        i = int(math.floor(x))
        f = x - i
        lo = src[i] if i >= 0 else 0.0
        hi = src[i + 1] if i + 1 < n_src else 0.0
        out[n] += gain[n] * (lo * (1.0 - f) + hi * f)
    return out


@njit(cache=True)
def channel_response(delays, gains, freqs):
    n_path, n_ant = delays.shape
    n_sub = freqs.shape[0]
    H = np.zeros((n_ant, n_sub), dtype=np.complex128)
    for p in range(n_path):
        g = gains[p]
        for a in range(n_ant):
            w = -2.0 * math.pi * delays[p, a]
            for k in range(n_sub):
                ph = w * freqs[k]
                H[a, k] += g * complex(math.cos(ph), math.sin(ph))
    return H


@njit(cache=True)
def _score(p, mics, pairs, ranges, thresh):
    count = 0
    cost = 0.0
    for m in range(ranges.shape[0]):
        i = pairs[m, 0]
        j = pairs[m, 1]
        di = math.sqrt((p[0] - mics[i, 0]) ** 2 + (p[1] - mics[i, 1]) ** 2
                       + (p[2] - mics[i, 2]) ** 2)
        dj = math.sqrt((p[0] - mics[j, 0]) ** 2 + (p[1] - mics[j, 1]) ** 2
                       + (p[2] - mics[j, 2]) ** 2)
        res = abs(dj - di - ranges[m])
        if res < thresh:
            count += 1
            cost += res * res
        else:
            cost += thresh * thresh
    return count, cost


@njit(cache=True)
def ransac_tdoa(mics, pairs, ranges, ref_rows, subsets, thresh, planar, z_fixed):
    n_iter, k = subsets.shape
    n_meas = ranges.shape[0]
    nu = 3 if planar else 4
    ref = mics[0]
    pos = np.empty((n_iter, 3))
    counts = np.full(n_iter, -1, dtype=np.int64)
    costs = np.full(n_iter, np.inf)
    A = np.empty((k, nu))
    b = np.empty(k)
    n_eval = n_iter
    for it in range(n_iter):
        for r in range(k):
            row = ref_rows[subsets[it, r]]
            j = pairs[row, 1]
            mx = mics[j, 0] - ref[0]
            my = mics[j, 1] - ref[1]
            mz = mics[j, 2] - ref[2]
            d = ranges[row]
            b[r] = d * d - (mx * mx + my * my + mz * mz)
            A[r, 0] = -2.0 * mx
            A[r, 1] = -2.0 * my
            if planar:
                b[r] += 2.0 * mz * (z_fixed - ref[2])
                A[r, 2] = -2.0 * d
            else:
                A[r, 2] = -2.0 * mz
                A[r, 3] = -2.0 * d
        sol = np.linalg.pinv(A, 1e-10) @ b
        pos[it, 0] = sol[0] + ref[0]
        pos[it, 1] = sol[1] + ref[1]
        pos[it, 2] = z_fixed if planar else sol[2] + ref[2]
        if not (np.isfinite(pos[it, 0]) and np.isfinite(pos[it, 1])
                and np.isfinite(pos[it, 2])):
            continue
        c, cost = _score(pos[it], mics, pairs, ranges, thresh)
        counts[it] = c
        costs[it] = cost
        if c == n_meas:
            n_eval = it + 1
            break
    return pos, counts, costs, n_eval


@njit(cache=True)
def _cost(p, mics, pairs, ranges, mask):
    cost = 0.0
    for m in range(ranges.shape[0]):
        if not mask[m]:
            continue
        i = pairs[m, 0]
        j = pairs[m, 1]
        di = math.sqrt((p[0] - mics[i, 0]) ** 2 + (p[1] - mics[i, 1]) ** 2
                       + (p[2] - mics[i, 2]) ** 2)
        dj = math.sqrt((p[0] - mics[j, 0]) ** 2 + (p[1] - mics[j, 1]) ** 2
                       + (p[2] - mics[j, 2]) ** 2)
        r = dj - di - ranges[m]
        cost += r * r
    return cost


@njit(cache=True)
def refine_tdoa(mics, pairs, ranges, mask, x0, planar, max_iter, tol):
    nvar = 2 if planar else 3
    p = x0.copy()
    cost = _cost(p, mics, pairs, ranges, mask)
    lam = 1e-3
    converged = False
    JtJ = np.zeros((nvar, nvar))
    Jtr = np.zeros(nvar)
    g = np.zeros(3)
    for _ in range(max_iter):
        JtJ[:, :] = 0.0
        Jtr[:] = 0.0
        for m in range(ranges.shape[0]):
            if not mask[m]:
                continue
            i = pairs[m, 0]
            j = pairs[m, 1]
            di = math.sqrt((p[0] - mics[i, 0]) ** 2 + (p[1] - mics[i, 1]) ** 2
                           + (p[2] - mics[i, 2]) ** 2)
            dj = math.sqrt((p[0] - mics[j, 0]) ** 2 + (p[1] - mics[j, 1]) ** 2
                           + (p[2] - mics[j, 2]) ** 2)
            if di <= 1e-12 or dj <= 1e-12:
                continue
            r = dj - di - ranges[m]
            for a in range(3):
                g[a] = (p[a] - mics[j, a]) / dj - (p[a] - mics[i, a]) / di
            for a in range(nvar):
                Jtr[a] += g[a] * r
                for c in range(nvar):
                    JtJ[a, c] += g[a] * g[c]
        improved = False
        for _inner in range(10):
            M = JtJ.copy()
            for a in range(nvar):
                M[a, a] += lam * (JtJ[a, a] + 1e-12)
            step = np.linalg.solve(M, -Jtr)
            cand = p.copy()
            for a in range(nvar):
                cand[a] += step[a]
            c_new = _cost(cand, mics, pairs, ranges, mask)
            if np.isfinite(c_new) and c_new <= cost:
                p = cand
                cost = c_new
                lam = max(lam * 0.3, 1e-12)
                improved = True
                if math.sqrt(np.sum(step * step)) < tol:
                    converged = True
                break
            lam *= 10.0
        if not improved:
            converged = True
            break
        if converged:
            break
    return p, cost, converged
