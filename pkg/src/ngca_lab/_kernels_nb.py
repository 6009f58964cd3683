"""Numba-jitted hot kernels.  Loop-structured twins of ``_kernels_np``."""

import numpy as np
from numba import njit

BACKEND_NAME = "numba"


@njit(cache=True)
def he_batch(k, t):
    t = np.asarray(t).astype(np.float64)
    out = np.empty(t.shape, dtype=np.float64)
    flat_t = t.ravel()
    flat_o = out.ravel()
    for i in range(flat_t.size):
        ti = flat_t[i]
        prev = 1.0
        if k == 0:
            flat_o[i] = 1.0
            continue
        cur = ti
        for j in range(1, k):
            prev, cur = cur, ti * cur - j * prev
        flat_o[i] = cur
    return out


@njit(cache=True)
def h_batch(k, t):
    t = np.asarray(t).astype(np.float64)
    out = np.empty(t.shape, dtype=np.float64)
    flat_t = t.ravel()
    flat_o = out.ravel()
    for i in range(flat_t.size):
        ti = flat_t[i]
        prev = 1.0
        if k == 0:
            flat_o[i] = 1.0
            continue
        cur = ti
        for j in range(1, k):
            nxt = (ti * cur - np.sqrt(float(j)) * prev) / np.sqrt(j + 1.0)
            prev, cur = cur, nxt
        flat_o[i] = cur
    return out


@njit(cache=True)
def h_table(kmax, t):
    flat = np.asarray(t).astype(np.float64).ravel()
    out = np.empty((kmax + 1, flat.size), dtype=np.float64)
    for i in range(flat.size):
        out[0, i] = 1.0
    if kmax >= 1:
        for i in range(flat.size):
            out[1, i] = flat[i]
    for j in range(1, kmax):
        sj = np.sqrt(float(j))
        inv = 1.0 / np.sqrt(j + 1.0)
        for i in range(flat.size):
            out[j + 1, i] = (flat[i] * out[j, i] - sj * out[j - 1, i]) * inv
    return out


@njit(cache=True)
def clipped_he_batch(k, u, clip):
    u = np.asarray(u).astype(np.float64)
    out = np.empty(u.shape, dtype=np.float64)
    flat_u = u.ravel()
    flat_o = out.ravel()
    for i in range(flat_u.size):
        ui = flat_u[i]
        if clip > 0.0 and abs(ui) > clip:
            flat_o[i] = 0.0
            continue
        prev = 1.0
        if k == 0:
            flat_o[i] = 1.0
            continue
        cur = ui
        for j in range(1, k):
            prev, cur = cur, ui * cur - j * prev
        flat_o[i] = cur
    return out


@njit(cache=True)
def sym_inner_batch(coeffs, counts, norms, x, k):
    s_total, m = x.shape
    n_entries = counts.shape[0]
    out = np.empty(s_total, dtype=np.float64)
    tab = np.empty((k + 1, m), dtype=np.float64)
    for s in range(s_total):
        for col in range(m):
            ti = x[s, col]
            tab[0, col] = 1.0
            if k >= 1:
                tab[1, col] = ti
            for j in range(1, k):
                tab[j + 1, col] = (ti * tab[j, col] - np.sqrt(float(j)) * tab[j - 1, col]) / np.sqrt(j + 1.0)
        acc = 0.0
        for e in range(n_entries):
            term = coeffs[e] * norms[e]
            for col in range(m):
                term *= tab[counts[e, col], col]
            acc += term
        out[s] = acc
    return out
