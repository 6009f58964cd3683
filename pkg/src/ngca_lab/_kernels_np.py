"""Pure-numpy reference implementations of the hot numeric kernels.

Every function here has a loop-structured twin in ``_kernels_nb`` compiled with
numba.  The active set is chosen by :mod:`ngca_lab.backend`; keep signatures in
sync between the two modules.
"""

import numpy as np

BACKEND_NAME = "numpy"


def he_batch(k: int, t: np.ndarray) -> np.ndarray:
    """Probabilist Hermite values He_k(t) for an array of points.

    Three-term recurrence He_{j+1} = t He_j - j He_{j-1}.
    """
    t = np.asarray(t, dtype=np.float64)
    prev = np.ones_like(t)
    if k == 0:
        return prev
    cur = t.copy()
    for j in range(1, k):
        prev, cur = cur, t * cur - j * prev
    return cur


def h_batch(k: int, t: np.ndarray) -> np.ndarray:
    """Normalized Hermite values h_k(t) = He_k(t)/sqrt(k!).

    Uses the normalized recurrence h_{j+1} = (t h_j - sqrt(j) h_{j-1})/sqrt(j+1),
    which keeps intermediates at the scale of the result.
    """
    t = np.asarray(t, dtype=np.float64)
    prev = np.ones_like(t)
    if k == 0:
        return prev
    cur = t.copy()
    for j in range(1, k):
        prev, cur = cur, (t * cur - np.sqrt(j) * prev) / np.sqrt(j + 1.0)
    return cur


def h_table(kmax: int, t: np.ndarray) -> np.ndarray:
    """Table of normalized Hermite values, shape (kmax+1, t.size)."""
    t = np.asarray(t, dtype=np.float64).ravel()
    out = np.empty((kmax + 1, t.size))
    out[0] = 1.0
    if kmax >= 1:
        out[1] = t
    for j in range(1, kmax):
        out[j + 1] = (t * out[j] - np.sqrt(j) * out[j - 1]) / np.sqrt(j + 1.0)
    return out


def clipped_he_batch(k: int, u: np.ndarray, clip: float) -> np.ndarray:
    """He_k(u) zeroed wherever |u| > clip (clip <= 0 means unclipped)."""
    vals = he_batch(k, u)
    if clip > 0.0:
        vals = np.where(np.abs(u) <= clip, vals, 0.0)
    return vals


def sym_inner_batch(coeffs: np.ndarray, counts: np.ndarray, norms: np.ndarray,
                    x: np.ndarray, k: int) -> np.ndarray:
    """Batched inner products of a coefficient tensor with Hermite tensors.

    Parameters
    ----------
    coeffs : (E,) flat entries of the coefficient tensor, E = m**k.
    counts : (E, m) int64, coordinate multiplicities of each entry's index tuple.
    norms : (E,) multinomial normalizers multinomial(k; counts)**-0.5.
    x : (S, m) evaluation points.
    k : tensor order.

    Returns the (S,) array of sum_e coeffs[e] * norms[e] * prod_l h_{counts[e,l]}(x[s,l]).
    """
    x = np.asarray(x, dtype=np.float64)
    s_total, m = x.shape
    out = np.empty(s_total)
    weighted = coeffs * norms
    chunk = max(1, int(4e6 // max(1, counts.shape[0])))
    for lo in range(0, s_total, chunk):
        xs = x[lo:lo + chunk]
        tab = h_table(k, xs.ravel()).reshape(k + 1, xs.shape[0], m)
        acc = np.ones((counts.shape[0], xs.shape[0]))
        for col in range(m):
            acc *= tab[counts[:, col], :, col]
        out[lo:lo + chunk] = weighted @ acc
    return out
