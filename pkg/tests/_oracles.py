"""Independent reference computations shared by the test modules."""

import itertools

import numpy as np


def _simplex_grid(n, step, center=None, width=None):
    if n == 1:
        return np.ones((1, 1))
    if center is None:
        ticks = np.arange(0.0, 1.0 + step / 2, step)
        axes = [ticks] * (n - 1)
    else:
        axes = [np.clip(np.arange(c - width, c + width + step / 2, step), 0.0, 1.0) for c in center[:-1]]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    pts = pts[pts.sum(axis=1) <= 1.0 + 1e-12]
    return np.c_[pts, np.clip(1.0 - pts.sum(axis=1), 0.0, None)]


def maxmin_dual_grid(d, t_m, step=1e-3, refine=1e-5):
    """Max-min bits per lap via grid search on the dual.

    t* = min over GN weights w in the simplex of sum_m t_m max_n w_n d_mn; the function is
    convex and piecewise linear, so a coarse grid followed by a fine local grid brackets it.
    """
    d = np.asarray(d, dtype=float)
    t_m = np.broadcast_to(np.asarray(t_m, dtype=float), (d.shape[0],))

    def value(w):
        return (t_m[None, :] * np.max(w[:, None, :] * d[None, :, :], axis=2)).sum(axis=1)

    w = _simplex_grid(d.shape[1], step)
    v = value(w)
    best = w[np.argmin(v)]
    w2 = _simplex_grid(d.shape[1], refine, best, 2 * step)
    return float(min(v.min(), value(w2).min()))


def brute_force_snr_gain(direct, cascade, phases, mu):
    """max |a + sum_k c_k mu(theta_k) e^{j theta_k}|^2 over every phase combination."""
    phases = np.asarray(phases)
    mu = np.asarray(mu)
    best = 0.0
    for combo in itertools.product(range(len(phases)), repeat=len(cascade)):
        c = list(combo)
        best = max(best, abs(direct + np.sum(cascade * mu[c] * np.exp(1j * phases[c]))) ** 2)
    return best
