"""Compiled inner loop of the proximal objective (hot path of the relaxation)."""

import numpy as np
from numba import njit

NORM_CODES = {"euclidean": 0, "l1": 1, "linf": 2}


@njit(cache=True, nogil=True)
def prox_value(u, offset, N, den, pair_a, pair_b, bounds, w, P, inv_tau, norm):
    n, s = offset.shape
    k = N.shape[1]
    X = offset.copy()
    for i in range(n):
        for j in range(s):
            acc = 0.0
            for t in range(k):
                acc += u[i * k + t] * N[j, t]
            X[i, j] += acc
    R = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            d = 0.0
            for j in range(s):
                diff = abs(X[a, j] - X[b, j])
                if norm == 0:
                    d += diff * diff
                elif norm == 1:
                    d += diff
                elif diff > d:
                    d = diff
            if norm == 0:
                d = np.sqrt(d)
            R[a, b] = d / den[a, b]
            R[b, a] = d / den[b, a]
    energy = 0.0
    for c in range(n):
        mx = 0.0
        for p in range(bounds[c], bounds[c + 1]):
            r = R[pair_a[p], pair_b[p]]
            if r > mx:
                mx = r
        energy += w[c] * mx * mx
    dist = 0.0
    for j in range(s):
        acc = 0.0
        for i in range(n):
            diff = X[i, j] - P[i, j]
            acc += w[i] * diff * diff
        dist += np.sqrt(acc)
    return energy + dist * dist * inv_tau


@njit(cache=True, nogil=True)
def retract(u, u_phi, offset, N, P, radius):
    # move each out-of-box point back along the segment to phi_i
    n, s = offset.shape
    k = N.shape[1]
    out = u.copy()
    for i in range(n):
        worst = 0.0
        for j in range(s):
            acc = offset[i, j]
            for t in range(k):
                acc += u[i * k + t] * N[j, t]
            if abs(acc) > worst:
                worst = abs(acc)
        if worst <= radius:
            continue
        lim = 1.0
        for j in range(s):
            acc = offset[i, j]
            for t in range(k):
                acc += u[i * k + t] * N[j, t]
            d = acc - P[i, j]
            if d > 0:
                lim = min(lim, (radius - P[i, j]) / d)
            elif d < 0:
                lim = min(lim, (-radius - P[i, j]) / d)
        lim = max(lim, 0.0)
        for t in range(k):
            out[i * k + t] = u_phi[i * k + t] + lim * (u[i * k + t] - u_phi[i * k + t])
    return out
