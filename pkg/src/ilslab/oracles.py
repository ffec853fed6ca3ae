"""Brute-force reference computations.

Nothing here reuses the fast kernels of the other modules: fibers are
parametrised with a least-squares particular solution and
``scipy.linalg.null_space``, distances come from seeded random search with
a shrinking local radius, and slope maxima are plain pair loops.  The
oracles are slow by design and exist to cross-check the closed forms.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import null_space

from .exceptions import IlslabError


class BudgetExhausted(IlslabError):
    """Raised only on request; oracles normally return a flagged result."""


@dataclass(frozen=True)
class OracleBudget:
    """Sample count of the global phase, seed, and refinement rounds."""

    samples: int = 2000
    seed: int = 0
    rounds: int = 200

    def __post_init__(self):
        if self.samples < 1 or self.rounds < 1:
            raise ValueError("samples and rounds must be positive")

    @property
    def acceptance_grade(self):
        return self.samples >= 1000


@dataclass(frozen=True)
class OracleResult:
    value: float
    argmin: np.ndarray
    exhausted: bool
    evaluations: int

    def __float__(self):
        return self.value


def _norm_rows(V, norm):
    if norm == "euclidean":
        return np.sqrt((V * V).sum(axis=1))
    if norm == "l1":
        return np.abs(V).sum(axis=1)
    if norm == "linf":
        return np.abs(V).max(axis=1)
    raise ValueError(f"unknown norm {norm!r}")


def _random_search(f, dim, radius, budget, batch=64):
    """Minimise ``f`` (vectorised over rows) from a global sample, then
    refine around the incumbent with a radius that shrinks on failure."""
    rng = np.random.default_rng(budget.seed)
    V = rng.uniform(-radius, radius, size=(budget.samples, dim))
    V[0] = 0.0
    vals = f(V)
    evals = len(V)
    best = int(np.argmin(vals))
    x, fx = V[best].copy(), float(vals[best])
    r = radius
    improved_late = False
    for rnd in range(budget.rounds):
        cand = x + r * rng.standard_normal((batch, dim))
        # half the batch moves a single coordinate
        half = batch // 2
        mask = np.zeros((half, dim))
        mask[np.arange(half), rng.integers(0, dim, size=half)] = 1.0
        cand[:half] = x + r * rng.standard_normal((half, 1)) * mask
        vals = f(cand)
        evals += batch
        j = int(np.argmin(vals))
        if vals[j] < fx:
            x, fx = cand[j].copy(), float(vals[j])
            improved_late = rnd >= budget.rounds - 5
        else:
            r *= 0.6
        if r < 1e-14 * max(1.0, radius):
            improved_late = False
            break
    return x, fx, improved_late, evals


def fiber_frame(A, b):
    """Particular solution of ``A z = b`` and an orthonormal kernel basis."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    z0 = np.linalg.lstsq(A, np.asarray(b, dtype=float), rcond=None)[0]
    return z0, null_space(A)


def oracle_fiber_distance(A, x, b, scale=1.0, budget=OracleBudget(), norm="euclidean"):
    """Distance from ``x`` to ``{z : A z = scale * b}`` by random search."""
    x = np.asarray(x, dtype=float)
    z0, N = fiber_frame(A, scale * np.atleast_1d(np.asarray(b, dtype=float)))
    c = x - z0
    if N.shape[1] == 0:
        return OracleResult(float(_norm_rows(c[None], norm)[0]), z0, False, 1)
    # the nearest point z0 + N v has |v| <= 2|c|, so a box of that size suffices
    radius = max(2.0 * float(np.linalg.norm(c)), 1e-12)

    def f(V):
        return _norm_rows(c[None, :] - V @ N.T, norm)

    v, fv, exhausted, evals = _random_search(f, N.shape[1], radius, budget)
    return OracleResult(fv, z0 + N @ v, exhausted, evals)


def oracle_fiber_gap(A, b1, b2, scale=1.0, budget=OracleBudget(), norm="euclidean"):
    """Gap between two parallel fibers: distance from a point of one to the other."""
    z1, _ = fiber_frame(A, scale * np.atleast_1d(np.asarray(b1, dtype=float)))
    return oracle_fiber_distance(A, z1, b2, scale, budget, norm)


def oracle_graph_ils(f_values, base_points):
    """ILS of a graph section over a coordinate projection.

    For ``A = [I 0]`` the fiber gap is ``|b_i - b_j|`` and the image
    distance is ``sqrt(gap^2 + |f_i - f_j|^2)``; this returns the largest
    ratio over all ordered pairs by explicit enumeration.
    """
    F = np.asarray(f_values, dtype=float).reshape(len(f_values), -1)
    B = np.asarray(base_points, dtype=float).reshape(len(base_points), -1)
    best = -np.inf
    for i in range(len(B)):
        for j in range(len(B)):
            if i == j:
                continue
            gap = float(np.sqrt(((B[i] - B[j]) ** 2).sum()))
            df = float(np.sqrt(((F[i] - F[j]) ** 2).sum()))
            best = max(best, np.sqrt(gap * gap + df * df) / gap)
    return float(best)


def _oracle_energy_factory(A, points, weights, metric, scale, eps, variant):
    """Independent Euclidean energy over lift coordinates of one section."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    P = np.asarray(points, dtype=float).reshape(len(points), -1)
    n = len(P)
    # particular solutions from the normal equations A^T (A A^T)^{-1} b
    Z0 = (scale * P) @ np.linalg.solve(A @ A.T, A)
    N = null_space(A)
    G = np.linalg.inv(A @ A.T)
    gap = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            d = scale * (P[i] - P[j])
            gap[i, j] = np.sqrt(max(d @ G @ d, 0.0))
    D = gap / abs(scale) if metric is None else np.asarray(metric, dtype=float)
    balls = [[y for y in range(n) if y != z and D[z, y] < eps] for z in range(n)]
    for z, ball in enumerate(balls):
        if not ball:
            raise ValueError(f"point {z} has an empty punctured ball at radius {eps}")
    w = np.asarray(weights, dtype=float)
    k = N.shape[1]

    def energy(U):
        # U: (batch, n*k)
        X = Z0[None] + U.reshape(len(U), n, k) @ N.T
        diff = X[:, :, None, :] - X[:, None, :, :]
        R = np.sqrt((diff * diff).sum(axis=-1)) / np.where(gap > 0, gap, 1.0)
        total = np.zeros(len(U))
        for z in range(n):
            if variant == "local":
                s = R[:, balls[z], z].max(axis=1)
            else:
                members = [z] + balls[z]
                sub = R[:, members][:, :, members]
                sub = np.where(np.eye(len(members), dtype=bool)[None], -np.inf, sub)
                s = sub.reshape(len(U), -1).max(axis=1)
            total += w[z] * s * s
        return total

    return energy, Z0, N


def oracle_energy(phi, eps, variant="a"):
    """Energy of a section through the independent evaluation path (Euclidean)."""
    Q, base = phi.quotient, phi.base
    kind = "local" if variant in ("ils", "local") else "asymptotic"
    energy, Z0, N = _oracle_energy_factory(Q.A, base.points, base.weights, base.metric,
                                           phi.scale, eps, kind)
    u = ((phi.values - Z0) @ N).ravel()
    return float(energy(u[None])[0])


def oracle_relaxation_search(phi, cls, eps, budget=OracleBudget(), variant="a"):
    """Best energy found by random search over lift coordinates in the box.

    Euclidean quotients only.  Candidates whose values leave the box
    ``|x|_inf <= bound_radius`` are rejected.  The section itself is one of
    the candidates, so the result never exceeds its energy.
    """
    Q, base = phi.quotient, phi.base
    if Q.norm != "euclidean":
        raise ValueError("the relaxation oracle supports euclidean quotients only")
    kind = "local" if variant in ("ils", "local") else "asymptotic"
    energy, Z0, N = _oracle_energy_factory(Q.A, base.points, base.weights, base.metric,
                                           phi.scale, eps, kind)
    n, k = base.n, N.shape[1]
    u_phi = ((phi.values - Z0) @ N).ravel()
    R = cls.bound_radius

    def f(V):
        U = u_phi[None] + V
        X = Z0[None] + U.reshape(len(U), n, k) @ N.T
        ok = np.abs(X).reshape(len(U), -1).max(axis=1) <= R
        out = np.full(len(U), np.inf)
        if ok.any():
            out[ok] = energy(U[ok])
        return out

    v, fv, exhausted, evals = _random_search(f, n * k, 2.0 * R, budget)
    return OracleResult(fv, (u_phi + v).reshape(n, k), exhausted, evals)


GOLDEN_HEADER = ("fixture_id", "quantity", "value", "tolerance")


def write_golden(rows, path):
    """Write ``(fixture_id, quantity, value, tolerance)`` rows as CSV."""
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(GOLDEN_HEADER)
        for fid, qty, val, tol in rows:
            out.writerow([fid, qty, f"{float(val):.12e}", f"{float(tol):.3e}"])


def read_golden(path):
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {(r["fixture_id"], r["quantity"]): (float(r["value"]), float(r["tolerance"]))
            for r in rows}
