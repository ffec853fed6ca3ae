"""Linear quotient maps ``x -> A x`` and the geometry of their affine fibers.

A point ``b`` of the base is identified with its coordinates in R^m, and
the fiber of the rescaled map ``(1/lam) A`` over ``b`` is the affine set
``{z : A z = lam * b}``.  All fibers are translates of ``ker(A)``, which
is what makes every distance here computable in closed form (Euclidean)
or as a tiny linear program (l1 / linf).
"""

import numpy as np
from scipy.optimize import linprog

from .exceptions import (
    DegenerateScale,
    DuplicateBasePoints,
    InvalidMetric,
    InvalidWeights,
    NonFiniteValues,
    NotStrictQuotient,
    RankDeficient,
    SolverTolerance,
)

NORMS = ("euclidean", "l1", "linf")

_NORM_ORD = {"euclidean": 2, "l1": 1, "linf": np.inf}

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


def vector_norm(v, norm="euclidean", axis=-1):
    return np.linalg.norm(v, ord=_NORM_ORD[norm], axis=axis)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class QuotientMap:
    """Full-row-rank linear surjection ``A: R^s -> R^m`` with ``m < s``.

    Use :func:`build_quotient` to construct one.  Instances are immutable
    and safe to share between threads.

    Attributes
    ----------
    A : ndarray, shape (m, s)
    pinv : ndarray, shape (s, m)
        Moore-Penrose pseudoinverse of ``A``.
    null_basis : ndarray, shape (s, s - m)
        Orthonormal basis of ``ker(A)``.
    norm : {"euclidean", "l1", "linf"}
        Norm on R^s used for every distance.
    tol : float
        Absolute numerical tolerance.
    """

    def __init__(self, A, pinv, null_basis, norm, tol, singular_values):
        self.A = _frozen(A)
        self.pinv = _frozen(pinv)
        self.null_basis = _frozen(null_basis)
        self.norm = norm
        self.tol = float(tol)
        self.singular_values = _frozen(singular_values)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def s(self):
        return self.A.shape[1]

    @property
    def condition_number(self):
        return float(self.singular_values[0] / self.singular_values[-1])

    def __repr__(self):
        return f"QuotientMap(m={self.m}, s={self.s}, norm={self.norm!r})"

    def __eq__(self, other):
        if not isinstance(other, QuotientMap):
            return NotImplemented
        return self.norm == other.norm and np.array_equal(self.A, other.A)

    def __hash__(self):
        return hash((self.norm, self.A.tobytes()))

    def min_norm_correction(self, r):
        """Return ``(value, w)`` minimising ``||w||`` subject to ``A w = r``."""
        r = np.asarray(r, dtype=float)
        if self.norm == "euclidean":
            w = self.pinv @ r
            return float(np.linalg.norm(w)), w
        if not np.any(r):
            return 0.0, np.zeros(self.s)
        return _lp_min_norm(self.A, self.pinv, r, self.norm, self.tol)

    def distances_to_fibers(self, X, B, scale=1.0):
        """Matrix ``D[i, j] = d(X[i], fiber over B[j] at the given scale)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        R = (X @ self.A.T)[:, None, :] - scale * B[None, :, :]
        if self.norm == "euclidean":
            return np.linalg.norm(R @ self.pinv.T, axis=-1)
        D = np.empty(R.shape[:2])
        for i in range(R.shape[0]):
            for j in range(R.shape[1]):
                D[i, j] = self.min_norm_correction(R[i, j])[0]
        return D


def _lp_min_norm(A, pinv, r, norm, tol):
    # min ||w||_p s.t. A w = r, certified by the dual max r.mu s.t. ||A^T mu||_q <= 1
    m, s = A.shape
    if np.abs(r).max() <= 1e-13:
        # rounding-level residual: the point already lies on the fiber
        w = pinv @ r
        return float(vector_norm(w, norm)), w
    if norm == "l1":
        c = np.ones(2 * s)
        res = linprog(c, A_eq=np.hstack([A, -A]), b_eq=r, bounds=(0, None),
                      method="highs", options=_HIGHS_OPTIONS)
        w = res.x[:s] - res.x[s:] if res.status == 0 else None
        dual = linprog(-r, A_ub=np.vstack([A.T, -A.T]), b_ub=np.ones(2 * s),
                       bounds=(None, None), method="highs", options=_HIGHS_OPTIONS)
        mu = dual.x if dual.status == 0 else None
        dual_norm = 0 if mu is None else np.max(np.abs(A.T @ mu))
    else:
        c = np.zeros(s + 1)
        c[-1] = 1.0
        eye = np.eye(s)
        ones = np.ones((s, 1))
        A_ub = np.vstack([np.hstack([eye, -ones]), np.hstack([-eye, -ones])])
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(2 * s),
                      A_eq=np.hstack([A, np.zeros((m, 1))]), b_eq=r,
                      bounds=[(None, None)] * s + [(0, None)],
                      method="highs", options=_HIGHS_OPTIONS)
        w = res.x[:s] if res.status == 0 else None
        # dual variables: mu (m), v (s) with -v <= A^T mu <= v, sum v <= 1
        cd = np.concatenate([-r, np.zeros(s)])
        At = A.T
        Ad = np.vstack([
            np.hstack([At, -eye]),
            np.hstack([-At, -eye]),
            np.concatenate([np.zeros(m), np.ones(s)])[None, :],
        ])
        bd = np.concatenate([np.zeros(2 * s), [1.0]])
        dual = linprog(cd, A_ub=Ad, b_ub=bd, bounds=[(None, None)] * m + [(0, None)] * s,
                       method="highs", options=_HIGHS_OPTIONS)
        mu = dual.x[:m] if dual.status == 0 else None
        dual_norm = 0 if mu is None else np.sum(np.abs(A.T @ mu))
    if w is None or mu is None:
        failed = res if w is None else dual
        raise SolverTolerance(f"{norm} projection LP failed: {failed.message}")
    # polish onto the constraint set, then rescale the dual into feasibility
    w = w + pinv @ (r - A @ w)
    value = float(vector_norm(w, norm))
    lower = float(r @ mu) / max(1.0, float(dual_norm))
    if value - lower > max(tol, 1e-12) * max(1.0, value):
        raise SolverTolerance(
            f"{norm} projection gap {value - lower:.3e} exceeds tolerance {tol:.1e}")
    return value, w


def build_quotient(A, norm="euclidean", tol=None):
    """Validate ``A`` and precompute its pseudoinverse and kernel basis.

    Parameters
    ----------
    A : array_like, shape (m, s)
        Linear quotient with ``1 <= m < s`` and full row rank.
    norm : {"euclidean", "l1", "linf"}
    tol : float, optional
        Defaults to ``1e-10`` times the largest singular value.

    Raises
    ------
    NotStrictQuotient
        If ``m >= s`` (fibers would be points).
    RankDeficient
        If ``rank(A) < m``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.size == 0:
        raise NotStrictQuotient(f"A must be a non-empty matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteValues("A contains non-finite entries")
    if norm not in NORMS:
        raise ValueError(f"unknown norm {norm!r}; expected one of {NORMS}")
    m, s = A.shape
    if m >= s:
        raise NotStrictQuotient(f"need m < s, got m={m}, s={s}")
    U, sig, Vt = np.linalg.svd(A)
    if tol is None:
        tol = 1e-10 * max(sig[0], 1.0) if sig[0] > 0 else 1e-10
    rank = int(np.sum(sig > tol))
    if rank < m:
        raise RankDeficient(f"rank(A) = {rank} < m = {m}")
    pinv = (Vt[:m].T / sig) @ U.T
    null_basis = Vt[m:].T
    return QuotientMap(A, pinv, null_basis, norm, tol, sig)


def _check_scale(scale):
    if scale == 0 or not np.isfinite(scale):
        raise DegenerateScale(f"scale must be a nonzero finite real, got {scale}")


def fiber_distance(Q, x, b, scale=1.0):
    """Distance from ``x`` to the fiber ``{z : A z = scale * b}``."""
    _check_scale(scale)
    r = Q.A @ np.asarray(x, dtype=float) - scale * np.asarray(b, dtype=float)
    return Q.min_norm_correction(r)[0]


def fiber_gap(Q, b1, b2, scale=1.0):
    """Distance between the parallel fibers over ``b1`` and ``b2``.

    Equals ``|scale| * fiber_gap(Q, b1, b2, 1)``.
    """
    _check_scale(scale)
    d = scale * (np.asarray(b1, dtype=float) - np.asarray(b2, dtype=float))
    return Q.min_norm_correction(d)[0]


def project_to_fiber(Q, x, b, scale=1.0):
    """Nearest point to ``x`` on the fiber over ``b`` (a nearest one for l1/linf)."""
    _check_scale(scale)
    x = np.asarray(x, dtype=float)
    r = Q.A @ x - scale * np.asarray(b, dtype=float)
    return x - Q.min_norm_correction(r)[1]


class SampledBase:
    """Finite metric measure space: base points, metric and positive weights.

    Parameters
    ----------
    points : array_like, shape (n, m) or (n,)
        Coordinates of the base points in R^m; 1-D input means ``m = 1``.
    weights : array_like, shape (n,), optional
        Point masses; defaults to all ones.
    metric : None, "induced" or array_like (n, n)
        ``None``/``"induced"`` uses the fiber-gap metric of the quotient;
        an explicit matrix overrides it.
    labels : sequence of str, optional
    """

    def __init__(self, points, weights=None, metric=None, labels=None, tol=1e-10):
        P = np.asarray(points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.ndim != 2 or P.shape[0] == 0:
            raise ValueError(f"points must be an (n, m) array, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise NonFiniteValues("base points must be finite")
        n = P.shape[0]
        diffs = np.abs(P[:, None, :] - P[None, :, :]).max(axis=-1)
        np.fill_diagonal(diffs, np.inf)
        if n > 1 and diffs.min() == 0:
            i, j = np.unravel_index(np.argmin(diffs), diffs.shape)
            raise DuplicateBasePoints(f"base points {min(i, j)} and {max(i, j)} coincide")
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise InvalidWeights(f"expected {n} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidWeights("weights must be finite and strictly positive")
        if isinstance(metric, str):
            if metric != "induced":
                raise InvalidMetric(f"unknown metric mode {metric!r}")
            metric = None
        if metric is not None:
            metric = np.asarray(metric, dtype=float)
            _check_metric(metric, n, tol)
        self.points = _frozen(P)
        self.weights = _frozen(w)
        self.metric = None if metric is None else _frozen(metric)
        self.labels = None if labels is None else tuple(str(x) for x in labels)
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels must have one entry per base point")
        self._induced = {}

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def metric_mode(self):
        return "induced" if self.metric is None else "explicit"

    def __repr__(self):
        return f"SampledBase(n={self.n}, m={self.dim}, metric={self.metric_mode!r})"

    def __eq__(self, other):
        if not isinstance(other, SampledBase):
            return NotImplemented
        if self is other:
            return True
        same_metric = (self.metric is None and other.metric is None) or (
            self.metric is not None and other.metric is not None
            and np.array_equal(self.metric, other.metric))
        return (same_metric and np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes()))

    def distance_matrix(self, Q):
        """Base metric ``d_Y``: explicit matrix, or fiber gaps under ``Q``."""
        if self.metric is not None:
            return self.metric
        key = id(Q)
        hit = self._induced.get(key)
        if hit is not None and hit[0] is Q:
            return hit[1]
        if Q.m != self.dim:
            raise ValueError(f"base points live in R^{self.dim} but quotient maps to R^{Q.m}")
        D = Q.distances_to_fibers(self.points @ Q.pinv.T, self.points)
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
        D.flags.writeable = False
        self._induced[key] = (Q, D)
        return D


def _check_metric(D, n, tol):
    if D.shape != (n, n):
        raise InvalidMetric(f"metric must be {n}x{n}, got {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InvalidMetric("metric entries must be finite")
    if not np.allclose(D, D.T, rtol=0, atol=tol):
        raise InvalidMetric("metric is not symmetric")
    if np.any(np.diag(D) != 0):
        raise InvalidMetric("metric diagonal must be zero")
    off = D[~np.eye(n, dtype=bool)]
    if np.any(off <= 0):
        raise InvalidMetric("off-diagonal metric entries must be positive")
    # d(i,k) <= d(i,j) + d(j,k) for all triples
    excess = D[:, None, :] - (D[:, :, None] + D[None, :, :])
    if excess.max() > tol * max(1.0, D.max()):
        raise InvalidMetric("metric violates the triangle inequality")
