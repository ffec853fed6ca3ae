"""Weighted L^q norms of vector-valued fields over a sampled base."""

from dataclasses import dataclass

import numpy as np

from .exceptions import BadExponent, MixedBases, NonFiniteValues

NORM_VARIANTS = ("sum", "max", "quad")


@dataclass(frozen=True, eq=False)
class WeightedField:
    """Per-point vectors (shape ``(n, s)``) or scalars (shape ``(n,)``)."""

    base: object
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2) or v.shape[0] != self.base.n:
            raise ValueError(f"field must have {self.base.n} rows, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValues("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, f):
        """Wrap a Section / PlainField (anything with ``base`` and ``values``)."""
        return cls(f.base, f.values)

    def as_matrix(self):
        return self.values if self.values.ndim == 2 else self.values[:, None]

    def __sub__(self, other):
        _same(self, other)
        return WeightedField(self.base, self.values - other.values)


def _same(a, b):
    if not (a.base == b.base):
        raise MixedBases("fields live over different bases")
    if a.values.shape != b.values.shape:
        raise MixedBases(f"shape mismatch {a.values.shape} vs {b.values.shape}")


def _check_q(q):
    if not (np.isfinite(q) and q > 1):
        raise BadExponent(f"q must lie in (1, inf), got {q}")


def component_norms(psi, q):
    """``|psi_j|_q = (sum_y |psi_j(y)|^q m(y))^(1/q)`` for each component j."""
    _check_q(q)
    V = np.abs(psi.as_matrix())
    w = psi.base.weights[:, None]
    # scale out the peak so large q cannot overflow
    peak = V.max(axis=0)
    safe = np.where(peak > 0, peak, 1.0)
    return peak * ((V / safe) ** q * w).sum(axis=0) ** (1.0 / q)


def lq_norm(psi, q=2.0, variant="sum"):
    """Sum, max or quadratic combination of the component norms."""
    c = component_norms(psi, q)
    if variant == "sum":
        return float(c.sum())
    if variant == "max":
        return float(c.max())
    if variant == "quad":
        return float(np.sqrt((c ** 2).sum()))
    raise ValueError(f"unknown norm variant {variant!r}; expected one of {NORM_VARIANTS}")


def lq_distance(psi, eta, q=2.0, variant="sum"):
    return lq_norm(psi - eta, q, variant)


@dataclass
class ConvergenceReport:
    """Per-term component distances to the limit.

    ``trace[h, j]`` is ``|psi_h,j - psi_j|_q``; the sequence counts as
    converged when every component of the last term is within tolerance.
    """

    trace: np.ndarray
    tolerance: float
    converged: bool
    monotone: bool
    first_within: int

    @property
    def final_distance(self):
        return float(self.trace[-1].max())


def sequence_convergence(seq, limit, q=2.0, tolerance=1e-8):
    if len(seq) == 0:
        raise ValueError("sequence is empty")
    rows = []
    for term in seq:
        _same(term, limit)
        rows.append(component_norms(term - limit, q))
    trace = np.array(rows)
    worst = trace.max(axis=1)
    within = np.flatnonzero(worst <= tolerance)
    return ConvergenceReport(
        trace=trace,
        tolerance=float(tolerance),
        converged=bool(worst[-1] <= tolerance),
        monotone=bool(np.all(np.diff(worst) <= 1e-15)),
        first_within=int(within[0]) if within.size else -1,
    )
