"""Sections of rescaled quotients over a sampled base, and their algebra.

A :class:`Section` of ``(1/lam) pi`` stores one value per base point with
``A x_i = lam * b_i``.  Every such section is a null-space lift
``x_i = lam * pinv b_i + N u_i``; linear combinations with coefficient sum
``alpha + beta`` land on the fibers of ``(1/(alpha + beta)) pi``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateScale,
    MixedBases,
    NonFiniteValues,
    NotOnFiber,
    ZeroCoefficient,
)
from .quotient import _check_scale, _frozen, vector_norm


@dataclass(frozen=True, eq=False)
class Section:
    """Values ``x_i`` on the fibers ``{z : A z = scale * b_i}``.

    Build through :func:`validate_section` or :func:`lift_section` so the
    fiber constraint is checked.
    """

    quotient: object
    base: object
    scale: float
    values: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]

    def lift_coordinates(self):
        """Null-space coordinates ``u`` with ``values == lift_section(u)``."""
        Q = self.quotient
        offset = self.scale * self.base.points @ Q.pinv.T
        return (self.values - offset) @ Q.null_basis

    def sup_norm(self):
        return float(np.abs(self.values).max())

    def __repr__(self):
        return f"Section(n={self.n}, s={self.values.shape[1]}, scale={self.scale:g})"


@dataclass(frozen=True, eq=False)
class PlainField:
    """Per-point vectors in R^s with no fiber constraint (e.g. products)."""

    quotient: object
    base: object
    values: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"PlainField(n={self.n}, s={self.values.shape[1]})"


def fiber_residuals(Q, base, values, scale):
    """Per-point Euclidean residual ``||A x_i - scale * b_i||``."""
    return np.linalg.norm(values @ Q.A.T - scale * base.points, axis=1)


def _residual_tol(Q, base, scale):
    return Q.tol * max(1.0, abs(scale) * float(np.abs(base.points).max()))


def _as_values(Q, base, values):
    X = np.array(values, dtype=float)
    if X.ndim == 1 and Q.s == 1:
        X = X[:, None]
    if X.shape != (base.n, Q.s):
        raise ValueError(f"expected values of shape {(base.n, Q.s)}, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteValues("section values must be finite")
    return X


def validate_section(Q, base, values, scale=1.0):
    """Check ``A x_i = scale * b_i`` for every point and wrap as a Section.

    Raises
    ------
    NotOnFiber
        For the point with the worst residual, when it exceeds tolerance.
    DegenerateScale
        If ``scale == 0``.
    """
    _check_scale(scale)
    X = _as_values(Q, base, values)
    res = fiber_residuals(Q, base, X, scale)
    worst = int(np.argmax(res))
    if res[worst] > _residual_tol(Q, base, scale):
        raise NotOnFiber(worst, res[worst])
    return Section(Q, base, float(scale), _frozen(X))


def lift_section(Q, base, u, scale=1.0):
    """Section ``x_i = scale * pinv b_i + N u_i``; exact by construction."""
    _check_scale(scale)
    k = Q.s - Q.m
    u = np.asarray(u, dtype=float)
    if u.ndim == 1 and k == 1:
        u = u[:, None]
    if u.shape != (base.n, k):
        raise ValueError(f"expected lift coordinates of shape {(base.n, k)}, got {u.shape}")
    X = scale * base.points @ Q.pinv.T + u @ Q.null_basis.T
    if not np.all(np.isfinite(X)):
        raise NonFiniteValues("lifted values must be finite")
    return Section(Q, base, float(scale), _frozen(X))


def same_base(a, b):
    return a.quotient == b.quotient and a.base == b.base


def _require_same_base(a, b):
    if not same_base(a, b):
        raise MixedBases("operands live over different quotients or bases")


def combine_sections(alpha, phi, beta, psi):
    """``alpha * phi + beta * psi`` as a section of ``(1/(alpha+beta)) pi``.

    Both inputs must be sections of ``pi`` itself (scale 1).
    """
    _require_same_base(phi, psi)
    if alpha == 0 or beta == 0:
        raise ZeroCoefficient("combination coefficients must be nonzero")
    if alpha + beta == 0:
        raise DegenerateScale("alpha + beta = 0 gives no quotient to be a section of")
    if phi.scale != 1 or psi.scale != 1:
        raise ValueError("combine_sections expects sections of pi (scale 1)")
    X = alpha * phi.values + beta * psi.values
    return Section(phi.quotient, phi.base, float(alpha + beta), _frozen(X))


def scale_section(lam, phi):
    """``lam * phi``, a section of ``(1/lam) pi``."""
    _check_scale(lam)
    if phi.scale != 1:
        raise ValueError("scale_section expects a section of pi (scale 1)")
    return Section(phi.quotient, phi.base, float(lam), _frozen(lam * phi.values))


def convex_combination(t, phi, psi):
    """``t * phi + (1 - t) * psi`` for ``t`` in [0, 1], endpoints included."""
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    _require_same_base(phi, psi)
    if t == 1:
        return phi
    if t == 0:
        return psi
    return combine_sections(t, phi, 1 - t, psi)


def hadamard_product(phi, psi):
    """Componentwise product of two sections of ``pi``; not itself a section."""
    _require_same_base(phi, psi)
    if phi.scale != 1 or psi.scale != 1:
        raise ValueError("hadamard_product expects sections of pi (scale 1)")
    return PlainField(phi.quotient, phi.base, _frozen(phi.values * psi.values))


def pair_distances(values, norm):
    """``N[i, j] = ||x_i - x_j||`` in the quotient's norm."""
    return vector_norm(values[:, None, :] - values[None, :, :], norm)
