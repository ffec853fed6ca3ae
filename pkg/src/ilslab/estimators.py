"""scikit-learn style wrappers.

Rows of ``X`` are section values ``x_i`` in R^s.  The quotient ``A`` is a
hyperparameter, and base points are recovered from the data as
``b_i = A x_i / scale``.  Each row is therefore a sample on its own fiber,
and ``sample_weight`` plays the role of the measure.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cheeger import AdmissibleClass, RelaxationParams, relax_energy
from .functionals import ScaleSchedule, global_ils, slope_field
from .quotient import SampledBase, build_quotient
from .sections import validate_section


def check_quotient_matrix(A):
    """Validate a quotient matrix hyperparameter and return it as a 2-D array."""
    if A is None:
        raise ValueError("A must be given")
    A = check_array(A, ensure_2d=True, dtype=float)
    if A.shape[0] >= A.shape[1]:
        raise ValueError(f"A must be wide (m < s), got shape {A.shape}")
    return A


def check_section_array(X, Q, scale=1.0, sample_weight=None, metric=None):
    """Turn an ``(n, s)`` array into a validated Section over its own base."""
    X = check_array(X, dtype=float, ensure_min_samples=2)
    if X.shape[1] != Q.s:
        raise ValueError(f"X has {X.shape[1]} columns but A expects {Q.s}")
    base = SampledBase(X @ Q.A.T / scale, sample_weight, metric)
    return validate_section(Q, base, X, scale)


class IntrinsicSlope(TransformerMixin, BaseEstimator):
    """Per-sample discrete slopes of a section.

    Parameters
    ----------
    A : array-like of shape (m, s)
        Quotient matrix.
    radii : sequence of float
        Strictly decreasing ball radii.
    variant : {"asymptotic", "local"}
    scale : float
        The section is checked against the fibers of ``(1/scale) pi``.
    norm : {"euclidean", "l1", "linf"}

    Attributes
    ----------
    quotient_ : QuotientMap
    ils_ : float
        Global constant of the training section.
    ils_pair_ : tuple of int
    slopes_ : ndarray of shape (n_samples, n_radii)
    n_features_in_ : int
    """

    def __init__(self, A=None, radii=(1.0,), variant="asymptotic", scale=1.0, norm="euclidean"):
        self.A = A
        self.radii = radii
        self.variant = variant
        self.scale = scale
        self.norm = norm

    def _schedule(self):
        return ScaleSchedule(tuple(float(r) for r in np.atleast_1d(self.radii)))

    def fit(self, X, y=None, sample_weight=None):
        self.quotient_ = build_quotient(check_quotient_matrix(self.A), self.norm)
        sec = check_section_array(X, self.quotient_, self.scale, sample_weight)
        self.n_features_in_ = sec.values.shape[1]
        self.ils_, self.ils_pair_ = global_ils(sec)
        self.slopes_ = slope_field(sec, self._schedule(), self.variant).values
        return self

    def transform(self, X):
        """Slope field of ``X`` (NaN where a ball holds no other sample)."""
        check_is_fitted(self, "quotient_")
        sec = check_section_array(X, self.quotient_, self.scale)
        return slope_field(sec, self._schedule(), self.variant).values


class CheegerRelaxation(BaseEstimator):
    """Proximal relaxation of the discrete Cheeger energy of a section.

    Parameters
    ----------
    A : array-like of shape (m, s)
    eps : float
        Ball radius of the slopes.
    tau : float
        Proximity weight; large values let the minimiser move freely.
    variant : {"a", "ils"}
    restarts, max_iters, seed, tol
        Solver controls, see :class:`RelaxationParams`.
    c, bound_radius : float
        Admissible class.

    Attributes
    ----------
    energy_ : float
    minimizer_ : ndarray of shape (n_samples, s)
    h2_ : ndarray of shape (n_samples,)
    certificate_ : RelaxedSlopeCertificate
    converged_ : bool
    n_iter_ : int
    """

    def __init__(self, A=None, eps=1.0, tau=1e6, variant="a", restarts=4, max_iters=4000,
                 seed=0, tol=1e-9, c=2.0, bound_radius=10.0):
        self.A = A
        self.eps = eps
        self.tau = tau
        self.variant = variant
        self.restarts = restarts
        self.max_iters = max_iters
        self.seed = seed
        self.tol = tol
        self.c = c
        self.bound_radius = bound_radius

    def fit(self, X, y=None, sample_weight=None):
        Q = build_quotient(check_quotient_matrix(self.A))
        sec = check_section_array(X, Q, 1.0, sample_weight)
        params = RelaxationParams(eps=self.eps, tau=self.tau, max_iters=self.max_iters,
                                  restarts=self.restarts, seed=self.seed, tol=self.tol)
        res = relax_energy(sec, AdmissibleClass(self.c, self.bound_radius), params,
                           self.variant)
        self.quotient_ = Q
        self.n_features_in_ = X.shape[1] if hasattr(X, "shape") else sec.values.shape[1]
        self.energy_ = res.energy
        self.minimizer_ = np.array(res.minimizer.values)
        self.h2_ = np.array(res.h2)
        self.certificate_ = res.certificate
        self.converged_ = res.converged
        self.n_iter_ = len(res.trace) - 1
        return self

    def transform(self, X=None):
        """The relaxed section found by :meth:`fit`."""
        check_is_fitted(self, "minimizer_")
        return self.minimizer_.copy()

    def score(self, X=None, y=None):
        """Negative relaxed energy (higher is better)."""
        check_is_fitted(self, "energy_")
        return -self.energy_
