"""Intrinsic Lipschitz functionals on a sampled base and their verdicts.

Every quantity is built from the ratio matrix

    R[i, j] = d(x_i, x_j) / d(x_i, fiber over b_j)

where fibers are taken at the section's scale.  The global constant is the
off-diagonal maximum of ``R``; the local slope at ``z`` maximises
``R[y, z]`` over the punctured ball around ``z``; the asymptotic constant
maximises ``R[a, b]`` over distinct pairs inside the ball.  Limits as the
radius shrinks are not extrapolated: fields are reported per radius.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    AdmissibilityViolated,
    BadSchedule,
    TooFewPoints,
)
from .sections import (
    PlainField,
    Section,
    _require_same_base,
    combine_sections,
    convex_combination,
    hadamard_product,
    pair_distances,
    scale_section,
    validate_section,
)

VARIANTS = ("local", "asymptotic")


@dataclass(frozen=True)
class ScaleSchedule:
    """Strictly decreasing positive radii ``eps_1 > ... > eps_K``."""

    radii: tuple

    def __post_init__(self):
        r = tuple(float(x) for x in np.atleast_1d(self.radii))
        if not r:
            raise BadSchedule("schedule needs at least one radius")
        if any(not np.isfinite(x) or x <= 0 for x in r):
            raise BadSchedule("radii must be positive and finite")
        if any(a <= b for a, b in zip(r, r[1:])):
            raise BadSchedule("radii must be strictly decreasing")
        object.__setattr__(self, "radii", r)

    def __len__(self):
        return len(self.radii)

    def __iter__(self):
        return iter(self.radii)


def as_schedule(sched):
    if isinstance(sched, ScaleSchedule):
        return sched
    return ScaleSchedule(tuple(np.atleast_1d(sched)))


@dataclass
class SlopeField:
    """Slopes per (point, radius); NaN marks an empty punctured ball.

    Attributes
    ----------
    variant : {"local", "asymptotic"}
    radii : tuple of float
    values : ndarray, shape (n, K)
    witnesses : ndarray of int, shape (n, K, 2)
        Ordered pair ``(i, j)`` whose ratio attains the entry; ``-1`` if empty.
    """

    variant: str
    radii: tuple
    values: np.ndarray
    witnesses: np.ndarray

    @property
    def empty(self):
        return np.isnan(self.values)

    def column(self, k=0):
        return self.values[:, k]


@dataclass
class TheoremReport:
    """Verdict of one checker: passes iff ``worst_margin >= -tolerance``."""

    check_name: str
    passed: bool
    worst_margin: float
    witness: dict = field(default_factory=dict)
    tolerance: float = 0.0
    skipped: bool = False
    details: dict = field(default_factory=dict)

    @classmethod
    def from_margin(cls, name, margin, witness, tolerance, **details):
        margin = float(margin) + 0.0  # no "-0"
        return cls(name, bool(margin >= -tolerance), margin, dict(witness),
                   float(tolerance), False, details)

    def line(self):
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        return f"[{status}] {self.check_name}: worst margin {self.worst_margin:.6e} (tol {self.tolerance:.1e})"


def _values_and_scale(f):
    if isinstance(f, Section):
        return f.values, f.scale
    if isinstance(f, PlainField):
        return f.values, 1.0
    raise TypeError(f"expected Section or PlainField, got {type(f).__name__}")


def ratio_matrix(f):
    """Ordered-pair ratio matrix of a section or plain field; NaN diagonal.

    A vanishing denominator with a positive numerator gives ``inf``.
    """
    X, scale = _values_and_scale(f)
    Q = f.quotient
    num = pair_distances(X, Q.norm)
    den = Q.distances_to_fibers(X, f.base.points, scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        R = num / den
    R[den == 0] = np.inf
    np.fill_diagonal(R, np.nan)
    return R


def global_ils(phi):
    """Exact ILS over all ordered pairs; returns ``(value, (i, j))``."""
    if phi.n < 2:
        raise TooFewPoints("ILS needs at least two points")
    R = ratio_matrix(phi)
    filled = np.where(np.isnan(R), -np.inf, R)
    i, j = np.unravel_index(np.argmax(filled), R.shape)
    return float(R[i, j]), (int(i), int(j))


def ball_mask(D, eps):
    """``ball[c, y]`` is True iff ``d(c, y) < eps`` (open ball, centre included)."""
    return D < eps


def _slope_column(R, ball, variant):
    n = R.shape[0]
    offdiag = ~np.eye(n, dtype=bool)
    Rf = np.where(np.isnan(R), -np.inf, R)
    vals = np.full(n, np.nan)
    wit = np.full((n, 2), -1, dtype=int)
    if variant == "local":
        # centre z collects R[y, z] over y in the punctured ball
        mask = ball & offdiag
        cand = np.where(mask, Rf.T, -np.inf)
        arg = np.argmax(cand, axis=1)
        best = cand[np.arange(n), arg]
        ok = mask.any(axis=1)
        vals[ok] = best[ok]
        wit[ok, 0] = arg[ok]
        wit[ok, 1] = np.arange(n)[ok]
    elif variant == "asymptotic":
        mask = ball[:, :, None] & ball[:, None, :] & offdiag[None, :, :]
        cand = np.where(mask, Rf[None, :, :], -np.inf).reshape(n, n * n)
        arg = np.argmax(cand, axis=1)
        best = cand[np.arange(n), arg]
        ok = mask.reshape(n, -1).any(axis=1)
        vals[ok] = best[ok]
        wit[ok, 0] = (arg // n)[ok]
        wit[ok, 1] = (arg % n)[ok]
    else:
        raise ValueError(f"unknown slope variant {variant!r}")
    return vals, wit


def slope_field(phi, sched, variant="asymptotic", ratios=None):
    """Scale-indexed local slope or asymptotic constant of ``phi``.

    Balls are open and taken in the base metric.  Works for plain fields
    too, in which case denominators use the field's own values.
    """
    sched = as_schedule(sched)
    R = ratio_matrix(phi) if ratios is None else ratios
    D = phi.base.distance_matrix(phi.quotient)
    cols = [_slope_column(R, ball_mask(D, eps), variant) for eps in sched]
    values = np.stack([c[0] for c in cols], axis=1)
    witnesses = np.stack([c[1] for c in cols], axis=1)
    return SlopeField(variant, sched.radii, values, witnesses)


def envelope_at_scale(values, D, eps, side="upper"):
    """Ball max (``upper``) or ball min (``lower``) of a per-point field.

    NaN entries are ignored; the centre always belongs to its ball.
    """
    values = np.asarray(values, dtype=float)
    ball = ball_mask(D, eps)
    np.fill_diagonal(ball, True)
    fill = -np.inf if side == "upper" else np.inf
    cand = np.where(ball & ~np.isnan(values)[None, :], values[None, :], fill)
    if side == "upper":
        out = cand.max(axis=1)
    elif side == "lower":
        out = cand.min(axis=1)
    else:
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
    out[np.isinf(out)] = np.nan
    return out


def c_min(f):
    """Smallest ``c`` with ``fiber_gap(y, z) >= d(f(y), fiber z) / c``.

    For sections this is 1 up to rounding; plain fields are accepted as a
    diagnostic and may exceed 1.
    """
    if f.n < 2:
        raise TooFewPoints("c_min needs at least two points")
    X, scale = _values_and_scale(f)
    Q, B = f.quotient, f.base.points
    num = Q.distances_to_fibers(X, B, scale)
    gap = Q.distances_to_fibers(scale * B @ Q.pinv.T, B, scale)
    off = ~np.eye(f.n, dtype=bool)
    return float((num[off] / gap[off]).max())


@dataclass
class ProductConstants:
    M: float
    k: float
    witness: tuple

    @property
    def finite(self):
        return bool(np.isfinite(self.k))


def product_constants(phi, psi):
    """Bound ``M`` and fiber ratio ``k`` for the componentwise product.

    ``k`` maximises ``min(d(phi(z), F_y), d(psi(z), F_y)) / d(phi(z)psi(z), F_y)``
    over ordered pairs ``z != y``; a vanishing denominator gives ``k = inf``
    with the offending pair as witness.
    """
    _require_same_base(phi, psi)
    Q, B = phi.quotient, phi.base.points
    M = float(max(np.abs(phi.values).max(), np.abs(psi.values).max()))
    prod = phi.values * psi.values
    dphi = Q.distances_to_fibers(phi.values, B)
    dpsi = Q.distances_to_fibers(psi.values, B)
    dprod = Q.distances_to_fibers(prod, B)
    num = np.minimum(dphi, dpsi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / dprod
    ratio[dprod == 0] = np.inf
    np.fill_diagonal(ratio, -np.inf)
    z, y = np.unravel_index(np.argmax(ratio), ratio.shape)
    return ProductConstants(M, float(ratio[z, y]), (int(z), int(y)))


def _rel_dev(a, b):
    scale = np.maximum(np.abs(b), np.finfo(float).tiny)
    return np.abs(a - b) / scale


def _worst(dev_matrix):
    idx = np.unravel_index(np.nanargmax(dev_matrix), dev_matrix.shape)
    return float(dev_matrix[idx]), tuple(int(i) for i in idx)


def check_scaling_invariance(phi, lam, tol=1e-12):
    """All pair ratios of ``lam * phi`` w.r.t. ``(1/lam) pi`` equal those of ``phi``."""
    scaled = scale_section(lam, phi)
    R0 = ratio_matrix(phi)
    R1 = ratio_matrix(scaled)
    dev, (i, j) = _worst(_rel_dev(R1, R0))
    ils0, ils1 = np.nanmax(R0), np.nanmax(R1)
    return TheoremReport.from_margin(
        "scaling_invariance", -dev, {"pair": [i, j], "lambda": float(lam)}, tol,
        ils=float(ils0), ils_scaled=float(ils1))


def check_fiber_identities(Q, base, phi, lambdas, tol=1e-9):
    """Fiber-gap and point-to-fiber scaling identities over all pairs."""
    B = base.points
    n = base.n
    worst, witness = 0.0, {}
    gap1 = np.array([[_gap(Q, B[i], B[j], 1.0) for j in range(n)] for i in range(n)])
    pt1 = Q.distances_to_fibers(phi.values, B, 1.0)
    off = ~np.eye(n, dtype=bool)
    for lam in lambdas:
        gapl = np.array([[_gap(Q, B[i], B[j], lam) for j in range(n)] for i in range(n)])
        ptl = Q.distances_to_fibers(lam * phi.values, B, lam)
        for kind, lhs, rhs in (("gap", gapl, abs(lam) * gap1), ("point", ptl, abs(lam) * pt1)):
            dev = np.where(off, _rel_dev(lhs, rhs), 0.0)
            d, (i, j) = _worst(dev)
            if d > worst or not witness:
                worst = d
                witness = {"identity": kind, "pair": [i, j], "lambda": float(lam)}
    return TheoremReport.from_margin("fiber_identities", -worst, witness, tol)


def _gap(Q, b1, b2, lam):
    from .quotient import fiber_gap
    return fiber_gap(Q, b1, b2, lam)


def _field_margin(bound, value):
    """Entrywise ``bound - value`` ignoring empty entries; returns (min, index)."""
    m = bound - value
    m = np.where(np.isnan(m), np.inf, m)
    idx = np.unravel_index(np.argmin(m), m.shape)
    return float(m[idx]), tuple(int(i) for i in idx)


def check_chain(phi, sched, tol=1e-12):
    """``1 <= Ils_eps <= Ils_a,eps <= ILS`` at every point and radius."""
    sched = as_schedule(sched)
    R = ratio_matrix(phi)
    loc = slope_field(phi, sched, "local", ratios=R).values
    asy = slope_field(phi, sched, "asymptotic", ratios=R).values
    ils = float(np.nanmax(R))
    worst, witness = np.inf, {}
    for name, bound, value in (("one<=local", loc, np.ones_like(loc)),
                               ("local<=asymptotic", asy, loc),
                               ("asymptotic<=ILS", np.full_like(asy, ils), asy)):
        m, (i, k) = _field_margin(bound, value)
        if m < worst:
            worst, witness = m, {"link": name, "point": i, "radius": sched.radii[k]}
    return TheoremReport.from_margin("chain", worst, witness, tol, ils=ils)


def check_ball_monotonicity(phi, sched, tol=1e-12):
    """``Ils_a,eps/3(y') <= Ils_a,eps(y)`` whenever ``d(y', y) < eps/3``."""
    sched = as_schedule(sched)
    R = ratio_matrix(phi)
    D = phi.base.distance_matrix(phi.quotient)
    big = slope_field(phi, sched, "asymptotic", ratios=R).values
    small = slope_field(phi, [r / 3 for r in sched], "asymptotic", ratios=R).values
    worst, witness = np.inf, {}
    for k, eps in enumerate(sched):
        near = D < eps / 3
        # margin[y, y'] = big[y] - small[y']
        m = big[:, k][:, None] - small[:, k][None, :]
        m = np.where(near & ~np.isnan(m), m, np.inf)
        y, yp = np.unravel_index(np.argmin(m), m.shape)
        if m[y, yp] < worst:
            worst = float(m[y, yp])
            witness = {"centre": int(y), "inner": int(yp), "radius": eps}
    return TheoremReport.from_margin("ball_monotonicity", worst, witness, tol)


def check_envelope_sandwich(phi, sched, fractions=(0.25, 0.5, 0.75), tol=1e-12):
    """``ILS >= Ils_a,eps(y) >= max of Ils_eps'`` over ``B(y, eps - eps')``.

    The inner radius plus the envelope radius never exceeds ``eps``, so
    every pair seen by the envelope lies in the asymptotic ball.
    """
    sched = as_schedule(sched)
    R = ratio_matrix(phi)
    D = phi.base.distance_matrix(phi.quotient)
    ils = float(np.nanmax(R))
    asy = slope_field(phi, sched, "asymptotic", ratios=R).values
    worst, witness = np.inf, {}
    for k, eps in enumerate(sched):
        m, (i,) = _field_margin(np.full(len(asy), ils), asy[:, k])
        if m < worst:
            worst, witness = m, {"link": "ILS>=asymptotic", "point": i, "radius": eps}
        for frac in fractions:
            inner = frac * eps
            loc = slope_field(phi, [inner], "local", ratios=R).values[:, 0]
            env = envelope_at_scale(loc, D, eps - inner, "upper")
            m, (i,) = _field_margin(asy[:, k], env)
            if m < worst:
                worst, witness = m, {"link": "asymptotic>=envelope", "point": i,
                                     "radius": eps, "inner_radius": inner}
    return TheoremReport.from_margin("envelope_sandwich", worst, witness, tol)


def check_leibniz(phi, psi, alpha, beta, c, sched, tol=1e-10):
    """Pointwise Leibniz bound for ``eta = alpha phi + beta psi``.

    Checks ``S(eta) <= c/2 (S(phi) + S(psi))`` for both the local slope and
    the asymptotic constant at every radius, with ``eta`` measured against
    the fibers of ``(1/(alpha + beta)) pi``.

    Raises
    ------
    AdmissibilityViolated
        If ``c`` is below ``c_min`` of either input.
    """
    sched = as_schedule(sched)
    needed = max(c_min(phi), c_min(psi))
    if c < needed - 1e-12:
        raise AdmissibilityViolated(f"c = {c} is below c_min = {needed:.6g}")
    eta = combine_sections(alpha, phi, beta, psi)
    Rs = [ratio_matrix(f) for f in (eta, phi, psi)]
    worst, witness, at = np.inf, {}, {}
    for variant in VARIANTS:
        fe, fp, fq = (slope_field(f, sched, variant, ratios=R).values
                      for f, R in zip((eta, phi, psi), Rs))
        bound = 0.5 * c * (fp + fq)
        m, (i, k) = _field_margin(bound, fe)
        if m < worst:
            worst = m
            witness = {"variant": variant, "point": i, "radius": sched.radii[k]}
            at = {"value": float(fe[i, k]), "bound": float(bound[i, k])}
    return TheoremReport.from_margin(
        "leibniz", worst, witness, tol, alpha=float(alpha), beta=float(beta), c=float(c), **at)


def check_product_bound(phi, psi, sched, tol=1e-10):
    """``Ils_a(phi psi) <= M k (Ils_a(phi) + Ils_a(psi))`` pointwise.

    Skipped (and reported as passing) when ``k`` is infinite.
    """
    sched = as_schedule(sched)
    pc = product_constants(phi, psi)
    if not pc.finite:
        return TheoremReport("product_bound", True, np.inf, {"k_witness": list(pc.witness)},
                             tol, True, {"M": pc.M, "k": pc.k})
    prod = hadamard_product(phi, psi)
    lhs = slope_field(prod, sched, "asymptotic").values
    rhs = pc.M * pc.k * (slope_field(phi, sched, "asymptotic").values
                         + slope_field(psi, sched, "asymptotic").values)
    m, (i, k) = _field_margin(rhs, lhs)
    return TheoremReport.from_margin(
        "product_bound", m, {"point": i, "radius": sched.radii[k]}, tol,
        M=pc.M, k=pc.k, lhs=float(lhs[i, k]), rhs=float(rhs[i, k]))


def check_convexity(phi, psi, ts=(0.0, 0.25, 0.5, 0.75, 1.0), tol=1e-9):
    """Convex combinations stay sections of ``pi`` without raising ``c_min``."""
    _require_same_base(phi, psi)
    cap = max(c_min(phi), c_min(psi))
    worst, witness = np.inf, {}
    for t in ts:
        comb = convex_combination(float(t), phi, psi)
        comb = validate_section(comb.quotient, comb.base, comb.values, 1.0)
        m = cap - c_min(comb)
        if m < worst:
            worst, witness = m, {"t": float(t)}
    return TheoremReport.from_margin("convexity", worst, witness, tol, c_cap=cap)
