"""Discrete intrinsic Cheeger energy, its proximal relaxation and certificates.

The energy of a section at radius ``eps`` is ``sum_i m_i S(y_i)^2`` where
``S`` is the asymptotic constant (variant ``"a"``) or the local slope
(variant ``"ils"``).  The relaxation minimises the proximal objective

    F_tau(psi) = E(psi) + ||psi - phi||^2 / tau

over admissible sections ``psi`` (parametrised by null-space lift
coordinates) with a derivative-free pattern search.  Contracting the
minimiser onto ``phi`` gives admissible sections converging to ``phi``,
recorded as the approximating sequence of a relaxed slope certificate.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._kernels import NORM_CODES, prox_value, retract
from .exceptions import (
    EmptyBall,
    EmptyInput,
    MinimalityViolated,
    MixedBases,
    NotAdmissible,
    UnverifiedCertificate,
)
from .functionals import (
    TheoremReport,
    _slope_column,
    ball_mask,
    c_min,
    slope_field,
)
from .lq import WeightedField, lq_distance, lq_norm
from .sections import (
    Section,
    combine_sections,
    fiber_residuals,
    lift_section,
    pair_distances,
    same_base,
)

ENERGY_VARIANTS = {"a": "asymptotic", "ils": "local"}


def slope_variant(variant):
    try:
        return ENERGY_VARIANTS[variant]
    except KeyError:
        raise ValueError(f"energy variant must be 'a' or 'ils', got {variant!r}") from None


def max_threads():
    """Worker cap from ``ILSLAB_THREADS``; defaults to all cores."""
    raw = os.environ.get("ILSLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class AdmissibleClass:
    """Bounded sections satisfying the fiber inequality with constant ``c``.

    The sup-norm box ``||psi_i||_inf <= bound_radius`` stands in for
    bounded support.
    """

    c: float = 2.0
    bound_radius: float = 10.0

    def __post_init__(self):
        if not self.c >= 2:
            raise ValueError(f"admissibility constant must satisfy c >= 2, got {self.c}")
        if not self.bound_radius > 0:
            raise ValueError("bound_radius must be positive")


@dataclass(frozen=True)
class RelaxationParams:
    """Solver controls.

    Attributes
    ----------
    eps : float
        Ball radius of the slopes.
    tau : float
        Proximity weight of ``||psi - phi||^2 / tau``.
    max_iters, restarts, seed
        Pattern-search budget and multistart seeding.
    tol : float
        Step-size floor of the search and distance at which the
        approximating sequence stops.
    continuation, shrink
        At most ``continuation`` contraction steps by factor ``shrink``.
    """

    eps: float
    tau: float = 1e6
    max_iters: int = 4000
    restarts: int = 4
    seed: int = 0
    tol: float = 1e-9
    continuation: int = 40
    shrink: float = 0.01

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be at least 1")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class RelaxedSlopeCertificate:
    """``(G, H1, H2, (phi_h))`` witnessing that ``G`` is a relaxed slope of ``phi``."""

    phi: Section
    G: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    sequence: list
    q: float = 2.0
    eps: float = 1.0
    variant: str = "a"
    admissible: AdmissibleClass = field(default_factory=AdmissibleClass)


@dataclass
class RelaxationResult:
    minimizer: Section
    energy: float
    objective: float
    h2: np.ndarray
    trace: list
    certificate: RelaxedSlopeCertificate
    converged: bool
    seed: int
    contraction: list

    @property
    def h2_field(self):
        return WeightedField(self.minimizer.base, self.h2)


def admissibility_violation(psi, cls, scale=1.0, tol=1e-9):
    """Reason ``psi`` is outside the class, or ``None`` when admissible."""
    if not isinstance(psi, Section):
        return "not a section"
    if psi.scale != scale:
        return f"scale {psi.scale} differs from {scale}"
    res = fiber_residuals(psi.quotient, psi.base, psi.values, psi.scale).max()
    if res > psi.quotient.tol * max(1.0, float(np.abs(psi.base.points).max()) * abs(scale)):
        return f"off fiber (residual {res:.3e})"
    sup = psi.sup_norm()
    if sup > cls.bound_radius + tol:
        return f"sup norm {sup:.6g} exceeds bound {cls.bound_radius}"
    if psi.n >= 2 and c_min(psi) > cls.c + tol:
        return "fiber inequality fails"
    return None


def cheeger_energy(phi, eps, variant="a"):
    """``sum_i m_i S(y_i)^2`` at radius ``eps``.

    Raises
    ------
    EmptyBall
        If some point has no other base point within ``eps``.
    """
    vals = slope_field(phi, [eps], slope_variant(variant)).values[:, 0]
    empty = np.flatnonzero(np.isnan(vals))
    if empty.size:
        raise EmptyBall(empty[0], eps)
    return float(np.sum(phi.base.weights * vals ** 2))


class _Objective:
    """Fast energy / proximal objective over lift coordinates of one section."""

    def __init__(self, phi, cls, eps, variant):
        Q, base = phi.quotient, phi.base
        self.phi = phi
        self.Q = Q
        self.base = base
        self.scale = phi.scale
        self.k = Q.s - Q.m
        self.offset = phi.scale * base.points @ Q.pinv.T
        self.N = Q.null_basis
        self.w = base.weights
        self.R = cls.bound_radius
        self.variant = slope_variant(variant)
        # for sections the point-to-fiber distance is the fiber gap
        den = Q.distances_to_fibers(self.offset, base.points, phi.scale)
        np.fill_diagonal(den, 1.0)
        self.den = den
        D = base.distance_matrix(Q)
        self.ball = ball_mask(D, eps)
        n = base.n
        off = ~np.eye(n, dtype=bool)
        if self.variant == "asymptotic":
            mask = self.ball[:, :, None] & self.ball[:, None, :] & off[None]
        else:
            mask = np.zeros((n, n, n), dtype=bool)
            for z in range(n):
                mask[z, :, z] = self.ball[z] & off[z]
        flat = mask.reshape(n, n * n)
        counts = flat.sum(axis=1)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise EmptyBall(empty[0], eps)
        # pair indices grouped by centre, reduced with one reduceat call
        self.pair_index = np.flatnonzero(flat.ravel()) % (n * n)
        self.starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        self._pa = (self.pair_index // n).astype(np.int64)
        self._pb = (self.pair_index % n).astype(np.int64)
        self._bounds = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._P = np.ascontiguousarray(phi.values)
        self._N = np.ascontiguousarray(self.N)
        self._offset = np.ascontiguousarray(self.offset)
        self._den = np.ascontiguousarray(den)
        self._norm = NORM_CODES[Q.norm]
        self.u_phi = phi.lift_coordinates()
        self.clusters = _cluster_directions(D, self.k)
        self._u_phi = np.ascontiguousarray(self.u_phi.ravel())

    def values(self, u):
        return self.offset + u.reshape(-1, self.k) @ self.N.T

    def slopes(self, X):
        R = pair_distances(X, self.Q.norm) / self.den
        return np.maximum.reduceat(R.ravel()[self.pair_index], self.starts)

    def energy(self, X):
        s = self.slopes(X)
        return float(np.sum(self.w * s * s))

    def distance(self, X):
        diff = X - self.phi.values
        comp = np.sqrt((diff * diff * self.w[:, None]).sum(axis=0))
        return float(comp.sum())

    def retract(self, u):
        """Pull each point back along the segment to ``phi_i`` into the box."""
        return retract(np.ascontiguousarray(u, dtype=float), self._u_phi, self._offset,
                       self._N, self._P, self.R)

    def proximal(self, tau):
        args = (self._offset, self._N, self._den, self._pa, self._pb, self._bounds,
                self.w, self._P, 1.0 / tau, self._norm)

        def f(u):
            return prox_value(np.ascontiguousarray(u, dtype=float), *args)
        return f


def _cluster_directions(D, k):
    # move every point of a metric ball by the same lift vector; this only
    # stretches the pairs crossing the ball boundary
    n = D.shape[0]
    dirs = []
    for z in range(n):
        order = np.argsort(D[z], kind="stable")
        for size in range(2, n):
            members = order[:size]
            for t in range(k):
                v = np.zeros((n, k))
                v[members, t] = 1.0 / np.sqrt(size)
                dirs.append(v.ravel())
    if not dirs:
        return np.zeros((0, n * k))
    return np.unique(np.round(np.array(dirs), 12), axis=0)


def pattern_search(f, x0, step, rng, max_iters, step_tol, project=None, window=60, lag=4,
                   extra=None):
    """Opportunistic pattern search with Hooke-Jeeves extrapolation.

    Each iteration first tries the pattern move ``x + (x - x_lag)`` along
    the recent net displacement, then polls, cycling through shuffled
    coordinate directions, a fresh random orthonormal basis (so kinks of a
    max-type objective do not trap the search) and, when given, the rows of
    ``extra`` (a random subset of at most ``2 d``).  The step
    doubles after a successful poll and halves after a failed one.
    Converged when the step drops below ``step_tol`` or the objective gains
    less than ``step_tol * max(1, |f|)`` over ``window`` iterations.

    Returns
    -------
    x, fx, trace, converged
    """
    project = project or (lambda z: z)
    x = project(np.asarray(x0, dtype=float).copy())
    fx = f(x)
    trace = [fx]
    d = x.size
    if d == 0:
        return x, fx, trace, True
    history = [x]
    converged = False
    for it in range(max_iters):
        if len(history) > lag:
            jump = x - history[-lag - 1]
            if np.any(jump):
                y = project(x + jump)
                fy = f(y)
                if fy < fx:
                    x, fx = y, fy
        phase = it % (3 if extra is not None and len(extra) else 2)
        if phase == 0:
            basis = np.eye(d)[rng.permutation(d)]
        elif phase == 2:
            basis = extra[rng.permutation(len(extra))[:2 * d]]
        else:
            basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
            basis = basis.T
        improved = False
        for v in basis:
            for sign in (1.0, -1.0):
                y = project(x + sign * step * v)
                fy = f(y)
                if fy < fx:
                    x, fx, improved = y, fy, True
                    break
            if improved:
                break
        trace.append(fx)
        history.append(x)
        if len(history) > lag + 1:
            history.pop(0)
        step = 2.0 * step if improved else 0.5 * step
        if step < step_tol:
            converged = True
            break
        if it >= window and trace[-window - 1] - fx <= step_tol * max(1.0, abs(fx)):
            converged = True
            break
    return x, fx, trace, converged


def _solve_one(obj, tau, u0, step, seed, params):
    rng = np.random.default_rng(seed)
    return pattern_search(obj.proximal(tau), u0, step, rng, params.max_iters,
                          params.tol, obj.retract, extra=obj.clusters)


def relax_energy(phi, cls, params, variant="a"):
    """Proximal relaxation of the Cheeger energy around ``phi``.

    Multistart pattern search at ``params.tau`` (restart 0 starts at
    ``phi``, the others at seeded random lifts inside the box).  The
    approximating sequence contracts the minimiser onto ``phi`` by factors
    ``params.shrink ** h`` until it is within ``params.tol`` of ``phi``.

    Raises
    ------
    NotAdmissible
        If ``phi`` is outside ``cls``.
    """
    why = admissibility_violation(phi, cls, phi.scale)
    if why:
        raise NotAdmissible(why)
    obj = _Objective(phi, cls, params.eps, variant)
    u_phi = obj.u_phi.ravel()
    step0 = 0.25 * cls.bound_radius
    seeds = np.random.SeedSequence(params.seed).spawn(params.restarts)
    starts = [u_phi]
    for ss in seeds[1:]:
        r = np.random.default_rng(ss)
        starts.append(r.uniform(-cls.bound_radius, cls.bound_radius, size=u_phi.size))

    def run(idx):
        return _solve_one(obj, params.tau, starts[idx], step0, seeds[idx], params)

    workers = min(max_threads(), params.restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, range(params.restarts)))
    else:
        runs = [run(i) for i in range(params.restarts)]
    best = min(range(len(runs)), key=lambda i: (runs[i][1], i))
    u_best, f_best, trace, converged = runs[best]

    X_best = obj.values(u_best)
    minimizer = lift_section(phi.quotient, phi.base, u_best.reshape(-1, obj.k), phi.scale)
    h2 = obj.slopes(X_best)
    energy = float(np.sum(obj.w * h2 * h2))

    # contract the minimiser onto phi along the segment; the box is convex
    # so every term stays admissible and the sequence converges to phi
    sequence, contraction = [minimizer], [1.0]
    gap = u_best - u_phi
    t_h = 1.0
    for h in range(params.continuation):
        if obj.distance(obj.values(u_phi + t_h * gap)) <= params.tol:
            break
        t_h *= params.shrink
        sequence.append(lift_section(phi.quotient, phi.base,
                                     (u_phi + t_h * gap).reshape(-1, obj.k), phi.scale))
        contraction.append(t_h)

    tail = sequence[-1]
    G = obj.slopes(tail.values)
    H1 = np.minimum(G, obj.slopes(phi.values))
    cert = RelaxedSlopeCertificate(phi, G, H1, G.copy(), sequence, 2.0, params.eps,
                                   variant, cls)
    return RelaxationResult(minimizer, energy, float(f_best), h2, trace, cert,
                            bool(converged), int(best), contraction)


def constant_certificate(phi, eps, cls=None, q=2.0, variant="a"):
    """Certificate from the constant sequence: ``G = H1 = H2 = S(phi)``."""
    S = slope_field(phi, [eps], slope_variant(variant)).values[:, 0]
    if np.any(np.isnan(S)):
        raise EmptyBall(np.flatnonzero(np.isnan(S))[0], eps)
    return RelaxedSlopeCertificate(phi, S.copy(), S.copy(), S.copy(), [phi], q, eps,
                                   variant, cls or AdmissibleClass(bound_radius=max(phi.sup_norm(), 1.0)))


def verify_certificate(cert, tol=1e-8):
    """Check the three relaxed-slope conditions on a finite base.

    On a finite base weak and strong L^q convergence coincide, so the
    sequence condition is checked as: the last term is within ``tol`` of
    ``phi`` and its slope field is within ``tol`` of ``H2`` (sum norm).
    Failures are reported, never raised.
    """
    phi = cert.phi
    base = phi.base
    G, H1, H2 = (np.asarray(a, dtype=float) for a in (cert.G, cert.H1, cert.H2))
    margins = []

    def add(name, value, **wit):
        margins.append((float(value), name, wit))

    i = int(np.argmin(H1))
    add("H1>=0", H1[i], point=i)
    i = int(np.argmin(G - H1))
    add("H1<=G", (G - H1)[i], point=i)
    i = int(np.argmin(H2 - H1))
    add("H1<=H2", (H2 - H1)[i], point=i)
    if not cert.sequence:
        add("sequence", -np.inf, reason="empty sequence")
    else:
        for h, term in enumerate(cert.sequence):
            if not same_base(term, phi):
                add("admissible", -np.inf, term=h, reason="mixed bases")
                continue
            why = admissibility_violation(term, cert.admissible, phi.scale)
            if why:
                add("admissible", -np.inf, term=h, reason=why)
        last = cert.sequence[-1]
        if same_base(last, phi):
            dist = lq_distance(WeightedField.of(last), WeightedField.of(phi), cert.q, "sum")
            add("phi_h->phi", -dist, term=len(cert.sequence) - 1)
            S = slope_field(last, [cert.eps], slope_variant(cert.variant)).values[:, 0]
            if np.any(np.isnan(S)):
                add("slopes->H2", -np.inf, reason="empty ball")
            else:
                gap = lq_distance(WeightedField(base, S), WeightedField(base, H2), cert.q, "sum")
                add("slopes->H2", -gap, term=len(cert.sequence) - 1)
    worst = min(margins, key=lambda t: t[0])
    witness = {"condition": worst[1], **worst[2]}
    return TheoremReport.from_margin("relaxed_slope_certificate", worst[0], witness, tol,
                                     conditions={name: v for v, name, _ in margins})


def _pad(seq, length):
    return list(seq) + [seq[-1]] * (length - len(seq))


def lattice_min(cert1, cert2):
    """Certificate for ``min(G1, G2)`` built by the case-split rule.

    ``H1`` follows whichever certificate attains the minimum; the sequence
    is the midpoint of the two sequences (admissible by convexity) and
    ``H2`` is the slope field of its last term.
    """
    _same_phi(cert1, cert2)
    G = np.minimum(cert1.G, cert2.G)
    H1 = np.where(cert1.G <= cert2.G, cert1.H1, cert2.H1)
    L = max(len(cert1.sequence), len(cert2.sequence))
    seq = [combine_sections(0.5, a, 0.5, b)
           for a, b in zip(_pad(cert1.sequence, L), _pad(cert2.sequence, L))]
    H2 = slope_field(seq[-1], [cert1.eps], slope_variant(cert1.variant)).values[:, 0]
    cls = AdmissibleClass(max(cert1.admissible.c, cert2.admissible.c),
                          max(cert1.admissible.bound_radius, cert2.admissible.bound_radius))
    return RelaxedSlopeCertificate(cert1.phi, G, H1, H2, seq, cert1.q, cert1.eps,
                                   cert1.variant, cls)


def _same_phi(a, b):
    if not (same_base(a.phi, b.phi) and np.array_equal(a.phi.values, b.phi.values)):
        raise MixedBases("certificates belong to different sections")
    if a.q != b.q or a.eps != b.eps or a.variant != b.variant:
        raise MixedBases("certificates use different exponents, radii or variants")


def minimal_relaxed_slope(certs, tol=1e-8):
    """Pointwise minimum of verified certificate fields.

    Raises
    ------
    EmptyInput
    UnverifiedCertificate
        If any certificate fails :func:`verify_certificate`.
    MinimalityViolated
        If the candidate exceeds the asymptotic constant of ``phi``.
    """
    certs = list(certs)
    if not certs:
        raise EmptyInput("no certificates given")
    for i, c in enumerate(certs):
        _same_phi(certs[0], c)
        rep = verify_certificate(c, tol)
        if not rep.passed:
            raise UnverifiedCertificate(f"certificate {i} fails: {rep.witness}")
    G = np.min(np.stack([np.asarray(c.G, dtype=float) for c in certs]), axis=0)
    first = certs[0]
    S = slope_field(first.phi, [first.eps], "asymptotic").values[:, 0]
    excess = G - S
    if np.nanmax(excess) > tol:
        i = int(np.nanargmax(excess))
        raise MinimalityViolated(f"candidate exceeds the asymptotic constant at point {i}")
    return WeightedField(first.phi.base, G)


def representation_check(phi, cls, params, variant="a", result=None):
    """Relaxed energy equals ``sum m H2^2`` and sits between ``sum m`` and ``E(phi)``.

    Pass a precomputed ``result`` to audit it instead of solving again.
    """
    if result is None:
        result = relax_energy(phi, cls, params, variant)
    w = phi.base.weights
    recomputed = float(np.sum(w * np.asarray(result.h2) ** 2))
    e_phi = cheeger_energy(phi, params.eps, variant)
    mass = float(w.sum())
    tol = params.tol
    margins = {
        "energy=sum m H2^2": -abs(result.energy - recomputed),
        "energy<=E(phi)": e_phi - result.energy,
        "energy>=sum m": result.energy - mass,
    }
    name = min(margins, key=margins.get)
    return TheoremReport.from_margin(
        "representation", margins[name], {"condition": name}, tol,
        energy=result.energy, integral=recomputed, energy_phi=e_phi, mass=mass)
