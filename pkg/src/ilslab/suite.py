"""Check suites over an instance and bit-stable report writers."""

import csv
import hashlib
import io
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .cheeger import (
    AdmissibleClass,
    RelaxationParams,
    admissibility_violation,
    cheeger_energy,
    constant_certificate,
    lattice_min,
    minimal_relaxed_slope,
    relax_energy,
    representation_check,
    verify_certificate,
)
from .exceptions import IlslabError
from .functionals import (
    TheoremReport,
    c_min,
    check_ball_monotonicity,
    check_chain,
    check_convexity,
    check_envelope_sandwich,
    check_fiber_identities,
    check_leibniz,
    check_product_bound,
    check_scaling_invariance,
    slope_field,
)
from .sections import fiber_residuals

SUITES = ("geometry", "theorems", "cheeger", "all")
LAMBDAS = (-10.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 10.0)
# same-sign pairs only: opposite signs can break the c/2 bound
COEFFICIENTS = ((1.0, 1.0), (0.5, 0.5), (0.25, 0.75), (2.0, 1.0))


@dataclass
class CheckResult:
    subject: str
    report: TheoremReport

    @property
    def passed(self):
        return self.report.passed


@dataclass
class SuiteReport:
    """Per-check verdicts plus a fingerprint; passes iff every check passes."""

    suite: str
    checks: list
    fingerprint: dict
    timing: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {
            "suite": self.suite,
            "passed": self.passed,
            "fingerprint": self.fingerprint,
            "checks": [
                {
                    "check": c.report.check_name,
                    "subject": c.subject,
                    "passed": c.report.passed,
                    "skipped": c.report.skipped,
                    "worst_margin": c.report.worst_margin,
                    "tolerance": c.report.tolerance,
                    "witness": c.report.witness,
                    "details": c.report.details,
                }
                for c in self.checks
            ],
        }


def _tol(default, override):
    return default if override is None else float(override)


def _unit_sections(inst):
    return {k: v for k, v in sorted(inst.sections.items()) if v.scale == 1.0}


def _geometry(inst, tol):
    Q, base = inst.quotient, inst.base
    out = []
    I = np.eye(Q.m)
    dev = max(float(np.abs(Q.A @ Q.pinv - I).max()),
              float(np.abs(Q.A @ Q.null_basis).max()),
              float(np.abs(Q.null_basis.T @ Q.null_basis - np.eye(Q.s - Q.m)).max()))
    out.append(CheckResult("quotient", TheoremReport.from_margin(
        "quotient_invariants", -dev, {}, _tol(Q.tol, tol))))
    G = base.distance_matrix(Q) if base.metric is None else None
    for name, sec in sorted(inst.sections.items()):
        res = fiber_residuals(Q, base, sec.values, sec.scale)
        out.append(CheckResult(name, TheoremReport.from_margin(
            "on_fiber", -float(res.max()), {"point": int(np.argmax(res))}, _tol(Q.tol * 10, tol))))
        # point-to-fiber distances of a section equal the fiber gaps
        D = Q.distances_to_fibers(sec.values, base.points, sec.scale)
        gaps = (abs(sec.scale) * G if G is not None else
                Q.distances_to_fibers(sec.scale * base.points @ Q.pinv.T, base.points, sec.scale))
        rel = np.abs(D - gaps) / np.maximum(gaps, 1e-300)
        np.fill_diagonal(rel, 0.0)
        i, j = np.unravel_index(np.argmax(rel), rel.shape)
        out.append(CheckResult(name, TheoremReport.from_margin(
            "base_point_independence", -float(rel[i, j]), {"pair": [int(i), int(j)]},
            _tol(1e-9, tol))))
        if sec.scale == 1.0:
            out.append(CheckResult(name, check_fiber_identities(Q, base, sec, LAMBDAS,
                                                                _tol(1e-9, tol))))
            cm = c_min(sec)
            out.append(CheckResult(name, TheoremReport.from_margin(
                "c_min_is_one", -abs(cm - 1.0), {}, _tol(1e-9, tol), c_min=cm)))
    if G is not None:
        asym = float(np.abs(G - G.T).max())
        out.append(CheckResult("base", TheoremReport.from_margin(
            "gap_symmetry", -asym, {}, _tol(0.0, tol))))
    return out


def _theorems(inst, c, tol):
    sched = inst.schedule
    if sched is None:
        raise IlslabError("the theorems suite needs a schedule")
    out = []
    secs = _unit_sections(inst)
    for name, sec in secs.items():
        for lam in (-3.0, 0.5, 2.0):
            out.append(CheckResult(name, check_scaling_invariance(sec, lam, _tol(1e-12, tol))))
        out.append(CheckResult(name, check_chain(sec, sched, _tol(1e-12, tol))))
        out.append(CheckResult(name, check_ball_monotonicity(sec, sched, _tol(1e-12, tol))))
        out.append(CheckResult(name, check_envelope_sandwich(sec, sched, tol=_tol(1e-12, tol))))
    for (n1, s1), (n2, s2) in itertools.combinations_with_replacement(secs.items(), 2):
        subject = f"{n1}+{n2}"
        for a, b in COEFFICIENTS:
            out.append(CheckResult(subject, check_leibniz(s1, s2, a, b, c, sched,
                                                          _tol(1e-10, tol))))
        out.append(CheckResult(subject, check_product_bound(s1, s2, sched, _tol(1e-10, tol))))
        out.append(CheckResult(subject, check_convexity(s1, s2, tol=_tol(1e-9, tol))))
    return out


def energy_radius(inst):
    """Smallest schedule radius at which every punctured ball is nonempty."""
    D = inst.base.distance_matrix(inst.quotient)
    nn = np.where(np.eye(inst.base.n, dtype=bool), np.inf, D).min(axis=1).max()
    ok = [r for r in inst.schedule.radii if r > nn]
    if not ok:
        raise IlslabError("no schedule radius gives every point a neighbour")
    return ok[-1]


def _cheeger(inst, seed, tol, params=None):
    if inst.schedule is None:
        raise IlslabError("the cheeger suite needs a schedule")
    cls = inst.admissible or AdmissibleClass()
    eps = energy_radius(inst)
    out = []
    for name, sec in _unit_sections(inst).items():
        why = admissibility_violation(sec, cls)
        if why:
            out.append(CheckResult(name, TheoremReport(
                "admissible", True, math.inf, {"reason": why}, 0.0, True)))
            continue
        e_a = cheeger_energy(sec, eps, "a")
        e_l = cheeger_energy(sec, eps, "ils")
        out.append(CheckResult(name, TheoremReport.from_margin(
            "energy_variants", e_a - e_l, {"radius": eps}, _tol(1e-12, tol),
            energy_a=e_a, energy_ils=e_l)))
        p = params or RelaxationParams(eps=eps, seed=seed)
        result = relax_energy(sec, cls, p)
        rep = representation_check(sec, cls, p, result=result)
        if tol is not None:
            rep = TheoremReport.from_margin(rep.check_name, rep.worst_margin, rep.witness,
                                            float(tol), **rep.details)
        rep.details["converged"] = result.converged
        out.append(CheckResult(name, rep))
        const = constant_certificate(sec, eps, cls)
        cert_tol = _tol(1e-8, tol)
        out.append(CheckResult(name + ":constant", verify_certificate(const, cert_tol)))
        out.append(CheckResult(name + ":relaxed", verify_certificate(result.certificate,
                                                                     cert_tol)))
        low = lattice_min(const, result.certificate)
        out.append(CheckResult(name + ":lattice", verify_certificate(low, cert_tol)))
        try:
            cand = minimal_relaxed_slope([const, result.certificate, low], cert_tol)
            S = slope_field(sec, [eps], "asymptotic").values[:, 0]
            m = float(np.min(S - cand.values))
            out.append(CheckResult(name, TheoremReport.from_margin(
                "minimal_slope<=asymptotic", m, {"point": int(np.argmin(S - cand.values))},
                cert_tol)))
        except IlslabError as exc:
            out.append(CheckResult(name, TheoremReport(
                "minimal_slope<=asymptotic", False, -math.inf, {"error": str(exc)}, cert_tol)))
    return out


def instance_digest(inst):
    from .io import dump_instance
    return hashlib.sha256(dump_instance(inst).encode()).hexdigest()


def run_suite(inst, suite="all", c=None, tol=None, seed=0, params=None):
    """Run the named check set; deterministic for a given seed.

    Parameters
    ----------
    c : float, optional
        Leibniz constant; defaults to the instance class (or 2).
    tol : float, optional
        Overrides every check's own tolerance.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    if c is None:
        c = inst.admissible.c if inst.admissible is not None else 2.0
    checks, timing = [], {}
    parts = ("geometry", "theorems", "cheeger") if suite == "all" else (suite,)
    for part in parts:
        t0 = time.perf_counter()
        if part == "geometry":
            checks += _geometry(inst, tol)
        elif part == "theorems":
            checks += _theorems(inst, c, tol)
        else:
            checks += _cheeger(inst, seed, tol, params)
        timing[part] = time.perf_counter() - t0
    fingerprint = {
        "version": __version__,
        "suite": suite,
        "seed": int(seed),
        "c": float(c),
        "tolerance_override": None if tol is None else float(tol),
        "instance_sha256": instance_digest(inst),
    }
    return SuiteReport(suite, checks, fingerprint, timing)


def _fmt_float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return "%.12e" % x


def to_json(obj, indent=0, step=2):
    """Deterministic JSON: sorted keys and every float as ``%.12e``."""
    pad, inner = " " * indent, " " * (indent + step)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        import json
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, step)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{to_json(str(k))}: {to_json(obj[k], indent + step, step)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [inner + to_json(v, indent + step, step) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def report_csv(report):
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["check", "subject", "passed", "skipped", "worst_margin", "tolerance", "witness"])
    for c in report.checks:
        r = c.report
        out.writerow([r.check_name, c.subject, int(r.passed), int(r.skipped),
                      _fmt_float(r.worst_margin).strip('"'), "%.12e" % r.tolerance,
                      to_json(r.witness).replace("\n", "").replace("  ", "")])
    return buf.getvalue()


def slope_field_csv(field_):
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["point"] + [f"eps={r:.12e}" for r in field_.radii])
    for i, row in enumerate(field_.values):
        out.writerow([i] + [_fmt_float(v).strip('"') for v in row])
    return buf.getvalue()


def write_report(report, fmt="json", path=None, include_timing=False):
    """Render (and optionally write) a report; identical inputs give identical bytes.

    Timing is left out unless ``include_timing`` is set, since it varies
    between runs.
    """
    if fmt == "json":
        doc = report.to_dict() if hasattr(report, "to_dict") else report
        if include_timing and getattr(report, "timing", None):
            doc = dict(doc, timing=report.timing)
        text = to_json(doc) + "\n"
    elif fmt == "csv":
        text = slope_field_csv(report) if hasattr(report, "radii") else report_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
