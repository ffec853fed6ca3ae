"""Command line: ``ilslab gen | analyze | check | cheeger | norms``.

Exit codes: 0 success, 1 a check suite failed, 2 bad input.
"""

import sys
from pathlib import Path

import click

from . import __version__
from .cheeger import (
    AdmissibleClass,
    RelaxationParams,
    cheeger_energy,
    relax_energy,
    verify_certificate,
)
from .exceptions import IlslabError
from .functionals import ScaleSchedule, global_ils, slope_field
from .io import dump_instance, generate_instance, load_instance
from .lq import NORM_VARIANTS, WeightedField, component_norms, lq_norm
from .suite import SUITES, energy_radius, run_suite, slope_field_csv, to_json, write_report


class InputError(click.ClickException):
    exit_code = 2


def _load(path):
    try:
        return load_instance(path)
    except IlslabError as exc:
        raise InputError(str(exc)) from exc


def _pick(mapping, name, what):
    if name not in mapping:
        raise InputError(f"no {what} named {name!r}; have {sorted(mapping)}")
    return mapping[name]


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


@click.group()
@click.version_option(version=__version__, prog_name="ilslab")
def main():
    """Intrinsic Lipschitz functionals and Cheeger relaxation on sampled bases."""


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dims", required=True, help="s,m,n")
@click.option("--out", type=click.Path(dir_okay=False), help="write here instead of stdout")
def gen(seed, dims, out):
    """Generate a random well-conditioned instance."""
    parts = dims.split(",")
    if len(parts) != 3:
        raise InputError("--dims takes s,m,n")
    try:
        s, m, n = (int(p) for p in parts)
        inst = generate_instance(s, m, n, seed=seed)
    except (ValueError, IlslabError) as exc:
        raise InputError(str(exc)) from exc
    _emit(dump_instance(inst), out)


@main.command()
@click.option("--instance", "path", required=True, type=click.Path(dir_okay=False))
@click.option("--section", required=True)
@click.option("--scales", help="comma-separated radii; default: the instance schedule")
@click.option("--out", type=click.Path(dir_okay=False),
              help="report path; a .csv suffix writes the asymptotic field as a table")
def analyze(path, section, scales, out):
    """Global constant and slope fields of one section."""
    inst = _load(path)
    sec = _pick(inst.sections, section, "section")
    try:
        sched = ScaleSchedule(_floats(scales)) if scales else inst.schedule
    except IlslabError as exc:
        raise InputError(str(exc)) from exc
    if sched is None:
        raise InputError("no --scales given and the instance has no schedule")
    ils, pair = global_ils(sec)
    loc = slope_field(sec, sched, "local")
    asy = slope_field(sec, sched, "asymptotic")
    if out and out.endswith(".csv"):
        _emit(slope_field_csv(asy), out)
        return
    doc = {"section": section, "ils": ils, "ils_pair": list(pair), "radii": list(sched.radii),
           "local": loc.values, "asymptotic": asy.values,
           "local_witness": loc.witnesses, "asymptotic_witness": asy.witnesses}
    _emit(to_json(doc) + "\n", out)


@main.command()
@click.option("--instance", "path", required=True, type=click.Path(dir_okay=False))
@click.option("--suite", type=click.Choice(SUITES), default="all", show_default=True)
@click.option("--c", "c", type=float, help="Leibniz constant; default from the instance class")
@click.option("--tol", type=float, help="override every check's own tolerance")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="JSON report path")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="CSV report path")
def check(path, suite, c, tol, seed, out, csv_path):
    """Run a check suite; exits 1 if any check fails."""
    inst = _load(path)
    try:
        report = run_suite(inst, suite, c=c, tol=tol, seed=seed)
    except IlslabError as exc:
        raise InputError(str(exc)) from exc
    if out:
        write_report(report, "json", out)
    if csv_path:
        write_report(report, "csv", csv_path)
    for item in report.checks:
        click.echo(f"{item.report.line()} [{item.subject}]")
    total = sum(report.timing.values())
    click.echo(f"{'PASS' if report.passed else 'FAIL'}: {len(report.checks)} checks, "
               f"{len(report.failures)} failed ({total:.2f}s)")
    sys.exit(0 if report.passed else 1)


@main.command()
@click.option("--instance", "path", required=True, type=click.Path(dir_okay=False))
@click.option("--section", required=True)
@click.option("--eps", type=float, help="ball radius; default: smallest usable schedule radius")
@click.option("--tau", type=float, default=1e6, show_default=True)
@click.option("--restarts", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--variant", type=click.Choice(["a", "ils"]), default="a", show_default=True)
@click.option("--max-iters", type=int, default=4000, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def cheeger(path, section, eps, tau, restarts, seed, variant, max_iters, out):
    """Relax the Cheeger energy of a section and certify the result."""
    inst = _load(path)
    sec = _pick(inst.sections, section, "section")
    cls = inst.admissible or AdmissibleClass()
    try:
        if eps is None:
            eps = energy_radius(inst)
        params = RelaxationParams(eps=eps, tau=tau, restarts=restarts, seed=seed,
                                  max_iters=max_iters)
        res = relax_energy(sec, cls, params, variant)
        e_phi = cheeger_energy(sec, eps, variant)
    except IlslabError as exc:
        raise InputError(str(exc)) from exc
    cert = verify_certificate(res.certificate)
    doc = {
        "section": section, "variant": variant, "eps": eps, "tau": tau, "seed": seed,
        "energy": res.energy, "energy_phi": e_phi, "mass": float(inst.base.weights.sum()),
        "objective": res.objective, "converged": res.converged, "best_restart": res.seed,
        "iterations": len(res.trace) - 1, "h2": res.h2,
        "minimizer": res.minimizer.values, "certificate_passed": cert.passed,
        "certificate_margin": cert.worst_margin,
    }
    _emit(to_json(doc) + "\n", out)


@main.command()
@click.option("--instance", "path", required=True, type=click.Path(dir_okay=False))
@click.option("--field", "name", required=True, help="a section or plain field name")
@click.option("--q", type=float, default=2.0, show_default=True)
@click.option("--variant", type=click.Choice(NORM_VARIANTS), default="sum", show_default=True)
def norms(path, name, q, variant):
    """Weighted L^q norm of a field."""
    inst = _load(path)
    try:
        f = inst.field_or_section(name)
        psi = WeightedField.of(f)
        doc = {"field": name, "q": q, "variant": variant,
               "components": component_norms(psi, q), "value": lq_norm(psi, q, variant)}
    except (KeyError, IlslabError) as exc:
        raise InputError(str(exc)) from exc
    click.echo(to_json(doc))


if __name__ == "__main__":
    main()
