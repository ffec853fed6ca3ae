"""Small hand-checkable instances over the coordinate projection ``A = [[1, 0]]``."""

from .cheeger import AdmissibleClass
from .functionals import ScaleSchedule
from .io import Instance
from .quotient import SampledBase, build_quotient
from .sections import validate_section

F1_SECTIONS = {
    "flat": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
    "graph": [[0.0, 0.0], [1.0, 2.0], [2.0, 4.0]],
    "kink": [[0.0, 0.0], [1.0, 0.0], [2.0, 3.0]],
}
F1_RADII = (2.5, 1.5, 1.2)


def fixture_f1():
    """Three points ``b = 0, 1, 2`` with unit weights and three sections.

    ``flat`` is ``(y, 0)``, ``graph`` is ``(y, 2y)`` and ``kink`` bends
    upward at the last point.
    """
    Q = build_quotient([[1.0, 0.0]])
    base = SampledBase([[0.0], [1.0], [2.0]], [1.0, 1.0, 1.0])
    sections = {k: validate_section(Q, base, v) for k, v in F1_SECTIONS.items()}
    return Instance(Q, base, sections, {}, ScaleSchedule(F1_RADII), AdmissibleClass(2.0, 10.0))


def fixture_product():
    """Two points ``b = 1, 2`` carrying ``(y, 1)`` and ``(y, y)``."""
    Q = build_quotient([[1.0, 0.0]])
    base = SampledBase([[1.0], [2.0]])
    sections = {
        "one": validate_section(Q, base, [[1.0, 1.0], [2.0, 1.0]]),
        "diag": validate_section(Q, base, [[1.0, 1.0], [2.0, 2.0]]),
    }
    return Instance(Q, base, sections, {}, ScaleSchedule((2.0,)), AdmissibleClass(2.0, 10.0))
