"""Library values against the oracle-frozen reference table."""

import importlib.util
import math
from pathlib import Path

import numpy as np
import pytest

from ilslab.cheeger import (
    AdmissibleClass,
    RelaxationParams,
    cheeger_energy,
    constant_certificate,
    relax_energy,
    verify_certificate,
)
from ilslab.fixtures import fixture_f1, fixture_product
from ilslab.functionals import (
    c_min,
    check_leibniz,
    check_product_bound,
    global_ils,
    slope_field,
)
from ilslab.lq import WeightedField, lq_norm
from ilslab.oracles import read_golden
from ilslab.quotient import SampledBase, build_quotient, fiber_distance, fiber_gap, project_to_fiber
from ilslab.sections import PlainField, combine_sections

GOLDEN = Path(__file__).parent / "golden"
TABLE = read_golden(GOLDEN / "derived.csv")
A10, A11 = build_quotient([[1.0, 0.0]]), build_quotient([[1.0, 1.0]])


def _library_values():
    f1 = fixture_f1()
    S = f1.sections
    out = {
        ("q_A11", "pinv_0"): A11.pinv[0, 0],
        ("fd_A10_x34_b1", "fiber_distance"): fiber_distance(A10, [3, 4], [1]),
        ("fd_A11_x00_b2", "fiber_distance"): fiber_distance(A11, [0, 0], [2]),
        ("gap_A10_0_5", "fiber_gap"): fiber_gap(A10, [0], [5]),
        ("gap_A10_0_5_l2", "fiber_gap"): fiber_gap(A10, [0], [5], 2.0),
        ("gap_A11_0_2", "fiber_gap"): fiber_gap(A11, [0], [2]),
        ("f1_graph", "ils"): global_ils(S["graph"])[0],
        ("f1_kink", "ils"): global_ils(S["kink"])[0],
        ("f1_kink", "asymptotic_mid_1.2"): slope_field(S["kink"], [1.2], "asymptotic").values[1, 0],
        ("f1_graph", "slope_1.5"): slope_field(S["graph"], [1.5], "local").values[1, 0],
        ("f1_graph", "c_min"): c_min(S["graph"]),
        ("plain_diag", "c_min"): c_min(PlainField(A10, SampledBase([[0.0], [1.0]]),
                                                  np.array([[1.0, 0.0], [3.0, 0.0]]))),
        ("f1_flat", "energy_a_1.5"): cheeger_energy(S["flat"], 1.5),
        ("f1_graph", "energy_a_1.5"): cheeger_energy(S["graph"], 1.5),
        ("f1_graph", "relaxed_energy_1.5"): relax_energy(
            S["graph"], AdmissibleClass(2.0, 10.0), RelaxationParams(eps=1.5)).energy,
    }
    for fid, ab in (("proj_A10_x34_b1", (A10, [3, 4], [1])), ("proj_A11_x00_b2", (A11, [0, 0], [2]))):
        p = project_to_fiber(*ab)
        out[(fid, "z0")], out[(fid, "z1")] = p[0], p[1]
    sched = [2.5, 1.5, 1.2]
    for fid, (a, b) in (("leibniz_1_1", (1.0, 1.0)), ("leibniz_3_m1", (3.0, -1.0))):
        rep = check_leibniz(S["graph"], S["flat"], a, b, 2.0, sched)
        eta = combine_sections(a, S["graph"], b, S["flat"])
        out[(fid, "value")] = global_ils(eta)[0]
        out[(fid, "margin")] = rep.worst_margin
    P = fixture_product()
    rep = check_product_bound(P.sections["one"], P.sections["one"], P.schedule)
    for key in ("M", "k", "lhs", "rhs"):
        out[("product_one", key)] = rep.details[key]
    B2 = SampledBase([[0.0], [1.0]])
    psi = WeightedField(B2, [[3.0, 4.0], [0.0, 0.0]])
    for v in ("sum", "max", "quad"):
        out[("lq_34_00", v)] = lq_norm(psi, 2.0, v)
    out[("lq_weighted", "sum")] = lq_norm(
        WeightedField(SampledBase([[0.0], [1.0]], [2.0, 1.0]), [[1.0, -1.0], [0.0, 3.0]]))
    out[("lq_shift", "sum")] = lq_norm(WeightedField(B2, [[1.0, 0.0], [1.0, 0.0]]))
    return out


LIB = _library_values()


def test_every_row_is_covered():
    assert set(TABLE) == set(LIB)


@pytest.mark.parametrize("key", sorted(TABLE), ids=lambda k: f"{k[0]}:{k[1]}")
def test_golden_value(key):
    want, tol = TABLE[key]
    assert abs(LIB[key] - want) <= tol, (key, LIB[key], want)


def test_golden_closed_forms():
    # sanity of the frozen table itself against hand arithmetic
    assert TABLE[("f1_graph", "ils")][0] == pytest.approx(math.sqrt(5), abs=1e-12)
    assert TABLE[("f1_kink", "ils")][0] == pytest.approx(math.sqrt(10), abs=1e-12)
    assert TABLE[("leibniz_3_m1", "margin")][0] == pytest.approx(math.sqrt(5) + 1 - math.sqrt(10),
                                                                 abs=1e-9)


def test_constant_sequence_certificate():
    # the slope itself, held constant along the trivial sequence, is a relaxed slope
    f1 = fixture_f1()
    for name, sec in f1.sections.items():
        cert = constant_certificate(sec, 1.5, f1.admissible)
        assert verify_certificate(cert).passed, name
        np.testing.assert_array_equal(cert.G, slope_field(sec, [1.5], "asymptotic").values[:, 0])


@pytest.mark.slow
def test_refreeze_matches(tmp_path):
    spec = importlib.util.spec_from_file_location("freeze", GOLDEN / "freeze.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    out = tmp_path / "derived.csv"
    from ilslab.oracles import write_golden
    write_golden(mod.golden_rows(), out)
    assert out.read_text() == (GOLDEN / "derived.csv").read_text()
