import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ilslab.exceptions import AdmissibilityViolated, DegenerateScale, TooFewPoints
from ilslab.functionals import (
    ScaleSchedule,
    c_min,
    check_ball_monotonicity,
    check_chain,
    check_convexity,
    check_envelope_sandwich,
    check_fiber_identities,
    check_leibniz,
    check_product_bound,
    check_scaling_invariance,
    envelope_at_scale,
    global_ils,
    product_constants,
    slope_field,
)
from ilslab.exceptions import BadSchedule
from ilslab.quotient import SampledBase, build_quotient
from ilslab.sections import PlainField, lift_section, validate_section

SQ5, SQ10 = np.sqrt(5.0), np.sqrt(10.0)


def test_schedule_validation():
    ScaleSchedule((2.0, 1.0))
    for bad in [(), (1.0, 1.0), (1.0, 2.0), (1.0, -1.0)]:
        with pytest.raises(BadSchedule):
            ScaleSchedule(bad)


def test_global_ils_examples(f1):
    assert global_ils(f1.sections["flat"])[0] == pytest.approx(1.0, abs=1e-15)
    assert global_ils(f1.sections["graph"])[0] == pytest.approx(SQ5, abs=1e-12)
    value, pair = global_ils(f1.sections["kink"])
    assert value == pytest.approx(SQ10, abs=1e-12)
    assert pair == (1, 2)


def test_global_ils_needs_two_points():
    Q = build_quotient([[1, 0]])
    sec = validate_section(Q, SampledBase([[0.0]]), [[0.0, 1.0]])
    with pytest.raises(TooFewPoints):
        global_ils(sec)


@pytest.mark.parametrize("variant", ["local", "asymptotic"])
def test_graph_slopes_constant(f1, variant):
    field = slope_field(f1.sections["graph"], [1.5], variant)
    np.testing.assert_allclose(field.values[:, 0], SQ5, atol=1e-12)


def test_flat_slopes_are_one(f1):
    field = slope_field(f1.sections["flat"], f1.schedule, "asymptotic")
    np.testing.assert_allclose(field.values, 1.0, atol=1e-15)


def test_kink_asymptotic_middle(f1):
    field = slope_field(f1.sections["kink"], [1.2], "asymptotic")
    assert field.values[1, 0] == pytest.approx(SQ10, abs=1e-12)
    assert sorted(field.witnesses[1, 0]) == [1, 2]


def test_empty_ball_sentinel(f1):
    field = slope_field(f1.sections["graph"], [0.5], "local")
    assert np.all(field.empty)


def test_envelope_examples(f1):
    D = f1.base.distance_matrix(f1.quotient)
    vals = np.array([1.0, 3.0, 2.0])
    assert envelope_at_scale(vals, D, 1.0 + 1e-9, "upper")[1] == 3.0
    assert envelope_at_scale(vals, D, 1.0 + 1e-9, "lower")[0] == 1.0
    np.testing.assert_array_equal(envelope_at_scale(vals, D, 0.5, "upper"), vals)


def test_c_min_examples(f1):
    for sec in f1.sections.values():
        assert c_min(sec) == pytest.approx(1.0, abs=1e-9)
    Q = build_quotient([[1, 0]])
    plain = PlainField(Q, SampledBase([[0.0], [1.0]]), np.array([[1.0, 0.0], [3.0, 0.0]]))
    assert c_min(plain) == pytest.approx(3.0)


def test_product_constants_examples(product_fixture):
    one, diag = product_fixture.sections["one"], product_fixture.sections["diag"]
    pc = product_constants(one, one)
    assert (pc.M, pc.k) == (2.0, 1.0)
    pc = product_constants(one, diag)
    assert (pc.M, pc.k) == (2.0, 1.0)


def test_product_constants_infinite_k():
    # the product at point 1 lands on the fiber of point 0
    Q = build_quotient([[1, 0]])
    base = SampledBase([[1.0], [-1.0]])
    phi = validate_section(Q, base, [[1.0, 0.0], [-1.0, 0.0]])
    pc = product_constants(phi, phi)
    assert not pc.finite
    assert pc.witness == (1, 0)
    assert check_product_bound(phi, phi, [3.0]).skipped


def test_product_bound_fixture(product_fixture):
    one = product_fixture.sections["one"]
    rep = check_product_bound(one, one, product_fixture.schedule)
    assert rep.passed
    assert rep.details["lhs"] == 3.0
    assert rep.details["rhs"] == 4.0


def test_scaling_examples(f1):
    assert check_scaling_invariance(f1.sections["graph"], 2.0).passed
    assert check_scaling_invariance(f1.sections["kink"], -3.0).passed
    with pytest.raises(DegenerateScale):
        check_scaling_invariance(f1.sections["graph"], 0.0)


def test_fiber_identity_examples():
    Q = build_quotient([[1, 0]])
    base = SampledBase([[0.0], [1.0]])
    phi = validate_section(Q, base, [[0.0, 1.0], [1.0, -2.0]])
    assert check_fiber_identities(Q, base, phi, [2.0]).passed
    assert check_fiber_identities(Q, base, phi, [-0.5]).passed


def test_leibniz_fixture_margins(f1):
    graph, flat = f1.sections["graph"], f1.sections["flat"]
    rep = check_leibniz(graph, flat, 1, 1, 2.0, [1.5])
    assert rep.passed
    assert rep.worst_margin == pytest.approx(SQ5 + 1 - np.sqrt(2), abs=1e-6)
    rep = check_leibniz(graph, flat, 3, -1, 2.0, [1.5])
    assert rep.passed
    assert rep.worst_margin == pytest.approx(0.074, abs=1e-3)
    assert rep.details["value"] == pytest.approx(SQ10)
    assert check_leibniz(flat, flat, 1, 1, 2.0, [1.5]).passed


def test_leibniz_rejects_small_c(f1):
    with pytest.raises(AdmissibilityViolated):
        check_leibniz(f1.sections["graph"], f1.sections["flat"], 1, 1, 0.5, [1.5])


def test_leibniz_can_fail_below_c_two(f1):
    # with c = 1 the opposite-sign combination exceeds the bound: sqrt(10) > (sqrt(5)+1)/2
    rep = check_leibniz(f1.sections["graph"], f1.sections["flat"], 3, -1, 1.0, [1.5])
    assert not rep.passed


def test_convexity_examples(f1):
    graph, flat = f1.sections["graph"], f1.sections["flat"]
    assert check_convexity(graph, flat, [0.5]).passed
    assert check_convexity(graph, flat, [0.0]).passed
    assert check_convexity(graph, flat, [1.0]).passed


def test_fixture_checks(f1):
    for sec in f1.sections.values():
        assert check_chain(sec, f1.schedule).passed
        assert check_ball_monotonicity(sec, f1.schedule).passed
        assert check_envelope_sandwich(sec, f1.schedule).passed


def _random_section(seed, norm="euclidean"):
    rng = np.random.default_rng(seed)
    s = int(rng.integers(2, 5))
    m = int(rng.integers(1, s))
    n = int(rng.integers(3, 9))
    Q = build_quotient(rng.standard_normal((m, s)), norm)
    base = SampledBase(rng.uniform(-1, 1, (n, m)))
    u = rng.standard_normal((n, s - m))
    v = rng.standard_normal((n, s - m))
    D = base.distance_matrix(Q)
    off = D[~np.eye(n, dtype=bool)]
    radii = tuple(np.quantile(off, [0.9, 0.5, 0.2]) * np.array([1.0, 1.0, 1.0]))
    radii = tuple(sorted(set(radii), reverse=True))
    return lift_section(Q, base, u), lift_section(Q, base, v), ScaleSchedule(radii)


seeds = st.integers(0, 100_000)


@given(seeds, st.sampled_from(["euclidean", "l1", "linf"]))
def test_chain_property(seed, norm):
    phi, _, sched = _random_section(seed, norm)
    assert check_chain(phi, sched).passed


@given(seeds)
def test_monotone_in_radius(seed):
    phi, _, sched = _random_section(seed)
    for variant in ("local", "asymptotic"):
        vals = slope_field(phi, sched, variant).values
        # larger ball, larger sup (radii are decreasing along axis 1)
        diff = vals[:, :-1] - vals[:, 1:]
        assert np.all(np.isnan(diff) | (diff >= -1e-12))


@given(seeds)
def test_ball_and_envelope_properties(seed):
    phi, _, sched = _random_section(seed)
    assert check_ball_monotonicity(phi, sched).passed
    assert check_envelope_sandwich(phi, sched).passed


@given(seeds, st.sampled_from([-10.0, -0.5, 0.5, 2.0]))
def test_scaling_property(seed, lam):
    phi, _, _ = _random_section(seed)
    assert check_scaling_invariance(phi, lam).passed


@given(seeds, st.floats(0.05, 20), st.floats(0.05, 20), st.booleans())
def test_leibniz_property_same_sign(seed, alpha, beta, negate):
    phi, psi, sched = _random_section(seed)
    sign = -1.0 if negate else 1.0
    assert check_leibniz(phi, psi, sign * alpha, sign * beta, 2.0, sched).passed


def test_leibniz_fails_for_opposite_signs(f1):
    # 5 (y, 2y) - 4 (y, 0) = (y, 10y): slope sqrt(101) against a bound of sqrt(5) + 1
    rep = check_leibniz(f1.sections["graph"], f1.sections["flat"], 5, -4, 2.0, [1.5])
    assert not rep.passed
    assert rep.details["value"] == pytest.approx(np.sqrt(101))
    assert rep.details["bound"] == pytest.approx(np.sqrt(5) + 1)


@given(seeds)
def test_leibniz_opposite_sign_per_pair_bound(seed):
    # what does hold for any signs: S(eta) <= (|a| S(phi) + |b| S(psi)) / |a + b|
    phi, psi, sched = _random_section(seed)
    a, b = 3.0, -1.0
    c = 2.0 * (abs(a) + abs(b)) / abs(a + b)
    assert check_leibniz(phi, psi, a, b, c, sched).passed


@given(seeds)
def test_product_property(seed):
    phi, psi, sched = _random_section(seed)
    assert check_product_bound(phi, psi, sched).passed


@given(seeds)
def test_convexity_property(seed):
    phi, psi, _ = _random_section(seed)
    assert check_convexity(phi, psi).passed
