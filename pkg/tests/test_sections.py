import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ilslab.exceptions import DegenerateScale, MixedBases, NotOnFiber, ZeroCoefficient
from ilslab.quotient import SampledBase, build_quotient
from ilslab.sections import (
    PlainField,
    combine_sections,
    convex_combination,
    hadamard_product,
    lift_section,
    scale_section,
    validate_section,
)


def test_validate_examples(line3):
    Q, base = line3
    validate_section(Q, base, [[0, 0], [1, 2], [2, 4]])
    with pytest.raises(NotOnFiber) as info:
        validate_section(Q, base, [[0, 0], [1.5, 2], [2, 4]])
    assert info.value.index == 1
    assert info.value.residual == pytest.approx(0.5)
    sec = validate_section(Q, base, [[0, 0], [2, 5], [4, 1]], 2.0)
    assert sec.scale == 2.0
    with pytest.raises(DegenerateScale):
        validate_section(Q, base, [[0, 0], [1, 2], [2, 4]], 0.0)


def test_lift_examples(line3):
    Q, base = line3
    sign = np.sign(Q.null_basis[1, 0])
    np.testing.assert_allclose(lift_section(Q, base, [0, 0, 0]).values, [[0, 0], [1, 0], [2, 0]])
    np.testing.assert_allclose(lift_section(Q, base, sign * np.array([0, 2, 4])).values,
                               [[0, 0], [1, 2], [2, 4]])
    Q2 = build_quotient([[1, 1]])
    base2 = SampledBase([[0.0], [2.0]])
    np.testing.assert_allclose(lift_section(Q2, base2, [0, 0]).values, [[0, 0], [1, 1]])


def test_combination_examples(line3):
    Q, base = line3
    flat = validate_section(Q, base, [[0, 0], [1, 0], [2, 0]])
    graph = validate_section(Q, base, [[0, 0], [1, 2], [2, 4]])
    eta = combine_sections(1, flat, 1, flat)
    np.testing.assert_allclose(eta.values, [[0, 0], [2, 0], [4, 0]])
    assert eta.scale == 2
    with pytest.raises(DegenerateScale):
        combine_sections(1, flat, -1, graph)
    with pytest.raises(ZeroCoefficient):
        combine_sections(0, flat, 1, graph)
    eta = combine_sections(3, graph, -1, flat)
    np.testing.assert_allclose(eta.values, [[0, 0], [2, 6], [4, 12]])
    assert eta.scale == 2


def test_scaling_examples(line3):
    Q, base = line3
    flat = validate_section(Q, base, [[0, 0], [1, 0], [2, 0]])
    graph = validate_section(Q, base, [[0, 0], [1, 2], [2, 4]])
    np.testing.assert_allclose(scale_section(2, flat).values, [[0, 0], [2, 0], [4, 0]])
    neg = scale_section(-1, graph)
    assert neg.scale == -1
    np.testing.assert_allclose(neg.values, -graph.values)
    with pytest.raises(DegenerateScale):
        scale_section(0, graph)


def test_hadamard_examples(product_fixture):
    one, diag = product_fixture.sections["one"], product_fixture.sections["diag"]
    p = hadamard_product(one, one)
    assert isinstance(p, PlainField)
    np.testing.assert_allclose(p.values, [[1, 1], [4, 1]])
    np.testing.assert_allclose(hadamard_product(one, diag).values, [[1, 1], [4, 2]])


def test_mixed_bases_rejected(line3):
    Q, base = line3
    other = SampledBase([[0.0], [1.0], [3.0]])
    a = lift_section(Q, base, [0, 0, 0])
    b = lift_section(Q, other, [0, 0, 0])
    with pytest.raises(MixedBases):
        combine_sections(1, a, 1, b)


def test_convex_endpoints_are_inputs(line3):
    Q, base = line3
    a = lift_section(Q, base, [0, 1, 2])
    b = lift_section(Q, base, [3, 1, 0])
    assert convex_combination(1.0, a, b) is a
    assert convex_combination(0.0, a, b) is b


seeds = st.integers(0, 10_000)


def _random_pair(seed):
    rng = np.random.default_rng(seed)
    s = int(rng.integers(2, 6))
    m = int(rng.integers(1, s))
    n = int(rng.integers(2, 8))
    Q = build_quotient(rng.standard_normal((m, s)))
    base = SampledBase(rng.standard_normal((n, m)))
    u1, u2 = rng.standard_normal((2, n, s - m))
    return Q, base, lift_section(Q, base, u1), lift_section(Q, base, u2), rng


@given(seeds)
def test_lift_round_trip(seed):
    Q, base, a, _, _ = _random_pair(seed)
    again = lift_section(Q, base, a.lift_coordinates())
    np.testing.assert_allclose(again.values, a.values, atol=1e-12)


@given(seeds, st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3),
       st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
def test_combination_closure(seed, alpha, beta):
    Q, base, a, b, _ = _random_pair(seed)
    if abs(alpha + beta) < 1e-3:
        return
    eta = combine_sections(alpha, a, beta, b)
    validate_section(Q, base, eta.values, alpha + beta)


@given(seeds, st.floats(0, 1))
def test_convex_combinations_stay_sections(seed, t):
    Q, base, a, b, _ = _random_pair(seed)
    validate_section(Q, base, convex_combination(t, a, b).values, 1.0)
