import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilslab.exceptions import BadDims, ParseError, ValidationError
from ilslab.io import dump_instance, generate_instance, instance_from_dict, load_instance

MINIMAL = {
    "quotient": {"s": 2, "m": 1, "A": [[1, 0]], "norm": "euclidean"},
    "base": {"points": [[0], [1], [2]], "metric": "induced", "weights": [1, 1, 1]},
    "sections": {"phi": {"values": [[0, 0], [1, 2], [2, 4]], "scale": 1}},
}


def _write(tmp_path, doc):
    p = tmp_path / "inst.json"
    p.write_text(json.dumps(doc))
    return p


def test_minimal_fixture(tmp_path):
    inst = load_instance(_write(tmp_path, MINIMAL))
    assert inst.quotient.s == 2 and inst.base.n == 3
    np.testing.assert_array_equal(inst.section("phi").values[2], [2, 4])
    assert inst.schedule is None and inst.admissible is None


def test_lift_sections_and_fields():
    doc = dict(MINIMAL, sections={"u": {"lift": [[0.0], [1.0], [-1.0]]}},
               fields={"f": {"values": [[3, 4], [0, 0], [1, 1]]}},
               schedule={"radii": [2.0, 1.5]}, **{"class": {"c": 2, "boundRadius": 5}})
    inst = instance_from_dict(doc)
    np.testing.assert_allclose(inst.sections["u"].values[:, 0], [0, 1, 2])
    assert inst.field_or_section("f").values.shape == (3, 2)
    assert inst.admissible.bound_radius == 5.0
    with pytest.raises(KeyError):
        inst.field_or_section("nope")


@pytest.mark.parametrize("patch, field", [
    ({"quotient": {"A": [[1, 0, 0], [2, 0, 0]]}}, "quotient.A"),
    ({"base": {"points": [[0], [1], [1]]}}, "base.points"),
    ({"base": {"points": [[0, 1], [1, 1], [2, 1]]}}, "base.points"),
    ({"sections": {"phi": {"values": [[0, 0], [1, 2], [3, 4]]}}}, "sections.phi"),
    ({"sections": {"phi": {"scale": 1}}}, "sections.phi"),
    ({"schedule": {"radii": [1.0, 2.0]}}, "schedule.radii"),
    ({"class": {"c": 1.0}}, "class"),
    ({"fields": {"f": {"values": [[1, 2]]}}}, "fields.f"),
    ({"quotient": {"s": 3, "A": [[1, 0]]}}, "quotient.s"),
])
def test_validation_field_paths(patch, field):
    doc = json.loads(json.dumps(MINIMAL))
    for key, val in patch.items():
        doc[key] = {**doc.get(key, {}), **val} if key in ("quotient", "base") else val
    with pytest.raises(ValidationError) as info:
        instance_from_dict(doc)
    assert info.value.field == field


def test_missing_keys():
    with pytest.raises(ValidationError) as info:
        instance_from_dict({"base": MINIMAL["base"]})
    assert info.value.field == "quotient"
    with pytest.raises(ValidationError):
        instance_from_dict([1, 2])


def test_parse_errors(tmp_path):
    with pytest.raises(ParseError):
        load_instance(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_instance(bad)


def test_round_trip_exact(tmp_path):
    inst = generate_instance(4, 2, 12, seed=3)
    path = tmp_path / "g.json"
    dump_instance(inst, path)
    back = load_instance(path)
    assert dump_instance(back) == dump_instance(inst)
    for name in inst.sections:
        np.testing.assert_array_equal(back.sections[name].values, inst.sections[name].values)


def test_generate_deterministic():
    a, b = generate_instance(3, 1, 10, seed=7), generate_instance(3, 1, 10, seed=7)
    assert dump_instance(a) == dump_instance(b)
    assert dump_instance(a) != dump_instance(generate_instance(3, 1, 10, seed=8))


def test_generated_properties():
    inst = generate_instance(5, 2, 16, seed=1)
    assert inst.quotient.condition_number <= 1e3
    R = inst.admissible.bound_radius
    for sec in inst.sections.values():
        assert np.abs(sec.values).max() <= R


@pytest.mark.parametrize("dims", [(3, 3, 5), (2, 0, 5), (9, 2, 5), (3, 1, 1), (3, 1, 65)])
def test_bad_dims(dims):
    with pytest.raises(BadDims):
        generate_instance(*dims)


@settings(max_examples=100)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 6), st.integers(2, 20))
def test_generated_round_trip_property(seed, s, n):
    m = 1 + seed % (s - 1)
    inst = generate_instance(s, m, n, seed=seed)
    text = dump_instance(inst)
    back = instance_from_dict(json.loads(text))
    assert dump_instance(back) == text
