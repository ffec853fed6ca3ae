import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ilslab.fixtures import fixture_f1, fixture_product
from ilslab.quotient import SampledBase, build_quotient
from ilslab.sections import validate_section

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def f1():
    return fixture_f1()


@pytest.fixture
def product_fixture():
    return fixture_product()


@pytest.fixture
def line3():
    Q = build_quotient([[1.0, 0.0]])
    return Q, SampledBase([[0.0], [1.0], [2.0]])


def graph_section(Q, base, slope):
    pts = base.points[:, 0]
    return validate_section(Q, base, np.column_stack([pts, slope * pts]))
