import pytest

from mmptol.planfile import fixture_path, parse_plan
from mmptol.synthesis import analyze, influence_table


@pytest.fixture(scope="session")
def four_setups():
    return parse_plan(fixture_path("four_setups"))


@pytest.fixture(scope="session")
def two_planes():
    return parse_plan(fixture_path("two_planes"))


@pytest.fixture(scope="session")
def fixture_analysis(four_setups):
    return analyze(four_setups.plan, four_setups.functional_gauge, "enumerate")


@pytest.fixture(scope="session")
def fixture_table(fixture_analysis):
    return influence_table(fixture_analysis)
