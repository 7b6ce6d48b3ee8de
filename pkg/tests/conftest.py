import pytest

from edgedeploy.catalog import Catalog, CostWeights, EdgeConfig, Scenario

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def two_model_catalog():
    return Catalog.from_records([
        dict(name="m1", size_gb=10, gpu_mem_gb=2, energy_kw=0.1, io_delay_s=5, infer_delay_s=1),
        dict(name="m2", size_gb=20, gpu_mem_gb=4, energy_kw=0.1, io_delay_s=10, infer_delay_s=2),
    ])


@pytest.fixture
def hand_catalog():
    return two_model_catalog()


@pytest.fixture
def hand_edge():
    return EdgeConfig(storage_gb=35, gpu_gb=10, energy_kw=1, static_kw=0.3, bandwidth_gbps=10)


@pytest.fixture
def hand_scenario(hand_catalog, hand_edge):
    return Scenario(hand_catalog, hand_edge, CostWeights())
