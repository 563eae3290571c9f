import pytest

from spir_mds import StorageParams, build_generator, find_decodable_generator
from spir_mds.errors import FieldTooSmall

# The four desk-scale instances every exhaustive audit runs on.
EXHAUSTIVE_INSTANCES = [
    StorageParams(q=2, n=2, m=1, k=2),
    StorageParams(q=2, n=3, m=2, k=2),
    StorageParams(q=2, n=4, m=1, k=2),
    StorageParams(q=2, n=4, m=2, k=2),
]

# (n, m) grid whose smallest admissible prime supports the Cauchy build.
CAPACITY_GRID = [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3), (5, 2), (5, 3)]


def generator_for_instance(params: StorageParams):
    """Standard construction when the field allows it, search otherwise."""
    try:
        return build_generator(params)
    except FieldTooSmall:
        return find_decodable_generator(params)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in item.nodeid:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {item.name}: {verdict}")
