import json

import pytest

from pencilpres.suites import REGISTRY, SUITES, run_suites


def test_registry_covers_suites():
    assert set(REGISTRY) == set(SUITES)


@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes_at_reduced_scale(suite):
    summary = run_suites([suite], seed=0, scale=0.2)
    failing = [r.name for r in summary.results if r.failed]
    assert summary.all_passed, failing


@pytest.mark.parametrize("suite", SUITES)
def test_fault_is_detected(suite):
    assert not run_suites([suite], seed=0, fault=True, scale=0.1).all_passed


def test_deterministic_summary():
    a = json.dumps(run_suites(["all"], seed=3, scale=0.1).to_dict(), sort_keys=True)
    b = json.dumps(run_suites(["all"], seed=3, scale=0.1).to_dict(), sort_keys=True)
    assert a == b


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suites(["nope"])
