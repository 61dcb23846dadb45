import pytest

from roughassim.checks import SUITES, run_suite
from roughassim.errors import InvalidParameterError


def test_suites_tuple_contents():
    assert set(SUITES) == {"roughpath", "adjoint", "duality", "gradient", "valueprobe"}


@pytest.mark.parametrize("suite", ["duality", "adjoint"])
def test_run_suite_schema_and_pass(suite):
    report = run_suite(suite, seed=3)
    assert report["schema_version"] == 1
    assert report["suite"] == suite
    assert report["seed"] == 3
    assert report["passed"] is True
    assert report["checks"]
    for rec in report["checks"]:
        assert rec["suite"] == suite
        assert isinstance(rec["name"], str)
        assert isinstance(rec["passed"], bool)
        assert rec["passed"]


def test_run_suite_all_concatenates():
    report = run_suite("all", seed=3)
    suites_seen = {rec["suite"] for rec in report["checks"]}
    assert suites_seen == set(SUITES)


def test_unknown_suite_rejected():
    with pytest.raises(InvalidParameterError):
        run_suite("nonsense", seed=0)


def test_reports_deterministic_in_seed():
    a = run_suite("duality", seed=9)
    b = run_suite("duality", seed=9)
    assert a == b
