import math

import pytest

from toricslope.verify import SUITES, CheckResult, run_suite


def _c(value, reference, tol, kind):
    return CheckResult("s", "n", value, reference, tol, kind)


@pytest.mark.parametrize("check,expected", [
    (_c(1.0, 1.0 + 1e-7, 1e-6, "abs"), True),
    (_c(1.0, 1.1, 1e-6, "abs"), False),
    (_c(100.0, 100.5, 1e-2, "rel"), True),
    (_c(0.0, 0.0, 0.0, "rel"), True),
    (_c(1e-20, 0.0, 1.0, "rel"), False),
    (_c(0.2, 0.1, 0.0, "min"), True),
    (_c(0.05, 0.1, 0.0, "min"), False),
    (_c(1e-6, 1e-5, 0.0, "max"), True),
    (_c(1e-4, 1e-5, 0.0, "max"), False),
    (_c(math.nan, 0.0, 1.0, "abs"), False),
    (_c(math.inf, 0.0, 0.0, "min"), False),
])
def test_check_semantics(check, expected):
    assert check.passed is expected


def test_unknown_kind():
    with pytest.raises(ValueError):
        _c(0.0, 0.0, 0.0, "between").passed


def test_as_dict_carries_pass_flag():
    d = _c(1.0, 1.0, 0.0, "abs").as_dict()
    assert d["passed"] is True and d["kind"] == "abs"


def test_conventions_suite_passes():
    res = run_suite("conventions")
    assert res and all(r.passed for r in res)
    assert {r.criterion for r in res} >= {"A1"}


def test_unknown_suite():
    assert "slopes" in SUITES
    with pytest.raises(KeyError):
        run_suite("nope")
