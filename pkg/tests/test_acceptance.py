"""Acceptance gate: one test per shipped criterion at its stated tolerance.

Runs the same checks as ``logtrees verify`` (full parameters).  Criterion 6
is implemented exactly as stated and is expected to fail: at m = 27 the
variance of the space requirement carries a linear background term with no
closed form whose relative weight decays like n^(3-2alpha) = n^(-0.034), so
the raw ratio against F1 cannot reach 15% at n = 2^13 (it is ~80% off, and
Monte Carlo confirms the exact table).  The F1/F2 implementations are
validated separately by background-corrected amplitude fits in
tests/test_asymptotics.py.  See the acceptance section of README.md.
"""
import pytest

from logtrees import acceptance


def _run(number):
    entry = [c for c in acceptance.CRITERIA if c[0] == number][0]
    passed, detail = entry[2](quick=False)
    return passed, detail


def test_criterion_1_alpha_table():
    passed, detail = _run(1)
    assert passed, detail


def test_criterion_2_c2_rationals():
    passed, detail = _run(2)
    assert passed, detail


def test_criterion_3_oracle_equality():
    passed, detail = _run(3)
    assert passed, detail


def test_criterion_4_phase_thresholds():
    passed, detail = _run(4)
    assert passed, detail


def test_criterion_5_growth_exponents():
    passed, detail = _run(5)
    assert passed, detail


@pytest.mark.xfail(
    strict=True,
    reason="spec defect: the raw VS/n^(2a-2) and VSK/n^a ratios cannot reach "
    "F1/F2 within 15% at n=2^13 for m=27 because of the no-closed-form "
    "linear background (relative decay n^(-0.034)); implemented as stated "
    "and documented in README.md",
)
def test_criterion_6_periodic_tracking():
    passed, detail = _run(6)
    assert passed, detail


def test_criterion_7_quicksort_reductions():
    passed, detail = _run(7)
    assert passed, detail


def test_criterion_8_monte_carlo_limits():
    passed, detail = _run(8)
    assert passed, detail


def test_criterion_9_fixed_point_suite():
    passed, detail = _run(9)
    assert passed, detail


def test_criterion_10_dirichlet_identities():
    passed, detail = _run(10)
    assert passed, detail


def test_criterion_11_determinism():
    passed, detail = _run(11)
    assert passed, detail


def test_verify_exit_code_reflects_red_criterion():
    # the CLI gate reports the documented red criterion via exit code 4
    import contextlib
    import io

    from logtrees.cli import main

    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(["verify", "--quick"])
    assert code == 4
    text = out.getvalue()
    assert text.count("[PASS]") == 10
    assert text.count("[FAIL]") == 1
    assert "criterion  6" in text
