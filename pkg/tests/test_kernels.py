import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from glassydecay.kernels import PronyKernel, Strictness, TabulatedKernel, validate

two_term = PronyKernel([0.5, 1.5], [1.0, 3.0])


@st.composite
def glassy_kernels(draw, max_terms=5):
    n = draw(st.integers(1, max_terms))
    r = draw(st.lists(st.floats(0.05, 20.0), min_size=n, max_size=n))
    b = draw(st.lists(st.floats(0.01, 10.0), min_size=n, max_size=n))
    return PronyKernel(b, r).normalized()


def test_eval_examples():
    assert PronyKernel.maxwell(2.0).eval(0.0) == 2.0
    assert two_term.eval(0.0) == 2.0
    expected = float(2 * mpmath.e ** -2)
    assert PronyKernel.maxwell(2.0).eval(1.0) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.2706705664732254, rel=1e-15)


def test_derivative_examples():
    k = PronyKernel.maxwell(2.0)
    assert k.eval_derivative(0.0) == -4.0
    assert two_term.eval_derivative(0.0) == -5.0
    t = np.linspace(0, 7, 50)
    np.testing.assert_array_equal(k.eval_derivative(t), -2.0 * k.eval(t))


@pytest.mark.parametrize(
    "kernel, mass",
    [(PronyKernel.maxwell(2.0), 1.0), (two_term, 1.0), (PronyKernel([1.0], [2.0], "subcritical"), 0.5)],
)
def test_mass_examples(kernel, mass):
    assert kernel.mass() == mass


def test_empty_kernel_mass_is_zero():
    assert PronyKernel.zero().mass() == 0.0
    assert PronyKernel.zero().eval(3.0) == 0.0


def test_tail_mass_examples():
    k = PronyKernel.maxwell(2.0)
    assert k.tail_mass(0.0) == 1.0
    assert k.tail_mass(1.0) == pytest.approx(float(mpmath.e ** -2), rel=1e-15)
    assert two_term.tail_mass(800.0) == 0.0


def test_eta_examples():
    assert PronyKernel.maxwell(2.0).extract_eta() == 2.0
    assert two_term.extract_eta() == 1.0
    t = np.arange(0, 201) * 0.1
    assert np.all(two_term.eval_derivative(t) + 1.0 * two_term.eval(t) <= 0)
    with pytest.raises(ValueError):
        PronyKernel.zero().extract_eta()


def test_negative_time_rejected():
    for f in (two_term.eval, two_term.eval_derivative, two_term.tail_mass):
        with pytest.raises(ValueError):
            f(-1e-3)


def test_validate_examples():
    rep = validate(PronyKernel.maxwell(2.0), 1e-12)
    assert rep.is_glassy and rep.eta == 2.0 and rep.k0 == 2.0 and rep.violations == []

    rep = validate(PronyKernel([1.0], [2.0], "glassy"), 1e-12)
    assert not rep.is_glassy
    assert any("mass 0.5" in v and "!= 1" in v for v in rep.violations)

    for strictness in Strictness:
        rep = validate(PronyKernel([3.0], [2.0], strictness), 1e-12)
        assert any("mass 1.5 > 1" in v for v in rep.violations)


def test_validate_sign_and_subcritical():
    rep = validate(PronyKernel([-1.0, 1.0], [1.0, 1.0 + 1e-3], "raw"))
    assert any("b[0]" in v for v in rep.violations)
    rep = validate(PronyKernel([1.0], [-2.0], "raw"))
    assert any("r[0]" in v for v in rep.violations)
    assert validate(PronyKernel([1.0], [2.0], "subcritical")).ok
    assert not validate(PronyKernel([2.0], [2.0], "subcritical")).ok
    assert validate(PronyKernel.zero()).ok


def test_validate_user_eta():
    assert validate(two_term, eta=0.5).ok
    assert validate(two_term, eta=0.5).eta == 0.5
    assert not validate(two_term, eta=1.5).ok


def test_duplicate_rates_are_merged():
    k = PronyKernel([0.25, 0.5, 0.25], [1.0, 2.0, 1.0])
    assert k.b == (0.5, 0.5) and k.r == (1.0, 2.0)


def test_only_raw_may_be_empty():
    with pytest.raises(ValueError):
        PronyKernel([], [], "glassy")


def test_report_text_and_key_values():
    rep = validate(PronyKernel.maxwell(2.0))
    assert "violations: none" in rep.as_text()
    kv = dict(line.split("=", 1) for line in rep.as_key_values().splitlines())
    assert kv["is_glassy"] == "true" and kv["eta"] == "2" and kv["violations"] == "0"


def test_normalize_and_rescale():
    k = PronyKernel([1.0, 1.0], [1.0, 4.0]).normalized()
    assert k.mass() == pytest.approx(1.0, abs=1e-15)
    single = PronyKernel.maxwell(1.0).rescaled(4.0)
    assert single.b == (4.0,) and single.r == (4.0,)
    multi = two_term.rescaled(2.0)
    assert multi.extract_eta() == 2.0
    assert multi.mass() == pytest.approx(1.0, abs=1e-15)
    # shape is kept: rate ratios unchanged
    assert multi.r[1] / multi.r[0] == pytest.approx(3.0)


def test_tabulated_kernel_grid_quantities():
    k = PronyKernel.maxwell(2.0)
    tab = k.sample(1e-3, 5001)
    np.testing.assert_allclose(tab.cumulative_mass(5001)[-1], 1 - k.tail_mass(5.0), rtol=1e-6)
    with pytest.raises(ValueError):
        tab.on_grid(2e-3, 10)
    with pytest.raises(ValueError):
        tab.on_grid(1e-3, 6000)
    with pytest.raises(ValueError):
        TabulatedKernel(1e-3, [1.0])


@settings(max_examples=100, deadline=None)
@given(glassy_kernels())
def test_sign_and_rate_inequality(k):
    t = np.linspace(0, 40, 2001)
    eta = k.extract_eta()
    assert np.all(k.eval(t) >= 0)
    assert np.all(k.eval_derivative(t) <= 0)
    assert np.all(k.eval_derivative(t) + eta * k.eval(t) <= 1e-12 * k.k0 * eta)


@settings(max_examples=100, deadline=None)
@given(glassy_kernels())
def test_tail_bound(k):
    t = np.linspace(0, 40, 4001)
    eta = k.extract_eta()
    # absolute slack only matters once both sides are subnormal (~1e-308)
    assert np.all(k.tail_mass(t) <= k.eval(t) / eta * (1 + 1e-12) + 1e-300)


@settings(max_examples=50, deadline=None)
@given(glassy_kernels(), st.floats(0.05, 5.0))
def test_tail_derivative_is_minus_kernel(k, t):
    # centered difference of the tail mass; truncation error <= h^2/6 sup|k''|
    h = 1e-2
    fd = (k.tail_mass(t + h) - k.tail_mass(t - h)) / (2 * h)
    kpp = sum(bi * ri**2 for bi, ri in zip(k.b, k.r))
    assert abs(fd + k.eval(t)) <= h**2 / 6 * kpp + 1e-13 / h


def test_tail_derivative_second_order():
    k = PronyKernel([0.5, 1.5], [1.0, 3.0])
    errs = [abs((k.tail_mass(1 + h) - k.tail_mass(1 - h)) / (2 * h) + k.eval(1.0)) for h in (4e-2, 2e-2, 1e-2)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.01)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.01)


@settings(max_examples=20, deadline=None)
@given(glassy_kernels(max_terms=3))
def test_closed_form_mass_matches_quadrature(k):
    T = 50.0 / min(k.r)
    # split at several kernel time scales so adaptive quadrature resolves fast terms
    points = sorted({min(T, 5.0 / r) for r in k.r})
    integral, _ = quad(lambda s: float(k.eval(s)), 0.0, T, points=points, epsabs=0, epsrel=1e-13, limit=500)
    assert integral + k.tail_mass(T) == pytest.approx(k.mass(), rel=1e-10)
    assert k.tail_mass(0.0) == k.mass()


def test_mpmath_cross_check_values():
    mpmath.mp.dps = 40
    k = two_term
    for t in (0.3, 2.0, 7.5):
        ref = sum(mpmath.mpf(b) * mpmath.e ** (-mpmath.mpf(r) * t) for b, r in zip(k.b, k.r))
        assert k.eval(t) == pytest.approx(float(ref), rel=1e-14)
        tail = sum(mpmath.mpf(b) / r * mpmath.e ** (-mpmath.mpf(r) * t) for b, r in zip(k.b, k.r))
        assert k.tail_mass(t) == pytest.approx(float(tail), rel=1e-14)
    assert math.isclose(k.partial_mass(2.0).sum(), 1 - k.tail_mass(2.0), rel_tol=1e-14)
