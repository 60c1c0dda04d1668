import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glassydecay.energy import (
    energy_direct,
    energy_fast,
    energy_rate,
    energy_rate_direct,
    energy_series,
    lemma1_residual,
    lemma1_terms,
    trapezoid,
)
from glassydecay.kernels import PronyKernel
from glassydecay.operator import InitialData, diagonal_operator, dirichlet_laplacian_1d, random_data
from glassydecay.simulator import simulate, simulate_direct

# E(t) for the reference case, 20-digit mpmath quadrature of the exact solution
FROZEN_E = {
    0.5: 0.19926803063453125753,
    1.0: 0.11277940269717724324,
    2.0: 0.057999523147658237597,
    5.0: 0.0019143637049847779064,
    10.0: 6.880817842907385549e-7,
}
# int_0^10 (u')^2 dt for the same case
FROZEN_LEMMA_LHS = 0.24999988612126236027


def closed_form_energy(t):
    """Reference-case energy from the closed-form integrals of u = (1 + t) e^{-t}."""
    e = np.exp(-t)
    u, v = (1 + t) * e, -t * e
    z = 2 * t * e
    w = 2 * e**2 * ((1 + t) ** 3 - 1) / 3
    return 0.5 * v**2 + 0.5 * e**2 * u**2 + 0.5 * (w - 2 * u * z + u**2 * (1 - e**2))


@pytest.mark.parametrize("t", sorted(FROZEN_E))
def test_closed_form_matches_frozen(t):
    assert closed_form_energy(t) == pytest.approx(FROZEN_E[t], rel=1e-13)


@pytest.mark.parametrize("t", sorted(FROZEN_E))
def test_fast_energy_matches_frozen(reference_energy, t):
    j = reference_energy.index(t)
    assert reference_energy.total[j] == pytest.approx(FROZEN_E[t], rel=1e-9)


def test_initial_energy(reference_energy, burger_kernel):
    assert reference_energy.E0 == 0.5
    b = reference_energy.breakdown(0)
    assert (b.kinetic, b.elastic, b.history) == (0.0, 0.5, 0.0)

    op = diagonal_operator([1.0, 4.0, 9.0])
    u, v = np.array([0.3, -1.0, 0.2]), np.array([1.0, 0.5, -2.0])
    z = w = np.zeros((3, 2))
    e = energy_fast(op, burger_kernel, u, v, z, w, 0.0)
    assert e.total == pytest.approx(0.5 * np.sum(v**2) + 0.5 * np.sum(op.eigenvalues * u**2), rel=1e-15)
    assert e.history == 0.0


def test_zero_state(maxwell):
    op = diagonal_operator([1.0, 2.0])
    zeros = np.zeros(2), np.zeros((2, 1))
    e = energy_fast(op, maxwell, zeros[0], zeros[0], zeros[1], zeros[1], 3.0)
    assert e.total == 0.0
    assert energy_rate(op, maxwell, zeros[0], zeros[1], zeros[1], 3.0) == 0.0


def test_direct_at_zero_equals_fast(reference_fast, reference_direct):
    f = energy_direct(reference_fast, 0.0)
    d = energy_direct(reference_direct, 0.0)
    e = energy_fast(
        reference_fast.operator, reference_fast.kernel, reference_fast.u[0],
        reference_fast.v[0], reference_fast.z[0], reference_fast.w[0], 0.0,
    )
    for x in (f, d):
        assert (x.kinetic, x.elastic, x.history) == (e.kinetic, e.elastic, e.history)


def test_direct_energy_at_one(reference_direct):
    assert energy_direct(reference_direct, 1.0).total == pytest.approx(FROZEN_E[1.0], rel=1e-6)


def test_direct_quadrature_on_fast_trajectory_is_second_order(maxwell, single_mode, unit_data):
    errs = []
    for dt in (4e-3, 2e-3):
        tr = simulate(single_mode, maxwell, unit_data, 2.0, dt)
        errs.append(abs(energy_direct(tr, 2.0).total - FROZEN_E[2.0]))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_fast_and_direct_series_agree(reference_fast, reference_direct, reference_energy):
    d = energy_series(reference_direct)
    assert np.max(np.abs(d.total - reference_energy.total)) <= 1e-6 * reference_energy.E0


def test_multimode_routes_agree(multimode, multimode_fast):
    fast = energy_series(multimode_fast)
    slow = energy_series(multimode_fast, method="direct", every=200)
    assert np.max(np.abs(slow.total - fast.total[::200])) <= 1e-5 * fast.E0


def test_rate_at_zero(reference_energy, burger2, burger2_fast):
    assert reference_energy.rate[0] == -0.5 * 2.0 * 1.0
    sc = burger2
    series = energy_series(burger2_fast)
    expected = -0.5 * sc.kernel.k0 * np.sum(sc.operator.eigenvalues * sc.initial.u0**2)
    assert series.rate[0] == pytest.approx(expected, rel=1e-14)


def test_rate_direct_matches_fast(reference_fast, reference_energy):
    for t in (0.5, 1.0, 3.0):
        j = reference_energy.index(t)
        assert energy_rate_direct(reference_fast, t) == pytest.approx(reference_energy.rate[j], abs=1e-6)


def _fd_gap(kernel, op, init, T, dt):
    s = energy_series(simulate(op, kernel, init, T, dt))
    fd = (s.total[2:] - s.total[:-2]) / (2 * dt)
    return np.max(np.abs(s.rate[1:-1] - fd)) / s.E0


def test_rate_matches_centered_differences(maxwell, single_mode, unit_data, burger_kernel):
    g = [_fd_gap(maxwell, single_mode, unit_data, 10.0, dt) for dt in (2e-3, 1e-3)]
    assert g[1] <= 1e-6
    assert g[0] / g[1] == pytest.approx(4.0, rel=0.05)

    op = dirichlet_laplacian_1d(np.pi, 4)
    init = random_data(op, seed=3)
    g = [_fd_gap(burger_kernel, op, init, 4.0, dt) for dt in (2e-3, 1e-3)]
    assert g[0] / g[1] == pytest.approx(4.0, rel=0.1)


def test_lemma_degenerate_interval(reference_fast):
    assert lemma1_residual(reference_fast, 3.0, 3.0) == (0.0, 0.0, 0.0)


def test_lemma_zero_data(maxwell):
    op = diagonal_operator([1.0, 4.0])
    tr = simulate(op, maxwell, InitialData([0.0, 0.0], [0.0, 0.0]), 2.0, 1e-2)
    assert lemma1_residual(tr, 0.0, 2.0) == (0.0, 0.0, 0.0)


def test_lemma_reference_case(reference_fast):
    lhs, rhs, res = lemma1_residual(reference_fast, 0.0, 10.0)
    assert lhs == pytest.approx(FROZEN_LEMMA_LHS, rel=1e-6)
    assert res <= 1e-5
    # the trapezoid endpoint correction predicts 2.0e-6 at this step
    assert res == pytest.approx(2.0e-6, rel=1e-3)


def test_lemma_residual_second_order(maxwell, single_mode, unit_data):
    r = [lemma1_residual(simulate(single_mode, maxwell, unit_data, 10.0, dt), 0.0, 10.0)[2] for dt in (2e-3, 1e-3)]
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.01)


def test_lemma_multimode_pairs(multimode_fast):
    terms = lemma1_terms(multimode_fast)
    grid = np.linspace(0, multimode_fast.T, 7)
    worst = max(
        lemma1_residual(multimode_fast, S, T, terms=terms)[2] for S in grid for T in grid if S < T
    )
    assert worst <= 1e-5


def test_lemma_errors(reference_fast, reference_direct):
    with pytest.raises(ValueError):
        lemma1_residual(reference_fast, 0.0, 1.0005)
    with pytest.raises(ValueError):
        lemma1_residual(reference_fast, 2.0, 1.0)
    with pytest.raises(ValueError, match="energy_direct"):
        lemma1_residual(reference_direct, 0.0, 1.0)


def test_fast_energy_needs_auxiliaries(reference_direct):
    with pytest.raises(ValueError, match="energy_direct"):
        energy_series(reference_direct, method="fast")
    with pytest.raises(ValueError):
        energy_series(reference_direct, method="spectral")


def _check_monotone_nonnegative(series, k0):
    E0 = series.E0
    assert np.all(np.diff(series.total) <= 1e-10 * E0)
    assert np.all(series.rate <= 1e-12 * E0 * max(k0, 1.0))
    for part in (series.kinetic, series.elastic, series.history):
        assert np.all(part >= -1e-12 * E0)


def test_monotone_and_nonnegative_presets(reference_energy, multimode_fast, burger2_fast):
    _check_monotone_nonnegative(reference_energy, 2.0)
    _check_monotone_nonnegative(energy_series(multimode_fast), multimode_fast.kernel.k0)
    _check_monotone_nonnegative(energy_series(burger2_fast), burger2_fast.kernel.k0)


glassy_kernels = st.lists(
    st.tuples(st.floats(0.1, 5.0), st.floats(0.2, 6.0)), min_size=1, max_size=3
).map(lambda terms: PronyKernel([b for b, _ in terms], [r for _, r in terms], "raw").normalized())


@settings(max_examples=25, deadline=None)
@given(glassy_kernels, st.integers(0, 10**6))
def test_monotone_and_nonnegative_random(kernel, seed):
    op = dirichlet_laplacian_1d(np.pi, 3)
    tr = simulate(op, kernel, random_data(op, seed=seed), 4.0, 5e-3)
    _check_monotone_nonnegative(energy_series(tr), kernel.k0)


def test_subcritical_energy_is_monotone():
    k = PronyKernel([0.5], [1.0], "subcritical")
    op = dirichlet_laplacian_1d(np.pi, 4)
    tr = simulate(op, k, random_data(op, seed=5), 10.0, 1e-3)
    s = energy_series(tr)
    _check_monotone_nonnegative(s, k.k0)
    # elastic coefficient tends to 1 - mass = 0.5, not 0
    assert k.elastic_weight(1e3) == pytest.approx(0.5)
    d = energy_series(tr, method="direct", every=500)
    assert np.max(np.abs(d.total - s.total[::500])) <= 1e-5 * s.E0


def test_conservation_empty_kernel():
    op = dirichlet_laplacian_1d(np.pi, 4)
    tr = simulate(op, PronyKernel.zero(), random_data(op, seed=1), 20.0, 1e-3)
    s = energy_series(tr)
    assert np.max(np.abs(s.total - s.E0)) <= 1e-8 * s.E0
    assert not np.any(s.history) and not np.any(s.rate)


def test_trapezoid_helper():
    assert trapezoid(np.array([1.0, 1.0, 1.0]), 0.5) == 1.0
    assert trapezoid(np.array([0.0, 1.0]), 2.0) == 1.0


def test_series_index(reference_energy):
    assert reference_energy.dt == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        reference_energy.index(0.0004)
