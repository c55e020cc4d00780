import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import netbath as nb
from netbath.errors import DomainError, ShapeError, SingularTransformError
from netbath.laplace import CavityKernel, detect_near_cycle

K_STAR_NARROW_LAM0 = 0.0729206334100700298717568095  # 30-digit evaluation


def test_g0_values(narrow_band):
    assert nb.g0_laplace(narrow_band, 0.0) == pytest.approx(4.0 / 110.0, rel=1e-14)
    assert nb.g0_laplace(narrow_band, 1e8) < 1e-15
    doubled = nb.derive_params(5, 10.0, 1.0, 1.0)
    # at fixed lambda and fixed omega_sq the response halves with doubled mass
    lam = 3.0
    p_ref = nb.derive_params(5, math.sqrt(110.0 - 5 * 1.0 / 1.0), 1.0, 1.0)
    assert p_ref.omega_sq == pytest.approx(110.0, rel=1e-12)
    assert nb.g0_laplace(p_ref, lam) == pytest.approx(
        0.5 * nb.g0_laplace(narrow_band, lam), rel=1e-12)
    assert doubled.omega_sq != narrow_band.omega_sq  # mass shifts omega too


def test_vernon_imag_free_branch(narrow_band):
    lam = 2.0
    out = nb.vernon_imag(0.0, narrow_band, narrow_band.C, lam)
    assert out == pytest.approx(
        narrow_band.C**2 / 2 * nb.g0_laplace(narrow_band, lam), rel=1e-14)


def test_vernon_imag_fixed_point_consistency(narrow_band, lambda_grid):
    # the single-branch message reproduces itself through one more edge
    for lam in lambda_grid:
        k_n = nb.closed_form_fixed_point(narrow_band, lam)
        branch = nb.vernon_imag(k_n, narrow_band, narrow_band.C, lam)
        assert branch * (narrow_band.n - 1) == pytest.approx(k_n, rel=1e-12)


def test_vernon_imag_pole(narrow_band):
    lam = 1.0
    k_pole = 1.0 / nb.g0_laplace(narrow_band, lam)
    with pytest.raises(SingularTransformError):
        nb.vernon_imag(k_pole, narrow_band, narrow_band.C, lam)


def test_uniform_map_examples(narrow_band):
    assert nb.uniform_map(0.0, narrow_band, 0.0) == pytest.approx(
        8.0 / 110.0, rel=1e-14)
    p0 = nb.derive_params(5, 10.0, 0.0, 0.5)
    assert nb.uniform_map(0.0, p0, 1.0) == 0.0
    k = nb.closed_form_fixed_point(narrow_band, 2.0)
    assert nb.uniform_map(k, narrow_band, 2.0) == pytest.approx(k, rel=1e-12)


def test_closed_form_values(narrow_band):
    assert nb.closed_form_fixed_point(narrow_band, 0.0) == pytest.approx(
        K_STAR_NARROW_LAM0, rel=1e-13)
    p0 = nb.derive_params(5, 10.0, 0.0, 0.5)
    assert nb.closed_form_fixed_point(p0, 3.0) == 0.0


def test_closed_form_tail(narrow_band, wide_band):
    # k* ~ (n-1) C^2 / (m lambda^2) at large lambda
    for p in (narrow_band, wide_band):
        lam = 1e4 * p.lambda_pp
        ratio = nb.closed_form_fixed_point(p, lam) * p.m * lam**2 \
            / ((p.n - 1) * p.C**2)
        assert ratio == pytest.approx(1.0, rel=1e-6)


def test_closed_form_domain_error():
    c2 = nb.critical_coupling(2, 1.0, 1.0)
    p = nb.derive_params(2, 1.0, 2.0 * c2, 1.0)
    with pytest.raises(DomainError) as err:
        nb.closed_form_fixed_point(p, 0.5)
    assert err.value.lambda_star == pytest.approx(1.0, rel=1e-12)


@given(st.integers(2, 10), st.floats(0.5, 15.0), st.floats(0.0, 3.0),
       st.floats(0.2, 3.0), st.floats(0.0, 50.0))
def test_quadratic_residual_property(n, omega0, c, m, lam):
    p = nb.derive_params(n, omega0, c, m)
    if not nb.fixed_point_exists(p, lam):
        return
    k = nb.closed_form_fixed_point(p, lam)
    res = nb.quadratic_residual(p, lam, k)
    assert abs(res) <= 1e-12 * max(1.0, abs(k))


@given(st.integers(2, 10), st.floats(0.5, 15.0), st.floats(0.0, 3.0),
       st.floats(0.2, 3.0), st.floats(0.0, 50.0))
def test_minus_branch_bound(n, omega0, c, m, lam):
    p = nb.derive_params(n, omega0, c, m)
    if not nb.fixed_point_exists(p, lam):
        return
    k = nb.closed_form_fixed_point(p, lam)
    assert k <= p.m * (lam**2 + p.omega_sq) / 4.0 * (1 + 1e-12)


def test_iteration_monotone_and_convergent(narrow_band):
    res = nb.iterate_fixed_point(narrow_band, 1.0, tol=1e-12, keep_orbit=True)
    assert res.converged
    assert np.all(np.diff(res.orbit) >= -1e-15)
    assert res.value == pytest.approx(
        nb.closed_form_fixed_point(narrow_band, 1.0), rel=1e-10)
    assert res.orbit[-1] <= nb.closed_form_fixed_point(narrow_band, 1.0) * (1 + 1e-12)


def test_iteration_decoupled_converges_immediately():
    p0 = nb.derive_params(5, 10.0, 0.0, 0.5)
    res = nb.iterate_fixed_point(p0, 1.0)
    assert res.converged and res.iterations == 1 and res.value == 0.0


def test_iteration_detects_recurrence_in_disordered_phase():
    c2 = nb.critical_coupling(2, 1.0, 1.0)
    p = nb.derive_params(2, 1.0, 2.0 * c2, 1.0)
    res = nb.iterate_fixed_point(p, 0.5, max_iter=4000)
    assert not res.converged
    assert res.cycle_detected
    assert res.period is not None and res.period > 1


def test_detect_near_cycle_exact_two_cycle():
    orbit = np.array([0.3, 1.7] * 200)
    period, err = detect_near_cycle(orbit)
    assert period == 2 and err < 1e-12


def test_fourier_continuation(narrow_band, wide_band):
    for p in (narrow_band, wide_band):
        # nu = 0 continuation agrees with the Laplace value at lambda = 0
        assert nb.fourier_fixed_point(p, 0.0) == pytest.approx(
            nb.closed_form_fixed_point(p, 0.0), rel=1e-12)
        # decays far above the band
        assert abs(nb.fourier_fixed_point(p, 1e6)) < 1e-6
        # cut-line product inside the band
        nu = 0.5 * (p.lambda_pm + p.lambda_pp)
        prod = nb.fourier_fixed_point(p, nu) * nb.fourier_fixed_point(p, -nu)
        assert prod.real == pytest.approx((p.n - 1) * p.C**2 / 2, rel=1e-12)
        assert abs(prod.imag) <= 1e-12 * abs(prod.real)
        # dissipative sign convention
        assert nb.fourier_fixed_point(p, nu).imag < 0


@given(st.floats(0.0, 40.0))
def test_fourier_hermitian(nu):
    p = nb.derive_params(5, 10.0, 1.0, 0.5)
    assert nb.fourier_fixed_point(p, -nu) == pytest.approx(
        np.conj(nb.fourier_fixed_point(p, nu)), rel=1e-13, abs=1e-15)


def test_real_multiplier_band_and_decay(narrow_band):
    p = narrow_band
    nu_in = np.linspace(p.lambda_pm * (1 + 1e-9), p.lambda_pp * (1 - 1e-9), 50)
    assert np.max(np.abs(nb.real_multiplier(p, nu_in) - 2.0)) < 1e-12
    assert nb.real_multiplier(p, 10.0 * p.lambda_pp) < 1e-3
    nu_all = np.linspace(0, 4 * p.lambda_pp, 500)
    assert np.max(nb.real_multiplier(p, nu_all)) <= 2.0 + 1e-12
    p0 = nb.derive_params(5, 10.0, 0.0, 0.5)
    assert nb.real_multiplier(p0, 5.0) == 0.0


def test_real_kernel_orbit(narrow_band):
    p = narrow_band
    nu_mid = 0.5 * (p.lambda_pm + p.lambda_pp)
    # gain exactly 1/2 where the outside square root equals 3/5
    nu_half = math.sqrt(p.omega_sq + 1.25 * p.a_sq)
    grid = np.array(sorted([nu_mid, nu_half]))
    k0 = CavityKernel(grid=grid, values=np.ones(2, dtype=complex),
                      mode="fourier", role="kR", message_type="n")
    orbit = nb.real_kernel_orbit(k0, p, steps=10)
    final = orbit[-1].kernel.values
    i_mid = int(np.where(grid == nu_mid)[0][0])
    i_half = 1 - i_mid
    assert final[i_mid].real == pytest.approx(1024.0, rel=1e-10)
    assert orbit[3].kernel.values[i_half].real == pytest.approx(1.0 / 16.0,
                                                                rel=1e-10)


def test_real_kernel_orbit_zero_and_overflow(narrow_band):
    p = narrow_band
    nu_mid = 0.5 * (p.lambda_pm + p.lambda_pp)
    grid = np.array([nu_mid])
    zero = CavityKernel(grid=grid, values=np.zeros(1, dtype=complex),
                        mode="fourier", role="kR", message_type="n")
    orbit = nb.real_kernel_orbit(zero, p, steps=5)
    assert all(step.kernel.values[0] == 0.0 for step in orbit)
    one = CavityKernel(grid=grid, values=np.ones(1, dtype=complex),
                       mode="fourier", role="kR", message_type="n")
    deep = nb.real_kernel_orbit(one, p, steps=800, value_cap=1e100)
    assert deep[-1].overflowed
    assert deep[-1].log10_magnitude[0] == pytest.approx(
        800 * math.log10(2.0), rel=1e-12)


def test_bp_sum_rules(narrow_band):
    grid = np.array([0.5, 1.0, 2.0])
    vals = np.array([0.1, 0.2, 0.3])
    msg = CavityKernel(grid=grid, values=vals, message_type="m")
    single = nb.bp_sum([msg])
    assert single.message_type == "n"
    assert np.array_equal(single.values, vals)
    four = nb.bp_sum([msg] * 4)
    assert np.allclose(four.values, 4 * vals, rtol=1e-15)
    empty = nb.bp_sum([], grid=grid)
    assert np.all(empty.values == 0.0) and empty.message_type == "n"
    other = CavityKernel(grid=grid * 2, values=vals, message_type="m")
    with pytest.raises(ShapeError):
        nb.bp_sum([msg, other])
    with pytest.raises(ShapeError):
        nb.bp_sum([single])  # n-type input rejected


def test_cavity_kernel_validation():
    with pytest.raises(ShapeError):
        CavityKernel(grid=np.array([1.0, 1.0]), values=np.zeros(2))
    with pytest.raises(ShapeError):
        CavityKernel(grid=np.array([1.0, np.inf]), values=np.zeros(2))
    with pytest.raises(ShapeError):
        CavityKernel(grid=np.array([1.0, 2.0]), values=np.array([1j, 0j]))
    kern = CavityKernel(grid=np.array([-2.0, 2.0]),
                        values=np.array([1 - 1j, 1 + 1j]), mode="fourier")
    assert kern.hermitian_defect() < 1e-15
