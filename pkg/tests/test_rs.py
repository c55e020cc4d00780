import numpy as np
import pytest

import netbath as nb
from netbath.errors import DomainError, ShapeError
from netbath.rs import DisorderSpec, Population


def test_variance_gain_identity(narrow_band, wide_band, lambda_grid):
    for p in (narrow_band, wide_band):
        for lam in lambda_grid[::7]:
            g = nb.variance_gain(p, lam)
            k = nb.closed_form_fixed_point(p, lam)
            alg = 4.0 * k**4 / ((p.n - 1) ** 3 * p.C**4)
            assert g == pytest.approx(alg, rel=1e-12)


def test_variance_gain_at_vanishing_root():
    c2 = nb.critical_coupling(2, 1.0, 1.0)
    p = nb.derive_params(2, 1.0, 2.0 * c2, 1.0)
    l_star = nb.lambda_star(p)
    g = nb.variance_gain(p, l_star * (1.0 + 1e-9))
    # where the square root vanishes, g = 1/(n-1)
    assert g == pytest.approx(1.0 / (p.n - 1), rel=1e-4)
    with pytest.raises(DomainError):
        nb.variance_gain(p, 0.5 * l_star)


def test_variance_gain_small_coupling_quartic():
    n = 4
    base = nb.critical_coupling(2, 1.0, 1.0)   # scale reference only
    lam = 0.7
    c_small = 1e-3 * base
    p1 = nb.derive_params(n, 1.0, c_small, 1.0)
    p2 = nb.derive_params(n, 1.0, 2.0 * c_small, 1.0)
    g1 = nb.variance_gain(p1, lam)
    g2 = nb.variance_gain(p2, lam)
    # C^4 scaling up to the O(nC/m) shift of omega^2 relative to omega0^2
    assert g2 / g1 == pytest.approx(16.0, rel=2e-2)
    expect = 4.0 * (n - 1) * c_small**4 / (lam**2 + 1.0) ** 4
    assert g1 == pytest.approx(expect, rel=2e-2)
    p0 = nb.derive_params(n, 1.0, 0.0, 1.0)
    assert nb.variance_gain(p0, lam) == 0.0


def test_delta_pool_exactly_invariant(narrow_band):
    lam = 1.0
    pop = nb.population_init(narrow_band, lam, size=2000, seed=5)
    k_branch = nb.closed_form_fixed_point(narrow_band, lam) / (narrow_band.n - 1)
    stepped = nb.population_step(pop)
    assert np.max(np.abs(stepped.samples - k_branch)) <= 1e-14 * abs(k_branch)


def test_population_zero_coupling_collapses():
    p = nb.derive_params(3, 2.0, 0.5, 1.0)
    pop = nb.population_init(p, 1.0, size=1500, seed=9, sigma=1e-3,
                             disorder=DisorderSpec(coupling=("constant", 0.0)))
    stepped = nb.population_step(pop)
    assert np.all(stepped.samples == 0.0)


def test_population_contraction_matches_gain():
    n = 3
    c_star = nb.critical_coupling(n, 1.0, 1.0)
    p = nb.derive_params(n, 1.0, 0.1 * c_star, 1.0)
    lam = 1.0
    g = nb.variance_gain(p, lam)
    k_branch = nb.closed_form_fixed_point(p, lam) / (n - 1)
    pop = nb.population_init(p, lam, size=20000, seed=11,
                             sigma=0.01 * k_branch)
    v0 = np.var(pop.samples)
    pop = nb.population_step(pop)
    v1 = np.var(pop.samples)
    assert v1 / v0 == pytest.approx(g, rel=0.2)
    # variance after many sweeps collapses far below the initial perturbation
    # and the mean settles on the single-branch fixed point
    for _ in range(4):
        pop = nb.population_step(pop)
    assert np.var(pop.samples) < 1e-6 * v0
    mean, var, _ = nb.population_stats(pop)
    se = np.sqrt(var / pop.samples.size)
    assert abs(mean - k_branch) <= max(3.0 * se, 1e-12 * abs(k_branch))


def test_population_determinism(narrow_band):
    def run():
        pop = nb.population_init(narrow_band, 2.0, size=1200, seed=77,
                                 sigma=1e-4)
        for _ in range(3):
            pop = nb.population_step(pop)
        return pop.samples

    a, b = run(), run()
    assert np.array_equal(a, b)


def test_population_overwrite_mode_runs(narrow_band):
    pop = nb.population_init(narrow_band, 2.0, size=1000, seed=3, sigma=1e-4)
    stepped = nb.population_step(pop, mode="overwrite")
    assert stepped.sweeps == 1
    assert stepped.samples.shape == pop.samples.shape
    with pytest.raises(ShapeError):
        nb.population_step(pop, mode="bogus")


def test_population_disorder_draws(narrow_band):
    spec = DisorderSpec(coupling=("uniform", 0.5, 1.5),
                        degree=("two_point", 3, 5, 0.5))
    pop = nb.population_init(narrow_band, 2.0, size=1500, seed=21,
                             sigma=0.0, disorder=spec)
    stepped = nb.population_step(pop)
    # disorder broadens the delta pool
    assert np.var(stepped.samples) > 0.0
    mean, var, (counts, edges) = nb.population_stats(stepped, bins=30)
    assert counts.sum() == 1500 and len(edges) == 31


def test_population_stats_examples(narrow_band):
    pop = nb.population_init(narrow_band, 2.0, size=1000, seed=1)
    mean, var, _ = nb.population_stats(pop)
    assert var == 0.0
    two_val = Population(
        samples=np.array([0.0, 2.0] * 500), lam=2.0, params=narrow_band,
        seed=0)
    mean, var, _ = nb.population_stats(two_val)
    assert mean == pytest.approx(1.0) and var == pytest.approx(1.0)


def test_pool_size_floor(narrow_band):
    with pytest.raises(ShapeError):
        nb.population_init(narrow_band, 1.0, size=10, seed=0)


def test_map_orbit_classifications(narrow_band):
    rep = nb.map_orbit(narrow_band, 1.0)
    assert rep.classification == "converged"
    assert rep.final == pytest.approx(
        nb.closed_form_fixed_point(narrow_band, 1.0), rel=1e-10)
    k_star = nb.closed_form_fixed_point(narrow_band, 1.0)
    rep_const = nb.map_orbit(narrow_band, 1.0, x0=k_star)
    assert rep_const.classification == "converged"
    assert rep_const.orbit.size <= 3
    c2 = nb.critical_coupling(2, 1.0, 1.0)
    p_dis = nb.derive_params(2, 1.0, 2.0 * c2, 1.0)
    rep_dis = nb.map_orbit(p_dis, 0.5, steps=4000)
    assert rep_dis.classification in ("near-periodic", "wandering")
    assert rep_dis.classification == "near-periodic"


def test_orbit_onset_bracket():
    c2 = nb.critical_coupling(2, 1.0, 1.0)
    p = nb.derive_params(2, 1.0, 2.0 * c2, 1.0)
    l_star = nb.lambda_star(p)
    assert not nb.orbit_converges(p, 0.97 * l_star)
    assert nb.orbit_converges(p, 1.03 * l_star)
