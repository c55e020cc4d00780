import math

import numpy as np
import pytest

import netbath as nb
from netbath.errors import DomainError
from netbath.oracle import _corner_inverse, tree_matrix


def test_single_node_equals_leaf_message(ordered_chain):
    lam = 1.3
    single = nb.build_chain(0)
    val = nb.oracle_kernel_laplace(single, ordered_chain, lam)
    expect = ordered_chain.C**2 / 2 * nb.g0_laplace(ordered_chain, lam)
    assert val == pytest.approx(expect, rel=1e-14)


def test_chain_matches_message_passing(ordered_chain, lambda_grid):
    chain = nb.build_chain(35)
    bp = nb.root_output_message(chain, ordered_chain, lambda_grid)
    orc = nb.oracle_kernel_laplace_grid(chain, ordered_chain, lambda_grid)
    assert np.max(np.abs(orc - bp) / np.abs(bp)) <= 1e-10


def test_deep_tree_approaches_branch_fixed_point(narrow_band):
    lam = 2.0
    tree = nb.build_tree(narrow_band.n - 1, 8)
    val = nb.oracle_kernel_laplace(tree, narrow_band, lam)
    k_branch = nb.closed_form_fixed_point(narrow_band, lam) / (narrow_band.n - 1)
    assert val == pytest.approx(k_branch, rel=1e-10)


def test_dense_sparse_agree(ordered_chain):
    lam = 0.7
    chain = nb.build_chain(300)
    dense = nb.oracle_kernel_laplace(chain, ordered_chain, lam,
                                     dense_limit=4096)
    sparse = nb.oracle_kernel_laplace(chain, ordered_chain, lam,
                                      dense_limit=10)
    assert dense == pytest.approx(sparse, rel=1e-12)


def test_mode_decomposition_single_node(narrow_band):
    omega_b, w = nb.mode_decomposition(nb.build_chain(0), narrow_band)
    omega = math.sqrt(narrow_band.omega_sq)
    assert omega_b[0] == pytest.approx(omega, rel=1e-14)
    assert w[0] == pytest.approx(narrow_band.C**2 / (narrow_band.m * omega),
                                 rel=1e-14)


def test_mode_support_and_sum_rule(narrow_band):
    for depth in (2, 4, 6):
        tree = nb.build_tree(narrow_band.n - 1, depth)
        omega_b, w = nb.mode_decomposition(tree, narrow_band)
        assert narrow_band.lambda_pm < omega_b.min()
        assert omega_b.max() < narrow_band.lambda_pp
        assert float(np.sum(w * omega_b)) == pytest.approx(
            narrow_band.C**2 / narrow_band.m, rel=1e-10)


def test_mode_decomposition_refuses_outside_existence_region():
    # all finite-tree mode frequencies are bounded by the band edges, so an
    # unstable mode can only arise where the lower edge itself is complex;
    # the decomposition refuses before reaching the eigenproblem there
    c2 = nb.critical_coupling(2, 1.0, 1.0)
    p = nb.derive_params(2, 1.0, 3.0 * c2, 1.0)
    assert not p.band_defined
    with pytest.raises(DomainError):
        nb.mode_decomposition(nb.build_chain(50), p)


def test_oracle_time_kernel_zero_origin_and_forward_closure(ordered_chain):
    chain = nb.build_chain(120)
    T = 40.0
    step = 1.0 / (20.0 * ordered_chain.lambda_pp)
    n = int(math.ceil(T / step / 4.0)) * 4
    tau = np.linspace(0.0, T, n + 1)
    tk = nb.oracle_time_kernel(chain, ordered_chain, tau)
    assert tk.values[0] == 0.0
    lam = np.array([1.0, 2.0, 4.0])
    res = nb.forward_laplace(tk, lam)
    direct = nb.oracle_kernel_laplace_grid(chain, ordered_chain, lam)
    rel = np.abs(res.kernel.values - direct) / np.abs(direct)
    # bounded by quadrature plus the reported truncation bound
    bound = 1e-6 + res.truncation_bound / np.abs(direct)
    assert np.all(rel <= bound + 1e-6)


def test_finite_size_error_decreases(ordered_chain):
    tau = np.linspace(0.0, 700.0, 1501)
    bc = nb.branch_cut_kernel(ordered_chain, tau)
    scale = np.sqrt(np.mean(bc.values**2))
    errs = []
    for depth in (200, 400):
        otk = nb.oracle_time_kernel(nb.build_chain(depth), ordered_chain, tau)
        errs.append(float(np.sqrt(np.mean((otk.values - bc.values) ** 2)) / scale))
    assert errs[1] < errs[0]
    assert errs[1] <= 1e-2


def test_corner_inverse_residual_guard(ordered_chain):
    tm = tree_matrix(nb.build_chain(5), ordered_chain, 1.0)
    val = _corner_inverse(tm)
    assert math.isfinite(val) and val > 0.0
