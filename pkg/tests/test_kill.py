"""Moment-system nullspace and kill residuals."""

import numpy as np
import pytest

from gramscope import activations as act
from gramscope import data as dt
from gramscope import gram, kill
from gramscope.network import init_net


class TestEnumeration:
    def test_counts_match_binomial(self):
        from math import comb

        for d, p in [(2, 3), (3, 2), (4, 4)]:
            exps = kill.monomial_exponents(d, 1, p)
            assert exps.shape[0] == comb(d + p, p) - 1

    def test_graded_order(self):
        exps = kill.monomial_exponents(2, 1, 2)
        degrees = exps.sum(axis=1)
        assert np.all(np.diff(degrees) >= 0)

    def test_max_feasible_degree(self):
        assert kill.max_feasible_degree(10, 2) == 3
        assert kill.max_feasible_degree(11, 3) == 2
        assert kill.max_feasible_degree(2, 5) == 0


class TestNullspace:
    def test_linear_case(self):
        # degree-1 constraints in a 2-dimensional span leave n - 2 directions
        ds = dt.low_dim_embed(4, 2, 5, 0.05, seed=1)
        basis = kill.kill_nullspace(ds, 1)
        assert basis.dim >= 2
        assert basis.condition_ok
        assert basis.residual <= 1e-10

    def test_quadratic_setup_dimensions(self):
        ds = dt.low_dim_embed(11, 3, 8, 0.05, seed=2)
        basis = kill.kill_nullspace(ds, 2)
        assert basis.constraint_count == 9
        assert basis.dim >= 2
        assert np.max(np.abs(basis.vectors.T @ basis.vectors - np.eye(basis.dim))) <= 1e-12

    def test_exact_kill_of_matching_polynomial(self):
        ds = dt.low_dim_embed(11, 3, 8, 0.05, seed=2)
        basis = kill.kill_nullspace(ds, 2)
        quad = act.catalog("quadratic")  # derivative has degree 1 < p
        net = init_net("dzps", 50, 8, 13, "quadratic")
        resid = kill.kill_residual_smooth(ds, net, basis, quad)
        assert resid <= 1e-10
        sp = gram.eigen_sym(gram.build_G_finite(ds, net, quad))
        assert abs(sp.lam_min) <= 1e-18 + 1e-15 * sp.lam_max

    def test_condition_violation_flagged_not_raised(self):
        ds = dt.circle_lift(10, 10, seed=1)
        basis = kill.kill_nullspace(ds, 8)
        assert not basis.condition_ok
        assert basis.dim == 0

    def test_rank_count_bound(self):
        ds = dt.low_dim_embed(11, 3, 8, 0.05, seed=4)
        basis = kill.kill_nullspace(ds, 2)
        assert basis.dim >= ds.n - basis.constraint_count


class TestResidualSmooth:
    def test_consistency_with_eigensolver(self):
        ds = dt.circle_lift(10, 10, seed=3)
        tanh = act.catalog("tanh")
        net = init_net("dzps", 1000, 10, 5, "tanh")
        basis = kill.kill_nullspace(ds, 3)
        resid = kill.kill_residual_smooth(ds, net, basis, tanh)
        sp = gram.eigen_sym(gram.build_G_finite(ds, net, tanh))
        assert resid**2 >= sp.lam_min - 1e-12
        # and it bounds lam_k for k >= n - dim(basis)
        k = ds.n - basis.dim
        assert resid**2 >= sp.eigenvalues[k] - 1e-12

    def test_monotone_in_degree(self):
        ds = dt.circle_lift(10, 10, seed=3)
        tanh = act.catalog("tanh")
        net = init_net("dzps", 2000, 10, 5, "tanh")
        resids = []
        for p in (1, 2, 3):
            basis = kill.kill_nullspace(ds, p)
            resids.append(kill.kill_residual_smooth(ds, net, basis, tanh))
        assert resids[0] > resids[1] > resids[2]

    def test_empty_basis_rejected(self):
        ds = dt.circle_lift(10, 10, seed=1)
        basis = kill.kill_nullspace(ds, 8)
        tanh = act.catalog("tanh")
        net = init_net("dzps", 10, 10, 0, "tanh")
        with pytest.raises(ValueError):
            kill.kill_residual_smooth(ds, net, basis, tanh)

    def test_rank_deficiency_drives_low_eigenvalues(self):
        # nullspace dimension lower-bounds the count of (near) zero eigenvalues
        ds = dt.low_dim_embed(11, 3, 8, 0.05, seed=6)
        basis = kill.kill_nullspace(ds, 2)
        quad = act.catalog("quadratic")
        net = init_net("dzps", 50, 8, 19, "quadratic")
        sp = gram.eigen_sym(gram.build_G_finite(ds, net, quad))
        small = np.sum(np.abs(sp.eigenvalues) <= 1e-12 * sp.lam_max)
        assert small >= basis.dim
