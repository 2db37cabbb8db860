import math

import numpy as np
import pytest
from hypothesis import assume, given, settings

from fifkit.errors import ContinuityError, DomainError, NonConvergenceError, PreconditionError
from fifkit.fif1d import (
    FixedPointConfig,
    GridFunction1D,
    branch_jumps,
    build_g0,
    check_fixed_point_identity,
    check_g0_qn_relation,
    compare_with_classical,
    endpoint_violation_experiment,
    eval_exact,
    fixed_point,
    integrate_closed_form,
    integrate_quadrature,
    iterate,
    knot_residual,
    midpoint_rule,
    modulus_of_continuity,
    rb_apply,
    sample,
)
from fifkit.ifs1d import DataSet1D, build_ifs

from conftest import ifs_systems


def test_config_guards():
    for bad in (dict(tol=0), dict(max_iter=0), dict(resolution=0)):
        with pytest.raises(ValueError):
            FixedPointConfig(**bad)


class TestOperator:
    def test_g0_is_fixed_when_alpha_zero(self, tent):
        ifs = build_ifs(tent, (0.0, 0.0))
        g = sample(tent, build_g0(tent), 64)
        assert np.array_equal(rb_apply(ifs, g).samples, g.samples)

    def test_rejects_wrong_end_values(self, tent_ifs):
        g = sample(tent_ifs.data, lambda t: np.ones_like(t), 16)
        with pytest.raises(DomainError):
            rb_apply(tent_ifs, g)

    def test_rejects_perturbed_system(self, tent_ifs):
        bad = tent_ifs.with_vmap(1, q0=0.1)
        g = sample(tent_ifs.data, build_g0(tent_ifs.data), 16)
        with pytest.raises((ContinuityError, DomainError)):
            rb_apply(bad, g)
        # non-strict mode still runs
        rb_apply(bad, g, strict=False)

    def test_one_step_by_hand(self, tent_ifs):
        # T g0 at t=0.25: u=0.5, F_1 = 0.3*1 + 0.5 = 0.8
        g = sample(tent_ifs.data, build_g0(tent_ifs.data), 4)
        assert rb_apply(tent_ifs, g).samples.tolist() == pytest.approx([0.0, 0.8, 1.0, 0.8, 0.0])

    def test_non_convergence_carries_residual(self, tent_ifs):
        with pytest.raises(NonConvergenceError) as info:
            fixed_point(tent_ifs, FixedPointConfig(tol=1e-13, max_iter=3))
        assert info.value.iterations == 3
        assert info.value.residual > 1e-13


class TestFixedPoint:
    def test_tent_knots(self, tent_ifs):
        f = fixed_point(tent_ifs)
        assert knot_residual(tent_ifs, f) <= 1e-12
        # sup change contracts by alpha = 0.3; the dyadic lattice is exact
        # after 12 levels so the final change is zero
        h = np.array(f.history)[:-1]
        assert f.history[-1] == 0.0
        assert np.allclose(h[1:] / h[:-1], 0.3, atol=1e-6)

    def test_tent_exact_points(self, tent_ifs):
        f = fixed_point(tent_ifs)
        t, x = eval_exact(tent_ifs, (1, 1), 1.0)
        # w_1(w_1(1, 0)): (0.5, 1.0) then (0.25, 0.3 + 0.5)
        assert (t, x) == pytest.approx((0.25, 0.8))
        assert f(t) == pytest.approx(x, abs=1e-9)
        t, x = eval_exact(tent_ifs, (1, 1), 0.5)
        assert (t, x) == pytest.approx((0.125, 0.49))
        assert f(t) == pytest.approx(x, abs=1e-9)

    def test_eval_exact_off_knot(self, tent_ifs):
        with pytest.raises(DomainError):
            eval_exact(tent_ifs, (1,), 0.3)
        with pytest.raises(DomainError):
            eval_exact(tent_ifs, (3,), 0.5)

    @settings(max_examples=30, deadline=None)
    @given(ifs_systems())
    def test_knots_interpolated(self, ifs):
        f = fixed_point(ifs, FixedPointConfig(resolution=4096))
        assert knot_residual(ifs, f) <= 1e-9 * ifs.data.scale

    @settings(max_examples=20, deadline=None)
    @given(ifs_systems(max_n=4, uniform=True))
    def test_exact_addresses_match_lattice(self, ifs):
        # with dyadic knots every short address lands on a lattice node
        assume(ifs.N in (2, 4))
        f = fixed_point(ifs)
        for addr in [(1,), (ifs.N,), (1, ifs.N), (ifs.N, 1, 2)]:
            for t0 in ifs.data.knots:
                t, x = eval_exact(ifs, addr, t0)
                assert abs(f(t) - x) <= 1e-9 * ifs.data.scale

    def test_alpha_zero_is_polyline(self):
        data = DataSet1D((0.0, 0.25, 0.5, 1.0), (1.0, -1.0, 2.0, 0.5))
        ifs = build_ifs(data, (0.0, 0.0, 0.0))
        f = fixed_point(ifs)
        assert np.max(np.abs(f.samples - build_g0(data)(f.grid))) <= 1e-12

    def test_branches_agree_at_fixed_point(self, tent_ifs):
        f = fixed_point(tent_ifs)
        assert np.max(branch_jumps(tent_ifs, f)) <= 1e-12


class TestIdentities:
    @settings(max_examples=40, deadline=None)
    @given(ifs_systems(on_lattice=False))
    def test_g0_qn_relation(self, ifs):
        assert check_g0_qn_relation(ifs) <= 1e-9 * ifs.data.scale * (1 + max(map(abs, ifs.data.knots)))

    @settings(max_examples=20, deadline=None)
    @given(ifs_systems())
    def test_fixed_point_identity(self, ifs):
        f = fixed_point(ifs)
        assert check_fixed_point_identity(ifs, f) <= 1e-9 * ifs.data.scale


class TestIntegral:
    def test_tent_five_sevenths(self, tent_ifs):
        assert abs(integrate_closed_form(tent_ifs) - 5 / 7) <= 1e-12

    def test_alpha_zero_trapezoid(self):
        data = DataSet1D((0.0, 0.25, 0.5, 1.0), (1.0, -1.0, 2.0, 0.5))
        ifs = build_ifs(data, (0.0, 0.0, 0.0))
        assert integrate_closed_form(ifs) == pytest.approx(np.trapezoid(data.x, data.t), abs=1e-14)

    def test_shifted_interval(self):
        # tent on [2, 4] with doubled heights has integral 2 * 2 * 5/7
        ifs = build_ifs(DataSet1D((2.0, 3.0, 4.0), (0.0, 2.0, 0.0)), (0.3, 0.3))
        assert integrate_closed_form(ifs) == pytest.approx(20 / 7, abs=1e-12)

    def test_geometric_series_oracle(self, tent_ifs):
        # I = sum_k (sum a alpha)^k * sum a int q  for the tent: 0.5 * 0.3 * 2 = 0.3
        base = 0.5 * 0.5 + 0.5 * 0.5  # sum a_n int q_n
        series = sum(base * 0.3**k for k in range(200))
        assert integrate_closed_form(tent_ifs) == pytest.approx(series, abs=1e-14)

    def test_quadrature_agrees(self, tent_ifs):
        q = integrate_quadrature(tent_ifs, FixedPointConfig(resolution=65536))
        assert abs(q - 5 / 7) <= 1e-4

    def test_midpoint_exact_on_linear(self):
        g = GridFunction1D(np.linspace(0, 2, 9), np.linspace(0, 2, 9) * 3 + 1)
        assert midpoint_rule(g) == pytest.approx(8.0)

    @settings(max_examples=20, deadline=None)
    @given(ifs_systems(max_n=4, max_alpha=0.6))
    def test_closed_form_vs_quadrature(self, ifs):
        q = integrate_quadrature(ifs, FixedPointConfig(resolution=8192))
        assert abs(q - integrate_closed_form(ifs)) <= 1e-3 * ifs.data.scale


class TestComparison:
    def test_modulus_of_linear(self):
        g = GridFunction1D(np.linspace(0, 1, 101), 2 * np.linspace(0, 1, 101))
        assert modulus_of_continuity(g, 0.1) == pytest.approx(0.2)

    def test_modulus_brute_force(self):
        rng = np.random.default_rng(3)
        grid = np.linspace(0, 1, 201)
        g = GridFunction1D(grid, rng.normal(size=201))
        h = 0.037
        d = np.abs(grid[:, None] - grid[None, :]) <= h + 1e-12
        brute = np.max(np.abs(g.samples[:, None] - g.samples[None, :])[d])
        assert modulus_of_continuity(g, h) == pytest.approx(brute)

    def test_tent_bound(self, tent, tent_ifs):
        rep = compare_with_classical(tent, tent_ifs)
        assert rep.bound_holds
        assert rep.w_f == pytest.approx(1.0, abs=1e-3)
        assert rep.alpha_inf == 0.3

    def test_requires_uniform(self):
        data = DataSet1D((0.0, 0.2, 1.0), (0.0, 1.0, 0.0))
        with pytest.raises(PreconditionError):
            compare_with_classical(data, build_ifs(data, (0.1, 0.1)))

    @settings(max_examples=15, deadline=None)
    @given(ifs_systems(uniform=True))
    def test_bound_property(self, ifs):
        assert compare_with_classical(ifs.data, ifs).bound_holds


class TestViolation:
    def test_tent(self, tent_ifs):
        rep = endpoint_violation_experiment(tent_ifs, 1, 0.1)
        assert rep.integral_shift == pytest.approx(1 / 14, abs=1e-12)
        assert rep.max_jump == pytest.approx(0.1, abs=1e-9)
        assert rep.knot_residual > 0.05

    def test_shift_matches_closed_form_difference(self, tent_ifs):
        bad = tent_ifs.with_vmap(2, q0=tent_ifs.vmaps[1].q0 - 0.25)
        rep = endpoint_violation_experiment(tent_ifs, 2, -0.25)
        diff = integrate_closed_form(bad) - integrate_closed_form(tent_ifs)
        assert rep.integral_shift == pytest.approx(diff, abs=1e-12)

    def test_zero_delta_is_harmless(self, tent_ifs):
        rep = endpoint_violation_experiment(tent_ifs, 1, 0.0)
        assert rep.integral_shift == 0.0
        assert rep.max_jump <= 1e-12
        assert rep.knot_residual <= 1e-12

    def test_index_guard(self, tent_ifs):
        with pytest.raises(IndexError):
            endpoint_violation_experiment(tent_ifs, 0, 0.1)

    def test_perturbed_iteration_still_converges(self, tent_ifs):
        bad = tent_ifs.with_vmap(1, q0=0.1)
        g = iterate(bad, FixedPointConfig(), strict=False)
        assert math.isfinite(g.samples.sum())


class TestWorkedExamples:
    def test_g0_slopes(self, tent):
        assert build_g0(tent).slopes.tolist() == [2.0, -2.0]
        g = build_g0(DataSet1D((0.0, 1.0, 2.0), (1.0, 3.0, 2.0)))
        assert g.slopes.tolist() == [2.0, -1.0]
        assert g.intercepts.tolist() == [1.0, 4.0]
        c = build_g0(DataSet1D((0.0, 1.0, 2.0), (1.5, 1.5, 1.5)))
        assert c.slopes.tolist() == [0.0, 0.0] and c.intercepts.tolist() == [1.5, 1.5]

    def test_tent_iteration_count(self, tent_ifs):
        tol = 1e-12
        f = fixed_point(tent_ifs, FixedPointConfig(tol=tol))
        assert len(f.history) <= math.ceil(math.log(tol) / math.log(0.3)) + 2
        assert f(0.5) == 1.0

    def test_alpha_zero_one_iteration(self, tent):
        f = fixed_point(build_ifs(tent, (0.0, 0.0)))
        assert len(f.history) == 1

    def test_slow_rate_fails(self):
        ifs = build_ifs(DataSet1D((0.0, 0.5, 1.0), (0.0, 1.0, 0.5)), (0.9, 0.9))
        with pytest.raises(NonConvergenceError):
            fixed_point(ifs, FixedPointConfig(tol=1e-12, max_iter=2))

    def test_eval_exact_empty_address(self, tent_ifs):
        assert eval_exact(tent_ifs, (), 0.5) == (0.5, 1.0)
        assert eval_exact(tent_ifs, (1,), 0.5) == (0.25, 0.8)

    def test_g0_relation_examples(self, tent, tent_ifs):
        assert check_g0_qn_relation(tent_ifs) <= 1e-12
        assert check_g0_qn_relation(build_ifs(tent, (0.0, 0.0))) == 0.0
        bad = tent_ifs.with_vmap(1, q0=0.1)
        assert check_g0_qn_relation(bad) == pytest.approx(0.1, abs=1e-12)

    def test_identity_examples(self, tent, tent_ifs):
        assert check_fixed_point_identity(tent_ifs, fixed_point(tent_ifs)) <= 1e-9
        g0 = sample(tent, build_g0(tent), 4096)
        assert check_fixed_point_identity(build_ifs(tent, (0.0, 0.0)), g0) == 0.0
        # direct evaluation: g0 - r = g0 on the tent (r = 0), so the residual is 0.3 * max g0
        # taking every lattice point includes t = 0.25 where that maximum sits
        assert check_fixed_point_identity(tent_ifs, g0, samples=5000) == pytest.approx(0.3, abs=1e-12)

    def test_integral_examples(self, tent):
        assert integrate_closed_form(build_ifs(tent, (0.0, 0.0))) == 0.5
        zero = build_ifs(DataSet1D((0.0, 0.3, 1.0), (0.0, 0.0, 0.0)), (0.5, -0.2))
        assert integrate_closed_form(zero) == 0.0
        assert integrate_quadrature(build_ifs(tent, (0.0, 0.0)), FixedPointConfig(resolution=2)) == 0.5
        const = build_ifs(DataSet1D((0.0, 0.5, 1.0), (2.5, 2.5, 2.5)), (0.4, 0.4))
        assert integrate_quadrature(const) == pytest.approx(2.5, abs=1e-12)
        assert integrate_closed_form(const) == pytest.approx(2.5, abs=1e-12)

    def test_comparison_examples(self, tent):
        rep = compare_with_classical(tent, build_ifs(tent, (0.0, 0.0)))
        assert rep.sup_diff == 0.0 and rep.bound_holds
        data = DataSet1D((0.0, 0.5, 1.0), (1.0, 2.0, 1.5))
        rep = compare_with_classical(data, build_ifs(data, (0.9, 0.9)))
        assert rep.bound_rhs - rep.w_f == pytest.approx(18 * rep.f_inf)
        assert rep.bound_holds
