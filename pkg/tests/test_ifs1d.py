import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fifkit.errors import InvalidDataError, InvalidScalingError
from fifkit.ifs1d import (
    DataSet1D,
    Ifs1D,
    build_ifs,
    build_lmaps,
    solve_qn,
    validate_ifs,
)

from conftest import datasets, ifs_systems


class TestDataSet:
    def test_rejects_single_interval(self):
        with pytest.raises(InvalidDataError, match="N >= 2"):
            DataSet1D((0.0, 1.0), (0.0, 1.0))

    @pytest.mark.parametrize("knots", [(0, 0, 1), (0, 2, 1), (1, 0.5, 0)])
    def test_rejects_non_increasing(self, knots):
        with pytest.raises(InvalidDataError, match="strictly increasing"):
            DataSet1D(knots, (0, 1, 2))

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(InvalidDataError):
            DataSet1D((0, 0.5, 1), (0, bad, 0))
        with pytest.raises(InvalidDataError):
            DataSet1D((0, bad, 1), (0, 1, 0))

    def test_length_mismatch(self):
        with pytest.raises(InvalidDataError, match="length"):
            DataSet1D((0, 0.5, 1), (0, 1))


class TestBuildLmaps:
    def test_uniform_bisection(self, tent):
        L1, L2 = build_lmaps(tent)
        assert (L1.a, L1.b) == (0.5, 0.0)
        assert (L2.a, L2.b) == (0.5, 0.5)

    def test_non_uniform_endpoints(self):
        data = DataSet1D((0.0, 0.25, 1.0), (0, 0, 0))
        L1, L2 = build_lmaps(data)
        assert (L1.a, L2.a) == (0.25, 0.75)
        # substitution oracle
        assert L1(0.0) == 0.0 and L1(1.0) == 0.25
        assert L2(0.0) == 0.25 and L2(1.0) == 1.0

    @given(datasets(on_lattice=False))
    def test_endpoint_images(self, data):
        t = data.knots
        tol = 1e-12 * data.span
        for n, L in enumerate(build_lmaps(data), start=1):
            assert abs(L(t[0]) - t[n - 1]) <= tol
            assert abs(L(t[-1]) - t[n]) <= tol

    @given(datasets(on_lattice=False))
    def test_slopes_sum_to_one(self, data):
        assert math.isclose(sum(L.a for L in build_lmaps(data)), 1.0, rel_tol=1e-12)


class TestSolveQn:
    def test_tent_alpha_zero_gives_chords(self, tent):
        F1, F2 = solve_qn(tent, (0.0, 0.0))
        assert (F1.q1, F1.q0) == (1.0, 0.0)
        assert (F2.q1, F2.q0) == (-1.0, 1.0)

    def test_tent_alpha_03(self, tent):
        F1, F2 = solve_qn(tent, (0.3, 0.3))
        assert (F1.q1, F1.q0, F2.q1, F2.q0) == (1.0, 0.0, -1.0, 1.0)
        # both end point conditions, by substitution
        assert F1(0.0, 0.0) == 0.0 and F1(1.0, 0.0) == 1.0
        assert F2(0.0, 0.0) == 1.0 and F2(1.0, 0.0) == 0.0

    def test_line_through_origin(self):
        data = DataSet1D((0.0, 1.0, 3.0, 4.0), (0.0, 2.0, 6.0, 8.0))
        vmaps = solve_qn(data, (0.5, -0.7, 0.2))
        for n, F in enumerate(vmaps, start=1):
            assert F(0.0, 0.0) == pytest.approx(data.values[n - 1], abs=1e-14)
            assert F(4.0, 8.0) == pytest.approx(data.values[n], abs=1e-14)
        # hand solve: q1 = (x_1 - x_0 - alpha (x_N - x_0)) / span = (2 - 4) / 4
        assert vmaps[0].q1 == pytest.approx(-0.5)

    @pytest.mark.parametrize("alpha", [1.0, -1.0, 1.5, math.nan])
    def test_rejects_bad_alpha(self, tent, alpha):
        with pytest.raises(InvalidScalingError):
            solve_qn(tent, (0.3, alpha))

    def test_rejects_wrong_count(self, tent):
        with pytest.raises(InvalidScalingError, match="expected 2"):
            solve_qn(tent, (0.3,))

    @given(ifs_systems(max_alpha=0.99, on_lattice=False))
    def test_endpoint_conditions(self, ifs):
        d = ifs.data
        tol = 1e-9 * d.scale
        for n, F in enumerate(ifs.vmaps, start=1):
            assert abs(F(d.knots[0], d.values[0]) - d.values[n - 1]) <= tol
            assert abs(F(d.knots[-1], d.values[-1]) - d.values[n]) <= tol

    @given(ifs_systems(on_lattice=False), st.floats(-100, 100), st.floats(-5, 5), st.floats(-5, 5))
    def test_lipschitz_in_x_is_alpha(self, ifs, t, x, y):
        for F in ifs.vmaps:
            assert abs(F(t, x) - F(t, y)) == pytest.approx(abs(F.alpha) * abs(x - y), abs=1e-12 * (1 + abs(t)) * 100)


class TestBuildIfs:
    def test_tent_factors(self, tent_ifs):
        assert tent_ifs.s == 0.5
        assert tent_ifs.delta == 0.3
        assert validate_ifs(tent_ifs).passed

    def test_non_uniform(self):
        ifs = build_ifs(DataSet1D((0.0, 0.1, 1.0), (1.0, 2.0, 0.5)), (0.4, -0.4))
        assert ifs.a.tolist() == pytest.approx([0.1, 0.9])
        assert validate_ifs(ifs).passed

    def test_alpha_zero_maps_data_to_polyline(self, tent):
        ifs = build_ifs(tent, (0.0, 0.0))
        t = np.linspace(0, 1, 11)
        for n, (L, F) in enumerate(zip(ifs.lmaps, ifs.vmaps), start=1):
            # image of the data chord under w_n lies on the n-th polyline segment
            chord = np.interp(t, tent.knots, tent.values)
            img_t = L(t)
            assert np.allclose(F(t, chord), np.interp(img_t, tent.knots, tent.values))


class TestValidate:
    def test_well_built(self, tent_ifs):
        rep = validate_ifs(tent_ifs, tol=1e-9)
        assert rep.passed
        assert rep.max_residual <= 1e-12

    def test_perturbed_q0(self, tent_ifs):
        bad = tent_ifs.with_vmap(1, q0=tent_ifs.vmaps[0].q0 + 0.1)
        rep = validate_ifs(bad, tol=1e-9)
        assert not rep.passed
        # F_1(t_0, x_0) = x_0 residual picks up the whole shift
        assert rep.residuals[0][2] == pytest.approx(0.1, abs=1e-15)
        assert any("F(t0,x0)" in m for m in rep.failures())

    def test_alpha_one_flags_non_contractive(self, tent_ifs):
        bad = tent_ifs.with_vmap(1, alpha=1.0)
        rep = validate_ifs(bad)
        assert not rep.contractive
        assert not rep.passed
        assert any("non-contractive" in m for m in rep.failures())

    def test_from_raw_round_trip(self, tent_ifs):
        raw = Ifs1D.from_raw(tent_ifs.data, tent_ifs.a, tent_ifs.b, tent_ifs.alphas, tent_ifs.q1, tent_ifs.q0)
        assert raw == tent_ifs

    def test_with_vmap_index_guard(self, tent_ifs):
        with pytest.raises(IndexError):
            tent_ifs.with_vmap(3, q0=0.0)

    @settings(max_examples=50)
    @given(ifs_systems(on_lattice=False))
    def test_random_systems_validate(self, ifs):
        assert validate_ifs(ifs, tol=1e-9 * ifs.data.scale * (1 + max(abs(k) for k in ifs.data.knots))).passed
