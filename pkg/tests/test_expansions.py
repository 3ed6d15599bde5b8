import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steklab import expansions as exp_
from steklab import geometry as geo


class TestBallRadiusForm:
    def test_unit_sphere_value(self):
        # N=2, curvature floor 1, r=0.2: 5 + 0.4/12
        assert exp_.ball_nu2_expansion(0.2, 2, 1.0) == \
            pytest.approx(5.0333333333, abs=1e-9)

    def test_flat_reduces_to_leading(self):
        assert exp_.ball_nu2_expansion(0.37, 3, 0.0) == 1.0 / 0.37

    def test_hyperbolic_value(self):
        assert exp_.ball_nu2_expansion(0.2, 2, -1.0) == \
            pytest.approx(4.9666666667, abs=1e-9)

    def test_positive_radius_required(self):
        with pytest.raises(ValueError):
            exp_.ball_nu2_expansion(0.0, 2, 1.0)


class TestBallVolumeForm:
    def test_sphere_coefficient_is_s_over_16(self):
        pred = exp_.ball_nu2_volume_prediction(2, 1.0, 2.0)
        assert pred.coefficient == pytest.approx(1.0 / 8.0, abs=1e-15)

    def test_flat_profile(self):
        v = 0.37
        assert exp_.ball_nu2_of_volume(v, 2, 0.0, 0.0) == \
            pytest.approx((v / np.pi) ** -0.5, abs=1e-14)
        assert exp_.ball_nu2_of_volume(v, 3, 0.0, 0.0) == \
            pytest.approx((v / (4 * np.pi / 3)) ** (-1 / 3), abs=1e-14)

    def test_product_coefficient(self):
        pred = exp_.ball_nu2_volume_prediction(3, 0.0, 2.0)
        assert pred.coefficient == pytest.approx(-1.0 / 45.0, abs=1e-15)


class TestEllipsoidForms:
    def test_radius_form_value(self):
        assert exp_.ellipsoid_nu2_expansion(0.3, 3, 2.0) == \
            pytest.approx(3.36, abs=1e-9)

    def test_zero_curvature(self):
        assert exp_.ellipsoid_nu2_expansion(0.25, 3, 0.0) == 4.0

    def test_dim2_matches_ball_with_half_scalar(self):
        for r in (0.1, 0.2, 0.3):
            assert exp_.ellipsoid_nu2_expansion(r, 2, 2.0) == \
                pytest.approx(exp_.ball_nu2_expansion(r, 2, 1.0), abs=1e-15)

    def test_volume_form_value(self):
        got = exp_.ellipsoid_nu2_of_volume(0.1, 2, 2.0)
        assert got == pytest.approx(5.62729, abs=1e-5)

    def test_volume_coefficient_n2_is_s_over_16(self):
        pred = exp_.ellipsoid_nu2_volume_prediction(2, 2.0)
        assert pred.coefficient == pytest.approx(2.0 / 16.0, abs=1e-15)

    def test_ellipsoid_dominates_ball_when_ricci_spread(self):
        # coefficient difference is (2/(3(N+2))) (S/N - R_min) >= 0
        for N, S, R_min in ((3, 2.0, 0.0), (3, 1.0, 0.2), (2, 2.0, 1.0)):
            ce = exp_.ellipsoid_nu2_volume_prediction(N, S).coefficient
            cb = exp_.ball_nu2_volume_prediction(N, R_min, S).coefficient
            gap = (2.0 / (3 * (N + 2))) * (S / N - R_min)
            assert ce - cb == pytest.approx(gap, abs=1e-14)
            assert ce >= cb - 1e-14


class TestBallVolumeExpansion:
    def test_n2_value(self):
        assert exp_.ball_volume_expansion(0.2, 2, 2.0) == \
            pytest.approx(0.125245, abs=5e-7)

    def test_flat_exact(self):
        assert exp_.ball_volume_expansion(0.5, 3, 0.0) == \
            pytest.approx((4 * np.pi / 3) * 0.125, abs=1e-15)

    def test_n3_value(self):
        assert exp_.ball_volume_expansion(0.1, 3, 2.0) == \
            pytest.approx(0.0041860, abs=5e-8)


class TestSurfaceProfile:
    def test_round_sphere(self):
        assert exp_.wb_surface_profile(0.1, 2.0) == pytest.approx(5.62729, abs=1e-5)

    def test_flat(self):
        assert exp_.wb_surface_profile(0.1, 0.0) == \
            pytest.approx((0.1 / np.pi) ** -0.5, abs=1e-14)

    def test_hyperbolic(self):
        assert exp_.wb_surface_profile(0.1, -2.0) == pytest.approx(5.58268, abs=1e-5)

    def test_matches_ellipsoid_volume_form_at_n2(self):
        for v in (0.05, 0.1, 0.3):
            for S in (-2.0, 0.0, 2.0):
                assert exp_.wb_surface_profile(v, S) == \
                    pytest.approx(exp_.ellipsoid_nu2_of_volume(v, 2, S), abs=1e-13)


class TestBrockSum:
    def test_unit_disk_equality(self):
        total, ok = exp_.brock_sum_bound([1.0, 1.0])
        assert total == 2.0 and ok

    def test_n3_equality(self):
        total, ok = exp_.brock_sum_bound([1.0, 1.0, 1.0])
        assert total == 3.0 and ok

    def test_positive_required(self):
        with pytest.raises(ValueError):
            exp_.brock_sum_bound([1.0, 0.0])

    def test_perturbed_disk_strict(self, disk_mesh_cache):
        from steklab import meshing as msh
        from steklab import steklov as stk
        from steklab.domains import FourierStar
        star = FourierStar.from_modes({2: (0.08, 0.0)}).normalized()
        mesh = msh.star_domain_mesh(star.radius, 5)
        ev = stk.solve_steklov(stk.assemble(mesh, geo.identity_chart(2)), 3).eigenvalues
        total, ok = exp_.brock_sum_bound(ev[1:3], tolerance=1e-3)
        assert ok and total > 2.0


class TestPredictionObject:
    def test_evaluate_is_leading_plus_monomial(self):
        pred = exp_.ball_nu2_prediction(2, 1.0)
        for r in (0.05, 0.2, 0.4):
            assert pred.evaluate(r) == pred.leading(r) + pred.coefficient * pred.monomial(r)

    def test_formula_ids_distinct(self):
        ids = {
            exp_.ball_nu2_prediction(2, 1.0).formula_id,
            exp_.ellipsoid_nu2_prediction(2, 1.0).formula_id,
            exp_.ball_nu2_volume_prediction(2, 1.0, 2.0).formula_id,
            exp_.ellipsoid_nu2_volume_prediction(2, 2.0).formula_id,
            exp_.ball_volume_prediction(2, 2.0).formula_id,
            exp_.wb_surface_prediction(2.0).formula_id,
        }
        assert len(ids) == 6


class TestCompareProfiles:
    def test_hyperbolic_below_sphere(self, sphere, hyperbolic):
        rep = exp_.compare_profiles(hyperbolic, hyperbolic.base_point(),
                                    sphere, sphere.base_point(),
                                    [0.3, 0.2, 0.1, 0.05])
        assert rep.scalar_a == pytest.approx(-2.0)
        assert rep.scalar_b == pytest.approx(2.0)
        assert rep.predictor_ordering_all
        assert all(r.predictor_strict for r in rep.rows)

    def test_equal_manifolds_tied(self, sphere):
        rep = exp_.compare_profiles(sphere, sphere.base_point(),
                                    sphere, sphere.base_point(), [0.2, 0.1])
        assert all(r.predictor_a == r.predictor_b for r in rep.rows)
        assert not any(r.predictor_strict for r in rep.rows)

    def test_euclid_vs_sphere_computed_ordering(self, euclid2, sphere):
        rep = exp_.compare_profiles(euclid2, np.zeros(2), sphere,
                                    sphere.base_point(), [0.2, 0.1, 0.05],
                                    mesh_level=4)
        assert rep.predictor_ordering_all
        assert rep.matched_v_max == pytest.approx(0.2)
        assert all(r.computed_matches for r in rep.rows)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-4, max_value=5.0),
       st.floats(min_value=-5.0, max_value=5.0))
def test_dim2_consistency_identity(v, S):
    # the dimension-2 Ricci degeneracy makes both volume forms coincide
    a = exp_.ellipsoid_nu2_of_volume(v, 2, S)
    b = exp_.ball_nu2_of_volume(v, 2, S / 2.0, S)
    assert a == pytest.approx(b, rel=1e-14, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-4.0, max_value=4.0),
       st.floats(min_value=0.01, max_value=3.9))
def test_coefficient_monotone_in_scalar(S, dS):
    c1 = exp_.ellipsoid_nu2_volume_prediction(3, S).coefficient
    c2 = exp_.ellipsoid_nu2_volume_prediction(3, S + dS).coefficient
    assert c2 > c1
