import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steklab import geometry as geo
from steklab import meshing as msh
from steklab import steklov as stk
from steklab.profile import richardson_extrapolate
from tests.conftest import fit_slope

# separation of variables on the unit disk: 0, then each positive integer twice
DISK_SPECTRUM = np.array([0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0])


@pytest.fixture(scope="module")
def disk_system(disk_mesh_cache):
    return stk.assemble(disk_mesh_cache(4), geo.identity_chart(2))


@pytest.fixture(scope="module")
def disk_spectrum(disk_system):
    return stk.solve_steklov(disk_system, 5)


class TestAssemble:
    def test_stiffness_annihilates_constants(self, disk_system):
        ones = np.ones(disk_system.num_dofs)
        assert np.max(np.abs(disk_system.stiffness @ ones)) <= 1e-10

    def test_stiffness_symmetric(self, disk_system):
        K = disk_system.stiffness
        assert abs(K - K.T).max() <= 1e-14

    def test_boundary_mass_on_boundary_only(self, disk_system):
        M = disk_system.boundary_mass.tocoo()
        bset = set(disk_system.boundary_dof_index.tolist())
        assert set(M.row.tolist()) <= bset
        assert set(M.col.tolist()) <= bset

    def test_disk_boundary_mass_is_perimeter(self, disk_mesh_cache):
        errs = []
        for L in (3, 4, 5):
            sys_ = stk.assemble(disk_mesh_cache(L), geo.identity_chart(2))
            errs.append(abs(sys_.total_boundary_measure() - 2 * np.pi))
        assert fit_slope([2.0**-L for L in (3, 4, 5)], errs) >= 1.8

    def test_sphere_chart_boundary_mass(self, sphere, disk_mesh_cache):
        # geodesic circle of radius 0.2 on the unit sphere, rescaled by 1/r
        chart = geo.pullback_ball_chart(sphere, sphere.base_point(), 0.2)
        sys_ = stk.assemble(disk_mesh_cache(6), chart)
        exact = 2 * np.pi * np.sin(0.2) / 0.2
        assert sys_.total_boundary_measure() == pytest.approx(exact, abs=2e-4)

    def test_vertex_outside_chart_domain(self, disk_mesh_cache):
        tiny = geo.identity_chart(2, domain_radius=0.5)
        with pytest.raises(geo.ChartDomainError):
            stk.assemble(disk_mesh_cache(2), tiny)


class TestSolve:
    def test_disk_oracle_eigenvalues(self, disk_spectrum):
        ev = disk_spectrum.eigenvalues
        assert abs(ev[0]) <= 1e-8
        for j in (1, 2):
            assert abs(ev[j] - 1.0) <= 5e-3
        for j in (3, 4):
            assert abs(ev[j] - 2.0) <= 1e-2

    def test_constant_first_eigenvector(self, disk_spectrum):
        u0 = disk_spectrum.eigenvectors[:, 0]
        assert np.std(u0) / np.abs(np.mean(u0)) <= 1e-6

    def test_nu2_eigenvector_is_coordinate_span(self, disk_system, disk_spectrum):
        span = disk_system.mesh.vertices
        corr = stk.boundary_correlation(disk_system, disk_spectrum.eigenvectors[:, 1],
                                        span)
        assert corr >= 0.999

    def test_nontrivial_eigenvectors_boundary_mean_zero(self, disk_system,
                                                        disk_spectrum):
        M = disk_system.boundary_mass
        ones = np.ones(disk_system.num_dofs)
        for j in range(1, 5):
            mean = abs(ones @ (M @ disk_spectrum.eigenvectors[:, j]))
            assert mean <= 1e-8

    def test_rayleigh_quotient_matches_eigenvalue(self, disk_system, disk_spectrum):
        for j in range(1, 5):
            u = disk_spectrum.eigenvectors[:, j]
            rq = stk.rayleigh_quotient(disk_system, u)
            nu = disk_spectrum.eigenvalues[j]
            assert abs(rq - nu) / nu <= 1e-9

    def test_k_consistency(self, disk_system):
        a = stk.solve_steklov(disk_system, 3).eigenvalues
        b = stk.solve_steklov(disk_system, 6).eigenvalues
        assert np.max(np.abs(a - b[:3])) <= 1e-10

    def test_schur_agrees_with_shift_invert(self, disk_mesh_cache):
        sys_ = stk.assemble(disk_mesh_cache(3), geo.identity_chart(2))
        a = stk.solve_steklov(sys_, 5, method="schur").eigenvalues
        b = stk.solve_steklov(sys_, 5, method="shift_invert").eigenvalues
        assert np.max(np.abs(a - b)) <= 1e-10

    def test_k_bounds(self, disk_system):
        with pytest.raises(ValueError):
            stk.solve_steklov(disk_system, 1)
        with pytest.raises(ValueError):
            stk.solve_steklov(disk_system, 10**6)

    def test_mesh_convergence_second_order(self, disk_mesh_cache):
        errs = []
        for L in (3, 4, 5):
            sys_ = stk.assemble(disk_mesh_cache(L), geo.identity_chart(2))
            errs.append(abs(stk.solve_steklov(sys_, 2).eigenvalues[1] - 1.0))
        slope = fit_slope([2.0**-L for L in (3, 4, 5)], errs)
        assert 1.5 <= slope <= 2.5

    def test_rescaling_contract(self):
        # a disk of radius rho carries eigenvalues nu_k / rho
        rho = 1.6
        chart = geo.identity_chart(2)
        unit = stk.solve_steklov(
            stk.assemble(msh.unit_ball_mesh(2, 4), chart), 4).eigenvalues
        big = stk.solve_steklov(
            stk.assemble(msh.star_domain_mesh(
                lambda t: np.full_like(np.asarray(t, dtype=float), rho), 4), chart),
            4).eigenvalues
        assert np.max(np.abs(big[1:] * rho - unit[1:])) <= 5e-3

    def test_brock_sum_on_disk(self, disk_spectrum):
        s = 1.0 / disk_spectrum.eigenvalues[1] + 1.0 / disk_spectrum.eigenvalues[2]
        assert abs(s - 2.0) <= 0.01

    def test_cap_eigenvalue_oracle(self, sphere, hyperbolic, disk_mesh_cache):
        # conformal images of round caps: nu2 = 1/sin(r) and 1/sinh(r)
        for m, exact in ((sphere, 0.3 / np.sin(0.3)), (hyperbolic, 0.3 / np.sinh(0.3))):
            chart = geo.pullback_ball_chart(m, m.base_point(), 0.3)
            nus = [stk.solve_steklov(stk.assemble(disk_mesh_cache(L), chart), 2)
                   .eigenvalues[1] for L in (4, 5)]
            rich = richardson_extrapolate(nus[0], nus[1])
            assert rich == pytest.approx(exact, abs=5e-7)


class TestRayleighQuotient:
    def test_projected_coordinate_near_unit(self, disk_system):
        u = stk.boundary_coordinate_vector(disk_system, 0)
        assert stk.rayleigh_quotient(disk_system, u) == pytest.approx(1.0, abs=5e-3)

    def test_scale_invariance(self, disk_system):
        u = disk_system.mesh.vertices[:, 0] + disk_system.mesh.vertices[:, 1]
        a = stk.rayleigh_quotient(disk_system, u)
        b = stk.rayleigh_quotient(disk_system, 2.75 * u)
        assert b == pytest.approx(a, rel=1e-13)

    def test_null_vector_rejected(self, disk_system):
        interior = np.setdiff1d(np.arange(disk_system.num_dofs),
                                disk_system.boundary_dof_index)
        u = np.zeros(disk_system.num_dofs)
        u[interior[0]] = 1.0
        with pytest.raises(ValueError):
            stk.rayleigh_quotient(disk_system, u)


class TestSpectrumSerialization:
    def test_json_shape(self, disk_spectrum):
        payload = json.loads(disk_spectrum.to_json())
        assert set(payload) == {"eigenvalues", "mesh_level", "chart_id", "residuals"}
        assert payload["mesh_level"] == 4
        assert len(payload["eigenvalues"]) == 5
        assert all(r <= 1e-9 for r in payload["residuals"])


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0))
def test_rayleigh_scaling_property(scale):
    mesh = msh.unit_ball_mesh(2, 2)
    sys_ = stk.assemble(mesh, geo.identity_chart(2))
    u = mesh.vertices[:, 0]
    assert stk.rayleigh_quotient(sys_, scale * u) == pytest.approx(
        stk.rayleigh_quotient(sys_, u), rel=1e-12)
