import math

import numpy as np
import pytest
import sympy as sym
from hypothesis import given, settings
from hypothesis import strategies as st

from pipeflow import geometry
from pipeflow.fem import FESpace, assembly
from pipeflow.fem import quadrature as quad
from pipeflow.fem.assembly import negative_part


@pytest.fixture(scope="module")
def square_space():
    spec = geometry.channel_spec(0.25, 0.75, 0.5)
    mesh = geometry.generate_mesh(spec, 0.125)
    return FESpace(mesh, spec)


class TestQuadrature:
    def test_triangle_rule_degree6(self):
        # exact integral of x^p y^q over the reference triangle is p! q! / (p+q+2)!
        for p in range(7):
            for q in range(7 - p):
                exact = math.factorial(p) * math.factorial(q) / math.factorial(p + q + 2)
                approx = np.sum(quad.TRI_WEIGHTS * quad.TRI_POINTS[:, 0] ** p * quad.TRI_POINTS[:, 1] ** q)
                assert abs(approx - exact) < 1e-12, (p, q)

    def test_edge_rule_degree7(self):
        for p in range(8):
            approx = np.sum(quad.EDGE_WEIGHTS * quad.EDGE_POINTS**p)
            assert abs(approx - 1.0 / (p + 1)) < 1e-14

    def test_p2_partition_of_unity(self):
        pts = np.random.default_rng(0).uniform(0, 0.5, (20, 2))
        assert np.allclose(quad.p2_values(pts).sum(axis=1), 1.0, atol=1e-13)
        assert np.allclose(quad.p2_gradients(pts).sum(axis=1), 0.0, atol=1e-13)

    def test_mapped_polynomial_vs_symbolic(self):
        # one skewed triangle, random degree-6 polynomial, symbolic oracle
        verts = np.array([[0.2, -0.1], [1.1, 0.3], [0.4, 0.9]])
        rng = np.random.default_rng(1)
        x, y, s, t = sym.symbols("x y s t")
        poly = sum(float(rng.standard_normal()) * x**p * y**q
                   for p in range(7) for q in range(7 - p))
        v0, v1, v2 = verts
        xs = v0[0] + (v1[0] - v0[0]) * s + (v2[0] - v0[0]) * t
        ys = v0[1] + (v1[1] - v0[1]) * s + (v2[1] - v0[1]) * t
        jac = abs((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0]))
        exact = float(sym.integrate(sym.integrate(poly.subs({x: xs, y: ys}) * jac,
                                                  (t, 0, 1 - s)), (s, 0, 1)))
        f = sym.lambdify((x, y), poly, "numpy")
        pts = v0 + quad.TRI_POINTS[:, :1] * (v1 - v0) + quad.TRI_POINTS[:, 1:] * (v2 - v0)
        approx = jac * np.sum(quad.TRI_WEIGHTS * f(pts[:, 0], pts[:, 1]))
        assert abs(approx - exact) < 1e-12 * max(1.0, abs(exact))


class TestStiffnessAndMass:
    def test_single_triangle_zero_row_sums(self):
        mesh = geometry.Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                             np.array([[0, 1, 2]], dtype=np.int32),
                             np.array([[0, 1], [1, 2], [2, 0]], dtype=np.int32),
                             np.array([1, 1, 1], dtype=np.int32),
                             np.array([0], dtype=np.int32))
        k = assembly.assemble_stiffness(FESpace(mesh)).to_dense()
        assert k.shape == (12, 12)
        assert np.abs(k.sum(axis=1)).max() < 1e-13

    def test_linear_field_energy_equals_area(self, square_space):
        u = square_space.interpolate_velocity(lambda p: np.column_stack([p[:, 0], np.zeros(len(p))]))
        k = assembly.assemble_stiffness(square_space)
        assert u @ k.matvec(u) == pytest.approx(1.0, abs=1e-12)

    def test_energy_convergence_rate(self):
        # energy of a smooth interpolated field converges at O(h^2) pace
        exact = 0.5 + np.sin(2.0) / 4.0  # integral of cos(x)^2 over the unit-square channel
        def field(p):
            return np.column_stack([np.sin(p[:, 0]), np.zeros(len(p))])
        errs = []
        for h in (0.25, 0.125, 0.0625):
            spec = geometry.channel_spec(0.25, 0.75, 0.5)
            space = FESpace(geometry.generate_mesh(spec, h), spec)
            u = space.interpolate_velocity(field)
            k = assembly.assemble_stiffness(space)
            errs.append(abs(u @ k.matvec(u) - exact))
        assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0

    def test_velocity_mass_integrates_constants(self, square_space):
        m = assembly.assemble_velocity_mass(square_space)
        ones = square_space.interpolate_velocity(lambda p: np.ones((len(p), 2)))
        assert ones @ m.matvec(ones) == pytest.approx(2.0, abs=1e-12)  # 2 components * area


class TestDivergence:
    def test_constant_field_zero(self, square_space):
        b = assembly.assemble_divergence(square_space)
        v = square_space.interpolate_velocity(lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))]))
        assert np.abs(b.matvec(v)).max() < 1e-13

    def test_linear_field_pairing(self, square_space):
        b = assembly.assemble_divergence(square_space)
        v = square_space.interpolate_velocity(lambda p: np.column_stack([p[:, 0], np.zeros(len(p))]))
        assert np.ones(square_space.n_pdofs) @ b.matvec(v) == pytest.approx(1.0, abs=1e-12)

    def test_xy_field_pairing_two_area(self, square_space):
        b = assembly.assemble_divergence(square_space)
        v = square_space.interpolate_velocity(lambda p: p)
        assert np.ones(square_space.n_pdofs) @ b.matvec(v) == pytest.approx(2.0, abs=1e-12)


class TestConvection:
    def test_zero_transport(self, square_space):
        c = assembly.assemble_convection(square_space, np.zeros(square_space.n_vdofs))
        assert c.to_scipy().nnz == 0 or np.abs(c.data).max() < 1e-15

    def test_skew_boundary_identity_random(self, square_space):
        # <C_skew(a) v, v> equals the boundary flux term exactly, any a, v
        rng = np.random.default_rng(2)
        space = square_space
        for _ in range(5):
            a = rng.standard_normal(space.n_vdofs)
            v = rng.standard_normal(space.n_vdofs)
            c = assembly.assemble_convection(space, a, assembly.SKEW)
            lhs = v @ c.matvec(v)
            all_edges = np.arange(len(space.bedge_tags))
            an = assembly.boundary_normal_trace(space, a, all_edges)
            v_q = assembly.trace_at_quadrature(space, v, all_edges)
            v2 = np.einsum("eqc,eqc->eq", v_q, v_q)
            w = space.edge_w[None, :] * space.bedge_length[all_edges, None]
            rhs = 0.5 * float(np.sum(w * an * v2))
            assert abs(lhs - rhs) < 1e-13 * max(1.0, abs(rhs))

    def test_convective_vs_symbolic(self, square_space):
        # divergence-free quadratic transport against a symbolic oracle
        x, y = sym.symbols("x y")
        a_sym = (sym.Rational(1, 2) + y**2, sym.Rational(0))  # div-free
        u_sym = (x * y, -y * x)
        v_sym = (x + y**2, x**2 - y)
        integrand = sum((a_sym[0] * sym.diff(u_sym[c], x) + a_sym[1] * sym.diff(u_sym[c], y)) * v_sym[c]
                        for c in range(2))
        exact = float(sym.integrate(sym.integrate(integrand, (y, sym.Rational(-1, 2), sym.Rational(1, 2))),
                                    (x, 0, 1)))
        space = square_space
        def mk(fx, fy):
            f = sym.lambdify((x, y), (fx, fy), "numpy")
            return space.interpolate_velocity(
                lambda p: np.column_stack(np.broadcast_arrays(*f(p[:, 0], p[:, 1]))))
        a, u, v = mk(*a_sym), mk(*u_sym), mk(*v_sym)
        c = assembly.assemble_convection(space, a, assembly.CONVECTIVE)
        assert v @ c.matvec(u) == pytest.approx(exact, abs=1e-10)

    def test_transport_derivative_consistency(self, square_space):
        # directional derivative of a -> C(a)u matches the coupling matrix
        rng = np.random.default_rng(3)
        space = square_space
        u = rng.standard_normal(space.n_vdofs)
        a = rng.standard_normal(space.n_vdofs)
        da = rng.standard_normal(space.n_vdofs)
        for form in (assembly.CONVECTIVE, assembly.SKEW):
            g = assembly.assemble_transport_derivative(space, u, form)
            h = 1e-7
            cp = assembly.assemble_convection(space, a + h * da, form).matvec(u)
            cm = assembly.assemble_convection(space, a - h * da, form).matvec(u)
            fd = (cp - cm) / (2 * h)
            assert np.allclose(g.matvec(da), fd, atol=1e-6 * max(1.0, np.abs(fd).max()))


class TestNegativePartKernel:
    def test_pointwise_values(self):
        assert negative_part(-2.0) == 2.0
        assert negative_part(3.0) == 0.0
        assert negative_part(0.0) == 0.0

    @given(st.floats(-10, 10))
    @settings(max_examples=200)
    def test_sign_properties(self, z):
        nz = negative_part(z)
        assert z + nz >= 0.0          # (z + |z|)/2
        assert 2 * z * z + nz * z >= -1e-15 * max(1.0, z * z)


class TestDDNBoundary:
    def test_pure_outflow_zero(self, square_space):
        space = square_space
        w = space.interpolate_velocity(lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))]))
        wstar = np.zeros(space.n_vdofs)
        mat, load = assembly.assemble_ddn_boundary(space, w, wstar)
        assert mat.to_scipy().nnz == 0 or np.abs(mat.data).max() < 1e-15
        assert np.abs(load).max() < 1e-15

    def test_constant_backflow_is_half_boundary_mass(self, square_space):
        space = square_space
        w = space.interpolate_velocity(lambda p: np.column_stack([-np.ones(len(p)), np.zeros(len(p))]))
        mat, _ = assembly.assemble_ddn_boundary(space, w, np.zeros(space.n_vdofs))
        edge_ids = space.boundary_edge_ids(geometry.OUTLET)
        ones = np.ones((len(edge_ids), len(space.edge_w)))
        mass = assembly.boundary_weighted_mass(space, edge_ids, ones)
        assert np.abs((mat.to_scipy() - 0.5 * mass.to_scipy()).toarray()).max() < 1e-12

    def test_positive_semidefinite(self, square_space):
        space = square_space
        rng = np.random.default_rng(4)
        w = rng.standard_normal(space.n_vdofs)
        mat, _ = assembly.assemble_ddn_boundary(space, w, np.zeros(space.n_vdofs))
        ms = mat.to_scipy()
        for _ in range(1000):
            v = rng.standard_normal(space.n_vdofs)
            assert v @ (ms @ v) >= -1e-12

    def test_load_matches_matrix_times_reference(self, square_space):
        space = square_space
        rng = np.random.default_rng(5)
        w = rng.standard_normal(space.n_vdofs)
        wstar = rng.standard_normal(space.n_vdofs)
        mat, load = assembly.assemble_ddn_boundary(space, w, wstar)
        assert np.allclose(load, mat.matvec(wstar), atol=1e-14)


class TestOutletTraction:
    def test_zero(self, square_space):
        assert np.abs(assembly.assemble_outlet_traction(square_space, 0.0)).max() == 0.0

    def test_constant_pairs_to_length(self, square_space):
        space = square_space
        load = assembly.assemble_outlet_traction(space, 1.0)
        nu = space.interpolate_velocity(lambda p: np.tile([1.0, 0.0], (len(p), 1)))
        assert nu @ load == pytest.approx(1.0, abs=1e-12)  # |outlet| = 1 here

    def test_linear_sigma_vs_symbolic(self, square_space):
        space = square_space
        load = assembly.assemble_outlet_traction(space, lambda p: p[:, 1])
        v = space.interpolate_velocity(lambda p: np.column_stack([p[:, 1] ** 2, p[:, 0]]))
        # int_{y=-1/2..1/2} y * y^2 dy = 0; phi.nu picks the x component
        assert v @ load == pytest.approx(0.0, abs=1e-12)
        v2 = space.interpolate_velocity(lambda p: np.column_stack([p[:, 1], p[:, 0]]))
        assert v2 @ load == pytest.approx(1.0 / 12.0, abs=1e-12)


class TestDirichletAndErrors:
    def test_zero_data_homogeneous(self, square_space):
        space = square_space
        system = assembly.MixedSystem(assembly.assemble_stiffness(space).to_scipy(),
                                      assembly.assemble_divergence(space).to_scipy(),
                                      np.zeros(space.n_vdofs), np.zeros(space.n_pdofs))
        reduced = assembly.apply_dirichlet(system, space, None)
        u, p = reduced.solve()
        assert np.abs(u).max() == 0.0 and np.abs(p).max() == 0.0

    def test_corner_conflict_warns(self, square_space):
        with pytest.warns(UserWarning):
            square_space.dirichlet_values(lambda p: np.ones((len(p), 2)))

    def test_error_norms_zero_for_interpolants(self, square_space):
        from pipeflow.fem.space import SolutionFields
        space = square_space
        u = space.interpolate_velocity(lambda p: np.column_stack([p[:, 0] * p[:, 1], p[:, 1] ** 2]))
        pr = space.interpolate_pressure(lambda p: 1.0 + 2 * p[:, 0] - p[:, 1])

        class Exact:
            @staticmethod
            def velocity(pts):
                return np.column_stack([pts[:, 0] * pts[:, 1], pts[:, 1] ** 2])

            @staticmethod
            def velocity_grad(pts):
                g = np.zeros((len(pts), 2, 2))
                g[:, 0, 0] = pts[:, 1]
                g[:, 0, 1] = pts[:, 0]
                g[:, 1, 1] = 2 * pts[:, 1]
                return g

            @staticmethod
            def pressure(pts):
                return 1.0 + 2 * pts[:, 0] - pts[:, 1]

        l2v, h1v, l2p = assembly.error_norms(space, SolutionFields(u, pr), Exact)
        assert l2v < 1e-13 and h1v < 1e-13 and l2p < 1e-13


class TestBackendAgreement:
    def test_kernels_match(self, square_space):
        from pipeflow.fem import kernels
        if "cy" not in kernels.available_backends():
            pytest.skip("compiled backend not built")
        space = square_space
        rng = np.random.default_rng(6)
        a = rng.standard_normal(space.n_vdofs)
        results = {}
        for name in ("py", "cy"):
            kernels.set_backend(name)
            results[name] = (
                assembly.assemble_stiffness(space).to_dense(),
                assembly.assemble_divergence(space).to_dense(),
                assembly.assemble_convection(space, a, assembly.SKEW).to_dense(),
                assembly.assemble_transport_derivative(space, a, assembly.SKEW).to_dense(),
            )
        kernels.set_backend("auto")
        for m_py, m_cy in zip(results["py"], results["cy"]):
            assert np.allclose(m_py, m_cy, atol=1e-12)

    def test_l4_matches(self, square_space):
        from pipeflow.fem import kernels
        if "cy" not in kernels.available_backends():
            pytest.skip("compiled backend not built")
        space = square_space
        rng = np.random.default_rng(7)
        v = rng.standard_normal(space.n_vdofs)
        elem = space.gather_velocity(v)
        out = {}
        for name in ("py", "cy"):
            kernels.set_backend(name)
            out[name] = kernels.get_backend().l4_value_grad(space.p2, space.wdet, elem)
        kernels.set_backend("auto")
        assert out["py"][0] == pytest.approx(out["cy"][0], rel=1e-13)
        assert np.allclose(out["py"][1], out["cy"][1], atol=1e-12)


def test_thread_chunking_is_deterministic(square_space, monkeypatch):
    space = square_space
    base = assembly.assemble_stiffness(space)
    monkeypatch.setenv("PIPEFLOW_THREADS", "4")
    threaded = assembly.assemble_stiffness(space)
    assert base.data.tobytes() == threaded.data.tobytes()
    assert base.indices.tobytes() == threaded.indices.tobytes()
