import numpy as np
import pytest

from semigroup_lab import discretization as disc
from semigroup_lab import engine
from semigroup_lab import matrix_core as mc


def test_grid_descriptor():
    g = disc.GridDescriptor(0.0, 1.0, 5)
    assert g.h == 0.25
    np.testing.assert_allclose(g.nodes, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(disc.DiscretizationError):
        disc.GridDescriptor(0.0, 1.0, 2)
    with pytest.raises(disc.DiscretizationError):
        disc.GridDescriptor(1.0, 1.0, 5)


# --- Schroedinger on a truncated line ---------------------------------------

def test_potential_formula_values():
    assert disc.rational_kernel_potential(0.0) == -2.0
    assert disc.rational_kernel_potential(1.0) == 1.0
    assert abs(disc.rational_kernel_potential(100.0)) < 6e-4 * 1.01


def test_kernel_function_identity():
    # w = 1/(1+x^2): w' = -2x/(1+x^2)^2, w'' = (6x^2-2)/(1+x^2)^3 = m w
    x = np.linspace(-5, 5, 101)
    w = 1 / (1 + x**2)
    w2 = (6 * x**2 - 2) / (1 + x**2) ** 3
    np.testing.assert_allclose(w2, disc.rational_kernel_potential(x) * w, rtol=1e-14, atol=1e-16)


def test_free_laplacian_width_two():
    g = disc.schrodinger_1d(None, 1.0, 400)
    assert abs(engine.spectral_bound(g) / (-np.pi**2 / 4) - 1) <= 0.01


def test_free_laplacian_discrete_closed_form():
    # interior stencil on n nodes: eigenvalues -(4/h^2) sin^2(k pi / (2(n+1)))
    n, L = 30, 1.0
    h = 2 * L / (n + 1)
    g = disc.schrodinger_1d(None, L, n)
    exact = -(4 / h**2) * np.sin(np.pi / (2 * (n + 1))) ** 2
    assert engine.spectral_bound(g) == pytest.approx(exact, rel=1e-12)


def test_constant_potential_shifts_spectrum():
    free = engine.spectral_bound(disc.schrodinger_1d(None, 2.0, 100))
    shifted = engine.spectral_bound(disc.schrodinger_1d(1.0, 2.0, 100))
    assert shifted == pytest.approx(free - 1.0, abs=1e-10)


def test_schrodinger_builder_invariants():
    g = disc.schrodinger_1d(disc.confined_potential, 5.0, 60)
    assert g.symmetric
    assert mc.asymmetry(g.matrix) <= 1e-12
    assert engine.is_metzler(g)[0] and engine.is_irreducible(g)
    np.testing.assert_allclose(g.mass_weights, np.full(60, 10.0 / 61))


def test_schrodinger_rejects_bad_input():
    with pytest.raises(disc.DiscretizationError, match="node"):
        disc.schrodinger_1d(lambda x: np.log(x), 1.0, 20)
    with pytest.raises(disc.DiscretizationError):
        disc.schrodinger_1d(None, 0.0, 20)
    with pytest.raises(disc.DiscretizationError):
        disc.schrodinger_1d(None, 1.0, 5)


def test_refinement_second_order():
    errs = []
    for n in (49, 99, 199):
        errs.append(abs(engine.spectral_bound(disc.schrodinger_1d(None, 1.0, n)) + np.pi**2 / 4))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_confined_potential():
    np.testing.assert_array_equal(disc.confined_potential([-2.0, -1.0, 0.0, 1.0, 1.5]), [1, 0, 0, 0, 1])


# --- absorption ---------------------------------------------------------------

def test_absorption_constant_decay():
    g = disc.absorption_1d(0.01, 10.0, 500)
    assert engine.spectral_bound(g) <= -1e-4
    assert engine.classify_asymptotics(g, shift=False).case == "decay_to_zero"


def test_absorption_indicator_decays():
    g = disc.absorption_1d(lambda x: (np.abs(x) <= 1).astype(float), 10.0, 200)
    s = engine.spectrum(g)
    assert s.lambda0 < 0
    p = engine.equilibrium_projection(g, s)
    times = [1.0, 10.0, 100.0, 1000.0]
    norms = [mc.weighted_norm(engine.semigroup(g, t), g.mass_weights) for t in times]
    assert np.all(np.diff(norms) < 0)
    assert norms[-1] == pytest.approx(np.exp(s.lambda0 * 1000.0), rel=1e-6)
    assert p.perron


def test_absorption_rejects():
    with pytest.raises(disc.DiscretizationError, match="vanishes"):
        disc.absorption_1d(0.0, 10.0, 50)
    with pytest.raises(disc.DiscretizationError, match="nonnegative"):
        disc.absorption_1d(lambda x: x, 10.0, 50)


# --- nonlocal boundary conditions --------------------------------------------

def test_coupled_boundary_laplacian():
    g = disc.nonlocal_laplace_interval(100)
    ok, worst = engine.is_metzler(g)
    assert not ok and worst < 0
    s = engine.spectrum(g)
    assert s.lambda0 < 0 and s.simple
    with pytest.raises(disc.DiscretizationError):
        disc.nonlocal_laplace_interval(3)


def test_jump_back_point_mass():
    n = 21
    g = disc.nonlocal_dirichlet_diffusion(n, (disc.point_mass(n, 10), disc.point_mass(n, 10)))
    np.testing.assert_array_equal(g.matrix @ np.ones(n), np.zeros(n))
    assert engine.is_metzler(g)[0] and engine.is_irreducible(g)


def test_jump_back_three_nodes_by_hand():
    # h^2 A = [[-2,2,0],[1,-2,1],[0,2,-2]]; pi A = 0 gives pi = (1,2,1)/4
    g = disc.nonlocal_dirichlet_diffusion(3, (disc.point_mass(3, 1), disc.point_mass(3, 1)))
    nu = engine.equilibrium_projection(g).rank1[0]
    np.testing.assert_allclose(nu, [0.25, 0.5, 0.25], atol=1e-10)
    # uniform jumps: pi0 (-5/3) + pi1 + pi2/3 = 0 with pi0 = pi2 gives pi = (3,4,3)/10
    g = disc.nonlocal_dirichlet_diffusion(3, (disc.uniform_jump(3), disc.uniform_jump(3)))
    np.testing.assert_allclose(engine.equilibrium_projection(g).rank1[0], [0.3, 0.4, 0.3], atol=1e-10)


def test_jump_back_uniform_conservation():
    n = 100
    g = disc.nonlocal_dirichlet_diffusion(n, (disc.uniform_jump(n), disc.uniform_jump(n)))
    assert np.max(np.abs(g.matrix @ np.ones(n))) <= 1e-10 * np.max(np.abs(g.matrix))
    for t in (0.1, 1.0, 10.0):
        np.testing.assert_allclose(engine.semigroup(g, t) @ np.ones(n), 1.0, atol=1e-10)
    p = engine.equilibrium_projection(g)
    assert p.lambda0 == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(p.u / p.u[0], 1.0, atol=1e-8)
    assert np.all(p.phi > 0)
    assert np.sum(p.weights * p.phi) * p.u[0] == pytest.approx(1.0, abs=1e-8)


def test_jump_back_rejects_bad_weights():
    with pytest.raises(disc.DiscretizationError, match="probability"):
        disc.nonlocal_dirichlet_diffusion(4, (np.full(4, 0.3), disc.uniform_jump(4)))
    with pytest.raises(disc.DiscretizationError):
        disc.nonlocal_dirichlet_diffusion(4, (np.array([1.5, -0.5, 0, 0]), disc.uniform_jump(4)))


def test_heat_interval_builders():
    g = disc.heat_interval(50)
    np.testing.assert_allclose(g.matrix @ np.ones(51), 0.0, atol=1e-10)
    assert engine.spectral_bound(disc.heat_interval(200, dirichlet=True)) == pytest.approx(-np.pi**2, rel=0.01)


# --- systems with a matrix potential -----------------------------------------

def test_example_system_potential_hand_check():
    v1, v2 = np.array([1.0, 1, -2]), np.array([2.0, -1, -1])
    assert v1.sum() == 0 and v2.sum() == 0
    pot = disc.projected_system_potential(3)
    v = pot.sampler(0.0)
    assert v[0, 1] == -2.0
    np.testing.assert_allclose(v @ np.ones(3), 0.0)
    assert np.linalg.eigvalsh(v).max() <= 1e-12
    pot.check(np.linspace(0, 1, 5))


def test_system_kernel_and_sign():
    grid = disc.GridDescriptor(0.0, 1.0, 200)
    g = disc.schrodinger_system(grid, disc.projected_system_potential(3))
    assert g.n == 600
    assert not engine.is_metzler(g)[0]
    kern = np.ones(600)
    assert np.max(np.abs(g.matrix @ kern)) <= 1e-10
    s = engine.spectrum(g)
    assert abs(s.lambda0) <= 1e-8
    u = engine.equilibrium_projection(g, s).u
    np.testing.assert_allclose(u / u[0], 1.0, atol=1e-8)


def test_scalar_system_is_neumann_laplacian():
    grid = disc.GridDescriptor(0.0, 1.0, 30)
    g = disc.schrodinger_system(grid, disc.projected_system_potential(1))
    np.testing.assert_allclose(g.matrix, disc.heat_interval(29).matrix)
    u = engine.equilibrium_projection(g).u
    np.testing.assert_allclose(u / u[0], 1.0, atol=1e-10)


def test_cooperative_potential_is_metzler():
    # off-diagonals >= 0, rows summing to 0: graph Laplacian on 3 components
    v = np.array([[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, -2.0]])
    g = disc.schrodinger_system(disc.GridDescriptor(0.0, 1.0, 20), disc.constant_potential(v, np.ones(3)))
    assert engine.is_metzler(g)[0]


def test_general_block_size_potential():
    for n in (2, 4, 5):
        disc.projected_system_potential(n).check(np.array([0.0, 1.0]))


def test_potential_invariants_name_node():
    p = np.array([[1.0, -1.0], [-1.0, 1.0]])  # kernel spanned by (1, 1)

    def sampler(x):
        return -p if x < 0.5 else p
    spec = disc.MatrixPotentialSpec(2, sampler, np.array([1.0, 1.0]))
    spec.check(np.array([0.0, 0.25]))
    with pytest.raises(disc.DiscretizationError, match=r"node 1 .*x = 1"):
        spec.check(np.array([0.0, 1.0]))
    with pytest.raises(disc.DiscretizationError, match="not spanned by c"):
        disc.constant_potential(-np.diag([0.0, 1.0]), [1.0, 1.0]).check(np.array([0.0]))
    with pytest.raises(disc.DiscretizationError, match="symmetric"):
        disc.constant_potential([[0.0, 1.0], [0.0, 0.0]], [1.0, 1.0]).check(np.array([0.0]))
    with pytest.raises(disc.DiscretizationError, match="trivial kernel"):
        disc.constant_potential(-np.eye(2), [1.0, 1.0]).check(np.array([0.0]))
    with pytest.raises(disc.DiscretizationError, match="more than one"):
        disc.constant_potential(np.zeros((2, 2)), [1.0, 1.0]).check(np.array([0.0]))


def test_system_size_limit():
    with pytest.raises(disc.DiscretizationError, match="too large"):
        disc.schrodinger_system(disc.GridDescriptor(0.0, 1.0, 2000), disc.projected_system_potential(3))
    with pytest.raises(disc.DiscretizationError, match="boundary"):
        disc.schrodinger_system(disc.GridDescriptor(0.0, 1.0, 20), disc.projected_system_potential(3),
                                boundary="robin")


def test_dirichlet_system_is_negative():
    g = disc.schrodinger_system(disc.GridDescriptor(0.0, 1.0, 40), disc.projected_system_potential(3),
                                boundary="dirichlet")
    assert engine.spectral_bound(g) < -1.0


def test_interface_aliases():
    assert disc.potential_example_7_2 is disc.rational_kernel_potential
    assert disc.example_9_2_potential is disc.projected_system_potential
