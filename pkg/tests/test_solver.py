import numpy as np
import pytest

from stcmc.chart import (
    EuclideanProvider,
    GraphicalSchwarzschildProvider,
    PerturbationProvider,
    RotatedProvider,
    SchwarzschildProvider,
)
from stcmc.errors import ConfigError, MaxIterations, TrappedRegion
from stcmc.solver import (
    OPERATOR_TAGS,
    ScaledExtrinsicProvider,
    SolveConfig,
    assemble_linearization,
    center_variation_check,
    continuation_in_tau,
    curvature_residual,
    foliate,
    graph_jacobian,
    laplace_spectrum,
    newton_solve,
    operator_bound_check,
    uniqueness_cross_check,
)
from stcmc.spectral import coeff_index, n_coeffs
from stcmc.surfaces import GraphSurface, apriori_class_check, surface_frames

R_STAR_SIGMA20 = 18.912985478471837  # largest root of r^3 - 400 r + 800 (np.roots oracle)


@pytest.fixture(scope="module")
def schw_leaf20(schw):
    return newton_solve(
        schw, 20.0, GraphSurface.round([0, 0, 0], 20.0, 8), SolveConfig(lmax=8, tol=1e-11)
    )


@pytest.fixture(scope="module")
def graphical_leaf60(graphical):
    return newton_solve(
        graphical, 60.0, GraphSurface.round([0, 0, 0], 60.0, 10), SolveConfig(lmax=10, tol=1e-11)
    )


def random_surface(rng, lmax=8, r0=10.0, amp=0.1, center=(0.0, 0.0, 0.0)):
    ls = np.concatenate([np.full(2 * l + 1, l) for l in range(lmax + 1)])
    coeffs = amp * rng.normal(size=n_coeffs(lmax)) * np.exp(-0.5 * ls)
    return GraphSurface(np.asarray(center, dtype=float), r0, coeffs, lmax)


# -- operator assembly ----------------------------------------------------------

def test_operator_on_constants_flat(euclid):
    S = GraphSurface.round([0, 0, 0], 5.0, 8)
    op = assemble_linearization(euclid, S, "L_H")
    e0 = np.zeros(op.matrix.shape[0])
    e0[0] = 1.0
    act = op.matrix @ e0
    assert abs(act[0] + 2.0 / 25.0) < 1e-13
    assert np.max(np.abs(act[1:])) < 1e-13


def test_operators_coincide_without_extrinsic_curvature(schw):
    rng = np.random.default_rng(0)
    S = random_surface(rng, r0=12.0, amp=0.1)
    fr = surface_frames(schw, S)
    mats = {
        tag: assemble_linearization(schw, S, tag, frames=fr).matrix
        for tag in ("L_H", "L_script", "expansion_plus", "expansion_minus")
    }
    for tag in ("L_script", "expansion_plus", "expansion_minus"):
        assert np.max(np.abs(mats[tag] - mats["L_H"])) < 1e-12
    # and they all equal the classical stability operator -Lap - |A|^2 - Ric
    lap = assemble_linearization(schw, S, "laplacian", frames=fr).matrix
    import stcmc.solver as sv

    fields = sv._OperatorFields(fr)
    grid = fr.grid
    nb = n_coeffs(S.lmax)
    C = np.zeros((nb, grid.nbasis))
    C[:, :nb] = np.eye(nb)
    U = C @ grid.Y.T
    pot = grid.analyze(((fields.A2 + fields.ricnn)[:, None] * U.T).T)[:, :nb]
    classical = lap - pot.T
    assert np.max(np.abs(mats["L_H"] - classical)) < 1e-12


def test_unknown_tag_raises(euclid):
    with pytest.raises(ConfigError):
        assemble_linearization(euclid, GraphSurface.round([0, 0, 0], 5.0, 8), "bogus")
    assert "L_H" in OPERATOR_TAGS


@pytest.mark.parametrize("case", ["euclid", "schw", "graphical"])
def test_linearization_matches_finite_differences(case, euclid, schw, graphical):
    prov = {"euclid": euclid, "schw": schw, "graphical": graphical}[case]
    r0 = {"euclid": 10.0, "schw": 12.0, "graphical": 30.0}[case]
    rng = np.random.default_rng(hash(case) % 2**32)
    S = random_surface(rng, lmax=8, r0=r0, amp=0.05)
    sigma = r0
    _, _, fr = curvature_residual(prov, S, sigma)
    J = graph_jacobian(prov, S, frames=fr)
    h = 1e-5
    for _ in range(4):
        v = rng.normal(size=n_coeffs(8))
        v /= np.linalg.norm(v)
        Sp = GraphSurface(S.center, S.r0, S.coeffs + h * v, 8)
        Sm = GraphSurface(S.center, S.r0, S.coeffs - h * v, 8)
        _, pp, _ = curvature_residual(prov, Sp, sigma)
        _, pm, _ = curvature_residual(prov, Sm, sigma)
        fd = (pp - pm) / (2 * h)
        assert np.linalg.norm(J @ v - fd) / np.linalg.norm(fd) < 1e-5


def test_trapped_region_in_assembly():
    terms = [{"target": "K", "i": i, "j": i, "coeff": 2.0, "decay": 0.5} for i in range(3)]
    prov = PerturbationProvider(terms)
    with pytest.raises(TrappedRegion):
        assemble_linearization(prov, GraphSurface.round([0, 0, 0], 50.0, 8), "L_H")


# -- Newton solves ---------------------------------------------------------------

def test_newton_flat_sphere(euclid):
    res = newton_solve(euclid, 10.0, GraphSurface.round([0, 0, 0], 9.0, 8), SolveConfig(lmax=8, tol=1e-12))
    assert res.residual_sup < 1e-12
    rho = res.surface.r0 + res.surface.coeffs[0] / np.sqrt(4 * np.pi)
    assert abs(rho - 10.0) < 1e-10
    assert np.linalg.norm(res.surface.center) < 1e-10
    assert np.max(np.abs(res.surface.coeffs[1:])) < 1e-10


def test_newton_schwarzschild_cubic(schw_leaf20):
    res = schw_leaf20
    rho = res.surface.r0 + res.surface.coeffs[0] / np.sqrt(4 * np.pi)
    assert abs(rho - R_STAR_SIGMA20) < 1e-8
    assert res.residual_sup <= 1e-10
    assert res.iterations <= 8
    # spherical-symmetry exactness: no angular content
    assert np.max(np.abs(res.surface.coeffs[1:])) < 1e-9 * res.surface.r0


def test_newton_quadratic_tail(graphical):
    # seed far enough that several iterations happen; once below 1e-4 the
    # residual should contract at least quadratically up to a stable constant
    seed = GraphSurface.round([1.0, 0.5, 0.0], 55.0, 10)
    res = newton_solve(graphical, 60.0, seed, SolveConfig(lmax=10, tol=1e-12))
    hist = res.history
    tail = [(a, b) for a, b in zip(hist, hist[1:]) if a < 1e-4 and b > 0]
    assert tail, "no contraction data below 1e-4"
    consts = [b / a**2 for a, b in tail]
    assert all(c < 1e4 for c in consts)


def test_newton_graphical_leaf_in_apriori_class(graphical, graphical_leaf60):
    chk = apriori_class_check(graphical, graphical_leaf60.surface, 0.0, 10.0, 0.25, 0.5)
    assert chk.all_ok


def test_newton_max_iterations(euclid):
    with pytest.raises(MaxIterations):
        newton_solve(
            euclid,
            10.0,
            GraphSurface.round([0, 0, 0], 5.0, 8),
            SolveConfig(lmax=8, tol=1e-15, max_iter=1),
        )


def test_solve_config_validation():
    with pytest.raises(ConfigError):
        SolveConfig(tol=-1.0)
    with pytest.raises(ConfigError):
        SolveConfig(damping=0.0)


# -- continuation ------------------------------------------------------------------

def test_continuation_tau_zero_is_riemannian_leaf(graphical):
    steps = continuation_in_tau(
        graphical, 60.0, GraphSurface.round([0, 0, 0], 60.0, 8), SolveConfig(lmax=8, tol=1e-10), steps=2
    )
    assert steps[0].tau == 0.0
    # tau = 0 solves in the K = 0 data: re-solve directly and compare
    direct = newton_solve(
        ScaledExtrinsicProvider(graphical, 0.0),
        60.0,
        GraphSurface.round([0, 0, 0], 60.0, 8),
        SolveConfig(lmax=8, tol=1e-10),
    )
    d = np.abs(steps[0].result.surface.coeffs - direct.surface.coeffs)
    assert np.max(d) < 1e-9
    assert steps[-1].tau == pytest.approx(1.0)


def test_continuation_k_zero_leaves_identical(schw):
    steps = continuation_in_tau(
        schw, 20.0, GraphSurface.round([0, 0, 0], 20.0, 8), SolveConfig(lmax=8, tol=1e-11), steps=2
    )
    base = steps[0].result.surface.coeffs
    for st in steps[1:]:
        assert np.max(np.abs(st.result.surface.coeffs - base)) < 1e-12
        assert st.lapse_sup < 1e-12


def test_continuation_lapse_magnitudes(graphical):
    steps = continuation_in_tau(
        graphical, 60.0, GraphSurface.round([0, 0, 0], 60.0, 8), SolveConfig(lmax=8, tol=1e-10), steps=4
    )
    centers = np.array([st.result.surface.center for st in steps])
    # the center moves continuously from the Riemannian leaf toward the origin
    assert np.all(np.isfinite(centers))
    assert max(st.lapse_l2 for st in steps) < 1e3  # finite, moderate norm
    assert steps[-1].lapse_l2 > 0


# -- foliations ---------------------------------------------------------------------

def test_foliation_flat(euclid):
    fol = foliate(euclid, [5.0, 10.0, 20.0], SolveConfig(lmax=8, tol=1e-12), spectra=False)
    for leaf in fol:
        assert abs(leaf.area_radius - leaf.sigma) < 1e-10
        assert np.linalg.norm(leaf.center) < 1e-10
    assert all(leaf.lapse_positive for leaf in fol)
    # lapse of the flat foliation is 1: the normal gap equals d sigma
    assert abs(fol.leaves[1].min_normal_gap - 1.0) < 1e-9


def test_foliation_schwarzschild(schw):
    fol = foliate(schw, [20.0, 40.0, 80.0], SolveConfig(lmax=8, tol=1e-11))
    for leaf in fol:
        assert abs(leaf.hawking_mass - 1.0) < 1e-9
        assert leaf.lambda4 > 5.0 / leaf.sigma**2
        assert leaf.residual_sup <= 1e-11
    assert all(leaf.lapse_positive for leaf in fol)
    radii = [leaf.area_radius for leaf in fol]
    assert radii == sorted(radii)


def test_foliation_requires_increasing_sigma(euclid):
    with pytest.raises(ConfigError):
        foliate(euclid, [10.0, 10.0], SolveConfig(lmax=8))


# -- spectra -----------------------------------------------------------------------

def test_spectrum_round_sphere(euclid):
    rep = laplace_spectrum(euclid, GraphSurface.round([0, 0, 0], 3.0, 8), k=8)
    lam = rep.eigenvalues
    assert abs(lam[0]) < 1e-12
    assert np.max(np.abs(lam[1:4] - 2.0 / 9.0)) < 1e-12
    assert np.max(np.abs(lam[4:9] - 6.0 / 9.0)) < 1e-11
    assert np.all(np.diff(lam) > -1e-12)


def test_spectrum_alignment_and_projection(schw_leaf20, schw):
    rep = laplace_spectrum(schw, schw_leaf20.surface, k=8)
    # projections of the aligned modes onto the scaled coordinate functions
    # form a near-orthogonal matrix
    gram = rep.projections @ rep.projections.T
    assert np.max(np.abs(gram - np.eye(3))) < 1e-2


def test_spectrum_eigenvalue_law_on_leaves(schw):
    rel_prev = None
    for sigma in (40.0, 80.0):
        res = newton_solve(schw, sigma, GraphSurface.round([0, 0, 0], sigma, 8), SolveConfig(lmax=8, tol=1e-11))
        rep = laplace_spectrum(schw, res.surface, k=8)
        rel = np.max(np.abs(rep.eigenvalues[1:4] - rep.predicted_lambda) / rep.eigenvalues[1:4])
        # mass-plus-curvature prediction is accurate to the next order
        assert rel < 10.0 / sigma**1.0 * 0.1
        if rel_prev is not None:
            assert rel < rel_prev
        rel_prev = rel


def test_operator_bound_schwarzschild(schw, schw_leaf20):
    smin, bound, ratio = operator_bound_check(schw, schw_leaf20.surface)
    assert ratio >= 1.0
    # exact translational eigenvalue of the rescaled operator on the leaf
    r = R_STAR_SIGMA20
    expected = 2.0 / r**2 - 2.0 / 400.0 + 2.0 / r**3
    assert abs(smin - expected) < 1e-8


def test_operator_bound_flat_degenerates(euclid):
    smin, bound, ratio = operator_bound_check(euclid, GraphSurface.round([0, 0, 0], 10.0, 8))
    assert bound < 1e-12
    assert smin < 1e-10  # translation near-kernel


def test_operator_selfadjoint_when_time_symmetric(schw, schw_leaf20):
    from stcmc.solver import _stiffness_mass

    S = schw_leaf20.surface
    fr = surface_frames(schw, S)
    L = assemble_linearization(schw, S, "L_script", frames=fr).matrix
    _, M, _ = _stiffness_mass(fr, S.lmax)
    # weighted operator is symmetric; sigma_min equals the smallest |eigenvalue|
    R = np.linalg.cholesky(0.5 * (M + M.T)).T
    W = R @ L @ np.linalg.inv(R)
    assert np.max(np.abs(W - W.T)) < 1e-10
    eig = np.linalg.eigvalsh(0.5 * (W + W.T))
    smin = np.linalg.svd(W, compute_uv=False).min()
    assert abs(smin - np.min(np.abs(eig))) < 1e-10


# -- center variation and uniqueness ------------------------------------------------

def test_center_variation_symmetric_speed(euclid):
    u = np.zeros(n_coeffs(8))
    u[0] = 1.0
    fd, formula, disc = center_variation_check(euclid, GraphSurface.round([0, 0, 0], 5.0, 8), u)
    assert np.max(np.abs(fd)) < 1e-9
    assert np.max(np.abs(formula)) < 1e-14


def test_center_variation_translation_speed(euclid):
    u = np.zeros(n_coeffs(8))
    u[coeff_index(1, 1)] = np.sqrt(4 * np.pi / 3)  # u = x/r
    fd, formula, disc = center_variation_check(euclid, GraphSurface.round([0, 0, 0], 5.0, 8), u)
    assert np.max(np.abs(formula - np.array([1.0, 0.0, 0.0]))) < 1e-13
    assert disc < 1e-6


def test_center_variation_bound_on_leaf(schw, schw_leaf20):
    rng = np.random.default_rng(3)
    u = rng.normal(size=n_coeffs(8)) * np.exp(-0.5 * np.arange(n_coeffs(8)))
    fd, formula, disc = center_variation_check(schw, schw_leaf20.surface, u)
    fr = surface_frames(schw, schw_leaf20.surface)
    unodal = fr.grid.synthesize(np.concatenate([u, np.zeros(fr.grid.nbasis - u.size)]))
    l2 = np.sqrt(fr.integrate(unodal**2))
    sigma = 20.0
    assert disc <= 10.0 * sigma ** (-1.5 - 0.5) * l2


def test_uniqueness_flat(euclid):
    seeds = [GraphSurface.round([0, 0, 0], r0, 8) for r0 in (8.0, 10.0, 12.0)]
    dist, _ = uniqueness_cross_check(euclid, 10.0, seeds, SolveConfig(lmax=8, tol=1e-12))
    assert dist < 1e-9


def test_uniqueness_perturbed_seeds(schw):
    rng = np.random.default_rng(5)
    seeds = []
    for _ in range(2):
        c = np.zeros(n_coeffs(8))
        c[1 : n_coeffs(2)] = 0.05 * 20.0 * rng.uniform(-1, 1, n_coeffs(2) - 1) / np.sqrt(4 * np.pi)
        seeds.append(GraphSurface([0, 0, 0], 20.0, c, 8))
    dist, _ = uniqueness_cross_check(schw, 20.0, seeds, SolveConfig(lmax=8, tol=1e-12))
    assert dist < 1e-8


def test_rotation_equivariance_of_leaf(graphical, graphical_leaf60):
    th = 0.9
    O = np.array([[np.cos(th), 0.0, np.sin(th)], [0.0, 1.0, 0.0], [-np.sin(th), 0.0, np.cos(th)]])
    rot = newton_solve(
        RotatedProvider(graphical, O),
        60.0,
        GraphSurface.round([0, 0, 0], 60.0, 10),
        SolveConfig(lmax=10, tol=1e-11),
    )
    assert np.max(np.abs(rot.surface.center - O @ graphical_leaf60.surface.center)) < 1e-9


def test_eigenvalue_ordering_invariant(graphical, graphical_leaf60):
    rep = laplace_spectrum(graphical, graphical_leaf60.surface, k=8)
    lam = rep.eigenvalues
    assert abs(lam[0]) < 1e-10
    assert lam[1] <= lam[2] <= lam[3] < lam[4]
    assert lam[4] > 5.0 / 60.0**2
