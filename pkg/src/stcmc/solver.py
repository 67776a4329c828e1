"""Prescribed spacetime-mean-curvature solver and spectral diagnostics.

The nonlinear problem is sqrt(H^2 - P^2) = 2/sigma for the height of a radial
graph.  Its linearization with respect to normal speed u is

    L[u] = [ H (-Lap u - (|A|^2 + Ric(nu,nu)) u)
             - P ((grad_nu tr K - grad_nu K(nu,nu)) u - 2 K(grad^S u, nu)) ]
           / sqrt(H^2 - P^2),

and the rescaled operator script-L = sqrt(1 - (P/H)^2) L has the same kernel
structure with a uniformly bounded prefactor.  Operators are assembled by
applying the nodal action to each harmonic basis function and projecting
back (collocation + projection); the Laplace spectrum uses the variational
stiffness/mass form instead, which preserves self-adjointness.

Newton runs on the graph height directly: the Jacobian is the normal-speed
operator composed with multiplication by g(omega, nu) plus the tangential
transport term, which vanishes on exact solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .chart import DataProvider, build_provider, ricci_scalar_curvature
from .errors import (
    ConfigError,
    ContinuationStalled,
    EigenSolverFailure,
    MaxIterations,
    NewtonDiverged,
    TrappedRegion,
)
from .spectral import n_coeffs, pad_coeffs, truncate_coeffs
from .surfaces import (
    CurvatureField,
    GraphSurface,
    get_grid,
    rebase,
    surface_frames,
    surface_scalars,
)

OPERATOR_TAGS = ("L_H", "L_script", "expansion_plus", "expansion_minus", "laplacian")


def _provider(spec):
    return spec if isinstance(spec, DataProvider) else build_provider(spec)


@dataclass
class OperatorMatrix:
    matrix: np.ndarray
    tag: str
    lmax: int


@dataclass
class SolveConfig:
    lmax: int = 24
    tol: float = 1e-10          # sup-norm tolerance on sqrt(H^2-P^2) - 2/sigma
    max_iter: int = 30
    damping: float = 0.5        # step shrink factor on residual increase
    max_damping_rounds: int = 6
    tau_steps: int = 8
    recenter: bool = True

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigError("tolerance must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ConfigError("damping factor must lie in (0, 1]")


@dataclass
class SolveResult:
    surface: GraphSurface
    iterations: int
    residual_sup: float
    residual_l2: float
    condition: float
    history: list = field(default_factory=list)


@dataclass
class FoliationLeaf:
    sigma: float
    surface: GraphSurface
    center: np.ndarray
    area_radius: float
    hawking_mass: float
    eigenvalues: np.ndarray      # lambda_1..3 of -Lap on the leaf
    lambda4: float
    sigma_min_L: float
    residual_sup: float
    lapse_positive: bool | None = None
    min_normal_gap: float | None = None


@dataclass
class FoliationResult:
    leaves: list

    def __iter__(self):
        return iter(self.leaves)

    def __len__(self):
        return len(self.leaves)


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray          # lambda_0 .. lambda_k
    eigenfunctions: np.ndarray       # coefficients, columns per eigenvalue
    projections: np.ndarray          # <phi_i, f_j^delta> for i, j = 1..3
    aligned: np.ndarray              # aligned l=1 eigenfunction coefficients
    predicted_lambda: np.ndarray     # mass-curvature prediction per aligned mode
    ricci_integrals: np.ndarray      # int Ric(nu,nu) f_i^2 dmu per aligned mode
    hawking_mass: float
    sigma: float
    sigma_min_L: float
    invertibility_bound: float


# -- nodal operator ingredients ----------------------------------------------

class _OperatorFields:
    """Nodal coefficient fields of the linearized operators on a surface."""

    def __init__(self, fr: CurvatureField):
        self.fr = fr
        grid = fr.grid
        mj, ej = fr.metric_jet, fr.extrinsic_jet
        g, K, dK = mj.g, ej.K, ej.dK
        ginv = fr.ginv
        nu = fr.nu
        ric, _ = ricci_scalar_curvature(mj)
        self.ricnn = np.einsum("nij,ni,nj->n", ric, nu, nu)
        self.A2 = fr.Aring2 + 0.5 * fr.H**2
        # grad_nu tr K - grad_nu K(nu, nu)
        dginv = -np.einsum("nap,nbq,npqk->nabk", ginv, ginv, mj.dg)
        dtrK = np.einsum("nabk,nab->nk", dginv, K) + np.einsum("nab,nabk->nk", ginv, dK)
        covK = (
            dK
            - np.einsum("nlki,nlj->nijk", fr.Gam, K)
            - np.einsum("nlkj,nil->nijk", fr.Gam, K)
        )
        covK_nnn = np.einsum("nk,ni,nj,nijk->n", nu, nu, nu, covK)
        self.kscal = np.einsum("nk,nk->n", nu, dtrK) - covK_nnn
        # K(grad^S u, nu) = kv^beta d_beta u
        tang = np.stack(fr.tangents, axis=1)
        self.kv = np.einsum("nab,nai,nj,nij->nb", fr.g2inv, tang, nu, K)
        # induced Christoffels for the nodal Laplacian
        Xtt, Xtp, Xpp = fr.second
        sec = np.stack([np.stack([Xtt, Xtp], axis=1), np.stack([Xtp, Xpp], axis=1)], axis=1)
        dg2 = (
            np.einsum("nijk,ngk,nai,nbj->ngab", mj.dg, tang, tang, tang)
            + np.einsum("nij,ngai,nbj->ngab", g, sec.transpose(0, 2, 1, 3), tang)
            + np.einsum("nij,nai,ngbj->ngab", g, tang, sec.transpose(0, 2, 1, 3))
        )
        # T[a, d, b] = d_a g2_db + d_b g2_da - d_d g2_ab, with dg2[g, a, b] = d_g g2_ab
        gamS = 0.5 * np.einsum(
            "ngd,nadb->ngab",
            fr.g2inv,
            dg2 + dg2.transpose(0, 3, 2, 1) - dg2.transpose(0, 2, 1, 3),
        )
        # contracted: g2inv^{ab} GammaS^g_{ab}
        self.cgam = np.einsum("nab,ngab->ng", fr.g2inv, gamS)
        self.H = fr.H
        self.P = fr.P
        self.stcmc = fr.stcmc
        self.g2inv = fr.g2inv
        self.grid = grid

    def laplace(self, U, Ut, Up, Utt, Utp, Upp):
        gi = self.g2inv
        return (
            gi[:, 0, 0, None] * Utt
            + 2.0 * gi[:, 0, 1, None] * Utp
            + gi[:, 1, 1, None] * Upp
            - self.cgam[:, 0, None] * Ut
            - self.cgam[:, 1, None] * Up
        )

    def apply(self, tag, U, Ut, Up, Utt, Utp, Upp):
        lap = self.laplace(U, Ut, Up, Utt, Utp, Upp)
        core = -lap - (self.A2 + self.ricnn)[:, None] * U
        if tag == "laplacian":
            return -lap
        # sign of the gradient coupling fixed against the finite-difference
        # oracle: the normal variation of tr_S K is
        # u (grad_nu tr K - grad_nu K(nu,nu)) + 2 K(grad^S u, nu)
        kterm = self.kscal[:, None] * U + 2.0 * (self.kv[:, 0, None] * Ut + self.kv[:, 1, None] * Up)
        if tag == "L_H":
            return (self.H[:, None] * core - self.P[:, None] * kterm) / self.stcmc[:, None]
        if tag == "L_script":
            return core - (self.P / self.H)[:, None] * kterm
        if tag == "expansion_plus":
            return core + kterm
        if tag == "expansion_minus":
            return core - kterm
        raise ConfigError(f"unknown operator tag {tag!r}; choose from {OPERATOR_TAGS}")


def _columns_jet(grid, C):
    """Nodal values and derivatives of the fields with coefficient rows C."""
    j = grid.synth_jet(C)
    return tuple(j[k].T for k in ("f", "ft", "fp", "ftt", "ftp", "fpp"))


def assemble_linearization(spec, surface: GraphSurface, which="L_H", frames=None):
    """Dense matrix of a linearized-curvature operator in the harmonic basis.

    The operator acts on the normal speed; entries are the base-band
    projections of the nodal action on each basis function.
    """
    fr = frames if frames is not None else surface_frames(spec, surface)
    if which == "L_H" and np.any(fr.stcmc <= 0):
        raise TrappedRegion("L_H undefined where H^2 - P^2 vanishes")
    fields = _OperatorFields(fr)
    grid = fr.grid
    nb = n_coeffs(surface.lmax)
    C = np.zeros((nb, grid.nbasis))
    C[:, :nb] = np.eye(nb)
    out = fields.apply(which, *_columns_jet(grid, C))
    mat = truncate_coeffs(grid.analyze(out.T), surface.lmax)
    return OperatorMatrix(matrix=mat.T, tag=which, lmax=surface.lmax)


def graph_jacobian(spec, surface: GraphSurface, frames=None):
    """Jacobian of the nodal curvature map with respect to the graph height.

    A radial perturbation v moves points by v * omega; its normal part is
    g(omega, nu) v and the tangential part transports the (nonconstant)
    curvature along the surface.
    """
    fr = frames if frames is not None else surface_frames(spec, surface)
    fields = _OperatorFields(fr)
    grid = fr.grid
    nb = n_coeffs(surface.lmax)
    g = fr.metric_jet.g
    c = np.einsum("ni,nij,nj->n", fr.omega, g, fr.nu)
    # basis jets (exact) and the normal-projection factor's jets (spectral,
    # limited only by the smooth tail of c itself); the product rule avoids
    # re-analyzing c*v, whose tail would alias into the retained band
    C0 = np.zeros((nb, grid.nbasis))
    C0[:, :nb] = np.eye(nb)
    B, Bt, Bp, Btt, Btp, Bpp = _columns_jet(grid, C0)
    cj = grid.synth_jet(grid.analyze(c))
    U = c[:, None] * B
    Ut = cj["ft"][:, None] * B + c[:, None] * Bt
    Up = cj["fp"][:, None] * B + c[:, None] * Bp
    Utt = cj["ftt"][:, None] * B + 2.0 * cj["ft"][:, None] * Bt + c[:, None] * Btt
    Utp = (
        cj["ftp"][:, None] * B
        + cj["ft"][:, None] * Bp
        + cj["fp"][:, None] * Bt
        + c[:, None] * Btp
    )
    Upp = cj["fpp"][:, None] * B + 2.0 * cj["fp"][:, None] * Bp + c[:, None] * Bpp
    out = fields.apply("L_H", U, Ut, Up, Utt, Utp, Upp)
    # tangential transport: (g2inv)^{ab} g(omega, e_a) d_b(stcmc) * v
    hjet = grid.synth_jet(grid.analyze(fr.stcmc))
    tang = np.stack(fr.tangents, axis=1)
    gom = np.einsum("ni,nij,naj->na", fr.omega, g, tang)
    tfield = np.einsum("nab,na->nb", fr.g2inv, gom)
    transport = tfield[:, 0] * hjet["ft"] + tfield[:, 1] * hjet["fp"]
    out = out + transport[:, None] * B
    mat = truncate_coeffs(grid.analyze(out.T), surface.lmax)
    return mat.T


def curvature_residual(spec, surface: GraphSurface, sigma, frames=None):
    """Nodal residual sqrt(H^2 - P^2) - 2/sigma and its base-band projection."""
    fr = frames if frames is not None else surface_frames(spec, surface)
    res = fr.stcmc - 2.0 / sigma
    proj = truncate_coeffs(fr.grid.analyze(res), surface.lmax)
    return res, proj, fr


def newton_solve(spec, sigma, initial: GraphSurface, config: SolveConfig | None = None):
    """Solve sqrt(H^2 - P^2) = 2/sigma by damped Newton on the graph height.

    The base sphere is re-centered to the measured coordinate center between
    iterations, which keeps the low-order height content (and hence the
    conditioning of the translational block) small.
    """
    prov = _provider(spec)
    cfg = config or SolveConfig(lmax=initial.lmax)
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    S = initial
    if S.lmax != cfg.lmax:
        S = GraphSurface(
            S.center,
            S.r0,
            pad_coeffs(S.coeffs, S.lmax, cfg.lmax)
            if cfg.lmax >= S.lmax
            else truncate_coeffs(S.coeffs, cfg.lmax),
            cfg.lmax,
        )
    history = []
    res, proj, fr = curvature_residual(prov, S, sigma)
    sup = float(np.max(np.abs(res)))
    cond = float("nan")
    for it in range(cfg.max_iter):
        history.append(sup)
        if sup <= cfg.tol:
            l2 = float(np.sqrt(fr.integrate(res**2)))
            return SolveResult(S, it, sup, l2, cond, history)
        J = graph_jacobian(prov, S, frames=fr)
        # min-norm least squares: equals the direct solve away from degeneracy
        # but stays finite when the translational block vanishes (zero energy)
        step = np.linalg.lstsq(J, -proj, rcond=1e-13)[0]
        cond = float(np.linalg.cond(J, 1))
        scale = 1.0
        for attempt in range(cfg.max_damping_rounds + 1):
            S_try = GraphSurface(S.center.copy(), S.r0, S.coeffs + scale * step, S.lmax)
            try:
                res_t, proj_t, fr_t = curvature_residual(prov, S_try, sigma)
            except TrappedRegion:
                scale *= cfg.damping
                continue
            sup_t = float(np.max(np.abs(res_t)))
            if sup_t < sup or sup_t <= cfg.tol:
                break
            scale *= cfg.damping
        else:
            raise NewtonDiverged(
                f"residual stuck at {sup:.3e} after {cfg.max_damping_rounds} damped retries"
            )
        S, res, proj, fr, sup = S_try, res_t, proj_t, fr_t, sup_t
        if cfg.recenter:
            sc = surface_scalars(prov, S, fr)
            if np.linalg.norm(sc.center - S.center) > 1e-12 * S.r0:
                S = rebase(S, sc.center)
                res, proj, fr = curvature_residual(prov, S, sigma)
                sup = float(np.max(np.abs(res)))
    raise MaxIterations(f"no convergence in {cfg.max_iter} iterations; residual {sup:.3e}")


# -- scaled-K family for the method of continuity -----------------------------

class ScaledExtrinsicProvider(DataProvider):
    """Same metric, extrinsic curvature scaled by tau (constraints re-derived)."""

    def __init__(self, inner, tau):
        self.inner = inner
        self.tau = float(tau)

    @property
    def inner_radius(self):
        return self.inner.inner_radius

    def metric_jet(self, x):
        return self.inner.metric_jet(x)

    def extrinsic_jet(self, x):
        ej = self.inner.extrinsic_jet(x)
        return type(ej)(self.tau * ej.K, self.tau * ej.dK)


@dataclass
class ContinuationStep:
    tau: float
    result: SolveResult
    lapse_coeffs: np.ndarray
    lapse_sup: float
    lapse_l2: float


def continuation_in_tau(spec, sigma, initial: GraphSurface, config: SolveConfig | None = None, steps=None):
    """Deform the purely Riemannian solution to the full-K solution.

    Walks tau from 0 to 1 through data with K scaled by tau, seeding each
    solve with the previous leaf; on failure the step is bisected down to
    1/256.  At every accepted tau the deformation lapse u is recorded by
    solving script-L u = tau (tr_S K)^2 / H with the unscaled K.
    """
    prov = _provider(spec)
    cfg = config or SolveConfig(lmax=initial.lmax)
    nsteps = steps if steps is not None else cfg.tau_steps
    out = []
    tau = 0.0
    dtau = 1.0 / nsteps
    S = initial
    result = newton_solve(ScaledExtrinsicProvider(prov, 0.0), sigma, S, cfg)
    out.append(_continuation_record(prov, 0.0, sigma, result))
    S = result.surface
    while tau < 1.0 - 1e-12:
        step = min(dtau, 1.0 - tau)
        while True:
            try:
                result = newton_solve(ScaledExtrinsicProvider(prov, tau + step), sigma, S, cfg)
                break
            except (NewtonDiverged, MaxIterations, TrappedRegion):
                step *= 0.5
                if step < 1.0 / 256.0:
                    raise ContinuationStalled(
                        f"tau step below 1/256 at tau = {tau:.4f}"
                    ) from None
        tau += step
        S = result.surface
        out.append(_continuation_record(prov, tau, sigma, result))
    return out


def _continuation_record(prov, tau, sigma, result):
    S = result.surface
    fr = surface_frames(ScaledExtrinsicProvider(prov, tau), S)
    fr_full = surface_frames(prov, S)
    Lmat = assemble_linearization(ScaledExtrinsicProvider(prov, tau), S, "L_script", frames=fr).matrix
    rhs_nodal = tau * fr_full.P**2 / fr.H
    rhs = truncate_coeffs(fr.grid.analyze(rhs_nodal), S.lmax)
    u = np.linalg.solve(Lmat, rhs)
    u_nodal = fr.grid.synthesize(pad_coeffs(u, S.lmax, fr.grid.lmax))
    return ContinuationStep(
        tau=tau,
        result=result,
        lapse_coeffs=u,
        lapse_sup=float(np.max(np.abs(u_nodal))),
        lapse_l2=float(np.sqrt(fr.integrate(u_nodal**2))),
    )


def foliate(spec, sigma_list, config: SolveConfig | None = None, initial=None, spectra=True):
    """Sweep sigma upward, seeding each leaf by radial rescaling of the last."""
    prov = _provider(spec)
    sigma_list = [float(s) for s in sigma_list]
    if any(b <= a for a, b in zip(sigma_list, sigma_list[1:])):
        raise ConfigError("sigma list must be strictly increasing")
    cfg = config or SolveConfig()
    leaves = []
    S = initial or GraphSurface.round(np.zeros(3), sigma_list[0], cfg.lmax)
    prev_sigma = None
    for sg in sigma_list:
        if prev_sigma is not None:
            S = S.scaled(sg / prev_sigma)
        result = newton_solve(prov, sg, S, cfg)
        S = result.surface
        prev_sigma = sg
        sc = surface_scalars(prov, S)
        if spectra:
            rep = laplace_spectrum(prov, S, k=8)
            lam123 = rep.eigenvalues[1:4]
            lam4 = float(rep.eigenvalues[4])
            smin = rep.sigma_min_L
        else:
            lam123 = np.full(3, np.nan)
            lam4 = float("nan")
            smin = float("nan")
        leaves.append(
            FoliationLeaf(
                sigma=sg,
                surface=S,
                center=sc.center,
                area_radius=sc.area_radius,
                hawking_mass=sc.hawking_mass,
                eigenvalues=np.asarray(lam123),
                lambda4=lam4,
                sigma_min_L=smin,
                residual_sup=result.residual_sup,
            )
        )
    _annotate_lapse_positivity(leaves)
    return FoliationResult(leaves)


def _annotate_lapse_positivity(leaves):
    """Divided-difference check that consecutive leaves are strictly nested."""
    for a, b in zip(leaves, leaves[1:]):
        grid = get_grid(a.surface.lmax)
        th, ph = grid.mesh()
        rho_a = a.surface.radius_at(th, ph)
        rebased = rebase(b.surface, a.surface.center)
        rho_b = rebased.radius_at(th, ph)
        gap = (rho_b - rho_a) / (b.sigma - a.sigma)
        b.lapse_positive = bool(np.all(gap > 0))
        b.min_normal_gap = float(np.min(gap))
    if len(leaves) > 1:
        leaves[0].lapse_positive = leaves[1].lapse_positive
        leaves[0].min_normal_gap = leaves[1].min_normal_gap


# -- spectra -------------------------------------------------------------------

def _stiffness_mass(fr: CurvatureField, lmax):
    grid = fr.grid
    nb = n_coeffs(lmax)
    B = grid.Y[:, :nb]
    Bt = grid.Yt[:, :nb]
    # d_phi of basis columns via the (l, -m) partner relation
    ls = grid.ls[:nb]
    ms = grid.ms[:nb]
    partner = np.arange(nb) - 2 * ms
    Bp = grid.Y[:, :nb][:, partner] * (-ms)[None, :]
    w = grid.w * fr.dmu
    gi = fr.g2inv
    S = (
        (Bt * (w * gi[:, 0, 0])[:, None]).T @ Bt
        + (Bt * (w * gi[:, 0, 1])[:, None]).T @ Bp
        + (Bp * (w * gi[:, 1, 0])[:, None]).T @ Bt
        + (Bp * (w * gi[:, 1, 1])[:, None]).T @ Bp
    )
    M = (B * w[:, None]).T @ B
    return S, M, B


def laplace_spectrum(spec, surface: GraphSurface, k=8, frames=None):
    """Low eigenpairs of the induced Laplacian and invertibility diagnostics.

    The generalized symmetric problem S v = lambda M v is assembled in the
    variational form (stiffness from surface gradients, mass from the area
    measure), so self-adjointness is exact up to quadrature.  The l = 1
    eigenfunctions are aligned with the scaled coordinate functions by
    projection and re-orthonormalization.
    """
    prov = _provider(spec)
    fr = frames if frames is not None else surface_frames(prov, surface)
    nb = n_coeffs(surface.lmax)
    if k + 1 > nb:
        raise ConfigError(f"requested {k} eigenvalues exceeds basis size {nb}")
    S, M, B = _stiffness_mass(fr, surface.lmax)
    S = 0.5 * (S + S.T)
    M = 0.5 * (M + M.T)
    try:
        lam, V = scipy.linalg.eigh(S, M)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigenSolverFailure(str(exc)) from exc
    lam = lam[: k + 1]
    V = V[:, : k + 1]
    sc = surface_scalars(prov, surface, fr)
    r = sc.area_radius
    fdelta = np.sqrt(3.0 / (4.0 * np.pi * r**4)) * (fr.X - sc.center[None, :])
    w = fr.grid.w * fr.dmu
    phi_nodal = B @ V[:, 1:4]
    proj = np.einsum("ni,nj,n->ij", phi_nodal, fdelta, w)
    aligned = V[:, 1:4] @ proj
    # re-orthonormalize in the M inner product (Gram-Schmidt)
    for j in range(3):
        for i in range(j):
            aligned[:, j] -= (aligned[:, i] @ M @ aligned[:, j]) * aligned[:, i]
        nrm = math.sqrt(aligned[:, j] @ M @ aligned[:, j])
        aligned[:, j] /= nrm
    mH = sc.hawking_mass
    sigma = 2.0 / float(fr.integrate(fr.stcmc) / fr.area)
    ric, _ = ricci_scalar_curvature(fr.metric_jet)
    ricnn = np.einsum("nij,ni,nj->n", ric, fr.nu, fr.nu)
    al_nodal = B @ aligned
    ric_ints = np.einsum("n,ni,ni->i", w * ricnn, al_nodal, al_nodal)
    predicted = 2.0 / sigma**2 + 6.0 * mH / sigma**3 + ric_ints
    smin = _sigma_min_weighted(prov, surface, fr, M)
    return SpectralReport(
        eigenvalues=lam,
        eigenfunctions=V,
        projections=proj,
        aligned=aligned,
        predicted_lambda=predicted,
        ricci_integrals=ric_ints,
        hawking_mass=mH,
        sigma=sigma,
        sigma_min_L=smin,
        invertibility_bound=3.0 * abs(mH) / sigma**3,
    )


def _sigma_min_weighted(prov, surface, fr, M):
    """Smallest singular value of script-L in the dmu-weighted L2 norm.

    With mass matrix M = R^T R, the weighted operator is R L R^{-1} acting on
    orthonormalized coordinates.
    """
    Lmat = assemble_linearization(prov, surface, "L_script", frames=fr).matrix
    R = np.linalg.cholesky(0.5 * (M + M.T)).T
    W = R @ Lmat @ np.linalg.inv(R)
    return float(np.linalg.svd(W, compute_uv=False).min())


def operator_bound_check(spec, surface: GraphSurface):
    """Smallest weighted singular value of script-L against 3|m_H|/sigma^3."""
    rep = laplace_spectrum(spec, surface, k=4)
    ratio = rep.sigma_min_L / rep.invertibility_bound if rep.invertibility_bound > 0 else float("inf")
    return rep.sigma_min_L, rep.invertibility_bound, ratio


def center_variation_check(spec, surface: GraphSurface, u_coeffs, h=1e-5):
    """First variation of the Euclidean center against the normal-flux formula.

    Compares a central difference of the center of X + s u nu with
    (3/|S|) int u nu dmu, returning (fd, formula, discrepancy).
    """
    from .surfaces import parametrized_area_and_center

    prov = _provider(spec)
    fr = surface_frames(prov, surface)
    grid = fr.grid
    u = grid.synthesize(pad_coeffs(np.asarray(u_coeffs, dtype=float), surface.lmax, grid.lmax))
    step = h * surface.r0
    centers = []
    for s in (step, -step):
        X = fr.X + s * u[:, None] * fr.nu
        _, z = parametrized_area_and_center(grid, X)
        centers.append(z)
    fd = (centers[0] - centers[1]) / (2.0 * step)
    formula = 3.0 / fr.area * np.stack([fr.integrate(u * fr.nu[:, i]) for i in range(3)])
    return fd, formula, float(np.linalg.norm(fd - formula))


def uniqueness_cross_check(spec, sigma, seeds, config: SolveConfig | None = None):
    """Max pairwise sup-distance between leaves converged from different seeds."""
    prov = _provider(spec)
    cfg = config or SolveConfig(lmax=seeds[0].lmax)
    solved = [newton_solve(prov, sigma, s, cfg) for s in seeds]
    base = solved[0].surface.center
    grid = get_grid(cfg.lmax)
    th, ph = grid.mesh()
    radii = []
    for res in solved:
        reb = rebase(res.surface, base)
        radii.append(reb.radius_at(th, ph))
    dist = 0.0
    for i in range(len(radii)):
        for j in range(i + 1, len(radii)):
            dist = max(dist, float(np.max(np.abs(radii[i] - radii[j]))))
    return dist, solved
