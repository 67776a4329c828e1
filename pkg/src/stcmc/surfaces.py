"""Closed 2-surfaces as radial graphs and their geometry in an initial data set.

A surface is stored as harmonic coefficients of the height f over a base
coordinate sphere: embedding X(omega) = center + (r0 + f(omega)) * omega.
All pointwise geometry (induced metric, normal, second fundamental form,
mean curvature H, expansion trace P = tr_Sigma K, and the Lorentzian norm
sqrt(H^2 - P^2) of the mean curvature vector) is obtained by exact pullback
of the analytic ambient jets through the embedding, with angular derivatives
of f taken spectrally on a dealiased working grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import chart
from .chart import DataProvider, build_provider, christoffel
from .errors import (
    ConfigError,
    DegenerateInducedMetric,
    FoliationNotSupported,
    TrappedRegion,
)
from .spectral import (
    build_grid,
    dealias_lmax,
    n_coeffs,
    pad_coeffs,
    real_sph_basis,
    truncate_coeffs,
)


@lru_cache(maxsize=32)
def get_grid(lmax):
    """Cached immutable grid; treat returned arrays as read-only."""
    return build_grid(lmax)


def _provider(spec):
    return spec if isinstance(spec, DataProvider) else build_provider(spec)


@dataclass
class GraphSurface:
    """Radial graph over the coordinate sphere of radius r0 about center."""

    center: np.ndarray
    r0: float
    coeffs: np.ndarray  # harmonic coefficients of the height f
    lmax: int

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (n_coeffs(self.lmax),):
            raise ConfigError(
                f"coefficient vector has length {self.coeffs.shape}, "
                f"expected {n_coeffs(self.lmax)} for lmax={self.lmax}"
            )
        if self.r0 <= 0:
            raise ConfigError("base radius must be positive")

    @classmethod
    def round(cls, center, r0, lmax):
        return cls(np.asarray(center, dtype=float), float(r0), np.zeros(n_coeffs(lmax)), lmax)

    @classmethod
    def from_nodal(cls, grid, center, r0, values):
        return cls(np.asarray(center, dtype=float), float(r0), grid.analyze(values), grid.lmax)

    def nodal(self, grid=None):
        grid = grid or get_grid(self.lmax)
        if grid.lmax == self.lmax:
            return grid.synthesize(self.coeffs)
        return grid.synthesize(pad_coeffs(self.coeffs, self.lmax, grid.lmax))

    def radius_at(self, theta, phi):
        """r0 + f at arbitrary directions (for re-basing and leaf comparison)."""
        Y, _ = real_sph_basis(self.lmax, theta, phi)
        return self.r0 + Y @ self.coeffs

    def scaled(self, factor):
        """Radial rescaling about the own center: rho -> factor * rho."""
        return GraphSurface(self.center.copy(), factor * self.r0, factor * self.coeffs, self.lmax)

    def translated(self, shift):
        """Rigid translation of the surface (center moves, heights unchanged)."""
        return GraphSurface(self.center + np.asarray(shift, dtype=float), self.r0, self.coeffs.copy(), self.lmax)


def rebase(surface: GraphSurface, new_center, lmax=None):
    """Re-express a surface as a radial graph about a different center.

    Solves |rho' w' - d| = rho(direction) per node by a scalar Newton
    iteration, where d = old_center - new_center.  The new base radius is the
    mean of rho' so the new height has small low-order content.
    """
    lmax = lmax or surface.lmax
    grid = get_grid(lmax)
    new_center = np.asarray(new_center, dtype=float).reshape(3)
    d = surface.center - new_center
    om = grid.unit_vectors()["o"]
    rho = np.full(grid.nnodes, float(surface.r0))
    for _ in range(60):
        q = rho[:, None] * om - d[None, :]
        qn = np.linalg.norm(q, axis=1)
        theta = np.arccos(np.clip(q[:, 2] / qn, -1.0, 1.0))
        phi = np.mod(np.arctan2(q[:, 1], q[:, 0]), 2.0 * np.pi)
        target = surface.radius_at(theta, phi)
        F = qn - target
        # dF/drho ~ d|q|/drho = (q . w')/|q|; the target variation is higher order
        dF = np.einsum("ni,ni->n", q, om) / qn
        step = F / dF
        rho = rho - step
        if np.max(np.abs(step)) < 1e-13 * surface.r0:
            break
    r0_new = grid.integrate(rho) / (4.0 * np.pi)
    coeffs = grid.analyze(rho - r0_new)
    return GraphSurface(new_center, r0_new, truncate_coeffs(coeffs, lmax), lmax)


@dataclass
class CurvatureField:
    """Per-node geometry of a surface in a given data set (on the working grid)."""

    grid: object = field(repr=False)
    X: np.ndarray = field(repr=False)            # embedding points
    omega: np.ndarray = field(repr=False)        # base directions
    tangents: tuple = field(repr=False)          # (X_theta, X_phi)
    g2: np.ndarray = field(repr=False)           # induced metric, (n, 2, 2)
    g2inv: np.ndarray = field(repr=False)
    dmu: np.ndarray = field(repr=False)          # area density wrt round dOmega
    nu: np.ndarray = field(repr=False)           # g-unit outward normal
    A: np.ndarray = field(repr=False)            # second fundamental form
    Aring2: np.ndarray = field(repr=False)       # |tracefree A|^2
    H: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    stcmc: np.ndarray = field(repr=False)        # sqrt(H^2 - P^2)
    dmu_delta: np.ndarray = field(repr=False)
    nu_delta: np.ndarray = field(repr=False)
    A_delta: np.ndarray = field(repr=False)
    H_delta: np.ndarray = field(repr=False)
    delta2: np.ndarray = field(repr=False)       # euclidean induced metric
    metric_jet: object = field(repr=False)
    extrinsic_jet: object = field(repr=False)
    Gam: np.ndarray = field(repr=False)          # ambient Christoffels at X
    ginv: np.ndarray = field(repr=False)
    second: tuple = field(repr=False)            # (X_tt, X_tp, X_pp)

    def integrate(self, values, measure="g"):
        dens = self.dmu if measure == "g" else self.dmu_delta
        return self.grid.integrate(values * dens)

    @property
    def area(self):
        return self.grid.integrate(self.dmu)

    @property
    def area_delta(self):
        return self.grid.integrate(self.dmu_delta)


def embedding_nodes(surface: GraphSurface, grid):
    """Embedding X and its first/second parameter derivatives on a grid."""
    uv = grid.unit_vectors()
    jets = grid.synth_jet(pad_coeffs(surface.coeffs, surface.lmax, grid.lmax))
    R = surface.r0 + jets["f"]
    X = surface.center + R[:, None] * uv["o"]
    Xt = jets["ft"][:, None] * uv["o"] + R[:, None] * uv["ot"]
    Xp = jets["fp"][:, None] * uv["o"] + R[:, None] * uv["op"]
    Xtt = jets["ftt"][:, None] * uv["o"] + 2.0 * jets["ft"][:, None] * uv["ot"] + R[:, None] * uv["ott"]
    Xtp = (
        jets["ftp"][:, None] * uv["o"]
        + jets["ft"][:, None] * uv["op"]
        + jets["fp"][:, None] * uv["ot"]
        + R[:, None] * uv["otp"]
    )
    Xpp = jets["fpp"][:, None] * uv["o"] + 2.0 * jets["fp"][:, None] * uv["op"] + R[:, None] * uv["opp"]
    return X, (Xt, Xp), (Xtt, Xtp, Xpp), uv["o"], R


def surface_frames(spec, surface: GraphSurface) -> CurvatureField:
    """Full curvature data of the surface in the data set, on the dealiased grid."""
    prov = _provider(spec)
    grid = get_grid(dealias_lmax(surface.lmax))
    X, (Xt, Xp), (Xtt, Xtp, Xpp), om, R = embedding_nodes(surface, grid)
    if np.any(R <= 0):
        raise DegenerateInducedMetric("graph height reaches the base center")
    mj = prov.metric_jet(X)
    ej = prov.extrinsic_jet(X)
    g = mj.g
    Gam = christoffel(mj)
    ginv = np.linalg.inv(g)

    tang = np.stack([Xt, Xp], axis=1)                       # (n, 2, 3)
    g2 = np.einsum("nai,nij,nbj->nab", tang, g, tang)
    det2 = g2[:, 0, 0] * g2[:, 1, 1] - g2[:, 0, 1] ** 2
    if np.any(det2 <= 0):
        raise DegenerateInducedMetric("induced metric has nonpositive determinant")
    g2inv = np.empty_like(g2)
    g2inv[:, 0, 0] = g2[:, 1, 1]
    g2inv[:, 1, 1] = g2[:, 0, 0]
    g2inv[:, 0, 1] = -g2[:, 0, 1]
    g2inv[:, 1, 0] = -g2[:, 1, 0]
    g2inv /= det2[:, None, None]

    ncross = np.cross(Xt, Xp)
    orient = np.einsum("ni,ni->n", ncross, X - surface.center)
    ncross[orient < 0] *= -1.0
    v = np.einsum("nij,nj->ni", ginv, ncross)
    vnorm = np.sqrt(np.einsum("ni,nij,nj->n", v, g, v))
    nu = v / vnorm[:, None]
    nu_delta = ncross / np.linalg.norm(ncross, axis=1)[:, None]

    sec = np.stack([np.stack([Xtt, Xtp], axis=1), np.stack([Xtp, Xpp], axis=1)], axis=1)  # (n,2,2,3)
    # A_ab = -g(nu, d2_ab X + Gamma(X_a, X_b))
    gam_term = np.einsum("nkij,nai,nbj->nabk", Gam, tang, tang)
    nu_low = np.einsum("nij,nj->ni", g, nu)
    A = -np.einsum("ni,nabi->nab", nu_low, sec + gam_term)
    H = np.einsum("nab,nab->n", g2inv, A)
    Aring = A - 0.5 * H[:, None, None] * g2
    Aring2 = np.einsum("nac,nbd,nab,ncd->n", g2inv, g2inv, Aring, Aring)

    delta2 = np.einsum("nai,nbi->nab", tang, tang)
    ddet2 = delta2[:, 0, 0] * delta2[:, 1, 1] - delta2[:, 0, 1] ** 2
    d2inv = np.empty_like(delta2)
    d2inv[:, 0, 0] = delta2[:, 1, 1]
    d2inv[:, 1, 1] = delta2[:, 0, 0]
    d2inv[:, 0, 1] = -delta2[:, 0, 1]
    d2inv[:, 1, 0] = -delta2[:, 1, 0]
    d2inv /= ddet2[:, None, None]
    A_delta = -np.einsum("ni,nabi->nab", nu_delta, sec)
    H_delta = np.einsum("nab,nab->n", d2inv, A_delta)

    P = np.einsum("nab,nai,nbj,nij->n", g2inv, tang, tang, ej.K)
    h2p2 = H**2 - P**2
    if np.any(h2p2 < 0):
        raise TrappedRegion(
            f"H^2 - P^2 reaches {h2p2.min():.3e}: mean curvature vector not spacelike"
        )
    stcmc = np.sqrt(h2p2)

    th, _ = grid.mesh()
    st = np.sin(th)
    return CurvatureField(
        grid=grid,
        X=X,
        omega=om,
        tangents=(Xt, Xp),
        g2=g2,
        g2inv=g2inv,
        dmu=np.sqrt(det2) / st,
        nu=nu,
        A=A,
        Aring2=Aring2,
        H=H,
        P=P,
        stcmc=stcmc,
        dmu_delta=np.sqrt(ddet2) / st,
        nu_delta=nu_delta,
        A_delta=A_delta,
        H_delta=H_delta,
        delta2=delta2,
        metric_jet=mj,
        extrinsic_jet=ej,
        Gam=Gam,
        ginv=ginv,
        second=(Xtt, Xtp, Xpp),
    )


@dataclass
class SurfaceScalars:
    area_g: float
    area_delta: float
    area_radius: float
    center: np.ndarray
    hawking_mass: float
    geroch_mass: float
    willmore_deficit: float
    min_coord_radius: float
    max_coord_radius: float


def surface_scalars(spec, surface: GraphSurface, frames: CurvatureField | None = None):
    fr = frames if frames is not None else surface_frames(spec, surface)
    area = fr.area
    area_d = fr.area_delta
    r = np.sqrt(area / (4.0 * np.pi))
    z = np.stack([fr.integrate(fr.X[:, i], measure="delta") for i in range(3)]) / area_d
    int_st2 = fr.integrate(fr.stcmc**2)
    int_h2 = fr.integrate(fr.H**2)
    mH = np.sqrt(area / (16.0 * np.pi)) * (1.0 - int_st2 / (16.0 * np.pi))
    mG = np.sqrt(area / (16.0 * np.pi)) * (1.0 - int_h2 / (16.0 * np.pi))
    coord_r = np.linalg.norm(fr.X, axis=1)
    return SurfaceScalars(
        area_g=float(area),
        area_delta=float(area_d),
        area_radius=float(r),
        center=z,
        hawking_mass=float(mH),
        geroch_mass=float(mG),
        willmore_deficit=float(int_h2 - 16.0 * np.pi),
        min_coord_radius=float(coord_r.min()),
        max_coord_radius=float(coord_r.max()),
    )


@dataclass
class AprioriCheck:
    center_ok: bool
    radius_ok: bool
    willmore_ok: bool
    center_slack: float
    radius_slack: float
    willmore_slack: float

    @property
    def all_ok(self):
        return self.center_ok and self.radius_ok and self.willmore_ok


def apriori_class_check(spec, surface: GraphSurface, a, b, eta, eps):
    """Membership in the asymptotically-centered class (genus 0).

    Checks |z| <= a r + b r^(1-eta),  r^(2+eta) <= min |x|^(5/2+eps)  and
    int H^2 dmu - 16 pi <= b / r^eta, reporting the slack of each inequality.
    """
    fr = surface_frames(spec, surface)
    sc = surface_scalars(spec, surface, fr)
    r = sc.area_radius
    zn = np.linalg.norm(sc.center)
    lhs1, rhs1 = zn, a * r + b * r ** (1.0 - eta)
    lhs2, rhs2 = r ** (2.0 + eta), sc.min_coord_radius ** (2.5 + eps)
    lhs3, rhs3 = sc.willmore_deficit, b / r**eta
    return AprioriCheck(
        center_ok=bool(lhs1 <= rhs1),
        radius_ok=bool(lhs2 <= rhs2),
        willmore_ok=bool(lhs3 <= rhs3),
        center_slack=float(rhs1 - lhs1),
        radius_slack=float(rhs2 - lhs2),
        willmore_slack=float(rhs3 - lhs3),
    )


def euclidean_comparison(spec, surface: GraphSurface):
    """Sup norms of the flat-vs-curved frame differences on the surface."""
    fr = surface_frames(spec, surface)
    dnu = np.linalg.norm(fr.nu - fr.nu_delta, axis=1).max()
    dA = fr.A - fr.A_delta
    dA_norm = np.sqrt(np.einsum("nac,nbd,nab,ncd->n", np.linalg.inv(fr.delta2), np.linalg.inv(fr.delta2), dA, dA))
    dH = np.abs(fr.H - fr.H_delta).max()
    rel_dmu = np.abs(fr.dmu / fr.dmu_delta - 1.0).max()
    return {
        "nu": float(dnu),
        "A": float(dA_norm.max()),
        "H": float(dH),
        "dmu_rel": float(rel_dmu),
    }


# -- parametrized-surface utilities (used by variation checks) ---------------

def parametrized_area_and_center(grid, X, metric_of=None):
    """Area and Euclidean center of an arbitrary nodal immersion X on a grid.

    Tangents are obtained by spectral differentiation of the components of X.
    If metric_of is a provider, the area is taken in its metric; otherwise the
    Euclidean one.
    """
    th, _ = grid.mesh()
    st = np.sin(th)
    comps = [grid.analyze(X[:, i]) for i in range(3)]
    jets = [grid.synth_jet(c) for c in comps]
    Xt = np.stack([j["ft"] for j in jets], axis=1)
    Xp = np.stack([j["fp"] for j in jets], axis=1)
    tang = np.stack([Xt, Xp], axis=1)
    if metric_of is not None:
        g = metric_of.metric_jet(X).g
    else:
        g = np.broadcast_to(np.eye(3), (X.shape[0], 3, 3))
    g2 = np.einsum("nai,nij,nbj->nab", tang, g, tang)
    det2 = g2[:, 0, 0] * g2[:, 1, 1] - g2[:, 0, 1] ** 2
    dens = np.sqrt(det2) / st
    d2 = np.einsum("nai,nbi->nab", tang, tang)
    det2d = d2[:, 0, 0] * d2[:, 1, 1] - d2[:, 0, 1] ** 2
    dens_d = np.sqrt(det2d) / st
    area = grid.integrate(dens)
    area_d = grid.integrate(dens_d)
    center = np.stack([grid.integrate(X[:, i] * dens_d) for i in range(3)]) / area_d
    return area, center


# -- quasilinear graph equation over the flat polar foliation ----------------

def _check_flat_metric(prov, points):
    g = prov.metric_jet(points).g
    if np.max(np.abs(g - np.eye(3))) > 1e-12:
        raise FoliationNotSupported("graph residual requires the flat background metric")


def appendix_graph_coefficients(sigma, f_coeffs, lmax, spec=None):
    """Coefficient fields (a, b, F) of the quasilinear graph equation.

    The background is flat space foliated by round spheres along radial
    geodesics; the prescribed surface has Lorentzian mean curvature 2/sigma.
    Returns nodal dicts on the dealiased grid.
    """
    prov = _provider(spec) if spec is not None else chart.EuclideanProvider()
    grid = get_grid(dealias_lmax(lmax))
    th, _ = grid.mesh()
    st, ct = np.sin(th), np.cos(th)
    jets = grid.synth_jet(pad_coeffs(np.asarray(f_coeffs, dtype=float), lmax, grid.lmax))
    uv = grid.unit_vectors()
    rho = sigma + jets["f"]
    if np.any(rho <= 0):
        raise DegenerateInducedMetric("graph reaches the origin")
    X = rho[:, None] * uv["o"]
    _check_flat_metric(prov, X)

    ghat_inv = np.zeros((grid.nnodes, 2, 2))
    ghat_inv[:, 0, 0] = 1.0
    ghat_inv[:, 1, 1] = 1.0 / st**2
    gt_inv = ghat_inv / rho[:, None, None] ** 2
    df = np.stack([jets["ft"], jets["fp"]], axis=1)
    df_up = np.einsum("nab,nb->na", gt_inv, df)
    df2 = np.einsum("na,na->n", df, df_up)
    W2 = 1.0 + df2
    W = np.sqrt(W2)
    G = gt_inv - df_up[:, :, None] * df_up[:, None, :] / W2[:, None, None]

    a = G / W[:, None, None]
    # round-sphere Christoffels: Gam^theta_pp = -sin cos, Gam^phi_tp = cot
    b = np.zeros((grid.nnodes, 2))
    b[:, 0] = -G[:, 1, 1] * (-st * ct) / W
    b[:, 1] = -2.0 * G[:, 0, 1] * (ct / st) / W

    At = rho[:, None, None] * np.stack(
        [np.stack([np.ones_like(st), np.zeros_like(st)], axis=1),
         np.stack([np.zeros_like(st), st**2], axis=1)], axis=1)
    # (A_t)^g_a = delta^g_a / rho, so 2 (A_t)^g_a f_b f_g = 2 f_a f_b / rho
    quad = 2.0 * df[:, :, None] * df[:, None, :] / rho[:, None, None]
    # Outward-normal graph curvature is G(-hess f + A_t + quad)/W: the residual
    # a d2f + b df - F with a = G/W then needs F = G(A_t + quad)/W - sqrt(...),
    # which makes translated round spheres exact roots in the flat vacuum case.
    curv = np.einsum("nab,nab->n", G, At + quad) / W

    ej = prov.extrinsic_jet(X)
    e_t = rho[:, None] * uv["ot"]
    e_p = rho[:, None] * uv["op"]
    frame = np.stack([e_t, e_p], axis=1)
    K_ab = np.einsum("nai,nbj,nij->nab", frame, frame, ej.K)
    K_ta = np.einsum("ni,naj,nij->na", uv["o"], frame, ej.K)
    K_tt = np.einsum("ni,nj,nij->n", uv["o"], uv["o"], ej.K)
    P = np.einsum(
        "nab,nab->n",
        G,
        K_ab + 2.0 * df[:, :, None] * K_ta[:, None, :] + df[:, :, None] * df[:, None, :] * K_tt[:, None, None],
    )
    F = curv - np.sqrt(P**2 + 4.0 / sigma**2)
    return {"grid": grid, "jets": jets, "a": a, "b": b, "F": F, "P": P}


def appendix_graph_residual(sigma, f_coeffs, lmax, spec=None):
    """Nodal residual a^{ab} d2f + b^a df - F of the graph equation."""
    c = appendix_graph_coefficients(sigma, f_coeffs, lmax, spec)
    jets = c["jets"]
    hess = np.stack(
        [np.stack([jets["ftt"], jets["ftp"]], axis=1), np.stack([jets["ftp"], jets["fpp"]], axis=1)],
        axis=1,
    )
    df = np.stack([jets["ft"], jets["fp"]], axis=1)
    return np.einsum("nab,nab->n", c["a"], hess) + np.einsum("na,na->n", c["b"], df) - c["F"]


def solve_graph_residual(sigma, f0_coeffs, lmax, spec=None, tol=1e-12, max_iter=40):
    """Newton-solve the graph equation with a finite-difference Jacobian.

    Deliberately independent of the embedding-based machinery so the two
    routes to a prescribed-curvature surface can be cross-checked.
    """
    grid = get_grid(dealias_lmax(lmax))
    nb = n_coeffs(lmax)
    f = np.asarray(f0_coeffs, dtype=float).copy()
    h = 1e-7 * max(1.0, sigma)

    def proj_res(fc):
        r = appendix_graph_residual(sigma, fc, lmax, spec)
        return truncate_coeffs(grid.analyze(r), lmax), np.max(np.abs(r))

    R, _ = proj_res(f)
    for _ in range(max_iter):
        # converge on the projected system; the nodal sup also reflects
        # truncation of the data and is reported by the caller if needed
        rnorm = np.max(np.abs(R))
        if rnorm < tol:
            return f
        J = np.empty((nb, nb))
        for j in range(nb):
            e = np.zeros(nb)
            e[j] = h
            J[:, j] = (proj_res(f + e)[0] - proj_res(f - e)[0]) / (2.0 * h)
        # min-norm step (translations are a near-kernel in flat space) with
        # backtracking: the raw step can be huge along those directions
        step = np.linalg.lstsq(J, -R, rcond=1e-10)[0]
        scale = 1.0
        for _ in range(30):
            try:
                R_try, _ = proj_res(f + scale * step)
            except DegenerateInducedMetric:
                scale *= 0.5
                continue
            if np.max(np.abs(R_try)) < rnorm:
                break
            scale *= 0.5
        else:
            raise DegenerateInducedMetric("graph-equation Newton stalled")
        f = f + scale * step
        R = R_try
    raise DegenerateInducedMetric("graph-equation Newton did not converge")


def surface_to_csv(spec, surface: GraphSurface, path):
    """Per-node snapshot: theta, phi, f, H, P, stcmc, with a metadata header."""
    fr = surface_frames(spec, surface)
    th, ph = fr.grid.mesh()
    f_nodal = surface.nodal(fr.grid)
    with open(path, "w", newline="") as fh:
        fh.write(
            f"# center = {surface.center[0]:.17g} {surface.center[1]:.17g} "
            f"{surface.center[2]:.17g}, r0 = {surface.r0:.17g}, lmax = {surface.lmax}\n"
        )
        writer = csv.writer(fh)
        writer.writerow(["theta", "phi", "f", "H", "P", "stcmc"])
        for i in range(fr.grid.nnodes):
            writer.writerow(
                [f"{v:.17g}" for v in (th[i], ph[i], f_nodal[i], fr.H[i], fr.P[i], fr.stcmc[i])]
            )
