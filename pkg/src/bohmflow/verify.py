"""Ensemble transport and the numerical global-existence conditions.

This module samples initial configurations from the j0(0) distribution,
pushes them through the guidance flow, and compares the surviving empirical
distribution with the j0(T) distribution (equivariance).  It also evaluates
the three condition integrals whose finiteness certifies that almost no
trajectory reaches a node, escapes to infinity, or approaches the singular
set, the expected-distance bound, and the generalized Hardy inequality used
to control the singular-set integral for codimension-3 subspaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.random import Generator, Philox

from .current import CurrentProvider
from .errors import (
    BadStart,
    BoxTooLarge,
    DegenerateDensity,
    TooFewSurvivors,
    WindowExceeded,
    WrongCodimension,
)
from .geometry import ConfigSpace, SingularSubspace
from .grids import GridSpec, SpinorField
from .propagators import spectral_gradient
from .trajectories import IntegratorConfig, Status, integrate


def point_rng(seed: int, index: int) -> Generator:
    """Deterministic per-point stream; independent of batch order and worker
    count."""
    return Generator(Philox(key=np.array([seed, index], dtype=np.uint64)))


@dataclass
class Ensemble:
    """Seeded sample of initial configurations with pushforward bookkeeping.

    Before pushforward only ``points`` is set.  After pushforward the arrays
    ``terminal``, ``statuses``, ``tau``, ``diag_L``, ``diag_D`` and ``diag_V``
    are aligned with ``points`` (the q0 <-> Q(T) pairing is preserved);
    cemetery members are the non-Completed entries.
    """

    seed: int
    points: np.ndarray  # (n, d)
    T: float = 0.0
    terminal: np.ndarray | None = None
    statuses: np.ndarray | None = None  # array of Status
    tau: np.ndarray | None = None
    diag_L: np.ndarray | None = None
    diag_D: np.ndarray | None = None
    diag_V: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def pushed(self) -> bool:
        return self.statuses is not None

    @property
    def survived(self) -> np.ndarray:
        if not self.pushed:
            raise ValueError("ensemble has not been pushed forward")
        return np.array([s is Status.COMPLETED for s in self.statuses])

    @property
    def cemetery_fraction(self) -> float:
        return 1.0 - float(np.mean(self.survived))


def sample_initial(
    provider: CurrentProvider, n: int, seed: int, stratified: bool = True
) -> Ensemble:
    """Draw n points from the j0(0, .) distribution by inverse CDF over grid
    cells plus a uniform offset within the selected cell.

    With ``stratified`` (the default) the cell-CDF arguments are stratified as
    (i + u_i)/n, which keeps every marginal exactly j0(0) while shrinking the
    histogram noise of the ensemble well below the iid binomial level; with
    ``stratified=False`` the points are iid.  Each point uses its own
    (seed, index)-keyed stream, so results never depend on evaluation order.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    g = provider.grid
    j0, _ = provider.current_grid(0.0)
    masses = (j0 * g.cell_volume).ravel()
    total = float(np.sum(masses))
    if total <= 0.0:
        raise DegenerateDensity("j0(0, .) integrates to zero on the grid")
    cdf = np.cumsum(masses) / total
    spacing = np.asarray(g.spacing)
    centers = g.points()
    d = g.dim
    last = d - 1
    pts = np.empty((n, d))
    for i in range(n):
        r = point_rng(seed, i).random(1 + d)
        u = (i + r[0]) / n if stratified else r[0]
        cell = min(int(np.searchsorted(cdf, u, side="right")), masses.size - 1)
        offs = r[1:].copy()
        if stratified:
            # place along the cell-order axis at the residual quantile, so the
            # stratification survives down to the within-cell scale
            lo = cdf[cell - 1] if cell > 0 else 0.0
            width = cdf[cell] - lo
            if width > 0:
                offs[last] = (u - lo) / width
        pts[i] = centers[cell] + (offs - 0.5) * spacing
    return Ensemble(seed=seed, points=pts)


def pushforward(
    ens: Ensemble,
    provider: CurrentProvider,
    space: ConfigSpace | None,
    T: float,
    cfg: IntegratorConfig | None = None,
) -> Ensemble:
    """Transport every ensemble point to time T along the guidance flow.

    Per-point failures never abort the batch: points that start on an
    operational node or inside the singular margin go straight to the
    cemetery with tau = 0.
    """
    cfg = cfg or IntegratorConfig()
    n, d = ens.points.shape
    terminal = np.empty((n, d))
    statuses = np.empty(n, dtype=object)
    tau = np.full(n, T)
    L = np.zeros(n)
    D = np.zeros(n)
    m = space.nsubspaces if space is not None else 0
    V = np.zeros((n, m))
    thr = cfg.node_policy.threshold(provider.density_scale)
    for i in range(n):
        q0 = ens.points[i]
        j0, _ = provider.current_at(0.0, q0)
        if j0 < thr:
            terminal[i] = q0
            statuses[i] = Status.NODE_HIT
            tau[i] = 0.0
            continue
        if space is not None and m and float(space.min_distance(q0)) <= cfg.singular_margin:
            terminal[i] = q0
            statuses[i] = Status.SINGULAR_HIT
            tau[i] = 0.0
            continue
        traj = integrate(provider, space, q0, T, cfg)
        terminal[i] = traj.final_position
        statuses[i] = traj.status
        tau[i] = traj.final_time if traj.tau_estimate is None else traj.tau_estimate
        L[i] = traj.diagnostics.L
        D[i] = traj.diagnostics.D
        if m:
            V[i] = traj.diagnostics.V_per_subspace
    return replace(
        ens, T=T, terminal=terminal, statuses=statuses, tau=tau, diag_L=L, diag_D=D, diag_V=V
    )


# ---------------------------------------------------------------------------
# equivariance comparison


@dataclass(frozen=True)
class ComparisonResult:
    """Distribution distances between the pushed ensemble and mu_T."""

    l1_distance: float
    ks_distance: float
    bin_edges: np.ndarray
    expected_mass: np.ndarray
    observed_counts: np.ndarray
    n_effective: int
    n_total: int
    cemetery_fraction: float


def _axis_cdf(grid: GridSpec, masses: np.ndarray, axis: int):
    """Marginal CDF along one axis at the cell boundaries: (xs, cdf)."""
    other = tuple(i for i in range(grid.dim) if i != axis)
    marg = masses.sum(axis=other) if other else masses
    h = grid.spacing[axis]
    xs = np.concatenate([[grid.axis(axis)[0] - 0.5 * h], grid.axis(axis) + 0.5 * h])
    cdf = np.concatenate([[0.0], np.cumsum(marg)])
    return xs, cdf / cdf[-1]


def _equal_mass_edges(xs, cdf, bins):
    """Bin edges at the quantiles of a piecewise-linear CDF."""
    qs = np.linspace(0.0, 1.0, bins + 1)
    edges = np.interp(qs, cdf, xs)
    edges[0] -= 1e-9
    edges[-1] += 1e-9
    return edges


def equivariance_test(
    ens_T: Ensemble, provider: CurrentProvider, T: float, bins: int = 64
) -> ComparisonResult:
    """Compare the surviving empirical distribution at T against mu_T.

    Bins are equal-mass under mu_T (quantile bins per axis), observed
    fractions are normalized by the full sample size, so the cemetery deficit
    shows up as missing mass; partial equivariance predicts it is the only
    systematic discrepancy.
    """
    if not ens_T.pushed:
        raise ValueError("push the ensemble forward first")
    g = provider.grid
    alive = ens_T.survived
    n_eff = int(alive.sum())
    if n_eff < 100:
        raise TooFewSurvivors(f"only {n_eff} survivors")
    pts = ens_T.terminal[alive]
    j0, _ = provider.current_grid(T)
    masses = j0 * g.cell_volume
    total = float(masses.sum())

    if g.dim == 1:
        xs, cdf = _axis_cdf(g, masses, 0)
        edges = _equal_mass_edges(xs, cdf, bins)
        counts = np.histogram(pts[:, 0], edges)[0]
        expected = np.diff(np.interp(edges, xs, cdf)) * total
        edges_out = edges
    elif g.dim == 2:
        per_axis = max(2, int(round(math.sqrt(bins))))
        ex = _equal_mass_edges(*_axis_cdf(g, masses, 0), per_axis)
        ey = _equal_mass_edges(*_axis_cdf(g, masses, 1), per_axis)
        counts = np.histogram2d(pts[:, 0], pts[:, 1], bins=[ex, ey])[0].ravel()
        cx = np.clip(np.searchsorted(ex, g.axis(0), side="right") - 1, 0, per_axis - 1)
        cy = np.clip(np.searchsorted(ey, g.axis(1), side="right") - 1, 0, per_axis - 1)
        expected = np.zeros((per_axis, per_axis))
        np.add.at(expected, (cx[:, None], cy[None, :]), masses)
        expected = expected.ravel()
        edges_out = np.stack([ex, ey])
    else:
        raise ValueError("equivariance comparison implemented for d <= 2")

    observed = counts / ens_T.n
    l1 = float(np.sum(np.abs(observed - expected)))
    ks = 0.0
    for ax in range(g.dim):
        xs, cdf = _axis_cdf(g, masses, ax)
        xsort = np.sort(pts[:, ax])
        F = np.interp(xsort, xs, cdf) * total
        ecdf_hi = np.arange(1, n_eff + 1) / ens_T.n
        ecdf_lo = np.arange(0, n_eff) / ens_T.n
        ks = max(ks, float(np.max(np.abs(ecdf_hi - F))), float(np.max(np.abs(ecdf_lo - F))))
    return ComparisonResult(
        l1_distance=l1,
        ks_distance=ks,
        bin_edges=edges_out,
        expected_mass=expected,
        observed_counts=counts,
        n_effective=n_eff,
        n_total=ens_T.n,
        cemetery_fraction=ens_T.cemetery_fraction,
    )


# ---------------------------------------------------------------------------
# partial-equivariance transport check on boxes


_TRI_NODE_CACHE: dict[int, tuple[np.ndarray, float]] = {}


def _tri_quad_nodes(r: int) -> tuple[np.ndarray, float]:
    """Barycentric nodes of the degree-2 rule on a uniformly r-refined
    triangle: ((3 r^2, 3) barycentric coords, weight 1/(3 r^2) per node)."""
    cached = _TRI_NODE_CACHE.get(r)
    if cached is not None:
        return cached
    verts = []
    e = np.eye(3)
    for i in range(r):
        for j in range(r - i):
            a = (e[0] * (r - i - j) + e[1] * i + e[2] * j) / r
            b = (e[0] * (r - i - j - 1) + e[1] * (i + 1) + e[2] * j) / r
            c = (e[0] * (r - i - j - 1) + e[1] * i + e[2] * (j + 1)) / r
            verts.append((a, b, c))
            if i + j < r - 1:
                d = (e[0] * (r - i - j - 2) + e[1] * (i + 1) + e[2] * (j + 1)) / r
                verts.append((b, d, c))
    nodes = []
    for a, b, c in verts:
        nodes.extend([0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)])
    out = (np.array(nodes), 1.0 / (3.0 * r * r))
    _TRI_NODE_CACHE[r] = out
    return out


def _segments_intersect(p, q, r, s):
    """Proper intersection test for segments pq and rs."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _ring_self_intersects(ring: np.ndarray) -> bool:
    m = len(ring)
    segs = [(ring[i], ring[(i + 1) % m]) for i in range(m)]
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue  # closing segment shares a vertex with the first
            if _segments_intersect(*segs[i], *segs[j]):
                return True
    return False


def _simpson_1d(f, a, b, m):
    xs = np.linspace(a, b, 2 * m + 1)
    w = np.ones(2 * m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.sum(w * f(xs)) * (b - a) / (6.0 * m)) if b > a else -_simpson_1d(f, b, a, m)


def transport_check(
    provider: CurrentProvider,
    space: ConfigSpace | None,
    boxes: list[tuple[np.ndarray, np.ndarray]],
    t: float,
    cfg: IntegratorConfig | None = None,
    mesh_points: int = 8,
) -> np.ndarray:
    """Per-box discrepancy |mu_0(B) - mu_t(phi_t(B))|.

    Box boundaries are meshed, transported through the flow, and the measure
    of the image region is taken by quadrature of j0(t, .): in 1d a Simpson
    rule over the transported interval, in 2d a degree-2 triangle rule on the
    fan triangulation of the convex hull of the transported boundary (a
    small-box approximation: the ordered image ring must stay simple).
    Refining ``mesh_points`` refines both the image region and the quadrature.
    """
    cfg = cfg or IntegratorConfig()
    d = provider.dim
    out = np.empty(len(boxes))

    def flow(q):
        traj = integrate(provider, space, q, t, cfg)
        if traj.status is not Status.COMPLETED:
            raise BoxTooLarge(
                f"boundary point {q} reached {traj.status.value} before t={t}"
            )
        return traj.final_position

    for bi, (lo, hi) in enumerate(boxes):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if d == 1:

            def dens0(xs):
                j0, _ = provider.current_many(0.0, xs[:, np.newaxis])
                return j0

            def densT(xs):
                j0, _ = provider.current_many(t, xs[:, np.newaxis])
                return j0

            mu0 = _simpson_1d(dens0, lo[0], hi[0], mesh_points)
            a1, b1 = flow(lo)[0], flow(hi)[0]
            mut = _simpson_1d(densT, a1, b1, mesh_points)
            out[bi] = abs(mu0 - mut)
        elif d == 2:
            m = mesh_points
            side = np.linspace(0.0, 1.0, m, endpoint=False)
            ring = []
            for sx in side:
                ring.append([lo[0] + sx * (hi[0] - lo[0]), lo[1]])
            for sy in side:
                ring.append([hi[0], lo[1] + sy * (hi[1] - lo[1])])
            for sx in side:
                ring.append([hi[0] - sx * (hi[0] - lo[0]), hi[1]])
            for sy in side:
                ring.append([lo[0], hi[1] - sy * (hi[1] - lo[1])])
            ring = np.array(ring)
            image = np.array([flow(q) for q in ring])
            if _ring_self_intersects(image):
                raise BoxTooLarge("transported boundary self-intersects at mesh resolution")
            # signed fan over the ordered image ring (Green's-theorem
            # consistent for simple polygons), each fan triangle uniformly
            # subdivided so the quadrature refines with the boundary mesh
            centroid = image.mean(axis=0)
            bary, wgt = _tri_quad_nodes(max(1, m // 2))
            nodes = []
            areas = []
            for i in range(len(image)):
                a, b = image[i], image[(i + 1) % len(image)]
                tri = np.stack([centroid, a, b])
                nodes.append(bary @ tri)
                areas.append(
                    0.5
                    * (
                        (a[0] - centroid[0]) * (b[1] - centroid[1])
                        - (b[0] - centroid[0]) * (a[1] - centroid[1])
                    )
                )
            allnodes = np.concatenate(nodes)
            j0, _ = provider.current_many(t, allnodes)
            vals = j0.reshape(len(image), -1).sum(axis=1)
            mut = abs(float(np.sum(np.asarray(areas) * wgt * vals)))
            # reference measure of the box by product Simpson
            xs = np.linspace(lo[0], hi[0], 2 * m + 1)
            ys = np.linspace(lo[1], hi[1], 2 * m + 1)
            w = np.ones(2 * m + 1)
            w[1:-1:2], w[2:-1:2] = 4.0, 2.0
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
            j0, _ = provider.current_many(0.0, pts)
            W = np.outer(w, w).ravel()
            mu0 = float(np.sum(W * j0)) * (hi[0] - lo[0]) * (hi[1] - lo[1]) / (36.0 * m * m)
            out[bi] = abs(mu0 - mut)
        else:
            raise ValueError("transport check implemented for d <= 2")
    return out


# ---------------------------------------------------------------------------
# condition integrals


@dataclass(frozen=True)
class ConditionReport:
    """Values of the three existence-condition integrals over [0,T] x ball(R).

    ``I_node`` integrates |(d_t + v.grad) j0| off the operational-node cells,
    ``I_escape`` integrates |J . q/|q||, ``I_singular`` integrates the
    delta-tube weighted |J . e_l| / dist per singular subspace; these three
    are restricted to the ball of radius R (balls suffice as test sets).
    ``ED_bound`` integrates |J| over the whole grid, since it bounds the
    expected travel of the full ensemble.  All use the provider grid with
    centered time differences at ``n_time`` midpoints.
    """

    I_node: float
    I_escape: float
    I_singular: tuple[float, ...]
    ED_bound: float
    R: float
    T: float
    delta: float
    excluded_mass: float
    refinement: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "I_node": self.I_node,
            "I_escape": self.I_escape,
            "I_singular": list(self.I_singular),
            "ED_bound": self.ED_bound,
            "R": self.R,
            "T": self.T,
            "delta": self.delta,
            "excluded_mass": self.excluded_mass,
            "refinement": self.refinement,
        }


def default_delta(provider: CurrentProvider, space: ConfigSpace, epsilon: float = 1e-9) -> float:
    """Tube radius rule: half the minimum distance from the effective support
    of j0(0) to the singular set, capped at 1."""
    j0, _ = provider.current_grid(0.0)
    pts = provider.grid.points()
    support = j0.ravel() >= epsilon * provider.density_scale
    if not support.any() or not space.nsubspaces:
        return 1.0
    dmin = min(
        float(np.min(sub.distance(pts[support]))) for sub in space.singular_subspaces
    )
    return min(0.5 * dmin, 1.0) if dmin > 0 else min(0.5 * min(provider.grid.spacing), 1.0)


def _tube_refined_points(g: GridSpec, sub: SingularSubspace, delta: float, oversample: int):
    """Subcell centers refining every grid cell that meets the delta-tube.

    The 1/dist weight concentrates the quadrature error in the few cell bands
    crossing the tube, so those cells are subdivided ``oversample`` times per
    axis; returns (points, dist, e, subcell volume)."""
    pts = g.points()
    cell_rad = 0.5 * math.sqrt(sum(h * h for h in g.spacing))
    near = sub.distance(pts) < delta + cell_rad
    base = pts[near]
    if oversample <= 1:
        dist, e = sub.distance_and_direction(base)
        return base, dist, e, g.cell_volume
    offs = [(np.arange(oversample) + 0.5) / oversample - 0.5 for _ in range(g.dim)]
    mesh = np.meshgrid(*offs, indexing="ij")
    shifts = np.stack([m.ravel() for m in mesh], axis=-1) * np.asarray(g.spacing)
    refined = (base[:, np.newaxis, :] + shifts[np.newaxis, :, :]).reshape(-1, g.dim)
    dist, e = sub.distance_and_direction(refined)
    return refined, dist, e, g.cell_volume / oversample**g.dim


def condition_integrals(
    provider: CurrentProvider,
    space: ConfigSpace | None,
    R: float,
    T: float,
    n_time: int = 16,
    epsilon_node: float = 1e-9,
    singular_oversample: int = 4,
) -> ConditionReport:
    """Tensor-product quadrature of the three condition integrals and the
    expected-distance bound on [0, T] x (ball(R) on the provider grid).

    The singular-tube integrand carries the 1/dist weight, so cells meeting
    the tube are subdivided ``singular_oversample`` times per axis."""
    if T <= 0:
        raise ValueError("T must be positive")
    if not (provider.in_window(0.0) and provider.in_window(T)):
        raise WindowExceeded(f"[0, {T}] outside provider window {provider.window}")
    g = provider.grid
    vol = g.cell_volume
    dt = T / n_time
    eta = 0.5 * dt
    pts = g.points()
    mask = (np.linalg.norm(pts, axis=1) <= R).reshape(g.shape)
    rnorm = np.linalg.norm(pts, axis=1).reshape(g.shape)
    rdir = np.where(rnorm[..., None].reshape(-1, 1) > 0, pts / np.maximum(rnorm.reshape(-1, 1), 1e-300), 0.0)
    thr = epsilon_node * provider.density_scale
    subs = space.singular_subspaces if space is not None else ()
    delta = space.delta if space is not None else 1.0
    sub_geo = []
    for sub in subs:
        spts, dist, e, svol = _tube_refined_points(g, sub, delta, singular_oversample)
        inside = (np.linalg.norm(spts, axis=1) <= R) & (dist < delta) & (dist > 0)
        sub_geo.append((spts[inside], dist[inside], e[inside], svol))

    h_fd = np.asarray(g.spacing)
    I_node = 0.0
    I_escape = 0.0
    I_sing = np.zeros(len(subs))
    ED = 0.0
    excluded = 0.0
    for k in range(n_time):
        tk = (k + 0.5) * dt
        j0, J = provider.current_grid(tk)
        jp, _ = provider.current_grid(tk + eta)
        jm, _ = provider.current_grid(tk - eta)
        dj_dt = (jp - jm) / (2.0 * eta)
        node_cells = j0 < thr
        ok = mask & ~node_cells
        excluded += float(np.sum(j0[mask & node_cells]) * vol * dt)
        conv = dj_dt.copy()
        for i in range(g.dim):
            gj = (np.roll(j0, -1, axis=i) - np.roll(j0, 1, axis=i)) / (2.0 * h_fd[i])
            with np.errstate(invalid="ignore", divide="ignore"):
                conv = conv + np.where(ok, J[i] / np.where(ok, j0, 1.0), 0.0) * gj
        I_node += float(np.sum(np.abs(conv)[ok]) * vol * dt)
        Jflat = np.moveaxis(J, 0, -1).reshape(-1, g.dim)
        radial = np.abs(np.sum(Jflat * rdir, axis=1)).reshape(g.shape)
        I_escape += float(np.sum(radial[mask]) * vol * dt)
        speed = np.sqrt(np.sum(J * J, axis=0))
        ED += float(np.sum(speed) * vol * dt)
        for ell, (spts, dist, e, svol) in enumerate(sub_geo):
            if len(spts) == 0:
                continue
            _, Js = provider.current_many(tk, spts)
            Je = np.abs(np.sum(Js * e, axis=1))
            I_sing[ell] += float(np.sum(Je / dist) * svol * dt)
    return ConditionReport(
        I_node=I_node,
        I_escape=I_escape,
        I_singular=tuple(I_sing),
        ED_bound=ED,
        R=R,
        T=T,
        delta=delta,
        excluded_mass=excluded,
        refinement={
            "h": list(g.spacing),
            "dt": dt,
            "n_time": n_time,
            "grid": list(g.shape),
            "epsilon_node": epsilon_node,
        },
    )


# ---------------------------------------------------------------------------
# generalized Hardy inequality


def hardy_check(phi: SpinorField, sub: SingularSubspace) -> tuple[float, float, float]:
    """Grid quadrature of the Hardy pair for a codimension-3 subspace:
    lhs = integral |phi|^2 / (4 dist^2), rhs = integral |grad phi|^2.

    Returns (lhs, rhs, lhs/rhs); the inequality lhs <= rhs holds for all
    H^1 functions and the ratio stays strictly below 1 for compactly
    supported smooth test functions.
    """
    if sub.codim != 3:
        raise WrongCodimension(f"need exactly 3 normals, got {sub.codim}")
    g = phi.grid
    dist = sub.distance(g.points()).reshape(g.shape)
    dens = phi.density()
    good = dist > 0
    lhs = float(np.sum(dens[good] / (4.0 * dist[good] ** 2)) * g.cell_volume)
    grad = spectral_gradient(phi.values, g)
    rhs = float(np.sum(np.abs(grad) ** 2) * g.cell_volume)
    return lhs, rhs, lhs / rhs


def expected_distance_check(
    ens: Ensemble, report: ConditionReport
) -> tuple[float, float, float]:
    """Ensemble mean of the distance diagnostic against the current-integral
    bound; returns (mean_D, bound, margin in Monte Carlo standard errors)."""
    if not ens.pushed:
        raise ValueError("push the ensemble forward first")
    D = ens.diag_D
    mean = float(np.mean(D))
    se = float(np.std(D, ddof=1) / math.sqrt(len(D))) if len(D) > 1 else 0.0
    bound = report.ED_bound
    floor = 1e-12 * (1.0 + abs(bound))
    margin = (bound - mean) / max(se, floor)
    return mean, bound, margin
