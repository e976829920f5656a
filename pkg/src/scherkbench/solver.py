"""Finite-element solves of the minimal-surface equation on chart meshes.

The graph equation div(grad(u) / W) = 0 with W = sqrt(1 + |grad u|^2) is
posed intrinsically; in the conformal disk chart with length element
lambda |dz| its weak form reduces to

    integral (grad u . grad v) / W dx dy = 0,   W = sqrt(1 + |grad u|^2 / lambda^2),

with the Euclidean area element — only W remembers the metric.  Piecewise
linear elements keep W constant per triangle, so assembly is exact up to the
conformal factor being sampled at triangle centroids.

Infinite boundary data is realized by finite truncation values +-T on the
horocycle-truncated domain, mirroring the Plateau-style approximation the
existence theory itself uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve

from .geometry import Geodesic, Metric
from .meshing import (
    TriMesh,
    build_geodesic_disk_mesh,
    build_truncated_halfplane_mesh,
    build_truncated_polygon_mesh,
)
from .polygons import (
    FEASIBILITY_TOL,
    HorocycleFamily,
    IdealPolygon,
    InscribedPolygon,
    default_family,
    enumerate_inscribed,
    js_feasible,
)


class SolverError(RuntimeError):
    def __init__(self, message, residual_history=None, report=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
        self.report = report


class EuclideanMetric:
    """Flat test hook: constant conformal factor 1 (chart = plane)."""

    kappa = 0.0

    def conformal_factor(self, z: complex) -> float:
        return 1.0


@dataclass
class SolverConfig:
    newton_tol: float = 1e-10
    max_iter: int = 80
    damping: tuple = (1.0, 0.5, 0.25, 0.125, 0.0625)
    refine_levels: int = 0
    continuation_steps: int = 1
    # mesh resolution for the solves that build their own mesh
    mesh_rings: int = 14
    mesh_side: int = 16
    mesh_arc: int = 6
    mesh_theta: int = 10
    mesh_grading: float = 0.0

    def __post_init__(self):
        if self.newton_tol <= 0 or self.max_iter < 1 or self.continuation_steps < 1:
            raise ValueError("bad solver configuration")


@dataclass
class ScalarField:
    """Nodal solution of the minimal-surface equation on a mesh."""

    mesh: TriMesh
    values: np.ndarray
    metric: object
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != self.mesh.num_nodes or not np.all(np.isfinite(self.values)):
            raise SolverError("field does not match its mesh")

    def interpolate(self, points) -> np.ndarray:
        return self.mesh.interpolate(self.values, points)

    def gradient(self) -> np.ndarray:
        """(M, 2) per-triangle chart gradient."""
        return self.mesh.field_gradient(self.values)


class Assembly:
    """Per-mesh data for residual and Jacobian of the weak form."""

    def __init__(self, mesh: TriMesh, metric):
        self.mesh = mesh
        self.metric = metric
        self.areas = mesh.tri_areas()
        self.grads = mesh.tri_gradients()  # (M, 3, 2)
        cents = mesh.centroids()
        self.lam2 = np.array(
            [metric.conformal_factor(complex(x, y)) ** 2 for x, y in cents]
        )
        t = mesh.triangles
        self.rows = np.repeat(t, 3, axis=1).ravel()
        self.cols = np.tile(t, (1, 3)).ravel()
        self.shape = (mesh.num_nodes, mesh.num_nodes)

    def _w(self, u):
        g = self.mesh.field_gradient(u)  # (M, 2)
        q2 = np.einsum("md,md->m", g, g) / self.lam2
        return g, np.sqrt(1.0 + q2)

    def residual(self, u) -> np.ndarray:
        g, w = self._w(u)
        coef = self.areas / w
        contrib = np.einsum("m,mkd,md->mk", coef, self.grads, g)
        out = np.zeros(self.shape[0])
        np.add.at(out, self.mesh.triangles.ravel(), contrib.ravel())
        return out

    def matrix(self, u, picard: bool = False) -> csr_matrix:
        g, w = self._w(u)
        gg = np.einsum("mid,mjd->mij", self.grads, self.grads)
        vals = gg * (self.areas / w)[:, None, None]
        if not picard:
            gu = np.einsum("mkd,md->mk", self.grads, g)  # (M, 3)
            corr = np.einsum("mi,mj->mij", gu, gu)
            vals = vals - corr * (self.areas / (self.lam2 * w**3))[:, None, None]
        return csr_matrix((vals.ravel(), (self.rows, self.cols)), shape=self.shape)


def _split_bc(mesh: TriMesh, bc: dict):
    bnodes = mesh.boundary_nodes()
    missing = [int(n) for n in bnodes if int(n) not in bc]
    if missing:
        raise SolverError(f"boundary values missing on {len(missing)} nodes")
    fixed = np.array(sorted(bc), dtype=np.int64)
    vals = np.array([bc[int(n)] for n in fixed])
    if not np.all(np.isfinite(vals)):
        raise SolverError("boundary data must be finite")
    free = np.setdiff1d(np.arange(mesh.num_nodes), fixed)
    return fixed, vals, free


def solve_dirichlet(
    mesh: TriMesh,
    bc: dict,
    metric=Metric(),
    cfg: SolverConfig = SolverConfig(),
) -> ScalarField:
    """Dirichlet problem for the minimal-surface equation.

    bc maps boundary node index -> value and must cover every boundary node.
    Damped Newton on the weak residual; a Picard step (lagged W) replaces any
    Newton step that fails to reduce the residual.
    """
    asm = Assembly(mesh, metric)
    fixed, fvals, free = _split_bc(mesh, bc)
    history = []

    u = np.zeros(mesh.num_nodes)
    first = 1.0 / cfg.continuation_steps
    u[fixed] = first * fvals
    # linear (W = 1) solve as the initial guess
    k = asm.matrix(np.zeros(mesh.num_nodes), picard=True)
    rhs = -(k[free][:, fixed] @ u[fixed])
    u[free] = spsolve(k[free][:, free], rhs)

    # continuation on the boundary-data scale; a failed stage is bisected
    done, target = 0.0, first
    splits = 0
    while True:
        u[fixed] = target * fvals
        try:
            u = _newton(asm, u, fixed, free, cfg, history)
        except SolverError:
            if splits >= 12:
                raise
            splits += 1
            target = 0.5 * (done + target)
            continue
        if target >= 1.0:
            break
        done = target
        target = min(1.0, done + (1.0 - first) / cfg.continuation_steps)

    return ScalarField(mesh, u, metric, meta={"residual_history": history})


def _newton(asm, u, fixed, free, cfg, history):
    if len(free) == 0:
        return u

    def rnorm(vec):
        return float(np.max(np.abs(vec[free])))

    res = asm.residual(u)
    for _ in range(cfg.max_iter):
        rn = rnorm(res)
        history.append(rn)
        if rn <= cfg.newton_tol:
            return u
        jac = asm.matrix(u)
        step = spsolve(jac[free][:, free], -res[free])
        alphas = list(cfg.damping)
        while alphas[-1] > 1e-5:
            alphas.append(alphas[-1] * 0.5)
        accepted = False
        for alpha in alphas:
            cand = u.copy()
            cand[free] += alpha * step
            cres = asm.residual(cand)
            if rnorm(cres) < rn:
                u, res, accepted = cand, cres, True
                break
        if not accepted:
            # lagged-W fixed point step, robust where the operator degenerates
            k = asm.matrix(u, picard=True)
            pic = spsolve(k[free][:, free], -(k[free][:, fixed] @ u[fixed]))
            for theta in (1.0, 0.5, 0.25, 0.1, 0.05):
                cand = u.copy()
                cand[free] = (1.0 - theta) * u[free] + theta * pic
                cres = asm.residual(cand)
                if rnorm(cres) < rn:
                    u, res, accepted = cand, cres, True
                    break
            if not accepted:
                raise SolverError(
                    "Newton and Picard both stalled", residual_history=history
                )
    history.append(rnorm(res))
    if history[-1] <= cfg.newton_tol:
        return u
    raise SolverError("no convergence within iteration budget", residual_history=history)


# -- boundary-data helpers ----------------------------------------------------


def _metric_arclength_fraction(piece, metric, samples: int = 200):
    """u -> metric-arclength fraction along a boundary piece."""
    uu = np.linspace(0.0, 1.0, samples + 1)
    pts = np.array([piece.point(t) for t in uu])
    mids = 0.5 * (pts[1:] + pts[:-1])
    lam = np.array([metric.conformal_factor(z) for z in mids])
    seg = lam * np.abs(np.diff(pts))
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    cum /= cum[-1]
    return lambda u: float(np.interp(u, uu, cum))


def _polygon_bc(mesh: TriMesh, metric, side_values: list) -> dict:
    """Nodal data: constant or callable per geodesic side, arclength-linear
    interpolation between neighbours on the horocycle arcs."""
    pieces = mesh.pieces
    np_pieces = len(pieces)

    def side_value(idx, u):
        v = side_values[idx // 2]
        return v(u) if callable(v) else v

    fracs = {}
    bc = {}
    for node, (pc, u) in mesh.boundary_node_params().items():
        if pieces[pc].tag in ("A", "B"):
            bc[node] = side_value(pc, u)
        else:
            v0 = side_value((pc - 1) % np_pieces, 1.0)
            v1 = side_value((pc + 1) % np_pieces, 0.0)
            if pc not in fracs:
                fracs[pc] = _metric_arclength_fraction(pieces[pc], metric)
            f = fracs[pc](u)
            bc[node] = (1.0 - f) * v0 + f * v1
    return bc


# -- the three boundary-data regimes ------------------------------------------


def solve_scherk_sequence(
    gamma: Geodesic,
    side: int = 1,
    n_list=(2, 3, 4),
    cfg: SolverConfig = SolverConfig(),
) -> list:
    """Plateau-style half-plane truncations: data 0 on the circle arc A(n),
    n on the geodesic segment B(n), for each radius in n_list."""
    if list(n_list) != sorted(n_list) or n_list[0] <= 0:
        raise SolverError("n_list must be positive and increasing")
    if side < 0:
        gamma = Geodesic(-gamma.lam, gamma.base, gamma.metric)
    out = []
    for n in n_list:
        mesh = build_truncated_halfplane_mesh(
            gamma,
            float(n),
            n_rings=cfg.mesh_rings,
            n_theta=cfg.mesh_theta,
            theta_grading=cfg.mesh_grading,
        )
        for _ in range(cfg.refine_levels):
            mesh = mesh.refine()
        bc = {}
        for node, (pc, _) in mesh.boundary_node_params().items():
            bc[node] = 0.0 if mesh.pieces[pc].tag == "A" else float(n)
        fld = solve_dirichlet(mesh, bc, gamma.metric, cfg)
        fld.meta["n"] = float(n)
        out.append(fld)
    return out


def solve_ideal_scherk(
    polygon: IdealPolygon,
    family: HorocycleFamily | None = None,
    T: float = 6.0,
    cfg: SolverConfig = SolverConfig(),
    mesh: TriMesh | None = None,
) -> ScalarField:
    """Truncated ideal-polygon problem: +T on A-sides, -T on B-sides.

    Refuses infeasible polygons; the feasibility report rides on the error.
    Passing a prebuilt mesh lets several truncation heights share one mesh.
    """
    if T <= 0:
        raise SolverError("truncation height must be positive")
    report = js_feasible(polygon, family)
    if not report.feasible:
        raise SolverError("polygon fails the solvability conditions", report=report)
    if family is None:
        family = default_family(polygon)
    if mesh is None:
        mesh = build_truncated_polygon_mesh(
            polygon, family,
            n_rings=cfg.mesh_rings,
            nodes_per_side=cfg.mesh_side,
            nodes_per_arc=cfg.mesh_arc,
        )
        for _ in range(cfg.refine_levels):
            mesh = mesh.refine()
    side_values = [
        T if polygon.side_label(i) == "A" else -T for i in range(len(polygon))
    ]
    bc = _polygon_bc(mesh, polygon.metric, side_values)
    fld = solve_dirichlet(mesh, bc, polygon.metric, cfg)
    fld.values -= fld.values[0]  # node 0 is the center of the ring construction
    fld.meta.update({"T": float(T), "center_node": 0})
    return fld


def _mixed_feasible(polygon, family, plus, minus):
    """2a(P) < |P| and 2b(P) < |P| for every inscribed polygon, classified by
    a horocycle-shrink scan (a level shift of delta adds delta per incident
    boundary side to |P| and to the matching a/b count)."""
    gromov = polygon.gromov_matrix()
    levels = np.asarray(family.levels)
    candidates = list(enumerate_inscribed(polygon))
    candidates.append(InscribedPolygon(polygon, tuple(range(len(polygon)))))
    for P in candidates:
        for target in (plus, minus):
            for shift in (0.0, 20.0):
                total = 0.0
                tgt = 0.0
                idx = P.indices
                m = len(idx)
                for k in range(m):
                    i, j = idx[k], idx[(k + 1) % m]
                    length = levels[i] + levels[j] + 2 * shift + gromov[i, j]
                    total += length
                    if (j - i) % len(polygon) == 1 and i in target:
                        tgt += length
                margin = total - 2.0 * tgt
                if shift > 0.0 and margin > FEASIBILITY_TOL:
                    break  # divergent case: the gap opens as horocycles shrink
                if shift == 0.0 and margin > FEASIBILITY_TOL:
                    break
            else:
                return False, P.indices
    return True, None


def solve_mixed_boundary(
    polygon: IdealPolygon,
    sides_plus,
    sides_minus,
    sides_finite: dict,
    family: HorocycleFamily | None = None,
    T: float = 6.0,
    cfg: SolverConfig = SolverConfig(),
) -> ScalarField:
    """Mixed data: +T / -T on the listed sides, continuous functions (of the
    normalized arclength parameter) on the rest."""
    n = len(polygon)
    sides_plus, sides_minus = set(sides_plus), set(sides_minus)
    declared = sides_plus | sides_minus | set(sides_finite)
    if declared != set(range(n)) or (sides_plus & sides_minus):
        raise SolverError("every side needs exactly one boundary assignment")
    if set(sides_finite) & (sides_plus | sides_minus):
        raise SolverError("finite sides overlap the infinite ones")
    if family is None:
        family = default_family(polygon)
    ok, bad = _mixed_feasible(polygon, family, sides_plus, sides_minus)
    if not ok:
        raise SolverError(f"inscribed polygon {bad} violates the side inequalities")

    mesh = build_truncated_polygon_mesh(
        polygon, family,
        n_rings=cfg.mesh_rings,
        nodes_per_side=cfg.mesh_side,
        nodes_per_arc=cfg.mesh_arc,
    )
    for _ in range(cfg.refine_levels):
        mesh = mesh.refine()
    side_values = []
    for i in range(n):
        if i in sides_plus:
            side_values.append(float(T))
        elif i in sides_minus:
            side_values.append(-float(T))
        else:
            f = sides_finite[i]
            side_values.append(f if callable(f) else float(f))
    bc = _polygon_bc(mesh, polygon.metric, side_values)
    fld = solve_dirichlet(mesh, bc, polygon.metric, cfg)
    fld.meta.update({"T": float(T)})
    return fld


def solve_dirichlet_at_infinity(
    phi,
    n_list=(2, 3, 4),
    cfg: SolverConfig = SolverConfig(),
    metric: Metric = Metric(),
    n_theta: int = 32,
) -> list:
    """Asymptotic Dirichlet problem: solve on geodesic disks of growing radius
    with boundary values phi(direction angle) at the radial geodesic's exit."""
    if list(n_list) != sorted(n_list) or n_list[0] <= 0:
        raise SolverError("n_list must be positive and increasing")
    out = []
    for n in n_list:
        mesh = build_geodesic_disk_mesh(
            float(n), n_rings=cfg.mesh_rings, n_theta=n_theta, metric=metric
        )
        for _ in range(cfg.refine_levels):
            mesh = mesh.refine()
        angle = mesh.node_extra["angle"]
        bc = {int(b): float(phi(angle[b])) for b in mesh.boundary_nodes()}
        fld = solve_dirichlet(mesh, bc, metric, cfg)
        fld.meta["n"] = float(n)
        out.append(fld)
    return out


def max_principle_check(u: ScalarField, v: ScalarField, mesh: TriMesh | None = None):
    """u <= v on the boundary forces u <= v inside; None when the boundary
    hypothesis itself fails (the check is then inapplicable)."""
    mesh = mesh or u.mesh
    for fld in (u, v):
        if fld.mesh is not mesh and not (
            fld.mesh.nodes.shape == mesh.nodes.shape
            and np.allclose(fld.mesh.nodes, mesh.nodes, atol=1e-12)
        ):
            raise SolverError("fields must share one mesh")
    b = mesh.boundary_nodes()
    if np.any(u.values[b] > v.values[b] + 1e-12):
        return None
    i = mesh.interior_nodes()
    return bool(np.all(u.values[i] <= v.values[i] + 1e-8))
