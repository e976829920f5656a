"""Flux integrals, the stability-gap inequality, conformal moduli, and the
exhaustion driver that grows an ideal polygon while keeping successive
solutions close on compacts.

The divergence-free field of a minimal graph is X = grad(u)/W.  Along an open
polyline the flux of X is computed by midpoint quadrature of <X, nu> against
the metric line element; around a closed loop it is computed exactly in the
discrete sense, as the sum of the assembled weak-form residuals over the
enclosed nodes, which vanishes to solver tolerance for a converged field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import spsolve
from shapely.geometry import Point, Polygon

from .meshing import MeshError, TriMesh
from .polygons import IdealPolygon, extend_and_perturb, js_feasible
from .solver import Assembly, ScalarField, SolverConfig, SolverError, solve_ideal_scherk


class DiagnosticsError(RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


# -- flux ---------------------------------------------------------------------


@dataclass(frozen=True)
class FluxResult:
    value: float
    length: float
    closed: bool

    def __post_init__(self):
        if abs(self.value) > self.length + 1e-8:
            raise DiagnosticsError("flux exceeds curve length; |X| <= 1 is violated")


def _lam(metric, z: complex) -> float:
    return metric.conformal_factor(z)


def _triangle_tree(mesh: TriMesh):
    """shapely STRtree of the triangles, cached on the mesh."""
    tree = getattr(mesh, "_flux_tree", None)
    if tree is None:
        from shapely.geometry import Polygon as ShPolygon
        from shapely.strtree import STRtree

        polys = [ShPolygon(mesh.nodes[t]) for t in mesh.triangles]
        tree = (STRtree(polys), polys)
        mesh._flux_tree = tree
    return tree


def _segment_pieces(mesh: TriMesh, p0, p1):
    """Clip a chart segment against the triangles it crosses.

    Yields (triangle index, piece length, piece midpoint, multiplicity);
    multiplicity is 2 where the segment runs along a shared interior edge, so
    the two one-sided gradients get averaged.
    """
    from shapely.geometry import LineString

    tree, polys = _triangle_tree(mesh)
    line = LineString([tuple(p0), tuple(p1)])
    cand = tree.query(line)
    pieces = []
    for ti in cand:
        inter = polys[int(ti)].intersection(line)
        if inter.is_empty or inter.length < 1e-14:
            continue
        geoms = getattr(inter, "geoms", [inter])
        for g in geoms:
            if g.length < 1e-14:
                continue
            mid = g.interpolate(0.5, normalized=True)
            pieces.append((int(ti), g.length, np.array([mid.x, mid.y])))
    if not pieces:
        raise MeshError(f"curve segment {p0}->{p1} lies outside the mesh")
    covered = sum(l for _, l, _ in pieces)
    seg_len = math.hypot(*(np.asarray(p1) - np.asarray(p0)))
    if covered < seg_len * (1.0 - 1e-6):
        raise MeshError("curve exits the mesh")
    out = []
    for ti, l, mid in pieces:
        mult = 0
        for tj, _, mid2 in pieces:
            if abs(mid2[0] - mid[0]) < 1e-12 and abs(mid2[1] - mid[1]) < 1e-12:
                mult += 1
        out.append((ti, l, mid, mult))
    return out


def flux(u: ScalarField, curve, metric=None) -> FluxResult:
    """Flux of X = grad(u)/W through a chart polyline.

    The normal is the right-hand normal of the direction of travel.  Each
    segment is integrated exactly triangle by triangle (the integrand is
    smooth within a triangle), so the quadrature converges at the same rate
    as the field itself.  A polyline whose endpoints coincide is treated as a
    closed loop and integrated discretely via the nodal residuals it encloses.
    """
    metric = metric or u.metric
    pts = np.atleast_2d(np.asarray(curve, dtype=float))
    if len(pts) < 2:
        raise DiagnosticsError("need at least two curve points")
    closed = bool(np.allclose(pts[0], pts[-1], atol=1e-12))

    grads = u.gradient()
    length = 0.0
    value = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        ell = math.hypot(*d)
        if ell == 0.0:
            continue
        nu = np.array([d[1], -d[0]]) / ell
        for ti, plen, mid, mult in _segment_pieces(u.mesh, a, b):
            lam = _lam(metric, complex(*mid))
            length += lam * plen / mult
            if not closed:
                g = grads[ti]
                w = math.sqrt(1.0 + (g @ g) / lam**2)
                value += (g @ nu) / w * plen / mult

    if closed:
        loop = Polygon(pts)
        if not loop.is_valid:
            raise DiagnosticsError("closed curve is self-intersecting")
        res = Assembly(u.mesh, metric).residual(u.values)
        inside = [
            int(i)
            for i in u.mesh.interior_nodes()
            if loop.contains(Point(u.mesh.nodes[i]))
        ]
        value = float(np.sum(res[inside]))
    return FluxResult(float(value), float(length), closed)


def boundary_polyline(mesh: TriMesh, piece_index: int, samples: int | None = None) -> np.ndarray:
    """Chart polyline tracing one boundary piece (for flux along a side).

    The polyline follows the mesh's own boundary edges rather than the exact
    curve, so it stays inside the triangulation and flux() can clip it.
    """
    sel = [
        (mesh.edge_params[k][0], tuple(mesh.boundary_edges[k]))
        for k in range(len(mesh.boundary_edges))
        if int(mesh.edge_piece[k]) == piece_index
    ]
    if not sel:
        raise DiagnosticsError(f"no boundary edges tagged with piece {piece_index}")
    sel.sort()
    chain = [sel[0][1][0]] + [e[1] for _, e in sel]
    return mesh.nodes[np.array(chain)]


# -- stability gap ------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    applicable: bool
    n_samples: int = 0
    min_slack: float = math.inf
    holds: bool = True


def _level_segments(mesh: TriMesh, w: np.ndarray, level: float):
    """Midpoints (and triangle indices) of the marching-triangles level set."""
    out = []
    vals = w[mesh.triangles] - level
    for m, v in enumerate(vals):
        pos, neg = np.any(v > 0), np.any(v < 0)
        if not (pos and neg):
            continue
        pts = []
        corners = mesh.nodes[mesh.triangles[m]]
        for a, b in ((0, 1), (1, 2), (2, 0)):
            va, vb = v[a], v[b]
            if va == vb or (va > 0) == (vb > 0):
                continue
            t = va / (va - vb)
            pts.append(corners[a] + t * (corners[b] - corners[a]))
        if len(pts) == 2:
            out.append((m, 0.5 * (pts[0] + pts[1])))
    return out


def stability_gap(u: ScalarField, v: ScalarField, level: float = 0.0) -> StabilityReport:
    """Pointwise inequality <X_u - X_v, eta> >= |N_u - N_v|^2 / 4 along the
    level curve of w = u - v, with eta the unit direction of grad(w).

    Inapplicable (rather than false) when the level set is empty or the
    gradient of w vanishes at every crossing.
    """
    if u.mesh is not v.mesh:
        raise DiagnosticsError("fields must share one mesh")
    w = u.values - v.values
    segs = _level_segments(u.mesh, w, level)
    if not segs:
        return StabilityReport(applicable=False)

    gu, gv = u.gradient(), v.gradient()
    metric = u.metric
    min_slack = math.inf
    n = 0
    for m, mid in segs:
        lam = _lam(metric, complex(*mid))
        pu, pv = gu[m] / lam, gv[m] / lam
        pw = pu - pv
        norm_w = math.hypot(*pw)
        if norm_w < 1e-10:
            continue  # isolated critical points of the difference are skipped
        eta = pw / norm_w
        wu = math.sqrt(1.0 + pu @ pu)
        wv = math.sqrt(1.0 + pv @ pv)
        xu, xv = pu / wu, pv / wv
        nu3 = np.array([*(-pu / wu), 1.0 / wu])
        nv3 = np.array([*(-pv / wv), 1.0 / wv])
        gap = float((xu - xv) @ eta)
        need = float(((nu3 - nv3) ** 2).sum()) / 4.0
        min_slack = min(min_slack, gap - need)
        n += 1
    if n == 0:
        return StabilityReport(applicable=False)
    return StabilityReport(True, n, min_slack, bool(min_slack >= -1e-8))


# -- conformal modulus --------------------------------------------------------


@dataclass(frozen=True)
class AnnulusModulus:
    inner: object
    outer: object
    modulus: float
    energy: float


def _region_predicate(region):
    if hasattr(region, "contains"):
        return lambda p: region.contains(Point(p[0], p[1]))
    center, radius = region
    cz = complex(center)
    return lambda p: abs(complex(p[0], p[1]) - cz) <= radius


def conformal_modulus(u: ScalarField, inner, outer, metric=None) -> AnnulusModulus:
    """Reciprocal Dirichlet capacity of outer \\ inner in the graph metric.

    Regions are shapely geometries or (center, chart radius) pairs.  The data
    is 1 on nodes inside `inner`, 0 on nodes outside `outer`; the quadratic
    form uses the conductivity of the first fundamental form of the graph,
    which only depends on its conformal class.
    """
    metric = metric or u.metric
    mesh = u.mesh
    in_pred, out_pred = _region_predicate(inner), _region_predicate(outer)
    flags_in = np.array([in_pred(p) for p in mesh.nodes])
    flags_out = np.array([out_pred(p) for p in mesh.nodes])
    if np.any(flags_in & ~flags_out):
        raise DiagnosticsError("inner region escapes the outer one")
    ones = np.nonzero(flags_in)[0]
    zeros = np.nonzero(~flags_out)[0]
    free = np.nonzero(flags_out & ~flags_in)[0]
    if len(ones) == 0 or len(zeros) == 0 or len(free) == 0:
        raise DiagnosticsError("regions leave no annulus on this mesh")

    grads = mesh.tri_gradients()
    areas = mesh.tri_areas()
    g = u.gradient()
    cents = mesh.centroids()
    lam = np.array([_lam(metric, complex(x, y)) for x, y in cents])
    q = g / lam[:, None]
    w = np.sqrt(1.0 + np.einsum("md,md->m", q, q))
    # conductivity sqrt(det A) A^{-1} of A = lam^2 I + grad u grad u^T
    eye = np.eye(2)
    cond = w[:, None, None] * eye - np.einsum("mi,mj->mij", q, q) / w[:, None, None]
    local = np.einsum("m,mid,mde,mje->mij", areas, grads, cond, grads)

    from scipy.sparse import csr_matrix

    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    K = csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.num_nodes,) * 2)

    vals = np.zeros(mesh.num_nodes)
    vals[ones] = 1.0
    fixed = np.concatenate([ones, zeros])
    rhs = -(K[free][:, fixed] @ vals[fixed])
    vals[free] = spsolve(K[free][:, free], rhs)
    energy = float(vals @ (K @ vals))
    if energy <= 0:
        raise DiagnosticsError("degenerate capacity")
    return AnnulusModulus(inner, outer, 1.0 / energy, energy)


# -- discrete C^2 comparison --------------------------------------------------


def c2_difference(
    f1: ScalarField,
    f2: ScalarField,
    center=(0.0, 0.0),
    radius: float = 0.4,
    h: float = 0.12,
) -> float:
    """Discrete C^2 norm of f1 - f2 on a chart disk: values plus centered
    first and second differences on a grid of step h."""
    cx, cy = center
    pts = []
    r_in = radius - 2.0 * h
    if r_in <= 0:
        raise DiagnosticsError("compact too small for the difference stencil")
    n = int(r_in / h)
    base = [
        (cx + i * h, cy + j * h)
        for i in range(-n, n + 1)
        for j in range(-n, n + 1)
        if math.hypot(i * h, j * h) <= r_in
    ]
    if not base:
        raise DiagnosticsError("empty sample grid")
    offsets = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    for x, y in base:
        for dx, dy in offsets:
            pts.append((x + dx * h, y + dy * h))
    pts = np.asarray(pts)
    w = f1.interpolate(pts) - f2.interpolate(pts)
    w = w.reshape(len(base), len(offsets))
    c, e, ww, nn, ss, ne, se, nw, sw = w.T
    wx = (e - ww) / (2 * h)
    wy = (nn - ss) / (2 * h)
    wxx = (e - 2 * c + ww) / h**2
    wyy = (nn - 2 * c + ss) / h**2
    wxy = (ne - se - nw + sw) / (4 * h**2)
    total = (
        np.abs(c)
        + np.abs(wx) + np.abs(wy)
        + np.abs(wxx) + np.abs(wyy) + np.abs(wxy)
    )
    return float(total.max())


# -- exhaustion driver --------------------------------------------------------


@dataclass
class ExhaustionState:
    step: int
    polygon: IdealPolygon
    field: ScalarField
    eps: float
    t: float | None = None
    c2_history: list = field(default_factory=list)
    c2_diff: float | None = None
    angle_gap: float | None = None
    angle_bound: float | None = None
    feasible: bool = True
    condition2_complete: bool = True
    inner_radius: float | None = None
    outer_radius: float | None = None
    modulus: float | None = None
    modulus_met: bool | None = None

    def report(self) -> dict:
        return {
            "step": self.step,
            "vertices": len(self.polygon),
            "eps": self.eps,
            "t": self.t,
            "c2_history": self.c2_history,
            "c2_diff": self.c2_diff,
            "angle_gap": self.angle_gap,
            "angle_bound": self.angle_bound,
            "feasible": self.feasible,
            "condition2_complete": self.condition2_complete,
            "modulus": self.modulus,
            "modulus_met": self.modulus_met,
        }


def _max_angle_gap(polygon: IdealPolygon) -> float:
    th = [v.theta for v in polygon.vertices]
    n = len(th)
    return max((th[(i + 1) % n] - th[i]) % (2 * math.pi) for i in range(n))


def _extend_all_pairs(polygon: IdealPolygon, t: float) -> IdealPolygon:
    """One exhaustion round: attach perturbed quadrilaterals along every
    (A, B) side pair; each application adds four vertices."""
    out = polygon
    offset = 0
    for j in range(0, len(polygon), 2):
        out = extend_and_perturb(out, j + offset, t)
        offset += 4
    return out


def run_exhaustion(
    initial: IdealPolygon,
    steps: int = 1,
    eps=None,
    cfg: SolverConfig = SolverConfig(),
    T: float = 6.0,
    t0: float = 0.2,
    max_halvings: int = 5,
    compact_radius: float = 0.35,
    modulus_target: float = 1.0,
    condition2_cap: int = 14,
) -> list:
    """Grow the polygon step by step, keeping each new solution C^2-close to
    the previous one on a fixed compact and recording annulus moduli.

    Per step: extend-and-perturb on every side pair, halving the perturbation
    parameter until the discrete C^2 difference on the compact drops below the
    step budget; then enlarge the outer compact until the graph-metric annulus
    modulus reaches the target (best effort, capped by the domain).
    """
    if steps < 1:
        raise DiagnosticsError("need at least one step")
    if eps is None:
        # geometric budget with finite sum; the first-step floor is set by the
        # truncation bias of the two finite solves, about 3.6 at T = 6
        eps = [4.0 / 2**k for k in range(steps)]
    eps = list(eps)
    if len(eps) < steps or any(e <= 0 for e in eps):
        raise DiagnosticsError("need a positive epsilon per step")

    history = []
    try:
        rep0 = js_feasible(initial)
        if not rep0.feasible:
            raise DiagnosticsError("initial polygon is not solvable")
        u0 = solve_ideal_scherk(initial, T=T, cfg=cfg)
        history.append(
            ExhaustionState(0, initial, u0, eps[0], angle_gap=_max_angle_gap(initial))
        )

        for k in range(1, steps + 1):
            prev = history[-1]
            bound = math.pi / 2**k
            t = t0
            best = None
            c2_hist = []
            for _ in range(max_halvings + 1):
                poly = _extend_all_pairs(prev.polygon, t)
                if len(poly) <= condition2_cap:
                    rep = js_feasible(poly)
                    feasible, complete = rep.feasible, True
                else:
                    # full inscribed enumeration is exponential; fall back to
                    # the side-length balance, which extend-and-perturb preserves
                    from .polygons import a_minus_b

                    feasible = abs(a_minus_b(poly)) <= 1e-8
                    complete = False
                if not feasible:
                    raise DiagnosticsError(f"step {k} produced an unsolvable polygon")
                fld = solve_ideal_scherk(poly, T=T, cfg=cfg)
                c2 = c2_difference(prev.field, fld, radius=compact_radius)
                c2_hist.append({"t": t, "c2": c2})
                best = (poly, fld, t, c2, complete)
                if c2 < eps[k - 1]:
                    break
                t *= 0.5
            poly, fld, t, c2, complete = best
            if c2 >= eps[k - 1]:
                raise DiagnosticsError(
                    f"step {k}: C^2 difference {c2:.4g} never dropped below "
                    f"{eps[k - 1]:.4g} within {max_halvings} halvings",
                    history=history,
                )
            state = ExhaustionState(
                k, poly, fld, eps[k - 1], t=t,
                c2_history=c2_hist, c2_diff=c2,
                angle_gap=_max_angle_gap(poly), angle_bound=bound,
                feasible=True, condition2_complete=complete,
            )
            if state.angle_gap > bound + 1e-12:
                raise DiagnosticsError(f"step {k} violates the angle bound")

            # enlarge the outer compact until the annulus modulus is reached
            r_in = compact_radius
            boundary_r = np.hypot(*fld.mesh.nodes[fld.mesh.boundary_nodes()].T).min()
            r_out = min(2.0 * r_in, 0.5 * (r_in + boundary_r))
            modulus, met = None, False
            while True:
                am = conformal_modulus(fld, ((0j), r_in), ((0j), r_out))
                modulus = am.modulus
                if modulus >= modulus_target:
                    met = True
                    break
                nxt = 0.5 * (r_out + boundary_r)
                if nxt - r_out < 1e-3:
                    break
                r_out = nxt
            state.inner_radius = r_in
            state.outer_radius = r_out
            state.modulus = modulus
            state.modulus_met = met
            history.append(state)
        return history
    except (SolverError, MeshError) as exc:
        raise DiagnosticsError(str(exc), history=history) from exc
