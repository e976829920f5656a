"""Triangle meshes of truncated domains in the disk chart.

All builders produce structured, symmetric triangulations: quadrilateral
cells are split into four triangles around a cell-center node, so any chart
rotation or reflection that maps the domain (and its boundary sampling) to
itself maps the triangulation to itself exactly.  That makes discrete
symmetry and antisymmetry tests meaningful at solver tolerance instead of
discretization error.

Boundary edges remember which boundary piece (a tagged parametric curve)
they came from and the curve parameters of their endpoints, so uniform
refinement can place new boundary nodes back on the true curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    TWO_PI,
    FermiChart,
    Geodesic,
    Metric,
    mobius,
)
from .polygons import HorocycleFamily, IdealPolygon


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryPiece:
    """A tagged parametric boundary curve, parameter in [0, 1]."""

    tag: str
    curve: object  # callable t -> complex chart point

    def point(self, t: float) -> complex:
        return self.curve(t)


@dataclass
class TriMesh:
    nodes: np.ndarray  # (N, 2) chart coordinates
    triangles: np.ndarray  # (M, 3) node indices, positively oriented
    boundary_edges: np.ndarray  # (E, 2) node indices
    edge_piece: np.ndarray  # (E,) index into pieces
    edge_params: np.ndarray  # (E, 2) curve parameters of the endpoints
    pieces: tuple
    node_extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self._fix_orientation()
        self._tree = None
        self._grads = None
        self._areas = None

    # -- basic quantities -------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def _corners(self):
        p = self.nodes[self.triangles]
        return p[:, 0], p[:, 1], p[:, 2]

    @staticmethod
    def _cross2(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    def _fix_orientation(self):
        a, b, c = self._corners()
        signed = 0.5 * self._cross2(b - a, c - a)
        flip = signed < 0
        if np.any(flip):
            t = self.triangles[flip]
            self.triangles[flip] = t[:, [0, 2, 1]]

    def tri_areas(self) -> np.ndarray:
        if self._areas is None:
            a, b, c = self._corners()
            self._areas = 0.5 * self._cross2(b - a, c - a)
            if np.any(self._areas <= 0):
                raise MeshError("degenerate triangle in mesh")
        return self._areas

    def tri_gradients(self) -> np.ndarray:
        """(M, 3, 2) chart gradients of the three nodal basis functions."""
        if self._grads is None:
            a, b, c = self._corners()
            area2 = 2.0 * self.tri_areas()
            g = np.empty((len(self.triangles), 3, 2))
            for k, (p, q) in enumerate(((b, c), (c, a), (a, b))):
                # grad of the hat at corner k is perpendicular to the far edge
                g[:, k, 0] = (p[:, 1] - q[:, 1]) / area2
                g[:, k, 1] = (q[:, 0] - p[:, 0]) / area2
            self._grads = g
        return self._grads

    def field_gradient(self, values: np.ndarray) -> np.ndarray:
        """(M, 2) per-triangle chart gradient of a nodal field."""
        v = np.asarray(values, dtype=float)[self.triangles]  # (M, 3)
        return np.einsum("mk,mkd->md", v, self.tri_gradients())

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.num_nodes, dtype=bool)
        mask[self.boundary_nodes()] = False
        return np.nonzero(mask)[0]

    def boundary_node_params(self) -> dict:
        """node -> (piece index, curve parameter); earlier pieces win at corners."""
        out = {}
        order = np.argsort(self.edge_piece, kind="stable")
        for e in order:
            pc = int(self.edge_piece[e])
            for which in (0, 1):
                n = int(self.boundary_edges[e, which])
                if n not in out:
                    out[n] = (pc, float(self.edge_params[e, which]))
        return out

    def min_angle(self) -> float:
        """Smallest triangle angle, in radians (mesh-quality audit)."""
        a, b, c = self._corners()
        best = math.inf
        for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
            u, v = q - p, r - p
            cosang = np.einsum("ij,ij->i", u, v) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
            )
            best = min(best, float(np.arccos(np.clip(cosang, -1, 1)).min()))
        return best

    # -- point location and interpolation ---------------------------------

    def _barycentric(self, tri: int, pt: np.ndarray) -> np.ndarray:
        i, j, k = self.triangles[tri]
        a, b, c = self.nodes[i], self.nodes[j], self.nodes[k]
        m = np.array([[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]])
        lam = np.linalg.solve(m, pt - a)
        return np.array([1.0 - lam[0] - lam[1], lam[0], lam[1]])

    def locate(self, points) -> np.ndarray:
        """Triangle index containing each point (boundary points snap inward)."""
        from shapely import box
        from shapely.strtree import STRtree

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self._tree is None:
            corners = self.nodes[self.triangles]
            lo = corners.min(axis=1)
            hi = corners.max(axis=1)
            eps = 1e-12
            boxes = [
                box(lo[t, 0] - eps, lo[t, 1] - eps, hi[t, 0] + eps, hi[t, 1] + eps)
                for t in range(len(self.triangles))
            ]
            self._tree = STRtree(boxes)
        out = np.empty(len(pts), dtype=np.int64)
        for n, pt in enumerate(pts):
            cand = self._tree.query(box(pt[0] - 1e-12, pt[1] - 1e-12, pt[0] + 1e-12, pt[1] + 1e-12))
            best, best_val = -1, -math.inf
            for tri in cand:
                lam = self._barycentric(int(tri), pt)
                worst = lam.min()
                if worst >= -1e-9:
                    best, best_val = int(tri), worst
                    break
                if worst > best_val:
                    best, best_val = int(tri), worst
            if best_val < -1e-6:
                raise MeshError(f"point {pt} is outside the mesh")
            out[n] = best
        return out

    def interpolate(self, values, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        v = np.asarray(values, dtype=float)
        tris = self.locate(pts)
        out = np.empty(len(pts))
        for n, (pt, tri) in enumerate(zip(pts, tris)):
            lam = np.clip(self._barycentric(int(tri), pt), 0.0, 1.0)
            lam /= lam.sum()
            out[n] = lam @ v[self.triangles[tri]]
        return out

    # -- refinement --------------------------------------------------------

    def refine(self) -> "TriMesh":
        """Uniform 4:1 refinement; boundary midpoints go back on the curve."""
        nodes = list(map(tuple, self.nodes))
        bedge = {}
        for e, (i, j) in enumerate(self.boundary_edges):
            bedge[(min(i, j), max(i, j))] = e
        midpoint = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key in midpoint:
                return midpoint[key]
            if key in bedge:
                e = bedge[key]
                tm = 0.5 * (self.edge_params[e, 0] + self.edge_params[e, 1])
                z = self.pieces[self.edge_piece[e]].point(tm)
                nodes.append((z.real, z.imag))
            else:
                p = 0.5 * (self.nodes[i] + self.nodes[j])
                nodes.append((p[0], p[1]))
            midpoint[key] = len(nodes) - 1
            return midpoint[key]

        tris = []
        for a, b, c in self.triangles:
            mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
            tris += [(a, mab, mca), (b, mbc, mab), (c, mca, mbc), (mab, mbc, mca)]

        new_edges, new_piece, new_params = [], [], []
        for e, (i, j) in enumerate(self.boundary_edges):
            m = midpoint[(min(i, j), max(i, j))]
            ti, tj = self.edge_params[e]
            tm = 0.5 * (ti + tj)
            new_edges += [(i, m), (m, j)]
            new_piece += [self.edge_piece[e]] * 2
            new_params += [(ti, tm), (tm, tj)]

        return TriMesh(
            np.array(nodes),
            np.array(tris, dtype=np.int64),
            np.array(new_edges, dtype=np.int64),
            np.array(new_piece, dtype=np.int64),
            np.array(new_params),
            self.pieces,
        )

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": [
                {
                    "edge": [int(i), int(j)],
                    "tag": self.pieces[self.edge_piece[e]].tag,
                    "params": self.edge_params[e].tolist(),
                }
                for e, (i, j) in enumerate(self.boundary_edges)
            ],
        }


# -- structured builders ----------------------------------------------------


def _emit_cross_cells(nodes, tris, cells):
    for c0, c1, c2, c3 in cells:
        center = (
            np.asarray(nodes[c0]) + nodes[c1] + nodes[c2] + nodes[c3]
        ) / 4.0
        nodes.append(tuple(center))
        m = len(nodes) - 1
        tris += [(c0, c1, m), (c1, c2, m), (c2, c3, m), (c3, c0, m)]


def build_fermi_rectangle_mesh(
    gamma: Geodesic,
    s_range: tuple,
    t_range: tuple,
    ns: int = 8,
    nt: int = 8,
) -> TriMesh:
    """Structured mesh of a Fermi-coordinate rectangle [s0,s1] x [t0,t1]."""
    s0, s1 = s_range
    t0, t1 = t_range
    if not (s1 > s0 and t1 > t0 and ns >= 1 and nt >= 1):
        raise MeshError("bad rectangle or resolution")
    chart = FermiChart(gamma)
    ss = np.linspace(s0, s1, ns + 1)
    tt = np.linspace(t0, t1, nt + 1)

    nodes, st = [], []
    index = {}
    for i, s in enumerate(ss):
        for j, t in enumerate(tt):
            z = chart.point_chart(s, t)
            index[(i, j)] = len(nodes)
            nodes.append((z.real, z.imag))
            st.append((s, t))

    # plain alternating-diagonal split: every node is a grid point, which
    # keeps the nodal error of the calibration solves cleanly second order
    tris = []
    for i in range(ns):
        for j in range(nt):
            c = [index[(i, j)], index[(i + 1, j)], index[(i + 1, j + 1)], index[(i, j + 1)]]
            if (i + j) % 2 == 0:
                tris += [(c[0], c[1], c[2]), (c[0], c[2], c[3])]
            else:
                tris += [(c[0], c[1], c[3]), (c[1], c[2], c[3])]

    def curve(sa, sb, ta, tb):
        return lambda u: chart.point_chart(sa + u * (sb - sa), ta + u * (tb - ta))

    pieces = (
        BoundaryPiece("s_min", curve(s0, s0, t0, t1)),
        BoundaryPiece("s_max", curve(s1, s1, t0, t1)),
        BoundaryPiece("t_min", curve(s0, s1, t0, t0)),
        BoundaryPiece("t_max", curve(s0, s1, t1, t1)),
    )
    edges, epc, eprm = [], [], []
    for j in range(nt):
        u0, u1 = j / nt, (j + 1) / nt
        edges.append((index[(0, j)], index[(0, j + 1)])); epc.append(0); eprm.append((u0, u1))
        edges.append((index[(ns, j)], index[(ns, j + 1)])); epc.append(1); eprm.append((u0, u1))
    for i in range(ns):
        u0, u1 = i / ns, (i + 1) / ns
        edges.append((index[(i, 0)], index[(i + 1, 0)])); epc.append(2); eprm.append((u0, u1))
        edges.append((index[(i, nt)], index[(i + 1, nt)])); epc.append(3); eprm.append((u0, u1))

    st = np.array(st)
    return TriMesh(
        np.array(nodes), np.array(tris), np.array(edges), np.array(epc),
        np.array(eprm), pieces,
        node_extra={"fermi_s": st[:, 0], "fermi_t": st[:, 1]},
    )


def _polar_fan(radius_of, n_rings, angles, wrap):
    """Fan-plus-rings node/triangle skeleton around a collapsed center.

    radius_of(k, angle) -> chart radius of ring k at the given angle
    (rings 1..n_rings); nodes returned in pre-chart polar coordinates.
    """
    nodes = [(0.0, 0.0)]
    index = {}
    ncols = len(angles)
    for k in range(1, n_rings + 1):
        for j, th in enumerate(angles):
            r = radius_of(k, th)
            index[(k, j)] = len(nodes)
            nodes.append((r * math.cos(th), r * math.sin(th)))

    tris = []
    last = ncols if wrap else ncols - 1
    for j in range(last):
        j2 = (j + 1) % ncols
        tris.append((0, index[(1, j)], index[(1, j2)]))
    cells = []
    for k in range(1, n_rings):
        for j in range(last):
            j2 = (j + 1) % ncols
            cells.append((index[(k, j)], index[(k, j2)], index[(k + 1, j2)], index[(k + 1, j)]))
    _emit_cross_cells(nodes, tris, cells)
    return nodes, tris, index


def build_geodesic_disk_mesh(
    radius: float,
    n_rings: int = 12,
    n_theta: int = 32,
    metric: Metric = Metric(),
) -> TriMesh:
    """Geodesic disk around the chart origin, metric-uniform rings.

    Node angles are stored in node_extra["angle"]; for boundary nodes this is
    the shooting direction of the radial geodesic, which is what asymptotic
    boundary data is a function of.
    """
    if radius <= 0 or n_rings < 1 or n_theta < 3:
        raise MeshError("bad disk parameters")
    scale = metric.scale
    angles = [TWO_PI * j / n_theta for j in range(n_theta)]

    def radius_of(k, th):
        return math.tanh(0.5 * scale * radius * k / n_rings)

    nodes, tris, index = _polar_fan(radius_of, n_rings, angles, wrap=True)
    r_out = radius_of(n_rings, 0.0)
    pieces = (
        BoundaryPiece("circle", lambda u: r_out * complex(math.cos(TWO_PI * u), math.sin(TWO_PI * u))),
    )
    edges, epc, eprm = [], [], []
    for j in range(n_theta):
        j2 = (j + 1) % n_theta
        edges.append((index[(n_rings, j)], index[(n_rings, j2)]))
        epc.append(0)
        eprm.append((j / n_theta, (j + 1) / n_theta))

    nd = np.array(nodes)
    angle = np.mod(np.arctan2(nd[:, 1], nd[:, 0]), TWO_PI)
    angle[0] = 0.0
    return TriMesh(
        nd, np.array(tris), np.array(edges), np.array(epc), np.array(eprm),
        pieces, node_extra={"angle": angle},
    )


def build_truncated_halfplane_mesh(
    gamma: Geodesic,
    n: float,
    n_rings: int = 10,
    n_theta: int = 10,
    theta_grading: float = 0.0,
) -> TriMesh:
    """Half of the geodesic disk of radius n centered on gamma(0).

    The region is bounded by the outer circle arc (tag "A") and the geodesic
    segment gamma([-n, n]) (tag "B"); it lies on the s > 0 side of gamma.
    Fermi coordinates of every node are stored in node_extra.

    theta_grading > 0 clusters the angular columns symmetrically toward the
    geodesic, resolving the steep layer that large boundary data creates
    there; 0 keeps them uniform.
    """
    if n <= 0 or n_rings < 1 or n_theta < 2:
        raise MeshError("bad half-plane parameters")
    metric = gamma.metric
    scale = metric.scale
    if theta_grading > 0.0:
        beta = theta_grading
        angles = [
            0.5 * math.pi * (1.0 + math.tanh(beta * (2.0 * j / n_theta - 1.0)) / math.tanh(beta))
            for j in range(n_theta + 1)
        ]
    else:
        angles = [math.pi * j / n_theta for j in range(n_theta + 1)]
    r_max = math.tanh(0.5 * scale * n)

    # chart-uniform rings keep the triangle aspect ratio bounded
    def radius_of(k, th):
        return r_max * k / n_rings

    nodes, tris, index = _polar_fan(radius_of, n_rings, angles, wrap=False)
    # map the pre-chart half disk onto the surface
    mapped = [gamma.map(complex(x, y)) for x, y in nodes]
    nd = np.array([(z.real, z.imag) for z in mapped])

    r_out = r_max
    pieces = (
        BoundaryPiece("A", lambda u: gamma.map(r_out * complex(math.cos(math.pi * u), math.sin(math.pi * u)))),
        BoundaryPiece("B", lambda u: gamma.point_chart(-n + 2.0 * n * u)),
    )
    edges, epc, eprm = [], [], []
    for j in range(n_theta):
        edges.append((index[(n_rings, j)], index[(n_rings, j + 1)]))
        epc.append(0)
        eprm.append((j / n_theta, (j + 1) / n_theta))

    # the geodesic segment: theta = pi column, the center, theta = 0 column
    def b_param(k, positive):
        t = (2.0 / scale) * math.atanh(radius_of(k, 0.0))
        if not positive:
            t = -t
        return (t + n) / (2.0 * n)

    col_neg = [index[(k, n_theta)] for k in range(n_rings, 0, -1)] + [0]
    col_pos = [0] + [index[(k, 0)] for k in range(1, n_rings + 1)]
    chain = col_neg + col_pos[1:]
    params = (
        [b_param(k, False) for k in range(n_rings, 0, -1)]
        + [0.5]
        + [b_param(k, True) for k in range(1, n_rings + 1)]
    )
    for a, b, ua, ub in zip(chain[:-1], chain[1:], params[:-1], params[1:]):
        edges.append((a, b))
        epc.append(1)
        eprm.append((ua, ub))

    chart = FermiChart(gamma)
    fs = np.empty(len(nd))
    ft = np.empty(len(nd))
    for i, (x, y) in enumerate(nd):
        fs[i], ft[i] = chart.coords(complex(x, y))
    fs[np.abs(fs) < 1e-15] = 0.0
    return TriMesh(
        nd, np.array(tris), np.array(edges), np.array(epc), np.array(eprm),
        pieces, node_extra={"fermi_s": fs, "fermi_t": ft},
    )


# -- truncated ideal polygon -------------------------------------------------


def _side_clip_params(polygon: IdealPolygon, family: HorocycleFamily, i: int):
    """Arclength window of side i between the horocycles at its endpoints."""
    from .geometry import busemann

    n = len(polygon)
    g = polygon.side(i)
    vi, vj = polygon.vertices[i], polygon.vertices[(i + 1) % n]
    base = g.point(0.0)
    c0 = busemann(vi, base, polygon.metric)
    c1 = busemann(vj, base, polygon.metric)
    tau0 = -family.levels[i] - c0
    tau1 = family.levels[(i + 1) % n] + c1
    if tau1 <= tau0:
        raise MeshError("horocycles swallow the whole side; lower the levels")
    return g, tau0, tau1


def _horo_arc(h, p_from: complex, p_to: complex):
    """Angular window of the horocycle arc between two boundary points,

    taken on the side away from the tangency point so the arc stays on the
    truncation boundary."""
    c, r = h.chart_circle()
    a0 = math.atan2((p_from - c).imag, (p_from - c).real)
    a1 = math.atan2((p_to - c).imag, (p_to - c).real)
    a_xi = h.xi.theta
    span = (a1 - a0) % TWO_PI
    if (a_xi - a0) % TWO_PI < span:
        span -= TWO_PI
    return c, r, a0, span


def build_truncated_polygon_mesh(
    polygon: IdealPolygon,
    family: HorocycleFamily | None = None,
    n_rings: int = 14,
    nodes_per_side: int = 16,
    nodes_per_arc: int = 6,
) -> TriMesh:
    """Mesh of the ideal polygon truncated by a horocycle family.

    Boundary pieces alternate geodesic-side arcs (tagged with the side label
    "A"/"B") and horocycle arcs (tagged "H"); interior nodes sit on
    metric-uniform rings toward the chart centroid, so symmetric polygons get
    exactly symmetric meshes.
    """
    from .polygons import default_family

    if family is None:
        family = default_family(polygon)
    family.validate_disjoint(polygon)
    n = len(polygon)
    hcs = family.horocycles(polygon)

    sides = [_side_clip_params(polygon, family, i) for i in range(n)]

    pieces = []
    samples = []  # (piece index, param, complex point) around the boundary
    for i in range(n):
        g, tau0, tau1 = sides[i]

        def side_curve(u, g=g, tau0=tau0, tau1=tau1):
            return g.point_chart(tau0 + u * (tau1 - tau0))

        pieces.append(BoundaryPiece(polygon.side_label(i), side_curve))
        pc = len(pieces) - 1
        for k in range(nodes_per_side):
            u = k / nodes_per_side
            samples.append((pc, u, side_curve(u)))

        j = (i + 1) % n
        p_from = side_curve(1.0)
        g2, t20, t21 = sides[j]
        p_to = g2.point_chart(t20)
        c, r, a0, span = _horo_arc(hcs[j], p_from, p_to)

        def arc_curve(u, c=c, r=r, a0=a0, span=span):
            a = a0 + u * span
            return c + r * complex(math.cos(a), math.sin(a))

        pieces.append(BoundaryPiece("H", arc_curve))
        pc = len(pieces) - 1
        for k in range(nodes_per_arc):
            u = k / nodes_per_arc
            samples.append((pc, u, arc_curve(u)))

    pts = np.array([(z.real, z.imag) for _, _, z in samples])
    center = pts.mean(axis=0)
    if np.hypot(*center) < 1e-12:
        center = np.zeros(2)
    cz = complex(center[0], center[1])

    nb = len(samples)
    nodes = [(center[0], center[1])]
    index = {}
    for k in range(1, n_rings + 1):
        frac = k / n_rings
        for j, (_, _, z) in enumerate(samples):
            w = mobius(-cz, z)  # boundary point as seen from the center
            rr = math.tanh(frac * math.atanh(abs(w)))
            zz = mobius(cz, rr * (w / abs(w)))
            index[(k, j)] = len(nodes)
            nodes.append((zz.real, zz.imag))

    tris = []
    for j in range(nb):
        tris.append((0, index[(1, j)], index[(1, (j + 1) % nb)]))
    cells = []
    for k in range(1, n_rings):
        for j in range(nb):
            j2 = (j + 1) % nb
            cells.append((index[(k, j)], index[(k, j2)], index[(k + 1, j2)], index[(k + 1, j)]))
    _emit_cross_cells(nodes, tris, cells)

    edges, epc, eprm = [], [], []
    for j in range(nb):
        j2 = (j + 1) % nb
        pc, u, _ = samples[j]
        pc2, u2, _ = samples[j2]
        edges.append((index[(n_rings, j)], index[(n_rings, j2)]))
        epc.append(pc)
        eprm.append((u, u2 if pc2 == pc else 1.0))

    mesh = TriMesh(
        np.array(nodes), np.array(tris), np.array(edges), np.array(epc),
        np.array(eprm), tuple(pieces),
    )
    if np.any(np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1]) >= 1.0):
        raise MeshError("mesh node escaped the chart")
    return mesh


def build_flat_annulus_mesh(
    r_in: float,
    r_out: float,
    n_rings: int = 32,
    n_theta: int = 64,
) -> TriMesh:
    """Round annulus with geometric ring spacing (capacity self-tests)."""
    if not (0 < r_in < r_out < 1):
        raise MeshError("need 0 < r_in < r_out < 1")
    ratio = r_out / r_in
    angles = [TWO_PI * j / n_theta for j in range(n_theta)]
    nodes, index = [], {}
    for k in range(n_rings + 1):
        r = r_in * ratio ** (k / n_rings)
        for j, th in enumerate(angles):
            index[(k, j)] = len(nodes)
            nodes.append((r * math.cos(th), r * math.sin(th)))
    tris = []
    cells = []
    for k in range(n_rings):
        for j in range(n_theta):
            j2 = (j + 1) % n_theta
            cells.append((index[(k, j)], index[(k, j2)], index[(k + 1, j2)], index[(k + 1, j)]))
    _emit_cross_cells(nodes, tris, cells)

    def ring_curve(r):
        return lambda u: r * complex(math.cos(TWO_PI * u), math.sin(TWO_PI * u))

    pieces = (BoundaryPiece("inner", ring_curve(r_in)), BoundaryPiece("outer", ring_curve(r_out)))
    edges, epc, eprm = [], [], []
    for j in range(n_theta):
        j2 = (j + 1) % n_theta
        prm = (j / n_theta, (j + 1) / n_theta)
        edges.append((index[(0, j)], index[(0, j2)])); epc.append(0); eprm.append(prm)
        edges.append((index[(n_rings, j)], index[(n_rings, j2)])); epc.append(1); eprm.append(prm)
    return TriMesh(
        np.array(nodes), np.array(tris), np.array(edges), np.array(epc),
        np.array(eprm), pieces,
    )
