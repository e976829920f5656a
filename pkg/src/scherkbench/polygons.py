"""Ideal polygons, horocycle bookkeeping, and feasibility of infinite boundary data.

An ideal polygon is an even cyclic list of boundary-at-infinity vertices whose
sides carry alternating +inf / -inf labels (A first).  Truncated side lengths
are distances between horocycles at the two vertices; the difference
a - b of the +inf and -inf totals is independent of the horocycle choice.

The feasibility check turns the existential quantifier over horocycle
families into a finite decision: shrinking the horocycle at a vertex of an
inscribed polygon P adds twice the shift to |P| and at most once to a(P), so
|P| - 2a(P) diverges to +infinity exactly when some vertex of P has no
incident boundary side with +inf data, and is horocycle-invariant otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import brentq

from .geometry import (
    TWO_PI,
    Geodesic,
    Horocycle,
    IdealPoint,
    Metric,
    SurfacePoint,
    busemann,
    dist_horocycles,
    distance,
    geodesic_between,
    gromov_term,
)

# Strictness margin for the side-length inequalities (guards float noise).
FEASIBILITY_TOL = 1e-8

DIVERGENT = "divergent-satisfied"
SATISFIED = "invariant-satisfied"
VIOLATED = "violated"


class PolygonError(ValueError):
    pass


def _ccw_gaps(angles):
    n = len(angles)
    return [(angles[(i + 1) % n] - angles[i]) % TWO_PI for i in range(n)]


@dataclass(frozen=True)
class IdealPolygon:
    """Even cyclic vertex list at infinity with alternating side labels, A first."""

    vertices: tuple
    metric: Metric = Metric()

    def __post_init__(self):
        vs = tuple(
            v if isinstance(v, IdealPoint) else IdealPoint(float(v)) for v in self.vertices
        )
        object.__setattr__(self, "vertices", vs)
        n = len(vs)
        if n < 4 or n % 2 != 0:
            raise PolygonError(f"need an even vertex count >= 4, got {n}")
        gaps = _ccw_gaps([v.theta for v in vs])
        if any(g <= 0.0 for g in gaps) or abs(sum(gaps) - TWO_PI) > 1e-9:
            raise PolygonError("vertex angles must be strictly increasing counter-clockwise")

    def __len__(self):
        return len(self.vertices)

    def side_label(self, i: int) -> str:
        """Label of the side from vertex i to vertex i+1."""
        return "A" if i % 2 == 0 else "B"

    def side(self, i: int) -> Geodesic:
        n = len(self.vertices)
        return geodesic_between(self.vertices[i], self.vertices[(i + 1) % n], self.metric)

    def gromov_matrix(self) -> np.ndarray:
        """Pairwise constants c_ij with dist(H_i, H_j) = l_i + l_j + c_ij."""
        n = len(self.vertices)
        c = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                c[i, j] = c[j, i] = gromov_term(self.vertices[i], self.vertices[j], self.metric)
        return c


@dataclass(frozen=True)
class HorocycleFamily:
    """One horocycle level per polygon vertex; must be pairwise disjoint."""

    levels: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(l) for l in self.levels))

    def horocycles(self, polygon: IdealPolygon) -> list:
        if len(self.levels) != len(polygon):
            raise PolygonError("family size does not match the polygon")
        return [
            Horocycle(v, l, polygon.metric) for v, l in zip(polygon.vertices, self.levels)
        ]

    def validate_disjoint(self, polygon: IdealPolygon, gromov: np.ndarray | None = None):
        if gromov is None:
            gromov = polygon.gromov_matrix()
        n = len(polygon)
        lv = np.asarray(self.levels)
        for i in range(n):
            for j in range(i + 1, n):
                if lv[i] + lv[j] + gromov[i, j] <= 0.0:
                    raise PolygonError(
                        f"horocycles at vertices {i} and {j} are not disjoint"
                    )


def default_family(polygon: IdealPolygon, margin: float = 1.0) -> HorocycleFamily:
    """A uniform admissible family: the smallest common level plus a margin."""
    c = polygon.gromov_matrix()
    n = len(polygon)
    worst = min(c[i, j] for i in range(n) for j in range(i + 1, n))
    level = max(0.0, -worst / 2.0) + margin
    return HorocycleFamily((level,) * n)


def truncated_side_length(side: Geodesic, h1: Horocycle, h2: Horocycle) -> float:
    """Length of the side arc clipped between the horocycles at its endpoints."""
    e1, e2 = side.ideal_endpoints()
    for h in (h1, h2):
        d = min(abs(h.xi.z - e1.z), abs(h.xi.z - e2.z))
        if d > 1e-9:
            raise PolygonError("horocycle does not sit at an endpoint of the side")
    if abs(h1.xi.z - h2.xi.z) < 1e-12:
        raise PolygonError("both horocycles sit at the same endpoint")
    return dist_horocycles(h1, h2)


def _side_lengths(polygon, family):
    gromov = polygon.gromov_matrix()
    lv = family.levels
    n = len(polygon)
    return [
        lv[i] + lv[(i + 1) % n] + gromov[i, (i + 1) % n] for i in range(n)
    ]


def a_minus_b(polygon: IdealPolygon, family: HorocycleFamily | None = None) -> float:
    """a(Gamma) - b(Gamma); independent of the horocycle family.

    Each vertex touches exactly one A-side and one B-side, so level changes
    cancel; the invariant value is the alternating sum of the gromov terms.
    """
    if family is None:
        family = default_family(polygon)
    family.validate_disjoint(polygon)
    lengths = _side_lengths(polygon, family)
    return sum(l if polygon.side_label(i) == "A" else -l for i, l in enumerate(lengths))


@dataclass(frozen=True)
class InscribedPolygon:
    """Cyclic subset of the parent's vertices; sides classified by origin."""

    parent: IdealPolygon
    indices: tuple  # strictly increasing vertex indices of the parent

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        object.__setattr__(self, "indices", idx)
        if len(idx) < 3:
            raise PolygonError("an inscribed polygon needs at least 3 vertices")
        if len(idx) >= len(self.parent) and len(idx) == len(self.parent):
            # the full polygon is representable but flagged by callers
            pass

    @property
    def is_parent(self) -> bool:
        return len(self.indices) == len(self.parent)

    def side_classes(self) -> list:
        """Per side: 'A', 'B' (boundary side of the parent) or 'interior'."""
        n = len(self.parent)
        k = len(self.indices)
        out = []
        for a in range(k):
            i, j = self.indices[a], self.indices[(a + 1) % k]
            if (i + 1) % n == j:
                out.append(self.parent.side_label(i))
            else:
                out.append("interior")
        return out

    def side_vertex_pairs(self) -> list:
        k = len(self.indices)
        return [(self.indices[a], self.indices[(a + 1) % k]) for a in range(k)]


def enumerate_inscribed(polygon: IdealPolygon) -> list:
    """All inscribed polygons other than the polygon itself (exponential count)."""
    n = len(polygon)
    out = []
    for k in range(3, n):
        for idx in combinations(range(n), k):
            out.append(InscribedPolygon(polygon, idx))
    return out


@dataclass(frozen=True)
class Condition2Result:
    status: str  # DIVERGENT | SATISFIED | VIOLATED
    value: float | None  # the horocycle-invariant |P| - 2a(P) when defined


def _condition2_one(P: InscribedPolygon, which: str, gromov, levels) -> Condition2Result:
    classes = P.side_classes()
    pairs = P.side_vertex_pairs()
    k = len(P.indices)
    # vertex -> incident boundary sides with the target label
    incident = {v: 0 for v in P.indices}
    for (i, j), cls in zip(pairs, classes):
        if cls == which:
            incident[i] += 1
            incident[j] += 1
    if any(c == 0 for c in incident.values()):
        return Condition2Result(DIVERGENT, None)
    total = 0.0
    target = 0.0
    for (i, j), cls in zip(pairs, classes):
        length = levels[i] + levels[j] + gromov[i, j]
        total += length
        if cls == which:
            target += length
    value = total - 2.0 * target
    status = SATISFIED if value > FEASIBILITY_TOL else VIOLATED
    return Condition2Result(status, value)


def condition2_check(
    P: InscribedPolygon,
    polygon: IdealPolygon | None = None,
    family: HorocycleFamily | None = None,
) -> dict:
    """Classify both side-length inequalities for an inscribed polygon.

    Returns {'a': Condition2Result, 'b': Condition2Result}.  A 'divergent'
    status means the inequality holds for all sufficiently small horocycles;
    otherwise the reported value is horocycle-invariant and its sign decides.
    """
    if polygon is None:
        polygon = P.parent
    if P.is_parent:
        raise PolygonError("condition 2 applies to inscribed polygons different from the boundary")
    if family is None:
        family = default_family(polygon)
    gromov = polygon.gromov_matrix()
    family.validate_disjoint(polygon, gromov)
    levels = family.levels
    return {
        "a": _condition2_one(P, "A", gromov, levels),
        "b": _condition2_one(P, "B", gromov, levels),
    }


@dataclass(frozen=True)
class FeasibilityReport:
    condition1_value: float
    condition2_results: dict  # indices tuple -> {'a': ..., 'b': ...}
    feasible: bool
    failures: tuple = ()

    def to_dict(self) -> dict:
        return {
            "condition1_value": float(self.condition1_value),
            "feasible": bool(self.feasible),
            "failures": [
                {"polygon": [int(i) for i in idx], "inequality": which}
                for idx, which in self.failures
            ],
            "condition2": {
                ",".join(map(str, idx)): {
                    w: {
                        "status": r.status,
                        "value": None if r.value is None else float(r.value),
                    }
                    for w, r in res.items()
                }
                for idx, res in self.condition2_results.items()
            },
        }


def js_feasible(polygon: IdealPolygon, family: HorocycleFamily | None = None) -> FeasibilityReport:
    """Decide solvability of the +inf/-inf Dirichlet problem on the polygon."""
    if family is None:
        family = default_family(polygon)
    c1 = a_minus_b(polygon, family)
    gromov = polygon.gromov_matrix()
    levels = family.levels
    results = {}
    failures = []
    for P in enumerate_inscribed(polygon):
        res = {
            "a": _condition2_one(P, "A", gromov, levels),
            "b": _condition2_one(P, "B", gromov, levels),
        }
        results[P.indices] = res
        for which in ("a", "b"):
            if res[which].status == VIOLATED:
                failures.append((P.indices, which))
    feasible = abs(c1) <= FEASIBILITY_TOL and not failures
    return FeasibilityReport(c1, results, feasible, tuple(failures))


def _in_ccw_arc(theta, start, end):
    """True if theta lies strictly inside the counter-clockwise arc start -> end."""
    span = (end - start) % TWO_PI
    pos = (theta - start) % TWO_PI
    return 1e-12 < pos < span - 1e-12


def L_function(
    x: IdealPoint,
    y: IdealPoint,
    z: IdealPoint,
    Hx: Horocycle,
    Hy: Horocycle,
) -> float:
    """d(H_y, H_z) - d(H_z, H_x) for any auxiliary horocycle at z.

    The auxiliary level cancels, so the value only depends on z; it is a
    strictly monotone homeomorphism of the open arc from x to y onto the line.
    """
    metric = Hx.metric
    if not _in_ccw_arc(z.theta, x.theta, y.theta):
        raise PolygonError("z must lie strictly inside the counter-clockwise arc from x to y")
    if dist_horocycles(Hx, Hy) <= 0:
        raise PolygonError("Hx and Hy must be disjoint")
    return (
        Hy.level
        + gromov_term(y, z, metric)
        - Hx.level
        - gromov_term(z, x, metric)
    )


def fourth_vertex(
    x: IdealPoint, y: IdealPoint, z: IdealPoint, metric: Metric = Metric(), tol: float = 1e-13
) -> IdealPoint:
    """Complete x, y, z to an ideal quadrilateral admitting a Scherk graph.

    Returns the unique w in the component of the ideal boundary minus {x, y}
    not containing z at equal horocycle distance from x and y, the horocycles
    at x and y being chosen equidistant from one at z.
    """
    for p, q in ((x, y), (y, z), (x, z)):
        if abs(p.z - q.z) < 1e-12:
            raise PolygonError("fourth_vertex needs three distinct ideal points")
    # Equidistant-from-z normalization: d(H_z, H_x) = d(H_z, H_y) = 2.
    lz = 1.0
    lx = 1.0 - gromov_term(z, x, metric) - lz
    ly = 1.0 - gromov_term(z, y, metric) - lz
    hx = Horocycle(x, lx, metric)
    hy = Horocycle(y, ly, metric)
    # w lives in the ccw arc from y to x when z is in the arc from x to y.
    if _in_ccw_arc(z.theta, x.theta, y.theta):
        start, end = y.theta, x.theta
    else:
        start, end = x.theta, y.theta
    span = (end - start) % TWO_PI

    def val(u):
        w = IdealPoint(start + u * span)
        return ly - lx + gromov_term(y, w, metric) - gromov_term(w, x, metric)

    lo, hi = 1e-9, 1.0 - 1e-9
    if val(lo) * val(hi) > 0:
        raise PolygonError("root of L not bracketed on the arc")
    u = brentq(val, lo, hi, xtol=tol)
    w = IdealPoint(start + u * span)
    # The discrepancy at w must vanish to the stated tolerance.
    resid = val(u)
    if abs(resid) > 1e-10:
        raise PolygonError(f"fourth vertex residual {resid:g} too large")
    return w


def triangle_margin(x1, x2, x3, family=None, metric: Metric = Metric()) -> float:
    """|x1 x3| + |x3 x2| - |x1 x2| with horocycle truncation at ideal corners.

    Non-negative whenever x3 is an interior point.  For three ideal corners
    the value depends on the family; use strict_horocycle_family to produce
    one making all three splittings strictly positive.
    """
    pts = (x1, x2, x3)
    ideal = [isinstance(p, IdealPoint) for p in pts]
    if family is None:
        levels = (1.0, 1.0, 1.0)
    else:
        levels = tuple(family.levels) if isinstance(family, HorocycleFamily) else tuple(family)

    def length(i, j):
        pi, pj = pts[i], pts[j]
        if ideal[i] and ideal[j]:
            return levels[i] + levels[j] + gromov_term(pi, pj, metric)
        if ideal[i]:
            return levels[i] + busemann(pi, pj, metric)
        if ideal[j]:
            return levels[j] + busemann(pj, pi, metric)
        return distance(pi, pj, metric)

    return length(0, 2) + length(2, 1) - length(0, 1)


def strict_horocycle_family(x1, x2, x3, metric: Metric = Metric(), margin: float = 0.5):
    """Levels at three ideal points making all three triangle splittings strict.

    Follows the shrink-in-sequence argument: the margin for splitting at x_k
    only grows when the horocycle at x_k shrinks, so each level is set
    independently.
    """
    pts = (x1, x2, x3)
    c = {}
    for i in range(3):
        for j in range(i + 1, 3):
            c[(i, j)] = c[(j, i)] = gromov_term(pts[i], pts[j], metric)
    levels = []
    for k in range(3):
        i, j = [m for m in range(3) if m != k]
        need = (c[(i, j)] - c[(i, k)] - c[(k, j)]) / 2.0
        levels.append(max(0.0, need) + margin)
    # Raising all levels equally keeps every margin growing and separates the
    # horocycles pairwise.
    shift = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            overlap = levels[i] + levels[j] + c[(i, j)]
            if overlap <= 0.0:
                shift = max(shift, -overlap / 2.0 + margin)
    return tuple(l + shift for l in levels)


def _invariant_quad_sum(v0, v1, v2, v3, metric):
    """|v0 v1| - |v1 v2| + |v2 v3| - |v3 v0| with all levels zero.

    The alternating combination is horocycle-invariant, so the level-zero
    gromov terms already give the value.
    """
    return (
        gromov_term(v0, v1, metric)
        - gromov_term(v1, v2, metric)
        + gromov_term(v2, v3, metric)
        - gromov_term(v3, v0, metric)
    )


def arc_bisector(x: IdealPoint, y: IdealPoint, basepoint: SurfacePoint | None = None) -> IdealPoint:
    """The point of the ccw arc from x to y seen at equal angles from the basepoint."""
    from .geometry import angle_of, ideal_from_angle

    if basepoint is None:
        span = (y.theta - x.theta) % TWO_PI
        return IdealPoint(x.theta + span / 2.0)
    ax = angle_of(basepoint, x)
    ay = angle_of(basepoint, y)
    span = (ay - ax) % TWO_PI
    return ideal_from_angle(basepoint, ax + span / 2.0)


def attach_scherk_quadrilateral(
    x: IdealPoint, y: IdealPoint, metric: Metric = Metric(), basepoint=None
) -> tuple:
    """New vertices (b_near_x, b_near_y) subdividing the ccw arc from x to y.

    b_near_y is the equal-angle point of the arc, b_near_x the matching fourth
    vertex, so that (x, b_near_x, b_near_y, y) bounds a Scherk domain.
    """
    zmid = arc_bisector(x, y, basepoint)
    w = fourth_vertex(x, zmid, y, metric)
    return w, zmid


def extend_and_perturb(
    polygon: IdealPolygon,
    side_index: int,
    t: float,
    basepoint=None,
    root_tol: float = 1e-13,
) -> IdealPolygon:
    """Attach Scherk quadrilaterals to a +inf side and the following -inf side.

    Two pairs of new vertices subdivide the exterior arcs of sides side_index
    (label A) and side_index + 1 (label B); the vertices adjacent to the shared
    corner are then moved so that each attached quadrilateral carries an
    invariant side-length surplus exactly t, which keeps the global length
    balance at zero and makes the enlarged polygon feasible for small t > 0.
    """
    if t < 0.0:
        raise PolygonError("perturbation parameter must be non-negative")
    n = len(polygon)
    if polygon.side_label(side_index) != "A":
        raise PolygonError("side_index must point at a +inf (A) side")
    metric = polygon.metric
    vs = list(polygon.vertices)
    a0 = vs[side_index % n]
    a1 = vs[(side_index + 1) % n]
    a2 = vs[(side_index + 2) % n]

    # Quadrilateral on the A side [a0, a1]: vertices (a0, b1, b2, a1).
    b1, b2 = attach_scherk_quadrilateral(a0, a1, metric, basepoint)
    # Quadrilateral on the B side [a1, a2]: vertices (a1, b3, b4, a2).
    z2 = arc_bisector(a1, a2, basepoint)
    b4 = fourth_vertex(z2, a2, a1, metric)
    b3 = z2

    def solve_on_arc(fun, start, end, target):
        span = (end - start) % TWO_PI

        def g(u):
            return fun(IdealPoint(start + u * span)) - target

        lo, hi = 1e-10, 1.0 - 1e-10
        if g(lo) * g(hi) > 0:
            raise PolygonError("perturbation root not bracketed")
        u = brentq(g, lo, hi, xtol=root_tol)
        return IdealPoint(start + u * span), g(u)

    if t == 0.0:
        b2t, r1 = b2, 0.0
        b3t, r2 = b3, 0.0
    else:
        # t = |a0 a1| - |a1 b| + |b b1| - |b1 a0|, b in the arc (b1, a1)
        b2t, r1 = solve_on_arc(
            lambda b: _invariant_quad_sum(a0, a1, b, b1, metric),
            b1.theta,
            a1.theta,
            t,
        )
        # t = |a2 a1| - |a1 b| + |b b4| - |b4 a2|, b in the arc (a1, b4)
        b3t, r2 = solve_on_arc(
            lambda b: _invariant_quad_sum(a2, a1, b, b4, metric),
            a1.theta,
            b4.theta,
            t,
        )
    if max(abs(r1), abs(r2)) > 1e-10:
        raise PolygonError(f"perturbation residuals too large: {r1:g}, {r2:g}")

    new_vs = []
    for i in range(n):
        new_vs.append(vs[i])
        if i == side_index % n:
            new_vs.extend([b1, b2t])
        elif i == (side_index + 1) % n:
            new_vs.extend([b3t, b4])
    # Rotate so the first side keeps label A (even index positions unchanged
    # because insertions happen inside existing sides in pairs).
    poly = IdealPolygon(tuple(v.theta for v in new_vs), metric)
    return poly


@dataclass
class PerturbationResiduals:
    """Root residuals of the two side-balance identities."""

    first: float
    second: float


def perturbation_residuals(
    polygon: IdealPolygon, side_index: int, t: float, new_polygon: IdealPolygon
) -> PerturbationResiduals:
    """Re-evaluate the two balance identities on an extended polygon."""
    metric = polygon.metric
    vs = list(new_polygon.vertices)
    j = side_index % len(polygon)
    # New vertices sit right after a0 and right after a1 in the enlarged list.
    m = len(vs)
    a0, b1, b2, a1, b3, b4, a2 = (vs[(j + k) % m] for k in range(7))
    r1 = _invariant_quad_sum(a0, a1, b2, b1, metric) - t
    r2 = _invariant_quad_sum(a2, a1, b3, b4, metric) - t
    return PerturbationResiduals(r1, r2)
