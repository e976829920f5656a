"""Workbench for minimal-surface graphs over ideal polygons on a negatively
curved disk: feasibility of infinite boundary data, truncated solves, and
flux / modulus / stability diagnostics."""

from .barrier import (
    BarrierError,
    BarrierParams,
    ProfileFunction,
    barrier_height,
    barrier_profile,
    comparison_coefficient,
    comparison_ode_check,
    profile_curvature,
    scherk_ode_residual,
)
from .diagnostics import (
    AnnulusModulus,
    DiagnosticsError,
    ExhaustionState,
    FluxResult,
    StabilityReport,
    boundary_polyline,
    c2_difference,
    conformal_modulus,
    flux,
    run_exhaustion,
    stability_gap,
)
from .geometry import (
    FermiChart,
    Geodesic,
    GeometryError,
    Horocycle,
    IdealPoint,
    Metric,
    SurfacePoint,
    busemann,
    dist_horocycles,
    fermi_G,
    geodesic_between,
    gromov_term,
    horocycle_intersection_count,
    ideal_from_angle,
    point_on_horocycle,
    signed_distance_to_geodesic,
)
from .meshing import (
    BoundaryPiece,
    MeshError,
    TriMesh,
    build_fermi_rectangle_mesh,
    build_flat_annulus_mesh,
    build_geodesic_disk_mesh,
    build_truncated_halfplane_mesh,
    build_truncated_polygon_mesh,
)
from .polygons import (
    FEASIBILITY_TOL,
    Condition2Result,
    FeasibilityReport,
    HorocycleFamily,
    IdealPolygon,
    InscribedPolygon,
    PolygonError,
    L_function,
    a_minus_b,
    arc_bisector,
    attach_scherk_quadrilateral,
    condition2_check,
    default_family,
    enumerate_inscribed,
    extend_and_perturb,
    fourth_vertex,
    js_feasible,
    perturbation_residuals,
    strict_horocycle_family,
    triangle_margin,
    truncated_side_length,
)
from .solver import (
    EuclideanMetric,
    ScalarField,
    SolverConfig,
    SolverError,
    max_principle_check,
    solve_dirichlet,
    solve_dirichlet_at_infinity,
    solve_ideal_scherk,
    solve_mixed_boundary,
    solve_scherk_sequence,
)

__version__ = "0.1.0"
