"""torlink: numerical differential topology on the solid torus.

Degrees of sphere-valued maps on triangulated surfaces, winding numbers of
plane-vector maps, Poincare-Hopf indices, holonomy and first-return maps of
flows transverse to a disc fibration, the normal split X = N + mu*Y, linking
numbers on either side of a collinearity annulus, and the identities tying
them together.
"""

__version__ = "0.1.0"

from .chart import ChartPoint, SolidTorusDomain, TangentVector
from .fields import (
    CollinearitySurface,
    FieldPair,
    FieldSpec,
    Frame,
    build_frame,
    collinearity_residual,
    commutator_residual,
    find_collinearity,
    jacobian_at,
    ratio_mu,
)
from .flow import CrossingEvent, FlowResult, cross_fiber, integrate, variational
from .section import (
    HolonomyRecord,
    NormalDecomposition,
    first_return,
    holonomy,
    normal_decompose,
    return_identity_residual,
)
from .degree import (
    AngleLift,
    MeshMap,
    PathSample,
    angular_variation,
    chart_loop,
    circle_degree,
    icosphere,
    load_mesh,
    meridian_project,
    model_map,
    save_mesh,
    sphere_degree,
    torus_grid_mesh,
)
from .index import (
    IndexReport,
    LinkingReport,
    fixed_point_spectrum,
    index_isolated_zero,
    index_region,
    linking_numbers,
    verify_link_index,
)
from .dynamics import OrbitRecord, cone_ratio, iterate_return, segment_sweep
from .scenarios import Scenario, builtin, builtin_names
from .config import ScenarioConfig, parse_config
from .runner import run

__all__ = [
    "__version__",
    "ChartPoint",
    "SolidTorusDomain",
    "TangentVector",
    "CollinearitySurface",
    "FieldPair",
    "FieldSpec",
    "Frame",
    "build_frame",
    "collinearity_residual",
    "commutator_residual",
    "find_collinearity",
    "jacobian_at",
    "ratio_mu",
    "CrossingEvent",
    "FlowResult",
    "cross_fiber",
    "integrate",
    "variational",
    "HolonomyRecord",
    "NormalDecomposition",
    "first_return",
    "holonomy",
    "normal_decompose",
    "return_identity_residual",
    "AngleLift",
    "MeshMap",
    "PathSample",
    "angular_variation",
    "chart_loop",
    "circle_degree",
    "icosphere",
    "load_mesh",
    "meridian_project",
    "model_map",
    "save_mesh",
    "sphere_degree",
    "torus_grid_mesh",
    "IndexReport",
    "LinkingReport",
    "fixed_point_spectrum",
    "index_isolated_zero",
    "index_region",
    "linking_numbers",
    "verify_link_index",
    "OrbitRecord",
    "cone_ratio",
    "iterate_return",
    "segment_sweep",
    "Scenario",
    "builtin",
    "builtin_names",
    "ScenarioConfig",
    "parse_config",
    "run",
]
