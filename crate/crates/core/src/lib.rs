//! Multi-patch isogeometric discretization of the Poisson problem on uniform
//! B-spline spaces, with an additive multigrid smoother built from
//! subspace-corrected mass solvers on patch interiors and exact solves on
//! interfaces and vertices.
//!
//! Vectors on a tensor space are flattened `x`-fastest: the coefficient of
//! `φ_i(x) φ_j(y)` lives at `i + n j`.

pub mod assembly;
pub mod banded;
pub mod bspline;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod geometry_file;
pub mod krylov;
pub mod multigrid;
pub mod projectors;
pub mod quadrature;
pub mod scenarios;
pub mod smoothers;
pub mod sparse;
pub mod sweep;
pub mod tensor;

pub use assembly::{assemble_rhs, Discretization, GlobalOperator, LinearSystem, PatchOperator};
pub use bspline::{KnotVector, UnivariateSplineSpace};
pub use error::{Error, Result};
pub use functions::{Function1d, Function2d, SinSin};
pub use geometry::{build_dof_map, build_topology, DofMap, GeometryMap, MultiPatchTopology, Point, Side};
pub use geometry_file::{parse_geometry, write_geometry, GeometryDocument};
pub use multigrid::{
    solve, solve_mg, solve_pcg, CoarseLevel, CycleKind, MultigridConfig, MultigridHierarchy, SmootherKind,
    SolveMode, SolveReport,
};
pub use scenarios::{scenario_l_shape, scenario_unit_square, Scenario};
pub use sparse::CsrMatrix;
pub use sweep::{run_sweep, CellOutcome, OutputFormat, RunConfig, ScenarioKind, SweepTable};
pub use tensor::{KroneckerOperator, TensorSpace};
