//! Fixtures shared by the criterion benches.

use igamg::tensor::parameter_matrices;
use igamg::{assemble_rhs, scenario_unit_square, KroneckerOperator, MultigridConfig, MultigridHierarchy, SinSin, TensorSpace};
use igamg::Function2d;

/// Hierarchy on the four-patch square together with its load vector.
pub fn square_problem(p: usize, level: usize, config: MultigridConfig) -> (MultigridHierarchy, Vec<f64>) {
    let sc = scenario_unit_square();
    let h = MultigridHierarchy::new(sc.patches.clone(), p, level, config).expect("valid hierarchy");
    let sys = assemble_rhs(&h.finest().disc, &|x| sc.source(x), &|x| SinSin.value(x)).expect("load vector");
    (h, sys.rhs)
}

/// Parameter-domain stiffness `K ⊗ M + M ⊗ K` on one patch.
pub fn parameter_stiffness(p: usize, m: usize) -> KroneckerOperator {
    let space = TensorSpace::with_degree(p, m).expect("valid space");
    parameter_matrices(&space).0
}

/// Deterministic non-smooth test vector.
pub fn test_vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 1009) as f64 / 1009.0 - 0.5).collect()
}
