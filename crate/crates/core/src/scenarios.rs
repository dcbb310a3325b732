//! Built-in multi-patch test problems.
//!
//! Both domains use `f = 2π² sin(πx) sin(πy)` with exact solution and
//! Dirichlet data `g = sin(πx) sin(πy)`.

use std::sync::Arc;

use crate::functions::{sinsin_source, SinSin};
use crate::geometry::GeometryMap;

/// Offsets of the unit patches covering `(-0.6, 1.4)²`.
const OFFSETS: [(f64, f64); 4] = [(-0.6, -0.6), (0.4, -0.6), (-0.6, 0.4), (0.4, 0.4)];

/// A domain with its source and exact solution.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub patches: Arc<Vec<GeometryMap>>,
    pub exact: SinSin,
}

impl Scenario {
    pub fn source(&self, p: [f64; 2]) -> f64 {
        sinsin_source(p)
    }

    pub fn area(&self) -> f64 {
        self.patches.len() as f64
    }
}

/// `(-0.6, 1.4)²` split into four translated unit squares.
pub fn scenario_unit_square() -> Scenario {
    let patches = OFFSETS.iter().map(|&(x, y)| GeometryMap::translated_unit_square(x, y)).collect();
    Scenario { name: "unit_square", patches: Arc::new(patches), exact: SinSin }
}

/// The square without its upper right quarter, `x < 0.4 or y < 0.4`, as three patches.
pub fn scenario_l_shape() -> Scenario {
    let patches = OFFSETS[..3].iter().map(|&(x, y)| GeometryMap::translated_unit_square(x, y)).collect();
    Scenario { name: "l_shape", patches: Arc::new(patches), exact: SinSin }
}
