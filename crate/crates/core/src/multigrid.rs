//! Geometric multigrid over dyadically refined levels: transfer operators,
//! damped Richardson smoothing, two-grid/V/W cycles, the stationary solver
//! and multigrid-preconditioned CG.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use nalgebra::{Cholesky, DVector, Dyn};

use crate::assembly::Discretization;
use crate::bspline::{refinement_matrix, UnivariateSplineSpace};
use crate::error::{Error, Result};
use crate::geometry::{GeometryMap, BOUNDARY};
use crate::krylov::{norm, pcg};
use crate::smoothers::{AdditiveSmoother, BoostedSmoother, Smoother, DEFAULT_SIGMA_SCALE};
use crate::sparse::CsrMatrix;
use crate::tensor::TensorSpace;

/// Multigrid cycle type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleKind {
    /// Exact solve on the next coarser level.
    TwoGrid,
    V,
    W,
}

impl CycleKind {
    fn recursions(self) -> usize {
        match self {
            CycleKind::TwoGrid | CycleKind::V => 1,
            CycleKind::W => 2,
        }
    }
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleKind::TwoGrid => "two_grid",
            CycleKind::V => "V",
            CycleKind::W => "W",
        })
    }
}

impl FromStr for CycleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "two_grid" | "twogrid" | "two-grid" => Ok(CycleKind::TwoGrid),
            "v" => Ok(CycleKind::V),
            "w" => Ok(CycleKind::W),
            _ => Err(Error::InvalidArgument(format!("unknown cycle '{s}'"))),
        }
    }
}

/// Smoother variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherKind {
    Additive,
    Boosted,
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmootherKind::Additive => "additive",
            SmootherKind::Boosted => "boosted",
        })
    }
}

impl FromStr for SmootherKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "additive" => Ok(SmootherKind::Additive),
            "boosted" => Ok(SmootherKind::Boosted),
            _ => Err(Error::InvalidArgument(format!("unknown smoother '{s}'"))),
        }
    }
}

/// Level on which the coarse problem is solved directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseLevel {
    /// The first level with `2^ℓ > p`; smoothing starts one level above.
    FirstAdmissible,
    /// One level below the first admissible one, so that smoothing starts on it.
    BelowAdmissible,
    /// A fixed level.
    Fixed(usize),
}

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultigridConfig {
    pub cycle: CycleKind,
    pub smoother: SmootherKind,
    pub nu_pre: usize,
    pub nu_post: usize,
    pub tau: f64,
    pub sigma_scale: f64,
    pub rho: f64,
    pub eps: f64,
    pub coarse: CoarseLevel,
    pub max_iter: usize,
}

/// Iteration cap: ten times the largest reference count (194).
pub const DEFAULT_MAX_ITER: usize = 1940;

impl Default for MultigridConfig {
    fn default() -> Self {
        Self {
            cycle: CycleKind::W,
            smoother: SmootherKind::Additive,
            nu_pre: 1,
            nu_post: 1,
            tau: 0.95,
            sigma_scale: DEFAULT_SIGMA_SCALE,
            rho: 0.95,
            eps: 1e-8,
            coarse: CoarseLevel::BelowAdmissible,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl MultigridConfig {
    /// Boosted smoother with `τ = 1`, `ϱ = 0.95`.
    pub fn boosted() -> Self {
        Self { smoother: SmootherKind::Boosted, tau: 1.0, rho: 0.95, ..Self::default() }
    }
}

/// Smallest `ℓ` with `2^ℓ > p`.
pub fn first_admissible_level(p: usize) -> usize {
    let mut l = 0;
    while (1usize << l) <= p {
        l += 1;
    }
    l
}

/// One level of the hierarchy.
#[derive(Debug)]
pub struct Level {
    pub level: usize,
    pub disc: Discretization,
    /// `None` on the coarsest level.
    pub smoother: Option<Smoother>,
    /// Prolongation from the next coarser level.
    pub prolongation: Option<CsrMatrix>,
    pub restriction: Option<CsrMatrix>,
    exact: OnceLock<Result<Cholesky<f64, Dyn>>>,
}

impl Level {
    pub fn num_dofs(&self) -> usize {
        self.disc.num_dofs()
    }

    fn exact_factor(&self) -> Result<&Cholesky<f64, Dyn>> {
        self.exact
            .get_or_init(|| {
                Cholesky::new(self.disc.stiffness.to_dense())
                    .ok_or_else(|| Error::NotPositiveDefinite(format!("stiffness on level {}", self.level)))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `u = A⁻¹ f` by dense Cholesky.
    pub fn solve_exact(&self, f: &[f64]) -> Result<Vec<f64>> {
        let c = self.exact_factor()?;
        Ok(c.solve(&DVector::from_column_slice(f)).as_slice().to_vec())
    }
}

/// Prolongation between consecutive levels: per-patch `E ⊗ E` composed with the DOF maps.
pub fn build_prolongation(coarse: &Discretization, fine: &Discretization) -> Result<CsrMatrix> {
    let e = refinement_matrix(coarse.space.univariate(), fine.space.univariate())?;
    let (nc, nf) = (coarse.space.n(), fine.space.n());
    let mut owned = vec![false; fine.num_dofs()];
    let mut trip = Vec::new();
    for k in 0..fine.dofs.num_patches() {
        let fmap = fine.dofs.patch_map(k);
        let cmap = coarse.dofs.patch_map(k);
        for (lf, &gf) in fmap.iter().enumerate() {
            if gf == BOUNDARY || owned[gf] {
                continue;
            }
            owned[gf] = true;
            let (i, j) = (lf % nf, lf / nf);
            let (ci, vi) = e.row(i);
            let (cj, vj) = e.row(j);
            for (&jc, &wj) in cj.iter().zip(vj) {
                for (&ic, &wi) in ci.iter().zip(vi) {
                    let gc = cmap[ic + nc * jc];
                    if gc != BOUNDARY {
                        trip.push((gf, gc, wi * wj));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(fine.num_dofs(), coarse.num_dofs(), &trip)
}

/// Nested levels `ℓ_c..=ℓ_max` with `m = 2^ℓ` intervals per patch and direction.
#[derive(Debug)]
pub struct MultigridHierarchy {
    levels: Vec<Level>,
    config: MultigridConfig,
    degree: usize,
}

impl MultigridHierarchy {
    pub fn new(
        patches: Arc<Vec<GeometryMap>>,
        p: usize,
        max_level: usize,
        config: MultigridConfig,
    ) -> Result<Self> {
        let admissible = first_admissible_level(p);
        let coarsest = match config.coarse {
            CoarseLevel::FirstAdmissible => admissible,
            CoarseLevel::BelowAdmissible => admissible.saturating_sub(1),
            CoarseLevel::Fixed(l) => l,
        };
        if max_level < admissible || max_level < coarsest {
            return Err(Error::InvalidArgument(format!(
                "finest level {max_level} is below the coarsest admissible level {admissible} for p = {p}"
            )));
        }
        if config.tau <= 0.0 || config.eps <= 0.0 {
            return Err(Error::InvalidArgument("tau and eps must be positive".into()));
        }
        let mut levels: Vec<Level> = Vec::new();
        for l in coarsest..=max_level {
            let space = TensorSpace::new(UnivariateSplineSpace::new(p, 1 << l)?);
            let disc = Discretization::new(patches.clone(), space)?;
            let smoother = if l == coarsest {
                None
            } else {
                Some(match config.smoother {
                    SmootherKind::Additive => Smoother::Additive(AdditiveSmoother::new(&disc, config.sigma_scale)?),
                    SmootherKind::Boosted => {
                        Smoother::Boosted(BoostedSmoother::new(&disc, config.sigma_scale, config.rho)?)
                    }
                })
            };
            let (prolongation, restriction) = match levels.last() {
                Some(prev) => {
                    let pm = build_prolongation(&prev.disc, &disc)?;
                    let rm = pm.transpose();
                    (Some(pm), Some(rm))
                }
                None => (None, None),
            };
            levels.push(Level { level: l, disc, smoother, prolongation, restriction, exact: OnceLock::new() });
        }
        Ok(Self { levels, config, degree: p })
    }

    pub fn config(&self) -> &MultigridConfig {
        &self.config
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn finest(&self) -> &Level {
        self.levels.last().expect("at least one level")
    }

    pub fn coarsest_level(&self) -> usize {
        self.levels[0].level
    }

    fn index_of(&self, level: usize) -> Result<usize> {
        let c = self.coarsest_level();
        if level < c || level - c >= self.levels.len() {
            return Err(Error::InvalidArgument(format!("level {level} outside the hierarchy")));
        }
        Ok(level - c)
    }

    /// Coarse-to-fine embedding onto `level`.
    pub fn prolong(&self, level: usize, coarse: &[f64]) -> Result<Vec<f64>> {
        let p = self.levels[self.index_of(level)?]
            .prolongation
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("level {level} has no coarser level")))?;
        check_len(coarse, p.ncols())?;
        Ok(p.mul_vec(coarse))
    }

    /// Transpose of [`MultigridHierarchy::prolong`].
    pub fn restrict(&self, level: usize, fine: &[f64]) -> Result<Vec<f64>> {
        let r = self.levels[self.index_of(level)?]
            .restriction
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("level {level} has no coarser level")))?;
        check_len(fine, r.ncols())?;
        Ok(r.mul_vec(fine))
    }

    /// `ν` steps of `u ← u + τ L⁻¹ (f - A u)` on `level`.
    pub fn smooth(&self, level: usize, u: &mut [f64], f: &[f64], nu: usize, tau: f64) -> Result<()> {
        let lv = &self.levels[self.index_of(level)?];
        let s = lv
            .smoother
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("level {level} is solved directly")))?;
        check_len(u, lv.num_dofs())?;
        check_len(f, lv.num_dofs())?;
        smooth_steps(lv, s, u, f, nu, tau);
        Ok(())
    }

    /// One cycle on `level` updating `u` in place.
    pub fn cycle(&self, level: usize, u: &mut [f64], f: &[f64], kind: CycleKind) -> Result<()> {
        let idx = self.index_of(level)?;
        check_len(u, self.levels[idx].num_dofs())?;
        check_len(f, self.levels[idx].num_dofs())?;
        self.cycle_at(idx, u, f, kind)
    }

    fn cycle_at(&self, idx: usize, u: &mut [f64], f: &[f64], kind: CycleKind) -> Result<()> {
        let lv = &self.levels[idx];
        let Some(smoother) = lv.smoother.as_ref() else {
            u.copy_from_slice(&lv.solve_exact(f)?);
            return Ok(());
        };
        let cfg = &self.config;
        smooth_steps(lv, smoother, u, f, cfg.nu_pre, cfg.tau);
        let mut r = lv.disc.stiffness.apply(u);
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
        let rc = lv.restriction.as_ref().expect("non-coarsest level").mul_vec(&r);
        let coarse = &self.levels[idx - 1];
        let ec = if kind == CycleKind::TwoGrid {
            coarse.solve_exact(&rc)?
        } else {
            let mut ec = vec![0.0; coarse.num_dofs()];
            for _ in 0..kind.recursions() {
                self.cycle_at(idx - 1, &mut ec, &rc, kind)?;
            }
            ec
        };
        let corr = lv.prolongation.as_ref().expect("non-coarsest level").mul_vec(&ec);
        for (ui, ci) in u.iter_mut().zip(&corr) {
            *ui += ci;
        }
        smooth_steps(lv, smoother, u, f, cfg.nu_post, cfg.tau);
        Ok(())
    }
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok(())
}

fn smooth_steps(lv: &Level, s: &Smoother, u: &mut [f64], f: &[f64], nu: usize, tau: f64) {
    let n = u.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    for _ in 0..nu {
        lv.disc.stiffness.apply_into(u, &mut r);
        for i in 0..n {
            r[i] = f[i] - r[i];
        }
        s.apply(&r, &mut z);
        for i in 0..n {
            u[i] += tau * z[i];
        }
    }
}

/// How the cycle is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Iterative,
    Pcg,
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMode::Iterative => "iterative",
            SolveMode::Pcg => "pcg",
        })
    }
}

impl FromStr for SolveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iterative" | "mg" => Ok(SolveMode::Iterative),
            "pcg" | "cg" => Ok(SolveMode::Pcg),
            _ => Err(Error::InvalidArgument(format!("unknown mode '{s}'"))),
        }
    }
}

/// Result of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Euclidean residual norms, starting with `‖f‖`.
    pub history: Vec<f64>,
    /// Geometric mean of the last (up to) five reduction factors.
    pub rate: f64,
    pub seconds: f64,
    pub mode: SolveMode,
    pub degree: usize,
    pub level: usize,
    pub config: MultigridConfig,
    pub solution: Vec<f64>,
}

fn mean_rate(history: &[f64]) -> f64 {
    let k = history.len().saturating_sub(1).min(5);
    if k == 0 || history[history.len() - 1 - k] == 0.0 {
        return 0.0;
    }
    (history[history.len() - 1] / history[history.len() - 1 - k]).powf(1.0 / k as f64)
}

/// Stationary multigrid iteration from `u = 0` until `‖r‖ ≤ ε ‖f‖`.
pub fn solve_mg(h: &MultigridHierarchy, f: &[f64]) -> Result<SolveReport> {
    let start = Instant::now();
    let lv = h.finest();
    check_len(f, lv.num_dofs())?;
    let cfg = h.config;
    let mut u = vec![0.0; f.len()];
    let r0 = norm(f);
    let mut history = vec![r0];
    let mut r = vec![0.0; f.len()];
    let mut it = 0;
    while history[it] > cfg.eps * r0 {
        if it == cfg.max_iter {
            return Err(Error::Divergence { iterations: it, residual: history[it] / r0 });
        }
        h.cycle_at(h.levels.len() - 1, &mut u, f, cfg.cycle)?;
        lv.disc.stiffness.apply_into(&u, &mut r);
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
        let rn = norm(&r);
        it += 1;
        history.push(rn);
        if !rn.is_finite() || rn > 1e10 * r0 {
            return Err(Error::Divergence { iterations: it, residual: rn / r0 });
        }
    }
    Ok(SolveReport {
        iterations: it,
        rate: mean_rate(&history),
        history,
        seconds: start.elapsed().as_secs_f64(),
        mode: SolveMode::Iterative,
        degree: h.degree,
        level: lv.level,
        config: cfg,
        solution: u,
    })
}

/// CG preconditioned by one multigrid cycle from a zero guess.
pub fn solve_pcg(h: &MultigridHierarchy, f: &[f64]) -> Result<SolveReport> {
    let start = Instant::now();
    let lv = h.finest();
    check_len(f, lv.num_dofs())?;
    let cfg = h.config;
    let top = h.levels.len() - 1;
    let mut failure = None;
    let res = pcg(
        |x, y| lv.disc.stiffness.apply_into(x, y),
        |r, z| {
            z.iter_mut().for_each(|v| *v = 0.0);
            if let Err(e) = h.cycle_at(top, z, r, cfg.cycle) {
                failure.get_or_insert(e);
            }
        },
        f,
        cfg.eps,
        cfg.max_iter,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let res = res?;
    Ok(SolveReport {
        iterations: res.iterations,
        rate: mean_rate(&res.history),
        history: res.history,
        seconds: start.elapsed().as_secs_f64(),
        mode: SolveMode::Pcg,
        degree: h.degree,
        level: lv.level,
        config: cfg,
        solution: res.solution,
    })
}

/// Dispatches on `mode`.
pub fn solve(h: &MultigridHierarchy, f: &[f64], mode: SolveMode) -> Result<SolveReport> {
    match mode {
        SolveMode::Iterative => solve_mg(h, f),
        SolveMode::Pcg => solve_pcg(h, f),
    }
}
