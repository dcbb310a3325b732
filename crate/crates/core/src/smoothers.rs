//! Additive multi-patch smoother `L_h = Σ_T P_T L_T P_Tᵀ` and its boosted variant.
//!
//! Patch interiors use the subspace-corrected mass smoother built from the
//! univariate splitting `S = S₀ ⊕ S₁` of the Dirichlet spline space, where
//! `S₀` collects splines whose even derivatives of orders `2..2⌊(p-1)/2⌋`
//! vanish at both endpoints and `S₁` is its `L₂`-orthogonal complement.
//! Edges and vertices use exact dense solvers.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::assembly::{Discretization, GlobalOperator, PatchOperator};
use crate::banded::{BandedCholesky, BandedMatrix};
use crate::bspline::{mass_stiffness, UnivariateSplineSpace};
use crate::error::{Error, Result};
use crate::geometry::{DofMap, PieceKind};
use crate::sparse::CsrMatrix;
use crate::tensor::{KroneckerOperator, KroneckerTerm, TensorSpace};

/// Default `σ h²` used in the experiments.
pub const DEFAULT_SIGMA_SCALE: f64 = 5.0;
/// `σ h²` covering the inverse inequality on `S₀`.
pub const THEORETICAL_SIGMA_SCALE: f64 = 12.0;

/// `L₂`-orthogonal splitting of the univariate Dirichlet spline space
/// (basis functions `2..n-1`, here indexed `0..n-2`).
#[derive(Debug, Clone)]
pub struct SubspaceSplitting {
    /// Columns: basis of `S₀` in B-spline coordinates.
    pub b0: CsrMatrix,
    /// Columns: basis of `S₁` in B-spline coordinates.
    pub b1: CsrMatrix,
    /// Mass and stiffness of the Dirichlet space.
    pub mass: BandedMatrix,
    pub stiffness: BandedMatrix,
    pub m0: BandedMatrix,
    pub k0: BandedMatrix,
    pub m1: DMatrix<f64>,
    pub k1: DMatrix<f64>,
}

impl SubspaceSplitting {
    pub fn dim(&self) -> usize {
        self.b0.nrows()
    }

    pub fn dim_s0(&self) -> usize {
        self.b0.ncols()
    }

    pub fn dim_s1(&self) -> usize {
        self.b1.ncols()
    }

    /// `Q₀ v`: the `L₂`-orthogonal projection onto `S₀`.
    pub fn q0(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mv = self.mass.mul_vec(v);
        let mut c = self.b0.transpose().mul_vec(&mv);
        self.m0.cholesky()?.solve_in_place(&mut c);
        Ok(self.b0.mul_vec(&c))
    }
}

fn csr_from_dense(a: &DMatrix<f64>) -> CsrMatrix {
    CsrMatrix::from_dense(a, 0.0)
}

/// `Bᵀ A B` for symmetric banded `A`, returned as banded with detected bandwidth.
fn galerkin_banded(a: &BandedMatrix, b: &CsrMatrix) -> Result<BandedMatrix> {
    let prod = b.transpose().mul(&a.to_csr())?.mul(b)?;
    let bw = prod.iter().filter(|t| t.2 != 0.0).map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0);
    let mut out = BandedMatrix::zeros(prod.nrows(), bw);
    for (i, j, v) in prod.iter() {
        if i >= j {
            out.add(i, j, if i == j { v } else { 0.5 * (v + prod.get(j, i)) });
        }
    }
    Ok(out)
}

fn galerkin_dense(a: &BandedMatrix, b: &CsrMatrix) -> Result<DMatrix<f64>> {
    let d = b.transpose().mul(&a.to_csr())?.mul(b)?.to_dense();
    Ok(0.5 * (&d + d.transpose()))
}

/// Builds the splitting; requires `m > p`.
pub fn build_splitting(space: &UnivariateSplineSpace) -> Result<SubspaceSplitting> {
    let p = space.degree();
    let m = space.intervals();
    if m <= p {
        return Err(Error::InvalidArgument(format!(
            "splitting needs more intervals than the degree ({m} <= {p})"
        )));
    }
    let n = space.dim();
    let nd = n - 2;
    let (mass_full, stiff_full) = mass_stiffness(space);
    let mass = mass_full.slice(1, n - 1);
    let stiffness = stiff_full.slice(1, n - 1);
    let l = (p - 1) / 2;

    if l == 0 {
        let b0 = CsrMatrix::identity(nd);
        let b1 = CsrMatrix::from_triplets(nd, 0, &[])?;
        return Ok(SubspaceSplitting {
            b0,
            b1,
            m0: mass.clone(),
            k0: stiffness.clone(),
            m1: DMatrix::zeros(0, 0),
            k1: DMatrix::zeros(0, 0),
            mass,
            stiffness,
        });
    }

    // constraint rows: derivative 2j at 0 touches Dirichlet indices 0..2j-1
    let w = 2 * l;
    let mut c_left = DMatrix::zeros(l, w);
    for j in 1..=l {
        let b = space.eval_basis(0.0, 2 * j)?;
        debug_assert_eq!(b.first, 0);
        for (a, v) in b.values.iter().enumerate().skip(1) {
            if a - 1 < w {
                c_left[(j - 1, a - 1)] = *v;
            }
        }
        let norm = c_left.row(j - 1).norm();
        c_left.row_mut(j - 1).scale_mut(1.0 / norm);
    }
    // nullspace of c_left: eigenvectors of cᵀc with the l smallest eigenvalues
    let eig = SymmetricEigen::new(c_left.transpose() * &c_left);
    let mut order: Vec<usize> = (0..w).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let null_left = DMatrix::from_fn(w, l, |i, c| eig.eigenvectors[(i, order[c])]);

    let n0 = nd - l - l;
    let mut trip = Vec::new();
    for c in 0..l {
        for i in 0..w {
            let v = null_left[(i, c)];
            trip.push((i, c, v));
            // mirror image at the right end
            trip.push((nd - 1 - i, n0 - 1 - c, v));
        }
    }
    for k in 0..nd - 2 * w {
        trip.push((w + k, l + k, 1.0));
    }
    let b0 = CsrMatrix::from_triplets(nd, n0, &trip)?;

    // full constraint matrix C (2l × nd) and B1 = M⁻¹ Cᵀ
    let mut ct = DMatrix::zeros(nd, w);
    for j in 0..l {
        for i in 0..w {
            ct[(i, j)] = c_left[(j, i)];
            ct[(nd - 1 - i, l + j)] = c_left[(j, i)];
        }
    }
    let chol = mass.cholesky()?;
    for mut col in ct.column_iter_mut() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        chol.solve_in_place(&mut v);
        col.copy_from_slice(&v);
    }
    // normalize columns in the mass norm
    for mut col in ct.column_iter_mut() {
        let v: Vec<f64> = col.iter().copied().collect();
        let nrm = crate::krylov::dot(&v, &mass.mul_vec(&v)).sqrt();
        col.scale_mut(1.0 / nrm);
    }
    let b1 = csr_from_dense(&ct);

    let m0 = galerkin_banded(&mass, &b0)?;
    let k0 = galerkin_banded(&stiffness, &b0)?;
    let m1 = galerkin_dense(&mass, &b1)?;
    let k1 = galerkin_dense(&stiffness, &b1)?;
    Ok(SubspaceSplitting { b0, b1, mass, stiffness, m0, k0, m1, k1 })
}

fn dense_cholesky(a: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a).ok_or_else(|| Error::NotPositiveDefinite(what.into()))
}

/// Subspace-corrected mass smoother on the interior of one patch.
#[derive(Debug, Clone)]
pub struct InteriorSmoother {
    splitting: SubspaceSplitting,
    sigma: f64,
    m0: BandedCholesky,
    /// `(1 + σ) M₁ + K₁`.
    y1: Option<Cholesky<f64, Dyn>>,
    /// `M₁⊗M₁ + K₁⊗M₁ + M₁⊗K₁`.
    l11: Option<Cholesky<f64, Dyn>>,
    to_00: KroneckerOperator,
    to_01: Option<[KroneckerOperator; 3]>,
    from_00: KroneckerOperator,
    from_01: Option<[KroneckerOperator; 3]>,
}

fn dense_kron(ay: &DMatrix<f64>, ax: &DMatrix<f64>) -> DMatrix<f64> {
    ay.kronecker(ax)
}

impl InteriorSmoother {
    pub fn new(splitting: SubspaceSplitting, sigma: f64) -> Result<Self> {
        let m0 = splitting.m0.cholesky()?;
        let (b0, b1) = (&splitting.b0, &splitting.b1);
        let (b0t, b1t) = (b0.transpose(), b1.transpose());
        let to_00 = KroneckerOperator::single(b0t.clone(), b0t.clone(), 1.0);
        let from_00 = KroneckerOperator::single(b0.clone(), b0.clone(), 1.0);
        let (y1, l11, to_01, from_01) = if splitting.dim_s1() == 0 {
            (None, None, None, None)
        } else {
            let (m1, k1) = (&splitting.m1, &splitting.k1);
            let y1 = dense_cholesky(m1 * (1.0 + sigma) + k1, "(1+σ)M₁+K₁")?;
            let l11 = dense_cholesky(dense_kron(m1, m1) + dense_kron(k1, m1) + dense_kron(m1, k1), "L₁₁")?;
            // blocks: (x∈S₀, y∈S₁), (x∈S₁, y∈S₀), (x∈S₁, y∈S₁)
            let to = [
                KroneckerOperator::single(b0t.clone(), b1t.clone(), 1.0),
                KroneckerOperator::single(b1t.clone(), b0t.clone(), 1.0),
                KroneckerOperator::single(b1t.clone(), b1t.clone(), 1.0),
            ];
            let from = [
                KroneckerOperator::single(b0.clone(), b1.clone(), 1.0),
                KroneckerOperator::single(b1.clone(), b0.clone(), 1.0),
                KroneckerOperator::single(b1.clone(), b1.clone(), 1.0),
            ];
            (Some(y1), Some(l11), Some(to), Some(from))
        };
        Ok(Self { splitting, sigma, m0, y1, l11, to_00, to_01, from_00, from_01 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn splitting(&self) -> &SubspaceSplitting {
        &self.splitting
    }

    pub fn dim(&self) -> usize {
        let n = self.splitting.dim();
        n * n
    }

    /// `z = L_T⁻¹ r` on the interior grid (x-fastest).
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n0 = self.splitting.dim_s0();
        let n1 = self.splitting.dim_s1();
        z.iter_mut().for_each(|v| *v = 0.0);

        // S₀ ⊗ S₀
        let mut c = self.to_00.apply(r).expect("interior size");
        for row in c.chunks_mut(n0) {
            self.m0.solve_in_place(row);
        }
        self.m0.solve_rows_in_place(&mut c, n0);
        let s = 1.0 / (1.0 + 2.0 * self.sigma);
        c.iter_mut().for_each(|v| *v *= s);
        self.from_00.apply_add(&c, z).expect("interior size");

        let (Some(to), Some(from), Some(y1), Some(l11)) = (&self.to_01, &self.from_01, &self.y1, &self.l11) else {
            return;
        };
        // x ∈ S₀, y ∈ S₁: Y₁ ⊗ M₀ (y-index rows of length n0)
        let mut c = to[0].apply(r).expect("interior size");
        for row in c.chunks_mut(n0) {
            self.m0.solve_in_place(row);
        }
        solve_dense_rows(y1, &mut c, n0);
        from[0].apply_add(&c, z).expect("interior size");

        // x ∈ S₁, y ∈ S₀: M₀ ⊗ Y₁ (rows of length n1)
        let mut c = to[1].apply(r).expect("interior size");
        for row in c.chunks_mut(n1) {
            let mut v = DVector::from_column_slice(row);
            y1.solve_mut(&mut v);
            row.copy_from_slice(v.as_slice());
        }
        self.m0.solve_rows_in_place(&mut c, n1);
        from[1].apply_add(&c, z).expect("interior size");

        // S₁ ⊗ S₁
        let c = to[2].apply(r).expect("interior size");
        let sol = l11.solve(&DVector::from_vec(c));
        from[2].apply_add(sol.as_slice(), z).expect("interior size");
    }
}

/// Solves with a dense factor acting on the row index of a row-major block.
fn solve_dense_rows(f: &Cholesky<f64, Dyn>, x: &mut [f64], width: usize) {
    let rows = x.len() / width;
    let mut col = DVector::zeros(rows);
    for c in 0..width {
        for r in 0..rows {
            col[r] = x[r * width + c];
        }
        f.solve_mut(&mut col);
        for r in 0..rows {
            x[r * width + c] = col[r];
        }
    }
}

/// Local solver of one piece.
#[derive(Debug, Clone)]
pub enum LocalSolver {
    Interior(Box<InteriorSmoother>),
    Exact(Cholesky<f64, Dyn>),
}

impl LocalSolver {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            LocalSolver::Interior(s) => s.apply(r, z),
            LocalSolver::Exact(c) => {
                let sol = c.solve(&DVector::from_column_slice(r));
                z.copy_from_slice(sol.as_slice());
            }
        }
    }
}

/// Exact solver for `A_T = P_Tᵀ A_h P_T`.
pub fn build_piece_smoother(a: &GlobalOperator, dofs: &[usize]) -> Result<LocalSolver> {
    Ok(LocalSolver::Exact(dense_cholesky(a.dense_block(dofs), "piece matrix")?))
}

/// `L_h⁻¹ = Σ_T P_T L_T⁻¹ P_Tᵀ` over the piece partition.
#[derive(Debug, Clone)]
pub struct AdditiveSmoother {
    dim: usize,
    pieces: Vec<(Vec<usize>, LocalSolver)>,
}

impl AdditiveSmoother {
    /// Interior pieces use the mass smoother with `σ = sigma_scale · h⁻²`
    /// when `m > p`, exact solvers otherwise.
    pub fn new(disc: &Discretization, sigma_scale: f64) -> Result<Self> {
        let space = disc.space.univariate();
        let interior = if space.intervals() > space.degree() {
            let sigma = sigma_scale / (space.h() * space.h());
            Some(InteriorSmoother::new(build_splitting(space)?, sigma)?)
        } else {
            None
        };
        let mut pieces = Vec::with_capacity(disc.dofs.pieces().len());
        for piece in disc.dofs.pieces() {
            let solver = match (&piece.kind, &interior) {
                (PieceKind::Interior { .. }, Some(s)) => LocalSolver::Interior(Box::new(s.clone())),
                _ => build_piece_smoother(&disc.stiffness, &piece.dofs)?,
            };
            pieces.push((piece.dofs.clone(), solver));
        }
        Ok(Self { dim: disc.num_dofs(), pieces })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Applies the pieces in the given order (for permutation checks).
    pub fn apply_ordered(&self, r: &[f64], z: &mut [f64], order: &[usize]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut rl = Vec::new();
        let mut zl = Vec::new();
        for &t in order {
            let (dofs, solver) = &self.pieces[t];
            rl.clear();
            rl.extend(dofs.iter().map(|&g| r[g]));
            zl.resize(dofs.len(), 0.0);
            solver.apply(&rl, &mut zl);
            for (&g, v) in dofs.iter().zip(&zl) {
                z[g] += v;
            }
        }
    }

    /// `z = L_h⁻¹ r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let order: Vec<usize> = (0..self.pieces.len()).collect();
        self.apply_ordered(r, z, &order);
    }
}

/// Free function form of [`AdditiveSmoother::apply`].
pub fn apply_additive(smoother: &AdditiveSmoother, r: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; r.len()];
    smoother.apply(r, &mut z);
    z
}

/// Parameter-domain `Â_h + h⁻² M̂_h`, assembled patchwise.
pub fn parameter_shifted_operator(space: &TensorSpace, dofs: &Arc<DofMap>) -> Result<GlobalOperator> {
    let (m, k) = mass_stiffness(space.univariate());
    let (m, k) = (m.to_csr(), k.to_csr());
    let h2 = 1.0 / (space.h() * space.h());
    let op = KroneckerOperator::new(vec![
        KroneckerTerm { ax: k.clone(), ay: m.clone(), weight: 1.0 },
        KroneckerTerm { ax: m.clone(), ay: k, weight: 1.0 },
        KroneckerTerm { ax: m.clone(), ay: m, weight: h2 },
    ])?;
    GlobalOperator::new(vec![PatchOperator::Kronecker(op); dofs.num_patches()], dofs.clone())
}

/// `p` steps of Richardson for `X = Â_h + h⁻² M̂_h` preconditioned by `ϱ⁻¹ L_h`.
#[derive(Debug, Clone)]
pub struct BoostedSmoother {
    inner: AdditiveSmoother,
    x: GlobalOperator,
    rho: f64,
    steps: usize,
}

impl BoostedSmoother {
    pub fn new(disc: &Discretization, sigma_scale: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        let inner = AdditiveSmoother::new(disc, sigma_scale)?;
        let x = parameter_shifted_operator(&disc.space, &disc.dofs)?;
        Ok(Self { inner, x, rho, steps: disc.space.degree() })
    }

    pub fn inner(&self) -> &AdditiveSmoother {
        &self.inner
    }

    pub fn shifted_operator(&self) -> &GlobalOperator {
        &self.x
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `z = L̃_h⁻¹ r = ϱ⁻¹ pᵖ`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let mut pk = vec![0.0; n];
        self.inner.apply(r, &mut pk);
        pk.iter_mut().for_each(|v| *v *= self.rho);
        let mut xp = vec![0.0; n];
        let mut corr = vec![0.0; n];
        for _ in 2..=self.steps {
            self.x.apply_into(&pk, &mut xp);
            for i in 0..n {
                xp[i] = r[i] - xp[i];
            }
            self.inner.apply(&xp, &mut corr);
            for i in 0..n {
                pk[i] += self.rho * corr[i];
            }
        }
        for i in 0..n {
            z[i] = pk[i] / self.rho;
        }
    }
}

/// Free function form of [`BoostedSmoother::apply`].
pub fn apply_boosted(smoother: &BoostedSmoother, r: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; r.len()];
    smoother.apply(r, &mut z);
    z
}

/// Smoother used inside the multigrid cycle.
#[derive(Debug, Clone)]
pub enum Smoother {
    Additive(AdditiveSmoother),
    Boosted(BoostedSmoother),
}

impl Smoother {
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Smoother::Additive(s) => s.apply(r, z),
            Smoother::Boosted(s) => s.apply(r, z),
        }
    }
}
