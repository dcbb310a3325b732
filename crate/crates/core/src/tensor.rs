//! Tensor-product spline spaces on the unit square and Kronecker operators.
//!
//! Vectors are flattened x-fastest: coefficient `(i, j)` (0-based) sits at
//! `i + n * j`. A term `(A_x, A_y)` acts as `A_y ⊗ A_x` on such vectors.

use crate::bspline::{mass_stiffness, UnivariateSplineSpace};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// `S_{p,h} ⊗ S_{p,h}` with the same univariate space in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpace {
    space: UnivariateSplineSpace,
}

impl TensorSpace {
    pub fn new(space: UnivariateSplineSpace) -> Self {
        Self { space }
    }

    pub fn with_degree(p: usize, m: usize) -> Result<Self> {
        Ok(Self::new(UnivariateSplineSpace::new(p, m)?))
    }

    pub fn univariate(&self) -> &UnivariateSplineSpace {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    pub fn intervals(&self) -> usize {
        self.space.intervals()
    }

    pub fn h(&self) -> f64 {
        self.space.h()
    }

    /// Univariate dimension `n`.
    pub fn n(&self) -> usize {
        self.space.dim()
    }

    pub fn dim(&self) -> usize {
        self.n() * self.n()
    }

    /// 0-based flat index of `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n() * j
    }

    /// Greville grid, flattened x-fastest.
    pub fn greville_grid(&self) -> Vec<(f64, f64)> {
        let g = self.space.greville_points();
        let mut out = Vec::with_capacity(self.dim());
        for &y in &g {
            for &x in &g {
                out.push((x, y));
            }
        }
        out
    }
}

/// 1-based flat index `i + n (j - 1)` of the basis function `B^(i)(x) B^(j)(y)`.
pub fn tensor_index(i: usize, j: usize, n: usize) -> Result<usize> {
    if i < 1 || j < 1 || i > n || j > n {
        return Err(Error::InvalidArgument(format!("index ({i}, {j}) outside 1..={n}")));
    }
    Ok(i + n * (j - 1))
}

/// One Kronecker term `weight * (A_y ⊗ A_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerTerm {
    pub ax: CsrMatrix,
    pub ay: CsrMatrix,
    pub weight: f64,
}

/// Sum of Kronecker terms sharing input and output shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerOperator {
    terms: Vec<KroneckerTerm>,
    nx_in: usize,
    ny_in: usize,
    nx_out: usize,
    ny_out: usize,
}

impl KroneckerOperator {
    pub fn new(terms: Vec<KroneckerTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("Kronecker operator needs at least one term".into()))?;
        let shape = |t: &KroneckerTerm| (t.ax.ncols(), t.ay.ncols(), t.ax.nrows(), t.ay.nrows());
        let s = shape(first);
        if let Some(t) = terms.iter().find(|t| shape(t) != s) {
            let got = shape(t);
            return Err(Error::DimensionMismatch { expected: s.0 * s.1, got: got.0 * got.1 });
        }
        Ok(Self { terms, nx_in: s.0, ny_in: s.1, nx_out: s.2, ny_out: s.3 })
    }

    pub fn single(ax: CsrMatrix, ay: CsrMatrix, weight: f64) -> Self {
        Self::new(vec![KroneckerTerm { ax, ay, weight }]).expect("one term is always consistent")
    }

    pub fn terms(&self) -> &[KroneckerTerm] {
        &self.terms
    }

    pub fn input_dim(&self) -> usize {
        self.nx_in * self.ny_in
    }

    pub fn output_dim(&self) -> usize {
        self.nx_out * self.ny_out
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.nx_in, self.ny_in)
    }

    pub fn output_shape(&self) -> (usize, usize) {
        (self.nx_out, self.ny_out)
    }

    /// `y += Σ w (A_y ⊗ A_x) v`.
    pub fn apply_add(&self, v: &[f64], y: &mut [f64]) -> Result<()> {
        if v.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: v.len() });
        }
        if y.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), got: y.len() });
        }
        let mut w = vec![0.0; self.nx_out * self.ny_in];
        for t in &self.terms {
            // W = V A_x^T, row by row
            for j in 0..self.ny_in {
                let vin = &v[j * self.nx_in..(j + 1) * self.nx_in];
                let wout = &mut w[j * self.nx_out..(j + 1) * self.nx_out];
                t.ax.matvec(vin, wout);
            }
            // Y += w A_y W
            for i in 0..self.ny_out {
                let (cols, vals) = t.ay.row(i);
                let yrow = &mut y[i * self.nx_out..(i + 1) * self.nx_out];
                for (&j, &a) in cols.iter().zip(vals) {
                    let s = t.weight * a;
                    let wrow = &w[j * self.nx_out..(j + 1) * self.nx_out];
                    for (yk, wk) in yrow.iter_mut().zip(wrow) {
                        *yk += s * wk;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.output_dim()];
        self.apply_add(v, &mut y)?;
        Ok(y)
    }

    /// Calls `f(row, col, value)` for every (possibly repeated) entry of the sum.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        for t in &self.terms {
            for (iy, jy, ay) in t.ay.iter() {
                for (ix, jx, ax) in t.ax.iter() {
                    f(ix + self.nx_out * iy, jx + self.nx_in * jy, t.weight * ay * ax);
                }
            }
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut trip = Vec::new();
        self.for_each_entry(|r, c, v| trip.push((r, c, v)));
        CsrMatrix::from_triplets(self.output_dim(), self.input_dim(), &trip)
            .expect("entries lie inside the operator shape")
    }

    pub fn transpose(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| KroneckerTerm { ax: t.ax.transpose(), ay: t.ay.transpose(), weight: t.weight })
            .collect();
        Self::new(terms).expect("transposed terms share shapes")
    }
}

/// Free function form of [`KroneckerOperator::apply`].
pub fn kron_apply(op: &KroneckerOperator, v: &[f64]) -> Result<Vec<f64>> {
    op.apply(v)
}

/// Parameter-domain stiffness `K⊗M + M⊗K` and mass `M⊗M`.
pub fn parameter_matrices(space: &TensorSpace) -> (KroneckerOperator, KroneckerOperator) {
    let (m, k) = mass_stiffness(space.univariate());
    let (m, k) = (m.to_csr(), k.to_csr());
    let stiff = KroneckerOperator::new(vec![
        KroneckerTerm { ax: k.clone(), ay: m.clone(), weight: 1.0 },
        KroneckerTerm { ax: m.clone(), ay: k, weight: 1.0 },
    ])
    .expect("square factors of equal size");
    let mass = KroneckerOperator::single(m.clone(), m, 1.0);
    (stiff, mass)
}
