//! Patch and global stiffness/mass operators and the Dirichlet-lifted load.
//!
//! Patch operators act on all `n²` local coefficients. The global operator is
//! applied matrix-free as `Σ_k P_kᵀ A_k P_k` through the DOF map; boundary
//! DOFs are eliminated.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bspline::{mass_stiffness, BasisTable};
use crate::error::{Error, Result};
use crate::geometry::{build_dof_map, build_topology, DofMap, GeometryDerivs, GeometryMap, MultiPatchTopology, Point, Side, BOUNDARY};
use crate::quadrature::gauss_rule;
use crate::sparse::CsrMatrix;
use crate::tensor::{KroneckerOperator, KroneckerTerm, TensorSpace};

/// A patch-local operator on `n²` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum PatchOperator {
    Kronecker(KroneckerOperator),
    Sparse(CsrMatrix),
}

impl PatchOperator {
    pub fn dim(&self) -> usize {
        match self {
            PatchOperator::Kronecker(k) => k.input_dim(),
            PatchOperator::Sparse(c) => c.ncols(),
        }
    }

    /// `y += A x`.
    pub fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        match self {
            PatchOperator::Kronecker(k) => k.apply_add(x, y).expect("patch vectors have patch size"),
            PatchOperator::Sparse(c) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let (cols, vals) = c.row(r);
                    *yr += cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum::<f64>();
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_add(x, &mut y);
        y
    }

    /// Entry `(r, c)` of the local matrix.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self {
            PatchOperator::Kronecker(k) => {
                let (nx, _) = k.input_shape();
                let (ix, iy, jx, jy) = (r % nx, r / nx, c % nx, c / nx);
                k.terms().iter().map(|t| t.weight * t.ay.get(iy, jy) * t.ax.get(ix, jx)).sum()
            }
            PatchOperator::Sparse(m) => m.get(r, c),
        }
    }

    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        match self {
            PatchOperator::Kronecker(k) => k.for_each_entry(f),
            PatchOperator::Sparse(m) => m.iter().for_each(|(r, c, v)| f(r, c, v)),
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        match self {
            PatchOperator::Kronecker(k) => k.to_csr(),
            PatchOperator::Sparse(m) => m.clone(),
        }
    }
}

/// Physical stiffness `A_k` and mass `M_k` of one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrices {
    pub stiffness: PatchOperator,
    pub mass: PatchOperator,
}

/// Assembles `A_k`, `M_k`; axis-aligned affine maps yield Kronecker operators,
/// other maps are integrated with `quad_nodes` Gauss nodes per element and direction.
pub fn assemble_patch(
    geometry: &GeometryMap,
    space: &TensorSpace,
    quad_nodes: usize,
    patch: usize,
) -> Result<PatchMatrices> {
    match geometry.axis_aligned() {
        Some(a) => {
            let (m, k) = mass_stiffness(space.univariate());
            let (m, k) = (m.to_csr(), k.to_csr());
            let [sx, sy] = a.scale;
            let stiffness = KroneckerOperator::new(vec![
                KroneckerTerm { ax: k.clone(), ay: m.clone(), weight: sy / sx },
                KroneckerTerm { ax: m.clone(), ay: k, weight: sx / sy },
            ])?;
            let mass = KroneckerOperator::single(m.clone(), m, sx * sy);
            Ok(PatchMatrices {
                stiffness: PatchOperator::Kronecker(stiffness),
                mass: PatchOperator::Kronecker(mass),
            })
        }
        None => assemble_patch_quadrature(geometry, space, quad_nodes, patch),
    }
}

/// CSR layout with the full tensor band `|i - i'| ≤ p`, `|j - j'| ≤ p`.
struct BandPattern {
    n: usize,
    p: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl BandPattern {
    fn new(n: usize, p: usize) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        for j in 0..n {
            for i in 0..n {
                for jj in j.saturating_sub(p)..=(j + p).min(n - 1) {
                    for ii in i.saturating_sub(p)..=(i + p).min(n - 1) {
                        col_idx.push(ii + n * jj);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        Self { n, p, row_ptr, col_idx }
    }

    #[inline]
    fn offset(&self, (i, j): (usize, usize), (ii, jj): (usize, usize)) -> usize {
        let i0 = i.saturating_sub(self.p);
        let wi = (i + self.p).min(self.n - 1) - i0 + 1;
        let j0 = j.saturating_sub(self.p);
        self.row_ptr[i + self.n * j] + (jj - j0) * wi + (ii - i0)
    }
}

/// Element-wise pull-back quadrature, sum-factorized over the x nodes.
pub fn assemble_patch_quadrature(
    geometry: &GeometryMap,
    space: &TensorSpace,
    quad_nodes: usize,
    patch: usize,
) -> Result<PatchMatrices> {
    let p = space.degree();
    let n = space.n();
    let m = space.intervals();
    let q = quad_nodes.max(1);
    let w = p + 1;
    let table = BasisTable::new(space.univariate(), &gauss_rule(q));
    let gx = geometry.tabulate_axis(0, &table.points);
    let gy = geometry.tabulate_axis(1, &table.points);
    let pattern = BandPattern::new(n, p);
    let mut stiff = vec![0.0; pattern.col_idx.len()];
    let mut mass = vec![0.0; pattern.col_idx.len()];

    // x[kl][a][c] partial sums; component 4 is the mass
    let mut xs = vec![0.0; 5 * w * w];
    let mut a_loc = vec![0.0; w * w * w * w];
    let mut m_loc = vec![0.0; w * w * w * w];
    for ey in 0..m {
        for ex in 0..m {
            a_loc.iter_mut().for_each(|v| *v = 0.0);
            m_loc.iter_mut().for_each(|v| *v = 0.0);
            for qy in 0..q {
                let ky = ey * q + qy;
                xs.iter_mut().for_each(|v| *v = 0.0);
                for qx in 0..q {
                    let kx = ex * q + qx;
                    let d = geometry.derivs_tabulated(&gx, kx, &gy, ky);
                    let det = d.det();
                    if !(det > 0.0) {
                        return Err(Error::SingularJacobian {
                            patch,
                            x: table.points[kx],
                            y: table.points[ky],
                            det,
                        });
                    }
                    let j = d.jac;
                    // J^{-1} J^{-T} |det J| = adj(J) adj(J)^T / |det J|
                    let adj = [[j[1][1], -j[0][1]], [-j[1][0], j[0][0]]];
                    let mut c = [[0.0; 2]; 2];
                    for r in 0..2 {
                        for s in 0..2 {
                            c[r][s] = (adj[r][0] * adj[s][0] + adj[r][1] * adj[s][1]) / det;
                        }
                    }
                    let wq = table.weights[kx] * table.weights[ky];
                    let bx = table.value(kx);
                    let dx = table.deriv(kx);
                    let fx = [dx, bx];
                    for k in 0..2 {
                        for l in 0..2 {
                            let s = wq * c[k][l];
                            let blk = &mut xs[(2 * k + l) * w * w..(2 * k + l + 1) * w * w];
                            for a in 0..w {
                                let fa = s * fx[k][a];
                                for cc in 0..w {
                                    blk[a * w + cc] += fa * fx[l][cc];
                                }
                            }
                        }
                    }
                    let s = wq * det;
                    let blk = &mut xs[4 * w * w..];
                    for a in 0..w {
                        for cc in 0..w {
                            blk[a * w + cc] += s * bx[a] * bx[cc];
                        }
                    }
                }
                let by = table.value(ky);
                let dy = table.deriv(ky);
                let fy = [by, dy];
                for b in 0..w {
                    for dd in 0..w {
                        let coef = [
                            fy[0][b] * fy[0][dd],
                            fy[0][b] * fy[1][dd],
                            fy[1][b] * fy[0][dd],
                            fy[1][b] * fy[1][dd],
                        ];
                        let mcoef = by[b] * by[dd];
                        for a in 0..w {
                            for cc in 0..w {
                                let idx = ((b * w + a) * w + dd) * w + cc;
                                let mut v = 0.0;
                                for kl in 0..4 {
                                    v += xs[kl * w * w + a * w + cc] * coef[kl];
                                }
                                a_loc[idx] += v;
                                m_loc[idx] += xs[4 * w * w + a * w + cc] * mcoef;
                            }
                        }
                    }
                }
            }
            for b in 0..w {
                for a in 0..w {
                    for dd in 0..w {
                        for cc in 0..w {
                            let idx = ((b * w + a) * w + dd) * w + cc;
                            let off = pattern.offset((ex + a, ey + b), (ex + cc, ey + dd));
                            stiff[off] += a_loc[idx];
                            mass[off] += m_loc[idx];
                        }
                    }
                }
            }
        }
    }
    let build = |values: Vec<f64>| {
        CsrMatrix::from_parts(n * n, n * n, pattern.row_ptr.clone(), pattern.col_idx.clone(), values)
    };
    Ok(PatchMatrices { stiffness: PatchOperator::Sparse(build(stiff)?), mass: PatchOperator::Sparse(build(mass)?) })
}

/// Matrix-free `Σ_k P_kᵀ A_k P_k` on the non-boundary global DOFs.
#[derive(Debug, Clone)]
pub struct GlobalOperator {
    patches: Vec<PatchOperator>,
    dofs: Arc<DofMap>,
    /// `(patch, local)` occurrences of each global DOF, CSR-style.
    occ_ptr: Vec<usize>,
    occ: Vec<(usize, usize)>,
}

impl GlobalOperator {
    pub fn new(patches: Vec<PatchOperator>, dofs: Arc<DofMap>) -> Result<Self> {
        if patches.len() != dofs.num_patches() {
            return Err(Error::DimensionMismatch { expected: dofs.num_patches(), got: patches.len() });
        }
        let n2 = dofs.n() * dofs.n();
        if let Some(op) = patches.iter().find(|o| o.dim() != n2) {
            return Err(Error::DimensionMismatch { expected: n2, got: op.dim() });
        }
        let mut lists = vec![Vec::new(); dofs.num_dofs()];
        for k in 0..dofs.num_patches() {
            for (l, &g) in dofs.patch_map(k).iter().enumerate() {
                if g != BOUNDARY {
                    lists[g].push((k, l));
                }
            }
        }
        let mut occ_ptr = vec![0];
        let mut occ = Vec::new();
        for l in lists {
            occ.extend(l);
            occ_ptr.push(occ.len());
        }
        Ok(Self { patches, dofs, occ_ptr, occ })
    }

    pub fn dim(&self) -> usize {
        self.dofs.num_dofs()
    }

    pub fn dof_map(&self) -> &Arc<DofMap> {
        &self.dofs
    }

    pub fn patch_operators(&self) -> &[PatchOperator] {
        &self.patches
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let n2 = self.dofs.n() * self.dofs.n();
        let mut xl = vec![0.0; n2];
        let mut yl = vec![0.0; n2];
        for (k, op) in self.patches.iter().enumerate() {
            self.dofs.gather(k, x, &mut xl);
            yl.iter_mut().for_each(|v| *v = 0.0);
            op.apply_add(&xl, &mut yl);
            self.dofs.scatter_add(k, &yl, y);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    fn occurrences(&self, g: usize) -> &[(usize, usize)] {
        &self.occ[self.occ_ptr[g]..self.occ_ptr[g + 1]]
    }

    /// Entry `(r, c)` of the global matrix.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let mut v = 0.0;
        for &(k, lr) in self.occurrences(r) {
            if let Some(&(_, lc)) = self.occurrences(c).iter().find(|(kc, _)| *kc == k) {
                v += self.patches[k].get(lr, lc);
            }
        }
        v
    }

    /// Dense principal submatrix on the listed global DOFs.
    pub fn dense_block(&self, dofs: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(dofs.len(), dofs.len(), |i, j| self.entry(dofs[i], dofs[j]))
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut trip = Vec::new();
        for (k, op) in self.patches.iter().enumerate() {
            let map = self.dofs.patch_map(k);
            op.for_each_entry(|r, c, v| {
                let (gr, gc) = (map[r], map[c]);
                if gr != BOUNDARY && gc != BOUNDARY {
                    trip.push((gr, gc, v));
                }
            });
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &trip).expect("global ids are in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.to_csr().to_dense()
    }
}

/// Scatter-adds patch matrices into global CSR stiffness and mass matrices.
pub fn assemble_global(patches: &[PatchMatrices], dofs: &Arc<DofMap>) -> Result<(CsrMatrix, CsrMatrix)> {
    let a = GlobalOperator::new(patches.iter().map(|p| p.stiffness.clone()).collect(), dofs.clone())?;
    let m = GlobalOperator::new(patches.iter().map(|p| p.mass.clone()).collect(), dofs.clone())?;
    Ok((a.to_csr(), m.to_csr()))
}

/// A discretized multi-patch domain at one refinement level.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub space: TensorSpace,
    pub patches: Arc<Vec<GeometryMap>>,
    pub topology: MultiPatchTopology,
    pub dofs: Arc<DofMap>,
    pub patch_matrices: Vec<PatchMatrices>,
    pub stiffness: GlobalOperator,
    pub mass: GlobalOperator,
}

impl Discretization {
    /// Builds topology, DOF map and operators with `p + 2` quadrature nodes.
    pub fn new(patches: Arc<Vec<GeometryMap>>, space: TensorSpace) -> Result<Self> {
        let topology = build_topology(&patches, &space, None)?;
        let dofs = Arc::new(build_dof_map(&topology, &space)?);
        let q = space.degree() + 2;
        let patch_matrices = patches
            .iter()
            .enumerate()
            .map(|(k, g)| assemble_patch(g, &space, q, k))
            .collect::<Result<Vec<_>>>()?;
        let stiffness =
            GlobalOperator::new(patch_matrices.iter().map(|p| p.stiffness.clone()).collect(), dofs.clone())?;
        let mass = GlobalOperator::new(patch_matrices.iter().map(|p| p.mass.clone()).collect(), dofs.clone())?;
        Ok(Self { space, patches, topology, dofs, patch_matrices, stiffness, mass })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_dofs()
    }

    pub fn h(&self) -> f64 {
        self.space.h()
    }

    /// Patch-local coefficients of a global vector combined with boundary values.
    pub fn patch_coefficients(&self, u: &[f64], boundary: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n2 = self.space.dim();
        (0..self.patches.len())
            .map(|k| {
                let mut local = vec![0.0; n2];
                self.dofs.gather(k, u, &mut local);
                if let Some(b) = boundary.get(k) {
                    for ((l, &g), bv) in local.iter_mut().zip(self.dofs.patch_map(k)).zip(b) {
                        if g == BOUNDARY {
                            *l = *bv;
                        }
                    }
                }
                local
            })
            .collect()
    }
}

/// Reduced system `A_h u_h = f_h` with its Dirichlet data.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub rhs: Vec<f64>,
    /// Patch-local coefficients of the Dirichlet lift (zero off the boundary).
    pub boundary: Vec<Vec<f64>>,
}

/// Patch load `Σ w [v B_a B_b + g0 B_a' B_b + g1 B_a B_b']` where
/// `(v, g0, g1) = integrand(geometry at the node)`.
pub fn patch_load(
    geometry: &GeometryMap,
    space: &TensorSpace,
    quad_nodes: usize,
    integrand: impl Fn(&GeometryDerivs) -> (f64, f64, f64),
) -> Vec<f64> {
    let n = space.n();
    let table = BasisTable::new(space.univariate(), &gauss_rule(quad_nodes.max(1)));
    let npts = table.num_points();
    let gx = geometry.tabulate_axis(0, &table.points);
    let gy = geometry.tabulate_axis(1, &table.points);
    let mut load = vec![0.0; n * n];
    let mut t = vec![[0.0; 3]; n];
    let mut vals = vec![(0.0, 0.0, 0.0); npts];
    for ky in 0..npts {
        for (kx, v) in vals.iter_mut().enumerate() {
            *v = integrand(&geometry.derivs_tabulated(&gx, kx, &gy, ky));
        }
        t.iter_mut().for_each(|v| *v = [0.0; 3]);
        for (kx, &(v, g0, g1)) in vals.iter().enumerate() {
            let wx = table.weights[kx];
            let first = table.first(kx);
            let (b, db) = (table.value(kx), table.deriv(kx));
            for a in 0..b.len() {
                let e = &mut t[first + a];
                e[0] += wx * v * b[a];
                e[1] += wx * g0 * db[a];
                e[2] += wx * g1 * b[a];
            }
        }
        let first = table.first(ky);
        let wy = table.weights[ky];
        let (b, db) = (table.value(ky), table.deriv(ky));
        for j in 0..b.len() {
            let row = &mut load[(first + j) * n..(first + j + 1) * n];
            let (cb, cd) = (wy * b[j], wy * db[j]);
            for (r, e) in row.iter_mut().zip(&t) {
                *r += cb * (e[0] + e[1]) + cd * e[2];
            }
        }
    }
    load
}

/// Univariate interpolation of `g` at the Greville points of a side.
fn interpolate_side(
    geometry: &GeometryMap,
    space: &TensorSpace,
    side: Side,
    g: &dyn Fn(Point) -> f64,
) -> Result<Vec<f64>> {
    let uni = space.univariate();
    let grev = uni.greville_points();
    let n = grev.len();
    let mut colloc = DMatrix::zeros(n, n);
    for (r, &t) in grev.iter().enumerate() {
        let b = uni.eval_basis(t, 0)?;
        for (a, v) in b.values.iter().enumerate() {
            colloc[(r, b.first + a)] = *v;
        }
    }
    let rhs = DVector::from_iterator(
        n,
        grev.iter().map(|&t| {
            let [x, y] = side.param(t);
            g(geometry.eval(x, y))
        }),
    );
    let sol = colloc
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular Greville collocation matrix".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Load vector `(f, φ_i)` minus the stiffness action of the Dirichlet lift.
pub fn assemble_rhs(
    disc: &Discretization,
    f: &dyn Fn(Point) -> f64,
    g: &dyn Fn(Point) -> f64,
) -> Result<LinearSystem> {
    let space = &disc.space;
    let n = space.n();
    let nloc = n * n;
    let q = space.degree() + 2;
    let mut rhs = vec![0.0; disc.num_dofs()];
    let mut boundary = Vec::with_capacity(disc.patches.len());

    for (k, geom) in disc.patches.iter().enumerate() {
        let load = patch_load(geom, space, q, |d| (f(d.point) * d.det().abs(), 0.0, 0.0));

        // Dirichlet coefficients on boundary-class DOFs
        let map = disc.dofs.patch_map(k);
        let mut ug = vec![0.0; nloc];
        for side in Side::ALL {
            if disc.topology.is_boundary_side(k, side) {
                let c = interpolate_side(geom, space, side, g)?;
                for (tt, cv) in c.iter().enumerate() {
                    let (i, j) = side.local_dof(tt, n);
                    ug[i + n * j] = *cv;
                }
            }
        }
        // corners eliminated through another patch
        for c in 0..4 {
            let (i, j) = ((c & 1) * (n - 1), (c >> 1) * (n - 1));
            if map[i + n * j] == BOUNDARY {
                ug[i + n * j] = g(geom.eval((c & 1) as f64, (c >> 1) as f64));
            }
        }
        let mut lift = vec![0.0; nloc];
        disc.patch_matrices[k].stiffness.apply_add(&ug, &mut lift);
        for ((l, li), &gid) in load.iter().zip(&lift).zip(map) {
            if gid != BOUNDARY {
                rhs[gid] += l - li;
            }
        }
        boundary.push(ug);
    }
    Ok(LinearSystem { rhs, boundary })
}
