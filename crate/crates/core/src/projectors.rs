//! Spline projectors: the univariate `H¹_D` projection, its dual basis, the
//! tensor-product projector on the unit square, the patchwise multi-patch
//! projector and the global `H¹`-orthogonal projection; error norms.
//!
//! `(u, v)_{H¹_D} = (u', v') + u(0) v(0)` on `(0, 1)`.

use nalgebra::DVector;

use crate::assembly::{patch_load, Discretization};
use crate::bspline::{h1d_gram, BasisTable, UnivariateSplineSpace};
use crate::error::{Error, Result};
use crate::functions::{Function1d, Function2d};
use crate::geometry::{GeometryDerivs, GeometryMap, Point, BOUNDARY};
use crate::krylov::pcg;
use crate::quadrature::gauss_rule;
use crate::tensor::TensorSpace;

/// Gauss nodes per element beyond the degree for loads of smooth data; keeps
/// the quadrature error below `1e-12` on the coarsest grids.
const LOAD_EXTRA_POINTS: usize = 6;

/// Load `[(u, B_i)_{H¹_D}]` with `p + LOAD_EXTRA_POINTS` Gauss nodes per element.
pub fn h1d_load(space: &UnivariateSplineSpace, du: &dyn Fn(f64) -> f64, u0: f64) -> Vec<f64> {
    let table = BasisTable::new(space, &gauss_rule(space.degree() + LOAD_EXTRA_POINTS));
    let mut load = vec![0.0; space.dim()];
    for k in 0..table.num_points() {
        let v = table.weights[k] * du(table.points[k]);
        let first = table.first(k);
        for (a, d) in table.deriv(k).iter().enumerate() {
            load[first + a] += v * d;
        }
    }
    load[0] += u0;
    load
}

/// Coefficients of `Π_{p,h} u`, the `H¹_D`-orthogonal projection onto `S_{p,h}`.
pub fn project_1d(space: &UnivariateSplineSpace, u: &dyn Function1d) -> Result<Vec<f64>> {
    let chol = h1d_gram(space).cholesky()?;
    let mut c = h1d_load(space, &|x| u.d1(x), u.value(0.0));
    chol.solve_in_place(&mut c);
    Ok(c)
}

/// Dual basis `λ^(j)` with `(B_i, λ^(j))_{H¹_D} = δ_ij`, as coefficient vectors (rows of `G⁻¹`).
pub fn dual_basis(space: &UnivariateSplineSpace) -> Result<Vec<Vec<f64>>> {
    let chol = h1d_gram(space).cholesky()?;
    let n = space.dim();
    Ok((0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            chol.solve_in_place(&mut e);
            e
        })
        .collect())
}

/// `L₂` and `H¹`-seminorm errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
}

/// Errors of a univariate spline against `u`, `q` Gauss nodes per element.
pub fn error_norms_1d(space: &UnivariateSplineSpace, coeffs: &[f64], u: &dyn Function1d, q: usize) -> ErrorNorms {
    let table = BasisTable::new(space, &gauss_rule(q));
    let (mut l2, mut h1) = (0.0, 0.0);
    for k in 0..table.num_points() {
        let x = table.points[k];
        let c = &coeffs[table.first(k)..];
        let v: f64 = table.value(k).iter().zip(c).map(|(b, c)| b * c).sum();
        let d: f64 = table.deriv(k).iter().zip(c).map(|(b, c)| b * c).sum();
        l2 += table.weights[k] * (u.value(x) - v).powi(2);
        h1 += table.weights[k] * (u.d1(x) - d).powi(2);
    }
    ErrorNorms { l2: l2.sqrt(), h1: h1.sqrt() }
}

/// `(|u|_{H¹(0,1)}, |u|_{H²(0,1)})` by composite Gauss quadrature.
pub fn seminorms_1d(u: &dyn Function1d) -> (f64, f64) {
    let rule = gauss_rule(20);
    let cells = 64;
    let (mut h1, mut h2) = (0.0, 0.0);
    for c in 0..cells {
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = (c as f64 + x) / cells as f64;
            let w = w / cells as f64;
            h1 += w * u.d1(t).powi(2);
            h2 += w * u.d2(t).powi(2);
        }
    }
    (h1.sqrt(), h2.sqrt())
}

/// Data of a function on the unit square needed by the tensor projector.
struct TensorData<'a> {
    uxy: &'a dyn Fn(f64, f64) -> f64,
    /// `u_x(x, 0)`.
    ux_bottom: &'a dyn Fn(f64) -> f64,
    /// `u_y(0, y)`.
    uy_left: &'a dyn Fn(f64) -> f64,
    u00: f64,
}

fn tensor_project(space: &TensorSpace, data: &TensorData) -> Result<Vec<f64>> {
    let uni = space.univariate();
    let n = space.n();
    let table = BasisTable::new(uni, &gauss_rule(uni.degree() + LOAD_EXTRA_POINTS));
    let npts = table.num_points();
    let mut load = vec![0.0; n * n];
    let mut t = vec![0.0; n];
    for ky in 0..npts {
        t.iter_mut().for_each(|v| *v = 0.0);
        let y = table.points[ky];
        for kx in 0..npts {
            let v = table.weights[kx] * (data.uxy)(table.points[kx], y);
            let first = table.first(kx);
            for (a, d) in table.deriv(kx).iter().enumerate() {
                t[first + a] += v * d;
            }
        }
        let first = table.first(ky);
        for (b, d) in table.deriv(ky).iter().enumerate() {
            let s = table.weights[ky] * d;
            let row = &mut load[(first + b) * n..(first + b + 1) * n];
            for (r, tv) in row.iter_mut().zip(&t) {
                *r += s * tv;
            }
        }
    }
    // boundary terms: B_j(0) = δ_{j0}
    let bottom = h1d_load(uni, data.ux_bottom, 0.0);
    let left = h1d_load(uni, data.uy_left, 0.0);
    for i in 0..n {
        load[i] += bottom[i];
        load[n * i] += left[i];
    }
    load[0] += data.u00;
    let chol = h1d_gram(uni).cholesky()?;
    for row in load.chunks_mut(n) {
        chol.solve_in_place(row);
    }
    chol.solve_rows_in_place(&mut load, n);
    Ok(load)
}

/// Coefficients of `Π̂ u = Π^x Π^y u` on the unit square.
pub fn project_2d_tensor(space: &TensorSpace, u: &dyn Function2d) -> Result<Vec<f64>> {
    tensor_project(
        space,
        &TensorData {
            uxy: &|x, y| u.hessian([x, y])[0][1],
            ux_bottom: &|x| u.grad([x, 0.0])[0],
            uy_left: &|y| u.grad([0.0, y])[1],
            u00: u.value([0.0, 0.0]),
        },
    )
}

/// Values and parameter derivatives of the pull-back `u ∘ G`.
fn pullback(u: &dyn Function2d, d: &GeometryDerivs) -> (f64, [f64; 2], f64) {
    let g = u.grad(d.point);
    let h = u.hessian(d.point);
    let j = d.jac;
    let dx = g[0] * j[0][0] + g[1] * j[1][0];
    let dy = g[0] * j[0][1] + g[1] * j[1][1];
    let mut dxy = g[0] * d.hess[0][0][1] + g[1] * d.hess[1][0][1];
    for a in 0..2 {
        for b in 0..2 {
            dxy += h[a][b] * j[a][0] * j[b][1];
        }
    }
    (u.value(d.point), [dx, dy], dxy)
}

/// Patchwise tensor projections of the pulled-back function.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipatchProjection {
    /// Global coefficients on the non-boundary DOFs.
    pub global: Vec<f64>,
    /// Local coefficients per patch, boundary included.
    pub patch_coeffs: Vec<Vec<f64>>,
    /// Largest difference between patches on a shared DOF.
    pub max_disagreement: f64,
}

/// Cross-patch agreement tolerance on shared coefficients.
pub const MULTIPATCH_TOLERANCE: f64 = 1e-9;

/// `Π̃_h u` with `(Π̃_h u) ∘ G_k = Π̂ (u ∘ G_k)`.
pub fn project_multipatch(disc: &Discretization, u: &dyn Function2d) -> Result<MultipatchProjection> {
    let space = &disc.space;
    let mut patch_coeffs = Vec::with_capacity(disc.patches.len());
    for geom in disc.patches.iter() {
        let d = |x: f64, y: f64| geom.derivs(x, y);
        let c = tensor_project(
            space,
            &TensorData {
                uxy: &|x, y| pullback(u, &d(x, y)).2,
                ux_bottom: &|x| pullback(u, &d(x, 0.0)).1[0],
                uy_left: &|y| pullback(u, &d(0.0, y)).1[1],
                u00: u.value(geom.eval(0.0, 0.0)),
            },
        )?;
        patch_coeffs.push(c);
    }
    let mut global = vec![f64::NAN; disc.num_dofs()];
    let mut max_disagreement: f64 = 0.0;
    for (k, c) in patch_coeffs.iter().enumerate() {
        for (&g, &v) in disc.dofs.patch_map(k).iter().zip(c) {
            if g == BOUNDARY {
                continue;
            }
            if global[g].is_nan() {
                global[g] = v;
            } else {
                max_disagreement = max_disagreement.max((global[g] - v).abs());
            }
        }
    }
    if max_disagreement > MULTIPATCH_TOLERANCE {
        return Err(Error::InconsistentProjection(max_disagreement));
    }
    Ok(MultipatchProjection { global, patch_coeffs, max_disagreement })
}

/// Load `[(∇u, ∇φ_i)]` on the non-boundary DOFs.
pub fn gradient_load(disc: &Discretization, u: &dyn Function2d) -> Vec<f64> {
    let mut rhs = vec![0.0; disc.num_dofs()];
    let q = disc.space.degree() + 3;
    for (k, geom) in disc.patches.iter().enumerate() {
        let local = patch_load(geom, &disc.space, q, |d| {
            let g = u.grad(d.point);
            let j = d.jac;
            // |det J| J^{-1} ∇u = sign(det) adj(J) ∇u
            let s = d.det().signum();
            let g0 = s * (j[1][1] * g[0] - j[0][1] * g[1]);
            let g1 = s * (-j[1][0] * g[0] + j[0][0] * g[1]);
            (0.0, g0, g1)
        });
        disc.dofs.scatter_add(k, &local, &mut rhs);
    }
    rhs
}

/// Solves `A_h c = rhs` by dense Cholesky (small systems) or Jacobi-preconditioned CG.
pub fn solve_stiffness(disc: &Discretization, rhs: &[f64], eps: f64) -> Result<Vec<f64>> {
    let n = disc.num_dofs();
    if n <= 2000 {
        let chol = disc
            .stiffness
            .to_dense()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("global stiffness matrix".into()))?;
        return Ok(chol.solve(&DVector::from_column_slice(rhs)).iter().copied().collect());
    }
    let diag: Vec<f64> = (0..n).map(|i| disc.stiffness.entry(i, i)).collect();
    let res = pcg(
        |x, y| disc.stiffness.apply_into(x, y),
        |r, z| z.iter_mut().zip(r).zip(&diag).for_each(|((z, r), d)| *z = r / d),
        rhs,
        eps,
        20 * n,
    )?;
    Ok(res.solution)
}

/// `Π_h u`: the `(∇·, ∇·)`-orthogonal projection onto the discrete space.
pub fn project_h1_global(disc: &Discretization, u: &dyn Function2d) -> Result<Vec<f64>> {
    solve_stiffness(disc, &gradient_load(disc, u), 1e-14)
}

/// Errors of patch-local spline coefficients against `u`, `q` Gauss nodes
/// per element and direction.
pub fn error_norms_with(
    space: &TensorSpace,
    patches: &[GeometryMap],
    coeffs: &[Vec<f64>],
    u: &dyn Function2d,
    q: usize,
) -> ErrorNorms {
    let n = space.n();
    let table = BasisTable::new(space.univariate(), &gauss_rule(q));
    let npts = table.num_points();
    let (mut l2, mut h1) = (0.0, 0.0);
    for (geom, c) in patches.iter().zip(coeffs) {
        let gx = geom.tabulate_axis(0, &table.points);
        let gy = geom.tabulate_axis(1, &table.points);
        for ky in 0..npts {
            let (by, dy, fy) = (table.value(ky), table.deriv(ky), table.first(ky));
            for kx in 0..npts {
                let (bx, dx, fx) = (table.value(kx), table.deriv(kx), table.first(kx));
                let (mut v, mut gxh, mut gyh) = (0.0, 0.0, 0.0);
                for b in 0..by.len() {
                    let row = &c[(fy + b) * n + fx..];
                    let (mut s0, mut s1) = (0.0, 0.0);
                    for a in 0..bx.len() {
                        s0 += bx[a] * row[a];
                        s1 += dx[a] * row[a];
                    }
                    v += s0 * by[b];
                    gyh += s0 * dy[b];
                    gxh += s1 * by[b];
                }
                let d = geom.derivs_tabulated(&gx, kx, &gy, ky);
                let det = d.det();
                let j = d.jac;
                // physical gradient J^{-T} ∇̂
                let px = (j[1][1] * gxh - j[1][0] * gyh) / det;
                let py = (-j[0][1] * gxh + j[0][0] * gyh) / det;
                let w = table.weights[kx] * table.weights[ky] * det.abs();
                let g = u.grad(d.point);
                l2 += w * (u.value(d.point) - v).powi(2);
                h1 += w * ((g[0] - px).powi(2) + (g[1] - py).powi(2));
            }
        }
    }
    ErrorNorms { l2: l2.sqrt(), h1: h1.sqrt() }
}

/// [`error_norms_with`] using `p + 4` nodes per element.
pub fn error_norms(space: &TensorSpace, patches: &[GeometryMap], coeffs: &[Vec<f64>], u: &dyn Function2d) -> ErrorNorms {
    error_norms_with(space, patches, coeffs, u, space.degree() + 4)
}

/// `(|u|_{H¹}, |u|_{H²})` over the patches; the `H²` part is the broken seminorm
/// `‖u_xx‖² + 2‖u_xy‖² + ‖u_yy‖²`.
pub fn seminorms_2d(patches: &[GeometryMap], u: &dyn Function2d) -> (f64, f64) {
    let rule = gauss_rule(16);
    let cells = 16;
    let (mut h1, mut h2) = (0.0, 0.0);
    for geom in patches {
        for cy in 0..cells {
            for (y, wy) in rule.nodes.iter().zip(&rule.weights) {
                for cx in 0..cells {
                    for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
                        let pt = [(cx as f64 + x) / cells as f64, (cy as f64 + y) / cells as f64];
                        let d = geom.derivs(pt[0], pt[1]);
                        let w = wx * wy / (cells * cells) as f64 * d.det().abs();
                        let g = u.grad(d.point);
                        let h = u.hessian(d.point);
                        h1 += w * (g[0] * g[0] + g[1] * g[1]);
                        h2 += w * (h[0][0].powi(2) + 2.0 * h[0][1].powi(2) + h[1][1].powi(2));
                    }
                }
            }
        }
    }
    (h1.sqrt(), h2.sqrt())
}

/// Outcome of one projector-study cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub coefficients: Vec<f64>,
    pub l2_error: f64,
    pub h1_error: f64,
    /// `2 h |u|_{H²}` for the tensor projector.
    pub bound: f64,
}

/// Projects `u` with `Π̂` on the unit square and measures the errors.
pub fn study_tensor_projection(space: &TensorSpace, u: &dyn Function2d) -> Result<ProjectionResult> {
    let unit = [GeometryMap::rectangle(0.0, 0.0, 1.0, 1.0)];
    let c = project_2d_tensor(space, u)?;
    let e = error_norms(space, &unit, std::slice::from_ref(&c), u);
    let (_, h2) = seminorms_2d(&unit, u);
    Ok(ProjectionResult { coefficients: c, l2_error: e.l2, h1_error: e.h1, bound: 2.0 * space.h() * h2 })
}

/// Spline function on the unit square: value at a point from tensor coefficients.
pub fn eval_tensor_spline(space: &TensorSpace, coeffs: &[f64], p: Point) -> Result<f64> {
    let uni = space.univariate();
    let bx = uni.eval_basis(p[0], 0)?;
    let by = uni.eval_basis(p[1], 0)?;
    let n = space.n();
    let mut v = 0.0;
    for (b, wy) in by.values.iter().enumerate() {
        for (a, wx) in bx.values.iter().enumerate() {
            v += wx * wy * coeffs[(bx.first + a) + n * (by.first + b)];
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{SinPi, SinSin};

    #[test]
    fn endpoint_interpolation() {
        let s = UnivariateSplineSpace::new(3, 8).unwrap();
        let u = crate::functions::ExpSin3;
        let c = project_1d(&s, &u).unwrap();
        assert!((s.eval_spline(&c, 0.0, 0) - u.value(0.0)).abs() < 1e-10);
        assert!((s.eval_spline(&c, 1.0, 0) - u.value(1.0)).abs() < 1e-10);
    }

    #[test]
    fn sin_bound_p2() {
        let s = UnivariateSplineSpace::new(2, 8).unwrap();
        let c = project_1d(&s, &SinPi).unwrap();
        let e = error_norms_1d(&s, &c, &SinPi, 12);
        let (_, h2) = seminorms_1d(&SinPi);
        assert!((h2 - std::f64::consts::PI.powi(2) / 2f64.sqrt()).abs() < 1e-12);
        assert!(e.h1 <= 2f64.sqrt() / 8.0 * h2);
    }

    #[test]
    fn tensor_corners_are_interpolated() {
        let ts = TensorSpace::with_degree(2, 4).unwrap();
        let u = crate::functions::Fn2d {
            f: |p: Point| (p[0] + 0.3).exp() * (2.0 * p[1]).cos(),
            grad: |p: Point| {
                let e = (p[0] + 0.3).exp();
                [e * (2.0 * p[1]).cos(), -2.0 * e * (2.0 * p[1]).sin()]
            },
            hess: |p: Point| {
                let e = (p[0] + 0.3).exp();
                let xy = -2.0 * e * (2.0 * p[1]).sin();
                [[e * (2.0 * p[1]).cos(), xy], [xy, -4.0 * e * (2.0 * p[1]).cos()]]
            },
        };
        let c = project_2d_tensor(&ts, &u).unwrap();
        for p in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            assert!((eval_tensor_spline(&ts, &c, p).unwrap() - u.value(p)).abs() < 1e-10);
        }
        let r = study_tensor_projection(&ts, &SinSin).unwrap();
        assert!(r.h1_error <= r.bound);
    }
}
