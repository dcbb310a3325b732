//! Univariate B-splines: knot vectors, Cox–de Boor evaluation, Greville
//! abscissae, Gram matrices and knot-insertion refinement.
//!
//! Element convention: a point `x` belongs to the element `(t_j, t_{j+1}]`,
//! except `x = 0`, which belongs to the first element. This only matters for
//! derivatives of order `p`, which jump across knots.

use nalgebra::DMatrix;

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_rule, QuadratureRule};
use crate::sparse::CsrMatrix;

/// Open (clamped) knot vector on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument("spline degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidArgument(format!(
                "{} knots are too few for degree {degree}",
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("knots must be nondecreasing".into()));
        }
        let first = knots[0];
        let last = *knots.last().unwrap();
        if first != 0.0 || last != 1.0 {
            return Err(Error::InvalidArgument("knot vector must span [0, 1]".into()));
        }
        let open = knots[..=degree].iter().all(|&t| t == 0.0)
            && knots[knots.len() - degree - 1..].iter().all(|&t| t == 1.0)
            && knots[degree + 1] > 0.0
            && knots[knots.len() - degree - 2] < 1.0;
        if !open {
            return Err(Error::InvalidArgument(format!(
                "knot vector must be open with endpoint multiplicity {}",
                degree + 1
            )));
        }
        for w in knots[degree + 1..knots.len() - degree - 1].windows(degree + 1) {
            if w[0] == w[degree] {
                return Err(Error::InvalidArgument("interior knot multiplicity exceeds the degree".into()));
            }
        }
        Ok(Self { degree, knots })
    }

    /// Uniform open knot vector with `intervals` elements.
    pub fn uniform(degree: usize, intervals: usize) -> Result<Self> {
        if intervals < 1 {
            return Err(Error::InvalidArgument("number of intervals must be at least 1".into()));
        }
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..intervals).map(|j| j as f64 / intervals as f64));
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Index `mu` with `t_mu < x <= t_{mu+1}` (or `mu = p` for `x = 0`).
    pub fn find_span(&self, x: f64) -> usize {
        let p = self.degree;
        let last = self.num_basis() - 1;
        // smallest mu >= p with t_{mu+1} >= x
        let upper = &self.knots[p + 1..=last + 1];
        let k = upper.partition_point(|&t| t < x);
        (p + k).min(last)
    }

    /// Values and derivatives up to order `nders` of the `p + 1` functions
    /// active on span `span`, at `x`. Result is `[order][local index]`.
    pub fn basis_ders(&self, span: usize, x: f64, nders: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; nders + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nders.min(p) {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for k in 1..=nders.min(p) {
            for v in ders[k].iter_mut() {
                *v *= fac;
            }
            fac *= (p - k) as f64;
        }
        ders
    }

    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// Distinct knot values (element boundaries).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.knots.clone();
        b.dedup();
        b
    }

    /// Evaluates the `r`-th derivative of `sum_i c_i B_i` at `x`.
    pub fn eval(&self, coeffs: &[f64], x: f64, r: usize) -> f64 {
        let span = self.find_span(x);
        let ders = self.basis_ders(span, x, r);
        let first = span - self.degree;
        ders[r].iter().enumerate().map(|(a, v)| v * coeffs[first + a]).sum()
    }
}

/// Values of the basis functions active at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    /// Index of the first active basis function (0-based).
    pub first: usize,
    pub values: Vec<f64>,
}

/// Splines of degree `p` and maximum smoothness on `m` uniform intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateSplineSpace {
    degree: usize,
    intervals: usize,
    knots: KnotVector,
}

impl UnivariateSplineSpace {
    pub fn new(degree: usize, intervals: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument("spline degree must be at least 1".into()));
        }
        let knots = KnotVector::uniform(degree, intervals)?;
        Ok(Self { degree, intervals, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn h(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    /// `n = m + p`.
    pub fn dim(&self) -> usize {
        self.intervals + self.degree
    }

    pub fn knot_vector(&self) -> &KnotVector {
        &self.knots
    }

    pub fn knots(&self) -> &[f64] {
        self.knots.knots()
    }

    /// Element containing `x` under the `((j-1)h, jh]` convention.
    pub fn element_of(&self, x: f64) -> usize {
        let m = self.intervals;
        let e = (x * m as f64).ceil() as usize;
        e.saturating_sub(1).min(m - 1)
    }

    /// Values (or `r`-th derivatives) of the active basis functions at `x`.
    pub fn eval_basis(&self, x: f64, r: usize) -> Result<BasisValues> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain { x });
        }
        if r > self.degree {
            return Err(Error::InvalidArgument(format!(
                "derivative order {r} exceeds degree {}",
                self.degree
            )));
        }
        let e = self.element_of(x);
        let mut ders = self.knots.basis_ders(e + self.degree, x, r);
        Ok(BasisValues { first: e, values: ders.swap_remove(r) })
    }

    /// All derivatives up to `r` on element `e` (0-based), `[order][local]`.
    pub fn eval_on_element(&self, e: usize, x: f64, r: usize) -> Vec<Vec<f64>> {
        self.knots.basis_ders(e + self.degree, x, r)
    }

    pub fn greville_points(&self) -> Vec<f64> {
        let mut g = self.knots.greville();
        // exact endpoints
        g[0] = 0.0;
        *g.last_mut().unwrap() = 1.0;
        g
    }

    pub fn eval_spline(&self, coeffs: &[f64], x: f64, r: usize) -> f64 {
        let e = self.element_of(x);
        let ders = self.eval_on_element(e, x, r);
        ders[r].iter().enumerate().map(|(a, v)| v * coeffs[e + a]).sum()
    }

    /// Quadrature nodes of `rule` mapped to each element, with element-scaled weights.
    pub fn element_quadrature(&self, rule: &QuadratureRule) -> Vec<(usize, f64, f64)> {
        let h = self.h();
        (0..self.intervals)
            .flat_map(|e| {
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(move |(&x, &w)| (e, (e as f64 + x) * h, w * h))
            })
            .collect()
    }
}

/// Basis values and first derivatives tabulated at all quadrature nodes.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub degree: usize,
    pub intervals: usize,
    pub nodes_per_element: usize,
    /// Global node positions, element-major.
    pub points: Vec<f64>,
    /// Global weights (already scaled by `h`).
    pub weights: Vec<f64>,
    /// `values[node * (p+1) + a]`.
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl BasisTable {
    pub fn new(space: &UnivariateSplineSpace, rule: &QuadratureRule) -> Self {
        let p = space.degree();
        let q = rule.len();
        let mut table = BasisTable {
            degree: p,
            intervals: space.intervals(),
            nodes_per_element: q,
            points: Vec::new(),
            weights: Vec::new(),
            values: Vec::new(),
            derivs: Vec::new(),
        };
        for (e, x, w) in space.element_quadrature(rule) {
            let d = space.eval_on_element(e, x, 1);
            table.points.push(x);
            table.weights.push(w);
            table.values.extend_from_slice(&d[0]);
            table.derivs.extend_from_slice(&d[1]);
        }
        table
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// First active basis index at global node `k`.
    pub fn first(&self, k: usize) -> usize {
        k / self.nodes_per_element
    }

    pub fn value(&self, k: usize) -> &[f64] {
        let w = self.degree + 1;
        &self.values[k * w..(k + 1) * w]
    }

    pub fn deriv(&self, k: usize) -> &[f64] {
        let w = self.degree + 1;
        &self.derivs[k * w..(k + 1) * w]
    }
}

/// Banded mass `M_ij = (B_i, B_j)` and stiffness `K_ij = (B_i', B_j')` on (0, 1).
pub fn univariate_mass_stiffness(
    space: &UnivariateSplineSpace,
    rule: &QuadratureRule,
) -> (BandedMatrix, BandedMatrix) {
    let p = space.degree();
    let n = space.dim();
    let mut mass = BandedMatrix::zeros(n, p);
    let mut stiff = BandedMatrix::zeros(n, p);
    let table = BasisTable::new(space, rule);
    for k in 0..table.num_points() {
        let first = table.first(k);
        let w = table.weights[k];
        let b = table.value(k);
        let d = table.deriv(k);
        for a in 0..=p {
            for c in 0..=a {
                mass.add(first + a, first + c, w * b[a] * b[c]);
                stiff.add(first + a, first + c, w * d[a] * d[c]);
            }
        }
    }
    (mass, stiff)
}

/// Mass and stiffness with the default `p + 1` Gauss nodes per element.
pub fn mass_stiffness(space: &UnivariateSplineSpace) -> (BandedMatrix, BandedMatrix) {
    univariate_mass_stiffness(space, &gauss_rule(space.degree() + 1))
}

/// Gram matrix of `(u, v)_{H^1} + u(0) v(0)`: `K + e_1 e_1^T`.
pub fn h1d_gram(space: &UnivariateSplineSpace) -> BandedMatrix {
    let (_, mut k) = mass_stiffness(space);
    k.add(0, 0, 1.0);
    k
}

/// Matrix `E` with `coarse spline(c) == fine spline(E c)`; requires same degree
/// and `fine.m` a multiple of `coarse.m`.
pub fn refinement_matrix(
    coarse: &UnivariateSplineSpace,
    fine: &UnivariateSplineSpace,
) -> Result<CsrMatrix> {
    if coarse.degree() != fine.degree() {
        return Err(Error::NotNested(format!(
            "degrees differ ({} vs {})",
            coarse.degree(),
            fine.degree()
        )));
    }
    let (mc, mf) = (coarse.intervals(), fine.intervals());
    if mf < mc || mf % mc != 0 {
        return Err(Error::NotNested(format!("{mf} intervals do not refine {mc}")));
    }
    let p = coarse.degree();
    let nc = coarse.dim();
    let factor = mf / mc;
    let mut knots = coarse.knots().to_vec();
    let mut rows: DMatrix<f64> = DMatrix::identity(nc, nc);
    for j in 1..mf {
        if j % factor == 0 {
            continue;
        }
        let x = j as f64 / mf as f64;
        // span k with t_k <= x < t_{k+1}
        let k = knots.partition_point(|&t| t <= x) - 1;
        let n_cur = rows.nrows();
        let mut next = DMatrix::zeros(n_cur + 1, nc);
        for i in 0..=n_cur {
            let alpha = if i + p <= k {
                1.0
            } else if i >= k + 1 {
                0.0
            } else {
                (x - knots[i]) / (knots[i + p] - knots[i])
            };
            for c in 0..nc {
                let cur = if i < n_cur { rows[(i, c)] } else { 0.0 };
                let prev = if i >= 1 { rows[(i - 1, c)] } else { 0.0 };
                next[(i, c)] = alpha * cur + (1.0 - alpha) * prev;
            }
        }
        knots.insert(k + 1, x);
        rows = next;
    }
    debug_assert_eq!(rows.nrows(), fine.dim());
    Ok(CsrMatrix::from_dense(&rows, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_dimensions() {
        let s = UnivariateSplineSpace::new(2, 4).unwrap();
        assert_eq!(s.dim(), 6);
        assert_eq!(s.h(), 0.25);
        let s = UnivariateSplineSpace::new(3, 8).unwrap();
        assert_eq!(s.dim(), 11);
        let s = UnivariateSplineSpace::new(1, 1).unwrap();
        assert_eq!(s.knots(), &[0.0, 0.0, 1.0, 1.0]);
        assert!(UnivariateSplineSpace::new(0, 3).is_err());
        assert!(UnivariateSplineSpace::new(2, 0).is_err());
    }

    #[test]
    fn degree_one_single_element_is_two_hat_halves() {
        let s = UnivariateSplineSpace::new(1, 1).unwrap();
        let b = s.eval_basis(0.3, 0).unwrap();
        assert_eq!(b.first, 0);
        assert!((b.values[0] - 0.7).abs() < 1e-15 && (b.values[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn first_basis_function_closed_form() {
        let s = UnivariateSplineSpace::new(2, 2).unwrap();
        let b = s.eval_basis(0.25, 0).unwrap();
        assert_eq!(b.first, 0);
        assert!((b.values[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn out_of_domain() {
        let s = UnivariateSplineSpace::new(2, 2).unwrap();
        assert!(matches!(s.eval_basis(1.5, 0), Err(Error::OutOfDomain { .. })));
        assert!(s.eval_basis(-1e-9, 0).is_err());
        assert!(s.eval_basis(0.5, 3).is_err());
    }

    #[test]
    fn half_open_elements() {
        let s = UnivariateSplineSpace::new(2, 4).unwrap();
        assert_eq!(s.element_of(0.0), 0);
        assert_eq!(s.element_of(0.25), 0);
        assert_eq!(s.element_of(0.2500001), 1);
        assert_eq!(s.element_of(1.0), 3);
        // p-th derivative at a knot is the left limit
        let left = s.eval_basis(0.25, 2).unwrap();
        let inside = s.eval_basis(0.2, 2).unwrap();
        assert_eq!(left.first, inside.first);
        assert_eq!(left.values, inside.values);
    }

    #[test]
    fn greville_examples() {
        let s = UnivariateSplineSpace::new(2, 2).unwrap();
        assert_eq!(s.greville_points(), vec![0.0, 0.25, 0.75, 1.0]);
        let s = UnivariateSplineSpace::new(1, 4).unwrap();
        assert_eq!(s.greville_points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        for p in 1..7 {
            let g = UnivariateSplineSpace::new(p, 5).unwrap().greville_points();
            assert_eq!(g[0], 0.0);
            assert_eq!(*g.last().unwrap(), 1.0);
            assert!(g.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn closed_form_gram_entries() {
        for p in 1..=8 {
            for m in [4, 8, 16] {
                let s = UnivariateSplineSpace::new(p, m).unwrap();
                let (mass, stiff) = mass_stiffness(&s);
                let h = s.h();
                let pf = p as f64;
                let m11 = h / (2.0 * pf + 1.0);
                let k11 = pf * pf / (h * (2.0 * pf - 1.0));
                assert!(((mass.get(0, 0) - m11) / m11).abs() < 1e-12, "p={p} m={m}");
                assert!(((stiff.get(0, 0) - k11) / k11).abs() < 1e-12, "p={p} m={m}");
            }
        }
    }

    #[test]
    fn hat_function_gram() {
        let s = UnivariateSplineSpace::new(1, 1).unwrap();
        let g = h1d_gram(&s);
        assert!((g.get(0, 0) - 2.0).abs() < 1e-14);
        assert!((g.get(0, 1) + 1.0).abs() < 1e-14);
        assert!((g.get(1, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hat_refinement_stencil() {
        let c = UnivariateSplineSpace::new(1, 2).unwrap();
        let f = UnivariateSplineSpace::new(1, 4).unwrap();
        let e = refinement_matrix(&c, &f).unwrap();
        let col: Vec<f64> = (0..f.dim()).map(|i| e.get(i, 1)).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0, 0.5, 0.0]);
    }

    #[test]
    fn refinement_rejects_non_nested() {
        let c = UnivariateSplineSpace::new(2, 3).unwrap();
        let f = UnivariateSplineSpace::new(2, 4).unwrap();
        assert!(matches!(refinement_matrix(&c, &f), Err(Error::NotNested(_))));
        let f = UnivariateSplineSpace::new(3, 6).unwrap();
        assert!(refinement_matrix(&c, &f).is_err());
    }
}
