//! Preconditioned conjugate gradients on abstract operators.

use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Euclidean residual norms, starting with the initial one.
    pub history: Vec<f64>,
}

/// Solves `A x = b` from `x = 0` until `‖r‖ ≤ eps ‖b‖`.
///
/// `precond(r, z)` writes `z = B r` for an SPD `B`; a negative `⟨z, r⟩`
/// is reported as [`Error::IndefinitePreconditioner`].
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    eps: f64,
    max_iter: usize,
) -> Result<KrylovResult> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = norm(&r);
    let mut history = vec![r0];
    if r0 == 0.0 {
        return Ok(KrylovResult { solution: x, iterations: 0, history });
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut rz = dot(&r, &z);
    if rz < 0.0 {
        return Err(Error::IndefinitePreconditioner(rz));
    }
    let mut d = z.clone();
    let mut ad = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&d, &mut ad);
        let dad = dot(&d, &ad);
        if !(dad > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("search direction energy {dad}")));
        }
        let alpha = rz / dad;
        for i in 0..n {
            x[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        let rn = norm(&r);
        history.push(rn);
        if rn <= eps * r0 {
            return Ok(KrylovResult { solution: x, iterations: it, history });
        }
        if !rn.is_finite() {
            return Err(Error::Divergence { iterations: it, residual: rn });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        if rz_new < 0.0 {
            return Err(Error::IndefinitePreconditioner(rz_new));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
    }
    Err(Error::Divergence { iterations: max_iter, residual: *history.last().unwrap() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 30;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        };
        let b = vec![1.0; n];
        let res = pcg(apply, |r, z| z.copy_from_slice(r), &b, 1e-12, 100).unwrap();
        let mut ax = vec![0.0; n];
        apply(&res.solution, &mut ax);
        assert!(ax.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-9));
        assert!(res.iterations <= n);
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let res = pcg(|x, y| y.copy_from_slice(x), |r, z| z.copy_from_slice(r), &[0.0; 4], 1e-8, 10).unwrap();
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn indefinite_preconditioner_is_detected() {
        let err = pcg(|x, y| y.copy_from_slice(x), |r, z| z.iter_mut().zip(r).for_each(|(z, r)| *z = -r), &[1.0; 3], 1e-8, 10);
        assert!(matches!(err, Err(Error::IndefinitePreconditioner(_))));
    }
}
