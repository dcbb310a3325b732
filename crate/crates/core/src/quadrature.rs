//! Gauss–Legendre rules on the unit interval.

/// Nodes in (0, 1) with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `q`-point Gauss–Legendre rule on (0, 1), exact for polynomials of degree `2q - 1`.
///
/// `q = 0` is promoted to the midpoint rule.
pub fn gauss_rule(q: usize) -> QuadratureRule {
    let q = q.max(1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..(q + 1) / 2 {
        // Newton on P_q starting from the Tricomi estimate.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[q - 1 - i] = 0.5 * w;
    }
    QuadratureRule { nodes, weights }
}

fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
