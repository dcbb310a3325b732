//! Smooth test functions with analytic derivatives.

use std::f64::consts::PI;

use crate::geometry::Point;

/// Univariate function with first and second derivatives.
pub trait Function1d: Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}

/// Bivariate function with gradient and Hessian.
pub trait Function2d: Sync {
    fn value(&self, p: Point) -> f64;
    fn grad(&self, p: Point) -> [f64; 2];
    fn hessian(&self, p: Point) -> [[f64; 2]; 2];
}

/// Univariate function built from three closures.
pub struct Fn1d<F, G, H> {
    pub f: F,
    pub df: G,
    pub d2f: H,
}

impl<F, G, H> Function1d for Fn1d<F, G, H>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.df)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }
}

/// Bivariate function built from three closures.
pub struct Fn2d<F, G, H> {
    pub f: F,
    pub grad: G,
    pub hess: H,
}

impl<F, G, H> Function2d for Fn2d<F, G, H>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
    H: Fn(Point) -> [[f64; 2]; 2] + Sync,
{
    fn value(&self, p: Point) -> f64 {
        (self.f)(p)
    }
    fn grad(&self, p: Point) -> [f64; 2] {
        (self.grad)(p)
    }
    fn hessian(&self, p: Point) -> [[f64; 2]; 2] {
        (self.hess)(p)
    }
}

/// `sin(π x)`.
pub struct SinPi;

impl Function1d for SinPi {
    fn value(&self, x: f64) -> f64 {
        (PI * x).sin()
    }
    fn d1(&self, x: f64) -> f64 {
        PI * (PI * x).cos()
    }
    fn d2(&self, x: f64) -> f64 {
        -PI * PI * (PI * x).sin()
    }
}

/// `e^x sin(3x)`.
pub struct ExpSin3;

impl Function1d for ExpSin3 {
    fn value(&self, x: f64) -> f64 {
        x.exp() * (3.0 * x).sin()
    }
    fn d1(&self, x: f64) -> f64 {
        x.exp() * ((3.0 * x).sin() + 3.0 * (3.0 * x).cos())
    }
    fn d2(&self, x: f64) -> f64 {
        x.exp() * (6.0 * (3.0 * x).cos() - 8.0 * (3.0 * x).sin())
    }
}

/// `sin(π x) sin(π y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinSin;

impl Function2d for SinSin {
    fn value(&self, [x, y]: Point) -> f64 {
        (PI * x).sin() * (PI * y).sin()
    }
    fn grad(&self, [x, y]: Point) -> [f64; 2] {
        [PI * (PI * x).cos() * (PI * y).sin(), PI * (PI * x).sin() * (PI * y).cos()]
    }
    fn hessian(&self, [x, y]: Point) -> [[f64; 2]; 2] {
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let d = -PI * PI * sx * sy;
        let m = PI * PI * cx * cy;
        [[d, m], [m, d]]
    }
}

/// `2π² sin(π x) sin(π y) = -Δ(sin(π x) sin(π y))`.
pub fn sinsin_source(p: Point) -> f64 {
    2.0 * PI * PI * SinSin.value(p)
}

/// Constant function.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Function2d for Constant {
    fn value(&self, _: Point) -> f64 {
        self.0
    }
    fn grad(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn hessian(&self, _: Point) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}
