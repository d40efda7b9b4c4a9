//! Analytic test fields with closed-form partial derivatives, and the
//! variable coefficients of the model problems.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, RrmError};

/// Highest partial derivative order every [`ExactField`] must provide.
pub const MAX_DERIVATIVE: usize = 4;

/// A scalar field defined on a neighborhood of the domain, with partial
/// derivatives `∂x^dx ∂y^dy` for `dx + dy <= 4`.
pub trait ExactField: Send + Sync {
    fn partial(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64;

    fn value(&self, x: f64, y: f64) -> f64 {
        self.partial(x, y, 0, 0)
    }

    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        [self.partial(x, y, 1, 0), self.partial(x, y, 0, 1)]
    }

    /// `[u_xx, u_xy, u_yy]`
    fn hessian(&self, x: f64, y: f64) -> [f64; 3] {
        [
            self.partial(x, y, 2, 0),
            self.partial(x, y, 1, 1),
            self.partial(x, y, 0, 2),
        ]
    }

    fn laplacian(&self, x: f64, y: f64) -> f64 {
        self.partial(x, y, 2, 0) + self.partial(x, y, 0, 2)
    }

    fn grad_laplacian(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.partial(x, y, 3, 0) + self.partial(x, y, 1, 2),
            self.partial(x, y, 2, 1) + self.partial(x, y, 0, 3),
        ]
    }

    fn bilaplacian(&self, x: f64, y: f64) -> f64 {
        self.partial(x, y, 4, 0) + 2.0 * self.partial(x, y, 2, 2) + self.partial(x, y, 0, 4)
    }
}

/// One-dimensional building blocks for separable fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Univariate {
    /// `sin(pi t)`
    SinPi,
    /// `sin(pi t)^2 = (1 - cos(2 pi t)) / 2`
    SinPiSquared,
    /// `t^k`
    Power(u32),
}

impl Univariate {
    pub fn derivative(&self, t: f64, n: usize) -> f64 {
        match *self {
            Univariate::SinPi => {
                let s = PI.powi(n as i32);
                match n % 4 {
                    0 => s * (PI * t).sin(),
                    1 => s * (PI * t).cos(),
                    2 => -s * (PI * t).sin(),
                    _ => -s * (PI * t).cos(),
                }
            }
            Univariate::SinPiSquared => {
                if n == 0 {
                    return (PI * t).sin().powi(2);
                }
                // d^n/dt^n of -cos(2 pi t)/2
                let w = 2.0 * PI;
                let s = -0.5 * w.powi(n as i32);
                match n % 4 {
                    0 => s * (w * t).cos(),
                    1 => -s * (w * t).sin(),
                    2 => -s * (w * t).cos(),
                    _ => s * (w * t).sin(),
                }
            }
            Univariate::Power(k) => {
                let n32 = n as u32;
                if n32 > k {
                    return 0.0;
                }
                let coeff: f64 = ((k - n32 + 1)..=k).map(|m| m as f64).product();
                coeff * t.powi((k - n32) as i32)
            }
        }
    }
}

/// `scale * f(x) g(y)`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separable {
    pub scale: f64,
    pub fx: Univariate,
    pub gy: Univariate,
}

impl ExactField for Separable {
    fn partial(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        self.scale * self.fx.derivative(x, dx) * self.gy.derivative(y, dy)
    }
}

/// Bivariate polynomial `Σ c[i][j] x^i y^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Self {
        Polynomial { terms }
    }

    pub fn monomial(i: u32, j: u32) -> Self {
        Polynomial::new(vec![(i, j, 1.0)])
    }

    /// `{1, x, y, x^2, xy, y^2}`
    pub fn quadratic_monomials() -> Vec<Polynomial> {
        [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
            .into_iter()
            .map(|(i, j)| Polynomial::monomial(i, j))
            .collect()
    }
}

impl ExactField for Polynomial {
    fn partial(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        self.terms
            .iter()
            .map(|&(i, j, c)| {
                c * Univariate::Power(i).derivative(x, dx) * Univariate::Power(j).derivative(y, dy)
            })
            .sum()
    }
}

impl<F: ExactField + ?Sized> ExactField for &F {
    fn partial(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        (**self).partial(x, y, dx, dy)
    }
}

/// Closure-backed field, mainly for linear combinations in tests.
pub struct FnField<F>(pub F);

impl<F> ExactField for FnField<F>
where
    F: Fn(f64, f64, usize, usize) -> f64 + Send + Sync,
{
    fn partial(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        (self.0)(x, y, dx, dy)
    }
}

/// `u = (sin pi x sin pi y)^2`, the smooth clamped solution.
pub fn sin_squared_product() -> Separable {
    Separable {
        scale: 1.0,
        fx: Univariate::SinPiSquared,
        gy: Univariate::SinPiSquared,
    }
}

/// `u0 = sin pi x sin pi y`, solution of the reduced second-order problem.
pub fn sin_product() -> Separable {
    Separable {
        scale: 1.0,
        fx: Univariate::SinPi,
        gy: Univariate::SinPi,
    }
}

/// Variable coefficient `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientField {
    Constant { value: f64 },
    /// `c0 + cx x + cy y`
    Affine { c0: f64, cx: f64, cy: f64 },
}

impl CoefficientField {
    /// `8 + x - y`
    pub const AFFINE_PRESET: CoefficientField = CoefficientField::Affine {
        c0: 8.0,
        cx: 1.0,
        cy: -1.0,
    };

    pub fn constant(value: f64) -> Self {
        CoefficientField::Constant { value }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            CoefficientField::Constant { value } => value,
            CoefficientField::Affine { c0, cx, cy } => c0 + cx * x + cy * y,
        }
    }

    pub fn gradient(&self, _x: f64, _y: f64) -> [f64; 2] {
        match *self {
            CoefficientField::Constant { .. } => [0.0, 0.0],
            CoefficientField::Affine { cx, cy, .. } => [cx, cy],
        }
    }

    pub fn laplacian(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    /// `1 / (beta - 1)`
    pub fn inv_contrast(&self, x: f64, y: f64) -> f64 {
        1.0 / (self.value(x, y) - 1.0)
    }

    /// `beta / (beta - 1)`
    pub fn contrast_ratio(&self, x: f64, y: f64) -> f64 {
        let b = self.value(x, y);
        b / (b - 1.0)
    }
}

impl fmt::Display for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientField::Constant { value } => write!(f, "const:{value}"),
            c if *c == CoefficientField::AFFINE_PRESET => write!(f, "affine"),
            CoefficientField::Affine { c0, cx, cy } => write!(f, "affine:{c0},{cx},{cy}"),
        }
    }
}

impl FromStr for CoefficientField {
    type Err = RrmError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "affine" {
            return Ok(CoefficientField::AFFINE_PRESET);
        }
        if let Some(v) = s.strip_prefix("const:") {
            let value: f64 = v
                .parse()
                .map_err(|_| RrmError::Parse(format!("bad constant in '{s}'")))?;
            return Ok(CoefficientField::constant(value));
        }
        Err(RrmError::Parse(format!(
            "unknown coefficient '{s}', expected const:<c> or affine"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central difference of the order-`(dx-1, dy)` or `(dx, dy-1)` partial.
    fn fd_check(field: &dyn ExactField, x: f64, y: f64) {
        let h = 1e-5;
        for total in 1..=MAX_DERIVATIVE {
            for dx in 0..=total {
                let dy = total - dx;
                let exact = field.partial(x, y, dx, dy);
                let approx = if dx > 0 {
                    (field.partial(x + h, y, dx - 1, dy) - field.partial(x - h, y, dx - 1, dy))
                        / (2.0 * h)
                } else {
                    (field.partial(x, y + h, dx, dy - 1) - field.partial(x, y - h, dx, dy - 1))
                        / (2.0 * h)
                };
                let scale = 1.0 + exact.abs();
                assert!(
                    (exact - approx).abs() < 1e-6 * scale,
                    "d{dx},{dy} at ({x},{y}): {exact} vs {approx}"
                );
            }
        }
    }

    #[test]
    fn presets_match_finite_differences() {
        for &(x, y) in &[(0.25, 0.5), (0.1, 0.9), (-0.2, 1.3), (0.77, 0.31)] {
            fd_check(&sin_squared_product(), x, y);
            fd_check(&sin_product(), x, y);
            fd_check(&Polynomial::new(vec![(3, 1, 2.0), (0, 2, -1.0), (4, 0, 0.5)]), x, y);
        }
    }

    #[test]
    fn mixed_partials_symmetric() {
        let u = sin_squared_product();
        let a = u.partial(0.3, 0.6, 1, 1);
        let h = 1e-5;
        let b = (u.partial(0.3, 0.6 + h, 1, 0) - u.partial(0.3, 0.6 - h, 1, 0)) / (2.0 * h);
        let c = (u.partial(0.3 + h, 0.6, 0, 1) - u.partial(0.3 - h, 0.6, 0, 1)) / (2.0 * h);
        assert!((a - b).abs() < 1e-6 && (a - c).abs() < 1e-6);
    }

    #[test]
    fn sin_squared_values() {
        let u = sin_squared_product();
        assert!((u.value(0.5, 0.5) - 1.0).abs() < 1e-15);
        assert!(u.value(0.0, 0.3).abs() < 1e-15);
        assert!(u.gradient(0.0, 0.3)[0].abs() < 1e-12);
    }

    #[test]
    fn coefficient_presets() {
        let b = CoefficientField::AFFINE_PRESET;
        assert_eq!(b.value(0.5, 0.25), 8.25);
        assert_eq!(b.gradient(0.0, 0.0), [1.0, -1.0]);
        assert_eq!("affine".parse::<CoefficientField>().unwrap(), b);
        assert_eq!(
            "const:2.5".parse::<CoefficientField>().unwrap(),
            CoefficientField::constant(2.5)
        );
        assert!("linear".parse::<CoefficientField>().is_err());
        assert_eq!(b.to_string(), "affine");
        assert!((b.contrast_ratio(0.0, 0.0) - 8.0 / 7.0).abs() < 1e-15);
    }
}
