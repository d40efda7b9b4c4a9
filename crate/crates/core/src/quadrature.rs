//! Gauss–Legendre rules on the unit interval and their tensor products on
//! rectangles.

use crate::error::{Result, RrmError};
use crate::grid::Rect;

/// Points per axis for `grad . grad` integrands (degree 2).
pub const ORDER_GRAD: usize = 2;
/// Points per axis for polynomial mass-type integrands (degree 4).
pub const ORDER_MASS: usize = 3;
/// Points per axis for integrands carrying a rational coefficient and for
/// cell means and error norms.
pub const ORDER_RATIONAL: usize = 4;

pub const MAX_POINTS: usize = 10;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`; weights sum to one.
pub fn gauss_legendre(p: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=MAX_POINTS).contains(&p) {
        return Err(RrmError::Config(format!(
            "Gauss rule needs 1..={MAX_POINTS} points, got {p}"
        )));
    }
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    let pf = p as f64;
    for i in 0..(p + 1) / 2 {
        // Newton iteration on P_p starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (pf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=p {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if p == 1 { x } else { p1 };
            let pm = if p == 1 { 1.0 } else { p0 };
            dp = pf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[p - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[p - 1 - i] = 0.5 * w;
    }
    if p % 2 == 1 {
        nodes[p / 2] = 0.5;
    }
    Ok((nodes, weights))
}

/// Tensor-product rule on the reference square `[0,1]^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

pub fn gauss_rule(p: usize) -> Result<QuadRule> {
    let (x, w) = gauss_legendre(p)?;
    let mut points = Vec::with_capacity(p * p);
    let mut weights = Vec::with_capacity(p * p);
    for j in 0..p {
        for i in 0..p {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadRule { points, weights })
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `∫_cell f` by the area-weighted rule.
pub fn integrate_cell<F: Fn(f64, f64) -> f64>(cell: &Rect, f: F, rule: &QuadRule) -> f64 {
    let mut acc = 0.0;
    for (pt, w) in rule.points.iter().zip(&rule.weights) {
        let [x, y] = cell.to_physical(pt[0], pt[1]);
        acc += w * f(x, y);
    }
    acc * cell.area()
}

/// Cell mean `⨍_cell f`.
pub fn cell_mean<F: Fn(f64, f64) -> f64>(cell: &Rect, f: F, rule: &QuadRule) -> f64 {
    integrate_cell(cell, f, rule) / cell.area()
}
