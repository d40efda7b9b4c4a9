//! Broken-norm errors of discrete solutions, the `ε`-energy norm and
//! convergence-rate tables.

use serde::Serialize;

use crate::basis::RrmSpace;
use crate::error::Result;
use crate::fields::ExactField;
use crate::interpolation::broken_seminorms_sq;
use crate::quadrature::{gauss_rule, ORDER_RATIONAL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub h: f64,
    pub eps: f64,
    /// `|u - u_h|_{1,h}`
    pub h1_error: f64,
    /// `|u - u_h|_{2,h}`
    pub h2_error: f64,
    /// `‖u - u_h‖_{ε,h}`
    pub energy_error: f64,
    /// `‖u‖_{ε,h}`
    pub energy_norm: f64,
    pub relative_energy_error: f64,
}

/// `‖w‖_{ε,h} = √(ε²|w|²_{2,h} + |w|²_{1,h})`
pub fn energy_norm(eps: f64, h1: f64, h2: f64) -> f64 {
    (eps * eps * h2 * h2 + h1 * h1).sqrt()
}

/// Error of `Σ coeffs_i φ_i` against `u` in the broken norms.
pub fn discrete_solution_error(
    u: &dyn ExactField,
    coeffs: &[f64],
    space: &RrmSpace,
    eps: f64,
) -> Result<ErrorReport> {
    let rule = gauss_rule(ORDER_RATIONAL)?;
    let err = broken_seminorms_sq(u, space, coeffs, &rule);
    let zero = vec![0.0; space.dim()];
    let norm = broken_seminorms_sq(u, space, &zero, &rule);
    let energy_error = energy_norm(eps, err[1].sqrt(), err[2].sqrt());
    let energy = energy_norm(eps, norm[1].sqrt(), norm[2].sqrt());
    Ok(ErrorReport {
        h: space.grid().mesh_size(),
        eps,
        h1_error: err[1].sqrt(),
        h2_error: err[2].sqrt(),
        energy_error,
        energy_norm: energy,
        relative_energy_error: if energy > 0.0 { energy_error / energy } else { energy_error },
    })
}

/// Error against the solution `u⁰` of the reduced second-order problem.
pub fn boundary_layer_error(
    u0: &dyn ExactField,
    coeffs: &[f64],
    space: &RrmSpace,
    eps: f64,
) -> Result<ErrorReport> {
    discrete_solution_error(u0, coeffs, space, eps)
}

/// `log2(e_coarse / e_fine) / log2(h_coarse / h_fine)`; `None` when either
/// error vanishes or the mesh sizes coincide.
pub fn observed_rate(h_coarse: f64, e_coarse: f64, h_fine: f64, e_fine: f64) -> Option<f64> {
    if e_coarse > 0.0 && e_fine > 0.0 && h_coarse > 0.0 && h_fine > 0.0 && h_coarse != h_fine {
        Some((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
    } else {
        None
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_rate(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Ordered `(h, value)` pairs with adjacent-level rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTable {
    pub entries: Vec<(f64, f64)>,
    /// `rates[i]` compares entries `i` and `i + 1`.
    pub rates: Vec<Option<f64>>,
}

impl RateTable {
    pub fn from_errors(entries: Vec<(f64, f64)>) -> Self {
        let rates = entries
            .windows(2)
            .map(|w| observed_rate(w[0].0, w[0].1, w[1].0, w[1].1))
            .collect();
        RateTable { entries, rates }
    }

    pub fn fitted(&self) -> Option<f64> {
        fitted_rate(&self.entries)
    }

    /// `true` when every successive error is no larger than its predecessor.
    pub fn is_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// `log2 |(λ_l - λ_{l+1}) / (λ_{l+1} - λ_{l+2})|`, undefined for repeated or
/// non-monotone values.
pub fn eigen_rate(l0: f64, l1: f64, l2: f64) -> Option<f64> {
    let d0 = l0 - l1;
    let d1 = l1 - l2;
    if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
        return None;
    }
    Some((d0 / d1).abs().log2())
}

/// Per-index eigenvalue sequences across levels and their rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRateTable {
    pub h: Vec<f64>,
    /// `lambdas[level][index]`
    pub lambdas: Vec<Vec<f64>>,
    /// One rate per eigenvalue index, from the three finest levels.
    pub rates: Vec<Option<f64>>,
}

pub fn eigen_rate_table(h: Vec<f64>, lambdas: Vec<Vec<f64>>) -> EigenRateTable {
    let count = lambdas.iter().map(Vec::len).min().unwrap_or(0);
    let levels = lambdas.len();
    let rates = (0..count)
        .map(|i| {
            if levels < 3 {
                None
            } else {
                eigen_rate(
                    lambdas[levels - 3][i],
                    lambdas[levels - 2][i],
                    lambdas[levels - 1][i],
                )
            }
        })
        .collect();
    EigenRateTable { h, lambdas, rates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sin_product, FnField};
    use crate::grid::{build_uniform_grid, classify, Domain};
    use std::f64::consts::PI;

    #[test]
    fn eigen_rates() {
        assert!((eigen_rate(4.0, 1.0, 0.25).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(eigen_rate(1.0, 1.0, 1.0), None);
        assert_eq!(eigen_rate(1.0, 2.0, 1.5), None);
        let t = eigen_rate_table(vec![1.0, 0.5, 0.25], vec![vec![4.0, 5.0], vec![1.0, 5.0], vec![0.25, 5.0]]);
        assert!((t.rates[0].unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(t.rates[1], None);
        // reference unit-square sequence for the lowest eigenvalue, h = 2^-5..2^-7
        let r = eigen_rate(2.825272, 2.822959, 2.822382).unwrap();
        assert!((r - 2.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn norm_rates() {
        assert!((observed_rate(0.5, 4.0, 0.25, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(observed_rate(0.5, 0.0, 0.25, 1.0), None);
        let t = RateTable::from_errors(vec![(1.0, 1.0), (0.5, 0.25), (0.25, 0.0625)]);
        assert!((t.fitted().unwrap() - 2.0).abs() < 1e-14);
        assert!(t.is_monotone());
    }

    #[test]
    fn zero_coefficients_give_field_norms() {
        let g = build_uniform_grid(Domain::UnitSquare, 16).unwrap();
        let t = classify(&g).unwrap();
        let s = RrmSpace::interior(&g, &t).unwrap();
        let u0 = sin_product();
        let r = boundary_layer_error(&u0, &vec![0.0; s.dim()], &s, 0.5).unwrap();
        // |u0|_1^2 = pi^2/2 and |u0|_2^2 = pi^4
        assert!((r.h1_error.powi(2) - PI * PI / 2.0).abs() < 1e-6);
        assert!((r.h2_error.powi(2) - PI.powi(4)).abs() < 1e-5);
        assert!((r.relative_energy_error - 1.0).abs() < 1e-14);
        let direct = 0.25 * r.h2_error.powi(2) + r.h1_error.powi(2);
        assert!((r.energy_error.powi(2) - direct).abs() < 1e-13 * direct);

        let zero = FnField(|_: f64, _: f64, _: usize, _: usize| 0.0);
        let z = discrete_solution_error(&zero, &vec![0.0; s.dim()], &s, 1.0).unwrap();
        assert_eq!((z.h1_error, z.h2_error, z.energy_error), (0.0, 0.0, 0.0));
    }
}
