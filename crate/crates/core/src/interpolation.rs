//! The five-cell averaging functional `λ_K` and the quasi-interpolants built
//! from it: `Π_h0` over interior centers and `Π̃_h` over the extended index
//! set, plus broken seminorm errors of a coefficient vector.
//!
//! `λ_K` combines cell means over `K` and its left, right, lower and upper
//! neighbors so that it agrees with `⨍_K v - (L²v_xx + H²v_yy)/6` on
//! quadratics.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::RrmSpace;
use crate::error::{Result, RrmError};
use crate::fields::ExactField;
use crate::grid::{CellId, ExtendedGrid, Grid, PatchGeometry, Rect, Topology};
use crate::quadrature::{cell_mean, gauss_rule, QuadRule, ORDER_RATIONAL};

/// Neighbor offsets of `S_1..S_5`: left, right, down, up, the cell itself.
pub const STENCIL: [(i32, i32); 5] = [(-1, 0), (1, 0), (0, -1), (0, 1), (0, 0)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaWeights {
    pub w: [f64; 5],
}

pub fn lambda_weights(p: &PatchGeometry) -> LambdaWeights {
    let [lm, l, lp] = p.lengths;
    let [hm, h, hp] = p.heights;
    let (ls, hs) = (lm + l + lp, hm + h + hp);
    let w1 = -l * l / ((lm + l) * ls);
    let w2 = -l * l / ((l + lp) * ls);
    let w3 = -h * h / ((hm + h) * hs);
    let w4 = -h * h / ((h + hp) * hs);
    LambdaWeights {
        w: [w1, w2, w3, w4, 1.0 - (w1 + w2 + w3 + w4)],
    }
}

/// `λ_K` from the five cell means in stencil order.
pub fn lambda(weights: &LambdaWeights, means: &[f64; 5]) -> f64 {
    weights.w.iter().zip(means).map(|(w, m)| w * m).sum()
}

/// `λ_K(v)` with means supplied per cell; a missing mean is an error.
pub fn lambda_at<M>(k: CellId, patch: &PatchGeometry, mean: M) -> Result<f64>
where
    M: Fn(CellId) -> Option<f64>,
{
    let mut means = [0.0; 5];
    for (m, &(dx, dy)) in means.iter_mut().zip(STENCIL.iter()) {
        let c = k.offset(dx, dy);
        *m = mean(c).ok_or_else(|| RrmError::PatchUnavailable {
            cell: k,
            reason: format!("no cell mean available on {c:?}"),
        })?;
    }
    Ok(lambda(&lambda_weights(patch), &means))
}

/// Coefficients `λ_K(v)` keyed by patch center, in basis order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolantCoefficients {
    pub centers: Vec<CellId>,
    pub values: Vec<f64>,
}

fn mean_on(v: &dyn ExactField, rect: &Rect, rule: &QuadRule) -> f64 {
    cell_mean(rect, |x, y| v.value(x, y), rule)
}

/// `Π_h0 v`: coefficients over the interior centers.
pub fn interpolate_interior(
    v: &dyn ExactField,
    grid: &Grid,
    topo: &Topology,
) -> Result<InterpolantCoefficients> {
    let rule = gauss_rule(ORDER_RATIONAL)?;
    let centers = crate::basis::basis_index(topo);
    let values = centers
        .par_iter()
        .map(|&k| {
            let patch = crate::grid::patch3x3(grid, topo, k)?;
            lambda_at(k, &patch, |c| grid.is_active(c).then(|| mean_on(v, &grid.rect(c), &rule)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(InterpolantCoefficients { centers, values })
}

/// `Π̃_h v`: coefficients over every center of the extended grid; `v` is
/// evaluated on virtual cells as well.
pub fn interpolate_extended(v: &dyn ExactField, egrid: &ExtendedGrid) -> Result<InterpolantCoefficients> {
    let rule = gauss_rule(ORDER_RATIONAL)?;
    let centers = egrid.centers().to_vec();
    let values = centers
        .par_iter()
        .map(|&k| {
            let patch = egrid.patch(k)?;
            lambda_at(k, &patch, |c| {
                (egrid.kind(c) != crate::grid::CellKind::Outside).then(|| mean_on(v, &egrid.rect(c), &rule))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(InterpolantCoefficients { centers, values })
}

/// Squared broken seminorms `|v - Σ c_i φ_i|²_{k,h}` for `k = 0, 1, 2`,
/// summed over active cells with the given rule.
pub fn broken_seminorms_sq(
    v: &dyn ExactField,
    space: &RrmSpace,
    coeffs: &[f64],
    rule: &QuadRule,
) -> [f64; 3] {
    assert_eq!(coeffs.len(), space.dim(), "coefficient vector does not match the space");
    let cells: Vec<CellId> = space.grid().cells().collect();
    let parts: Vec<[f64; 3]> = cells
        .par_iter()
        .map(|&cell| {
            let rect = space.grid().rect(cell);
            let q = space.local_poly(coeffs, cell);
            let mut acc = [0.0; 3];
            for (pt, w) in rule.points.iter().zip(&rule.weights) {
                let [x, y] = rect.to_physical(pt[0], pt[1]);
                let e = q.eval_local(pt[0], pt[1], rect.hx, rect.hy);
                let g = v.gradient(x, y);
                let h = v.hessian(x, y);
                let d0 = v.value(x, y) - e.value;
                let d1 = [g[0] - e.grad[0], g[1] - e.grad[1]];
                let d2 = [h[0] - e.hess[0], h[1] - e.hess[1], h[2] - e.hess[2]];
                let wa = w * rect.area();
                acc[0] += wa * d0 * d0;
                acc[1] += wa * (d1[0] * d1[0] + d1[1] * d1[1]);
                acc[2] += wa * (d2[0] * d2[0] + 2.0 * d2[1] * d2[1] + d2[2] * d2[2]);
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for p in parts {
        for k in 0..3 {
            total[k] += p[k];
        }
    }
    total
}

/// `|v - Σ c_i φ_i|_{k,h}` with the default error-norm rule.
pub fn broken_seminorm_error(v: &dyn ExactField, space: &RrmSpace, coeffs: &[f64], k: usize) -> Result<f64> {
    if k > 2 {
        return Err(RrmError::Config(format!("seminorm order must be 0, 1 or 2, got {k}")));
    }
    let rule = gauss_rule(ORDER_RATIONAL)?;
    Ok(broken_seminorms_sq(v, space, coeffs, &rule)[k].sqrt())
}

/// Largest pointwise deviation of value, gradient and Hessian on one cell,
/// sampled at the rule's points.
pub fn cell_deviation(v: &dyn ExactField, space: &RrmSpace, coeffs: &[f64], cell: CellId, rule: &QuadRule) -> f64 {
    let rect = space.grid().rect(cell);
    let q = space.local_poly(coeffs, cell);
    let mut dev: f64 = 0.0;
    for pt in &rule.points {
        let [x, y] = rect.to_physical(pt[0], pt[1]);
        let e = q.eval_local(pt[0], pt[1], rect.hx, rect.hy);
        dev = dev.max((v.value(x, y) - e.value).abs());
        let g = v.gradient(x, y);
        let h = v.hessian(x, y);
        for i in 0..2 {
            dev = dev.max((g[i] - e.grad[i]).abs());
        }
        for i in 0..3 {
            dev = dev.max((h[i] - e.hess[i]).abs());
        }
    }
    dev
}

/// One row of an interpolation rate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolationRow {
    pub h: f64,
    pub errors: [f64; 3],
    /// Adjacent-level rates against the previous (coarser) row.
    pub rates: [Option<f64>; 3],
}

/// Errors of `Π_h0 v` on a sequence of grids, coarse to fine.
pub fn interpolation_rates(v: &dyn ExactField, grids: &[Grid]) -> Result<Vec<InterpolationRow>> {
    let rule = gauss_rule(ORDER_RATIONAL)?;
    let mut rows: Vec<InterpolationRow> = Vec::with_capacity(grids.len());
    for grid in grids {
        let topo = crate::grid::classify(grid)?;
        let space = RrmSpace::interior(grid, &topo)?;
        if space.dim() == 0 {
            return Err(RrmError::Config("grid has no interior cells".into()));
        }
        let c = interpolate_interior(v, grid, &topo)?;
        let sq = broken_seminorms_sq(v, &space, &c.values, &rule);
        let errors = [sq[0].sqrt(), sq[1].sqrt(), sq[2].sqrt()];
        let h = grid.mesh_size();
        let rates = match rows.last() {
            Some(prev) => {
                let mut r = [None; 3];
                for k in 0..3 {
                    r[k] = crate::analysis::observed_rate(prev.h, prev.errors[k], h, errors[k]);
                }
                r
            }
            None => [None; 3],
        };
        rows.push(InterpolationRow { h, errors, rates });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sin_squared_product, FnField, Polynomial};
    use crate::grid::{build_graded_grid, build_uniform_grid, classify, extend_grid, Domain};

    #[test]
    fn weights() {
        let w = lambda_weights(&PatchGeometry::uniform(0.3)).w;
        for wi in &w[..4] {
            assert!((wi + 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((w[4] - 5.0 / 3.0).abs() < 1e-15);
        let p = PatchGeometry {
            lengths: [1.0, 2.0, 4.0],
            heights: [1.0, 1.5, 0.5],
        };
        let w = lambda_weights(&p).w;
        assert!((w[0] + 4.0 / 21.0).abs() < 1e-15);
        assert!((w[1] + 4.0 / 42.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_on_model_fields() {
        let l = 0.2;
        let p = PatchGeometry::uniform(l);
        // K centered at the origin
        let rect = |c: CellId| Rect {
            x0: (c.ix as f64 - 0.5) * l,
            y0: (c.iy as f64 - 0.5) * l,
            hx: l,
            hy: l,
        };
        let rule = gauss_rule(4).unwrap();
        let k = CellId::new(0, 0);
        let at = |v: &dyn ExactField| lambda_at(k, &p, |c| Some(mean_on(v, &rect(c), &rule))).unwrap();
        assert!((at(&Polynomial::monomial(0, 0)) - 1.0).abs() < 1e-14);
        assert!((at(&Polynomial::monomial(2, 0)) + l * l / 4.0).abs() < 1e-14);
        // Q1 fields are reproduced by the plain mean
        let xy = Polynomial::new(vec![(1, 1, 1.0), (1, 0, 0.3), (0, 0, 2.0)]);
        assert!((at(&xy) - mean_on(&xy, &rect(k), &rule)).abs() < 1e-14);
        // linearity
        let u = Polynomial::new(vec![(2, 1, 1.0), (0, 3, -2.0)]);
        let w = Polynomial::new(vec![(1, 2, 0.5)]);
        let comb = FnField(|x, y, dx, dy| 3.0 * u.partial(x, y, dx, dy) + w.partial(x, y, dx, dy));
        assert!((at(&comb) - (3.0 * at(&u) + at(&w))).abs() < 1e-12);
        assert!(lambda_at(k, &p, |c| (c != CellId::new(1, 0)).then_some(0.0)).is_err());
    }

    #[test]
    fn extended_reproduces_quadratics() {
        let rule = gauss_rule(3).unwrap();
        for grid in [
            build_uniform_grid(Domain::UnitSquare, 8).unwrap(),
            build_graded_grid(Domain::LShape, 4, 0.4).unwrap(),
        ] {
            let topo = classify(&grid).unwrap();
            let egrid = extend_grid(&grid, &topo);
            let space = RrmSpace::extended(&egrid).unwrap();
            for p in Polynomial::quadratic_monomials() {
                let c = interpolate_extended(&p, &egrid).unwrap();
                for cell in grid.cells() {
                    assert!(cell_deviation(&p, &space, &c.values, cell, &rule) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn interior_and_extended_agree_away_from_boundary() {
        let grid = build_uniform_grid(Domain::UnitSquare, 8).unwrap();
        let topo = classify(&grid).unwrap();
        let egrid = extend_grid(&grid, &topo);
        let v = sin_squared_product();
        let ci = interpolate_interior(&v, &grid, &topo).unwrap();
        let ce = interpolate_extended(&v, &egrid).unwrap();
        let si = RrmSpace::interior(&grid, &topo).unwrap();
        let se = RrmSpace::extended(&egrid).unwrap();
        let cell = CellId::new(4, 3);
        let a = si.local_poly(&ci.values, cell);
        let b = se.local_poly(&ce.values, cell);
        for (x, y) in a.c.iter().zip(b.c) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn interior_reproduces_where_fully_covered() {
        let rule = gauss_rule(3).unwrap();
        let grid = build_uniform_grid(Domain::UnitSquare, 8).unwrap();
        let topo = classify(&grid).unwrap();
        let space = RrmSpace::interior(&grid, &topo).unwrap();
        let p = Polynomial::new(vec![(2, 0, 1.0), (1, 1, -2.0), (0, 1, 0.5)]);
        let c = interpolate_interior(&p, &grid, &topo).unwrap();
        let mut checked = 0;
        for cell in grid.cells() {
            if space.covering(cell).len() == 9 {
                assert!(cell_deviation(&p, &space, &c.values, cell, &rule) < 1e-11);
                checked += 1;
            }
        }
        assert_eq!(checked, 16);
    }

    #[test]
    fn interpolation_is_not_a_projection() {
        let grid = build_uniform_grid(Domain::UnitSquare, 8).unwrap();
        let topo = classify(&grid).unwrap();
        let space = RrmSpace::interior(&grid, &topo).unwrap();
        let i = space.index_of(CellId::new(3, 3)).unwrap();
        let phi = &space.basis()[i];
        let field = FnField(|x: f64, y: f64, dx: usize, dy: usize| {
            let e = phi.eval(x, y);
            match (dx, dy) {
                (0, 0) => e.value,
                (1, 0) => e.grad[0],
                (0, 1) => e.grad[1],
                (2, 0) => e.hess[0],
                (1, 1) => e.hess[1],
                (0, 2) => e.hess[2],
                _ => 0.0,
            }
        });
        let c = interpolate_interior(&field, &grid, &topo).unwrap();
        let mut unit = vec![0.0; space.dim()];
        unit[i] = 1.0;
        let diff: Vec<f64> = c.values.iter().zip(&unit).map(|(a, b)| a - b).collect();
        let zero = FnField(|_: f64, _: f64, _: usize, _: usize| 0.0);
        assert!(broken_seminorm_error(&zero, &space, &diff, 1).unwrap() > 1e-3);
    }
}
