//! Galerkin matrices and load vectors in the patch basis.
//!
//! Assembly runs over active cells: each cell gathers the (at most nine)
//! basis functions covering it, integrates the local block by tensor Gauss
//! quadrature and scatters it. Local blocks are computed in parallel and
//! scattered sequentially in row-major cell order, so results do not depend
//! on the number of worker threads.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{PointEval, RrmSpace};
use crate::error::{Result, RrmError};
use crate::fields::{CoefficientField, ExactField};
use crate::grid::{CellId, Rect};
use crate::quadrature::{gauss_rule, QuadRule, ORDER_GRAD, ORDER_MASS, ORDER_RATIONAL};

/// Square matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Build from triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>, symmetric: bool) -> Self {
        // stable sort keeps the summation order of duplicates fixed
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range for n = {n}");
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect(), true)
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let n = m.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        let mut s = Self::from_triplets(n, t, false);
        s.symmetric = s.asymmetry() == 0.0;
        s
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `(column, value)` pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `max |a_ij|`
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |a_ij - a_ji|`
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `a * self + b * other`
    pub fn lin_comb(&self, a: f64, other: &SparseMatrix, b: f64) -> SparseMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let t: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, b * v)))
            .collect();
        SparseMatrix::from_triplets(self.n, t, self.symmetric && other.symmetric)
    }

    pub fn scaled(&self, a: f64) -> SparseMatrix {
        let mut s = self.clone();
        s.values.iter_mut().for_each(|v| *v *= a);
        s
    }

    /// `D M D` with `D = diag(s)`; `s_i s_j` is formed first so symmetry is
    /// preserved exactly.
    pub fn congruence_diag(&self, s: &[f64]) -> SparseMatrix {
        let t = self.triplets().map(|(i, j, v)| (i, j, v * (s[i] * s[j]))).collect();
        SparseMatrix::from_triplets(self.n, t, self.symmetric)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Half-bandwidth `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.triplets().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }

    /// Coordinate text: a `n n nnz` header and one zero-based `row col value`
    /// line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.n, self.n, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
        s
    }

    pub fn from_coordinate_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| RrmError::Parse("empty matrix file".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| RrmError::Parse(format!("bad header '{header}'"))))
            .collect::<Result<_>>()?;
        if h.len() != 3 || h[0] != h[1] {
            return Err(RrmError::Parse("header must be 'n n nnz'".into()));
        }
        let mut t = Vec::with_capacity(h[2]);
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(RrmError::Parse(format!("bad entry '{line}'")));
            }
            let bad = || RrmError::Parse(format!("bad entry '{line}'"));
            let i: usize = parts[0].parse().map_err(|_| bad())?;
            let j: usize = parts[1].parse().map_err(|_| bad())?;
            let v: f64 = parts[2].parse().map_err(|_| bad())?;
            if i >= h[0] || j >= h[0] {
                return Err(bad());
            }
            t.push((i, j, v));
        }
        if t.len() != h[2] {
            return Err(RrmError::Parse(format!("expected {} entries, found {}", h[2], t.len())));
        }
        let mut m = SparseMatrix::from_triplets(h[0], t, false);
        m.symmetric = m.asymmetry() == 0.0;
        Ok(m)
    }
}

/// Weight functions appearing in the model bilinear forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    One,
    /// `β`, required positive
    Beta(CoefficientField),
    /// `1/(β-1)`, requires `β > 1`
    InvContrast(CoefficientField),
    /// `β/(β-1)`, requires `β > 1`
    ContrastRatio(CoefficientField),
}

impl Weight {
    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match *self {
            Weight::One => Ok(1.0),
            Weight::Beta(b) => {
                let v = b.value(x, y);
                if v > 0.0 {
                    Ok(v)
                } else {
                    Err(RrmError::Coefficient {
                        x,
                        y,
                        reason: format!("beta = {v} is not positive"),
                    })
                }
            }
            Weight::InvContrast(b) | Weight::ContrastRatio(b) => {
                let v = b.value(x, y);
                if v <= 1.0 {
                    return Err(RrmError::Coefficient {
                        x,
                        y,
                        reason: format!("beta = {v} must exceed 1"),
                    });
                }
                Ok(match self {
                    Weight::InvContrast(_) => 1.0 / (v - 1.0),
                    _ => v / (v - 1.0),
                })
            }
        }
    }

    fn is_rational(&self) -> bool {
        matches!(self, Weight::InvContrast(_) | Weight::ContrastRatio(_))
    }
}

/// Evaluations of the covering basis pieces at the quadrature points of one
/// cell; `evals[q][a]` is piece `a` at point `q`.
struct CellSample {
    basis: Vec<usize>,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    evals: Vec<Vec<PointEval>>,
}

fn sample_cell(space: &RrmSpace, cell: CellId, rule: &QuadRule) -> CellSample {
    let rect: Rect = space.grid().rect(cell);
    let cover = space.covering(cell);
    let basis: Vec<usize> = cover.iter().map(|&(b, _)| b).collect();
    let mut points = Vec::with_capacity(rule.len());
    let mut weights = Vec::with_capacity(rule.len());
    let mut evals = Vec::with_capacity(rule.len());
    for (pt, w) in rule.points.iter().zip(&rule.weights) {
        points.push(rect.to_physical(pt[0], pt[1]));
        weights.push(w * rect.area());
        evals.push(
            cover
                .iter()
                .map(|&(b, p)| space.piece(b, p).poly.eval_local(pt[0], pt[1], rect.hx, rect.hy))
                .collect(),
        );
    }
    CellSample {
        basis,
        points,
        weights,
        evals,
    }
}

/// Assemble `Σ_cells ∫ w(x) pair(φ_i, φ_j)`, with `pair` symmetric.
fn assemble_form<P>(space: &RrmSpace, weight: Weight, order: usize, pair: P) -> Result<SparseMatrix>
where
    P: Fn(&PointEval, &PointEval) -> f64 + Sync,
{
    let rule = gauss_rule(order)?;
    let cells: Vec<CellId> = space.grid().cells().collect();
    let blocks: Vec<(Vec<usize>, Vec<f64>)> = cells
        .par_iter()
        .map(|&cell| {
            let s = sample_cell(space, cell, &rule);
            let m = s.basis.len();
            let mut block = vec![0.0; m * m];
            for q in 0..s.points.len() {
                let [x, y] = s.points[q];
                let w = s.weights[q] * weight.eval(x, y)?;
                let e = &s.evals[q];
                for a in 0..m {
                    for b in a..m {
                        block[a * m + b] += w * pair(&e[a], &e[b]);
                    }
                }
            }
            for a in 0..m {
                for b in 0..a {
                    block[a * m + b] = block[b * m + a];
                }
            }
            Ok((s.basis, block))
        })
        .collect::<Result<_>>()?;
    let mut triplets = Vec::with_capacity(blocks.iter().map(|(b, _)| b.len() * b.len()).sum());
    for (basis, block) in blocks {
        let m = basis.len();
        for a in 0..m {
            for b in 0..m {
                triplets.push((basis[a], basis[b], block[a * m + b]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(space.dim(), triplets, true))
}

fn check_nonempty(space: &RrmSpace) -> Result<()> {
    if space.dim() == 0 {
        Err(RrmError::Config("the discrete space has no basis functions".into()))
    } else {
        Ok(())
    }
}

/// `Σ_K ∫_K ∇²φ_i : ∇²φ_j`
pub fn assemble_hessian_stiffness(space: &RrmSpace) -> Result<SparseMatrix> {
    check_nonempty(space)?;
    assemble_form(space, Weight::One, ORDER_GRAD, |a, b| {
        a.hess[0] * b.hess[0] + 2.0 * a.hess[1] * b.hess[1] + a.hess[2] * b.hess[2]
    })
}

/// `Σ_K ∫_K β Δφ_i Δφ_j`
pub fn assemble_laplace_bilap(space: &RrmSpace, beta: &CoefficientField) -> Result<SparseMatrix> {
    assemble_laplace_weighted(space, Weight::Beta(*beta))
}

/// `Σ_K ∫_K w Δφ_i Δφ_j` for any model weight.
pub fn assemble_laplace_weighted(space: &RrmSpace, weight: Weight) -> Result<SparseMatrix> {
    check_nonempty(space)?;
    let order = if weight.is_rational() { ORDER_RATIONAL } else { ORDER_GRAD };
    assemble_form(space, weight, order, |a, b| a.laplacian() * b.laplacian())
}

/// `Σ_K ∫_K ∇φ_i · ∇φ_j`
pub fn assemble_grad_stiffness(space: &RrmSpace) -> Result<SparseMatrix> {
    assemble_grad_stiffness_with_order(space, ORDER_GRAD)
}

pub fn assemble_grad_stiffness_with_order(space: &RrmSpace, order: usize) -> Result<SparseMatrix> {
    check_nonempty(space)?;
    assemble_form(space, Weight::One, order, |a, b| {
        a.grad[0] * b.grad[0] + a.grad[1] * b.grad[1]
    })
}

/// `Σ_K ∫_K w φ_i φ_j`, with the default rule for the weight.
pub fn assemble_mass_weighted(space: &RrmSpace, weight: Weight) -> Result<SparseMatrix> {
    let order = if weight.is_rational() { ORDER_RATIONAL } else { ORDER_MASS };
    assemble_mass_weighted_with_order(space, weight, order)
}

pub fn assemble_mass_weighted_with_order(
    space: &RrmSpace,
    weight: Weight,
    order: usize,
) -> Result<SparseMatrix> {
    check_nonempty(space)?;
    assemble_form(space, weight, order, |a, b| a.value * b.value)
}

/// `Σ_K ∫_K (Δφ_i φ_j + φ_i Δφ_j)/(β-1) - ∇φ_i · ∇φ_j`
pub fn assemble_mixed_b(space: &RrmSpace, beta: &CoefficientField) -> Result<SparseMatrix> {
    check_nonempty(space)?;
    let inv = Weight::InvContrast(*beta);
    let cross = assemble_form(space, inv, ORDER_RATIONAL, |a, b| {
        a.laplacian() * b.value + a.value * b.laplacian()
    })?;
    let grad = assemble_grad_stiffness(space)?;
    Ok(cross.lin_comb(1.0, &grad, -1.0))
}

/// The three matrices of the quadratic transmission eigenproblem
/// `(A + τB + τ²C)x = 0`.
#[derive(Clone, Debug)]
pub struct TransmissionMatrices {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub c: SparseMatrix,
}

pub fn assemble_transmission(space: &RrmSpace, beta: &CoefficientField) -> Result<TransmissionMatrices> {
    Ok(TransmissionMatrices {
        a: assemble_laplace_weighted(space, Weight::InvContrast(*beta))?,
        b: assemble_mixed_b(space, beta)?,
        c: assemble_mass_weighted(space, Weight::ContrastRatio(*beta))?,
    })
}

/// `(f, φ_K)` for every basis function.
pub fn assemble_load<F>(space: &RrmSpace, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    check_nonempty(space)?;
    let rule = gauss_rule(ORDER_RATIONAL)?;
    let cells: Vec<CellId> = space.grid().cells().collect();
    let parts: Vec<(Vec<usize>, Vec<f64>)> = cells
        .par_iter()
        .map(|&cell| {
            let s = sample_cell(space, cell, &rule);
            let mut local = vec![0.0; s.basis.len()];
            for q in 0..s.points.len() {
                let [x, y] = s.points[q];
                let fw = s.weights[q] * f(x, y);
                for (l, e) in local.iter_mut().zip(&s.evals[q]) {
                    *l += fw * e.value;
                }
            }
            (s.basis, local)
        })
        .collect();
    let mut rhs = vec![0.0; space.dim()];
    for (basis, local) in parts {
        for (b, v) in basis.into_iter().zip(local) {
            rhs[b] += v;
        }
    }
    Ok(rhs)
}

/// Right-hand side `f = ε²Δ(βΔu) - Δu` expanded by the product rule.
pub fn perturbation_f<U: ExactField>(
    u: U,
    beta: CoefficientField,
    eps: f64,
) -> impl Fn(f64, f64) -> f64 + Sync {
    let e2 = eps * eps;
    move |x, y| {
        let lap = u.laplacian(x, y);
        let gl = u.grad_laplacian(x, y);
        let gb = beta.gradient(x, y);
        let fourth = beta.laplacian(x, y) * lap
            + 2.0 * (gb[0] * gl[0] + gb[1] * gl[1])
            + beta.value(x, y) * u.bilaplacian(x, y);
        e2 * fourth - lap
    }
}
