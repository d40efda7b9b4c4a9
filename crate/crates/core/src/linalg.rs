//! Direct solvers for the assembled systems and the quadratic eigenvalue
//! problem `(A + τB + τ²C)x = 0` via its companion linearization.
//!
//! Linear systems use banded factorizations (row-major basis ordering keeps
//! the bandwidth near two grid rows). The eigenproblem is solved either by a
//! dense reduction of the companion pencil or by shift-invert Arnoldi on the
//! same pencil, where each operator application costs one banded solve with
//! `Q(σ) = A + σB + σ²C`.

use nalgebra::{Complex, DMatrix};

use crate::assembly::SparseMatrix;
use crate::error::{Result, RrmError};

/// Required relative residual of [`solve_spd`].
pub const SPD_RESIDUAL_TOL: f64 = 1e-10;

/// Relative imaginary part below which an eigenvalue counts as real.
pub const IMAG_TOL: f64 = 1e-8;

/// Residual bound certified for returned eigenpairs.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Largest `N` handled by the dense route when the method is automatic.
pub const DENSE_LIMIT: usize = 400;

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Cholesky factor `L` of a symmetric banded matrix, row `i` holding columns
/// `i-bw..=i`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(m: &SparseMatrix) -> Result<Self> {
        let n = m.dim();
        let bw = m.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        // entry (i, j), j <= i, lives at i*w + (j + bw - i)
        for (i, j, v) in m.triplets() {
            if j <= i {
                l[i * w + j + bw - i] = v;
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + j + bw - i];
                for k in k0..j {
                    s -= l[i * w + k + bw - i] * l[j * w + k + bw - j];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(RrmError::Solver(format!(
                            "matrix is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + j + bw - i] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + k + bw - i] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + i + bw - k] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
        x
    }

    /// Smallest pivot `min L_ii²`, a cheap positivity margin.
    pub fn min_pivot(&self) -> f64 {
        let w = self.bw + 1;
        (0..self.n).map(|i| self.l[i * w + self.bw].powi(2)).fold(f64::INFINITY, f64::min)
    }
}

/// Solve `Mx = rhs` for symmetric positive definite `M` by banded Cholesky
/// with iterative refinement; fails unless the relative residual is at most
/// [`SPD_RESIDUAL_TOL`].
pub fn solve_spd(m: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.dim() {
        return Err(RrmError::Solver(format!(
            "right-hand side has length {}, matrix has dimension {}",
            rhs.len(),
            m.dim()
        )));
    }
    if m.asymmetry() != 0.0 {
        return Err(RrmError::Solver("matrix is not symmetric".into()));
    }
    let chol = BandedCholesky::factor(m)?;
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    let mut x = chol.solve(rhs);
    let mut rel = f64::INFINITY;
    for _ in 0..4 {
        let r: Vec<f64> = rhs.iter().zip(m.matvec(&x)).map(|(b, ax)| b - ax).collect();
        rel = norm2(&r) / bnorm;
        if rel <= 1e-14 {
            break;
        }
        let dx = chol.solve(&r);
        x.iter_mut().zip(dx).for_each(|(a, d)| *a += d);
    }
    let r: Vec<f64> = rhs.iter().zip(m.matvec(&x)).map(|(b, ax)| b - ax).collect();
    rel = rel.min(norm2(&r) / bnorm);
    if rel > SPD_RESIDUAL_TOL {
        return Err(RrmError::Solver(format!("relative residual {rel:e} after refinement")));
    }
    Ok(x)
}

/// LU factorization with partial pivoting of a banded matrix. Row `i`
/// stores columns `i-kl..=i+kl+ku` to make room for pivoting fill.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    w: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn factor(m: &SparseMatrix) -> Result<Self> {
        let n = m.dim();
        let kl = m.bandwidth();
        let ku = kl;
        let w = 2 * kl + ku + 1;
        let mut a = vec![0.0; n * w];
        let idx = |i: usize, j: usize| i * w + j + kl - i;
        for (i, j, v) in m.triplets() {
            a[idx(i, j)] = v;
        }
        let scale = m.max_abs();
        let mut perm = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[idx(k, k)].abs();
            for i in k + 1..=last {
                let v = a[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            perm[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    a.swap(idx(k, j), idx(p, j));
                }
            }
            let piv = a[idx(k, k)];
            if piv == 0.0 || !piv.is_finite() {
                return Err(RrmError::Solver(format!("singular matrix at column {k}")));
            }
            if piv.abs() < 1e-300 * scale.max(1.0) {
                return Err(RrmError::Solver(format!("pivot underflow at column {k}")));
            }
            for i in k + 1..=last {
                let l = a[idx(i, k)] / piv;
                if l == 0.0 {
                    continue;
                }
                a[idx(i, k)] = l;
                for j in k + 1..=jmax {
                    a[idx(i, j)] -= l * a[idx(k, j)];
                }
            }
        }
        Ok(BandedLu { n, kl, w, a, perm })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.w + j + self.kl - i]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl) = (self.n, self.kl);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.perm[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    x[i] -= self.at(i, k) * xk;
                }
            }
        }
        let reach = self.w - kl - 1;
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= self.at(i, j) * x[j];
            }
            x[i] = s / self.at(i, i);
        }
        x
    }
}

/// `A + τB + τ²C`
pub fn quadratic_matrix(a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix, tau: f64) -> SparseMatrix {
    a.lin_comb(1.0, b, tau).lin_comb(1.0, c, tau * tau)
}

/// Relative residual `‖(A+τB+τ²C)x‖ / ((‖A‖+|τ|‖B‖+τ²‖C‖)‖x‖)` with
/// Frobenius matrix norms.
pub fn quadratic_residual(a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix, tau: f64, x: &[f64]) -> f64 {
    let q = quadratic_matrix(a, b, c, tau);
    let r = q.matvec(x);
    let scale = (a.norm_fro() + tau.abs() * b.norm_fro() + tau * tau * c.norm_fro()) * norm2(x);
    norm2(&r) / scale
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense up to [`DENSE_LIMIT`], shift-invert Arnoldi above.
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub method: EigenMethod,
    /// Shift for the Arnoldi route; the admissible eigenvalues are searched
    /// in the disc around it that reaches back to zero.
    pub shift: Option<f64>,
    /// Initial Krylov dimension.
    pub krylov_dim: usize,
    /// Hard cap on the Krylov dimension.
    pub max_krylov_dim: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            method: EigenMethod::Auto,
            shift: None,
            krylov_dim: 120,
            max_krylov_dim: 1200,
        }
    }
}

/// Admissible eigenpairs of the quadratic problem, sorted by `λ`.
#[derive(Clone, Debug, Default)]
pub struct EigenResult {
    /// `τ` values, real and positive, ascending.
    pub taus: Vec<f64>,
    /// `λ = √τ`
    pub lambdas: Vec<f64>,
    /// Eigenvectors `x` (unit 2-norm) for each returned `τ`.
    pub vectors: Vec<Vec<f64>>,
    /// Certified relative residuals, see [`quadratic_residual`].
    pub residuals: Vec<f64>,
    /// Computed eigenvalues that failed the realness or positivity filter.
    pub rejected: Vec<Complex<f64>>,
    pub method: Option<EigenMethod>,
}

/// Realness and positivity filter.
pub fn is_admissible(tau: Complex<f64>) -> bool {
    tau.im.abs() <= IMAG_TOL * tau.re.abs().max(1.0) && tau.re > 0.0
}

fn check_inputs(a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix) -> Result<usize> {
    let n = a.dim();
    if b.dim() != n || c.dim() != n {
        return Err(RrmError::Pencil("A, B and C must share one dimension".into()));
    }
    if n == 0 {
        return Err(RrmError::Pencil("empty pencil".into()));
    }
    for (name, m) in [("A", a), ("B", b), ("C", c)] {
        if m.asymmetry() != 0.0 {
            return Err(RrmError::Pencil(format!("{name} is not symmetric")));
        }
    }
    BandedCholesky::factor(c)
        .map_err(|e| RrmError::Pencil(format!("C is not positive definite: {e}")))?;
    Ok(n)
}

/// The `k` smallest admissible `λ = √τ` of `(A + τB + τ²C)x = 0`.
pub fn solve_quadratic_eigen(
    a: &SparseMatrix,
    b: &SparseMatrix,
    c: &SparseMatrix,
    k: usize,
) -> Result<EigenResult> {
    solve_quadratic_eigen_with(a, b, c, k, &EigenOptions::default())
}

pub fn solve_quadratic_eigen_with(
    a: &SparseMatrix,
    b: &SparseMatrix,
    c: &SparseMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let n = check_inputs(a, b, c)?;
    let method = match opts.method {
        EigenMethod::Auto if n <= DENSE_LIMIT => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::ShiftInvert,
        m => m,
    };
    let all = match method {
        EigenMethod::Dense => dense_companion_eigenvalues(a, b, c)?,
        _ => shift_invert_eigenvalues(a, b, c, k, opts)?,
    };
    let mut result = finish(a, b, c, k, all)?;
    result.method = Some(method);
    Ok(result)
}

/// Every eigenvalue of the companion pencil, by reduction to the standard
/// matrix `[[-C⁻¹B, -C⁻¹A], [I, 0]]`.
pub fn dense_companion_eigenvalues(
    a: &SparseMatrix,
    b: &SparseMatrix,
    c: &SparseMatrix,
) -> Result<Vec<Complex<f64>>> {
    let n = a.dim();
    let chol = c
        .to_dense()
        .cholesky()
        .ok_or_else(|| RrmError::Pencil("C is singular or indefinite".into()))?;
    let cb = chol.solve(&b.to_dense());
    let ca = chol.solve(&a.to_dense());
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -cb[(i, j)];
            m[(i, n + j)] = -ca[(i, j)];
        }
        m[(n + i, i)] = 1.0;
    }
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

/// Applies `(P - σM)⁻¹M` for the companion pencil `P = [[-B,-A],[I,0]]`,
/// `M = diag(C, I)`.
struct ShiftInvertOp<'a> {
    b: &'a SparseMatrix,
    c: &'a SparseMatrix,
    sigma: f64,
    lu: BandedLu,
}

impl ShiftInvertOp<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.c.dim();
        let (x1, x2) = x.split_at(n);
        let cx1 = self.c.matvec(x1);
        let bx2 = self.b.matvec(x2);
        let cx2 = self.c.matvec(x2);
        let t: Vec<f64> = (0..n).map(|i| cx1[i] + bx2[i] + self.sigma * cx2[i]).collect();
        let y2: Vec<f64> = self.lu.solve(&t).into_iter().map(|v| -v).collect();
        let mut y = Vec::with_capacity(2 * n);
        y.extend((0..n).map(|i| x2[i] + self.sigma * y2[i]));
        y.extend(y2);
        y
    }
}

fn ritz_residual(h: &DMatrix<f64>, beta: f64, theta: Complex<f64>) -> f64 {
    // bottom component of the normalized eigenvector of H for theta
    let m = h.nrows();
    let shift = theta * Complex::new(1.0 + 1e-13, 0.0) + Complex::new(1e-300, 0.0);
    let hc = DMatrix::<Complex<f64>>::from_fn(m, m, |i, j| {
        let v = Complex::new(h[(i, j)], 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = hc.lu();
    let mut s = DMatrix::<Complex<f64>>::from_element(m, 1, Complex::new(1.0, 0.0));
    for _ in 0..3 {
        match lu.solve(&s) {
            Some(next) => {
                let nrm = next.norm();
                if !(nrm.is_finite() && nrm > 0.0) {
                    break;
                }
                s = next / Complex::new(nrm, 0.0);
            }
            None => break,
        }
    }
    beta * s[(m - 1, 0)].norm()
}

fn shift_invert_eigenvalues(
    a: &SparseMatrix,
    b: &SparseMatrix,
    c: &SparseMatrix,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<Complex<f64>>> {
    let n = a.dim();
    let dim = 2 * n;
    let sigma = opts.shift.unwrap_or(0.0);
    let lu = BandedLu::factor(&quadratic_matrix(a, b, c, sigma))
        .map_err(|e| RrmError::Pencil(format!("shift {sigma} is not usable: {e}")))?;
    let op = ShiftInvertOp { b, c, sigma, lu };
    let max_m = opts.max_krylov_dim.min(dim);
    let mut target = opts.krylov_dim.min(max_m).max(2 * k + 2).min(max_m);

    // deterministic start vector
    let mut v0: Vec<f64> = (0..dim).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let nv = norm2(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut hcols: Vec<Vec<f64>> = Vec::new();
    let mut last_beta;
    loop {
        last_beta = 0.0;
        while hcols.len() < target {
            let j = hcols.len();
            let mut w = op.apply(&basis[j]);
            let mut col = vec![0.0; j + 2];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let d = dot(v, &w);
                    col[i] += d;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= d * vi);
                }
            }
            let beta = norm2(&w);
            col[j + 1] = beta;
            hcols.push(col);
            last_beta = beta;
            if beta <= 1e-14 * hcols[j][..=j].iter().map(|x| x.abs()).fold(0.0, f64::max) {
                // invariant subspace
                break;
            }
            w.iter_mut().for_each(|x| *x /= beta);
            basis.push(w);
        }
        let m = hcols.len();
        let h = DMatrix::<f64>::from_fn(m, m, |i, j| if i <= j + 1 { hcols[j][i] } else { 0.0 });
        let beta = hcols[m - 1][m];
        let thetas: Vec<Complex<f64>> = h.complex_eigenvalues().iter().copied().collect();
        let mut taus: Vec<(Complex<f64>, Complex<f64>)> = thetas
            .iter()
            .filter(|t| t.norm() > 0.0)
            .map(|&t| (Complex::new(sigma, 0.0) + Complex::new(1.0, 0.0) / t, t))
            .collect();
        taus.sort_by(|x, y| x.0.re.total_cmp(&y.0.re));
        let converged = |theta: Complex<f64>| ritz_residual(&h, beta, theta) <= 1e-10 * theta.norm();
        let admissible: Vec<Complex<f64>> = taus
            .iter()
            .filter(|(tau, theta)| is_admissible(*tau) && converged(*theta))
            .map(|(tau, _)| *tau)
            .collect();
        let done_breakdown = last_beta == 0.0 || m >= max_m || beta <= 1e-14;
        if admissible.len() >= k {
            let tk = admissible[k - 1].re;
            let radius = (tk - sigma).abs().max(sigma.abs()) * (1.0 + 1e-6);
            let all_in_disc_converged = taus
                .iter()
                .filter(|(tau, _)| (tau - Complex::new(sigma, 0.0)).norm() <= radius)
                .all(|(_, theta)| converged(*theta));
            if all_in_disc_converged {
                return Ok(taus
                    .into_iter()
                    .filter(|(_, theta)| converged(*theta))
                    .map(|(tau, _)| tau)
                    .collect());
            }
        }
        if done_breakdown {
            return Ok(taus
                .into_iter()
                .filter(|(_, theta)| converged(*theta))
                .map(|(tau, _)| tau)
                .collect());
        }
        target = (target + target / 2).min(max_m);
    }
}

/// Eigenvector of `Q(τ)` by inverse iteration.
fn eigenvector(a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix, tau: f64) -> Result<Vec<f64>> {
    let n = a.dim();
    let q = quadratic_matrix(a, b, c, tau * (1.0 + 1e-11));
    let lu = BandedLu::factor(&q)?;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 104729) % 97) as f64 / 97.0).collect();
    for _ in 0..4 {
        let y = lu.solve(&x);
        let ny = norm2(&y);
        if !(ny.is_finite() && ny > 0.0) {
            return Err(RrmError::Solver("inverse iteration broke down".into()));
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    // sign convention: largest component positive
    let imax = (0..n).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap_or(0);
    if x[imax] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(x)
}

fn finish(
    a: &SparseMatrix,
    b: &SparseMatrix,
    c: &SparseMatrix,
    k: usize,
    all: Vec<Complex<f64>>,
) -> Result<EigenResult> {
    let mut result = EigenResult::default();
    let mut taus = Vec::new();
    for t in all {
        if is_admissible(t) {
            taus.push(t.re);
        } else {
            result.rejected.push(t);
        }
    }
    taus.sort_by(f64::total_cmp);
    taus.truncate(k);
    for &tau in &taus {
        let x = eigenvector(a, b, c, tau)?;
        let res = quadratic_residual(a, b, c, tau, &x);
        if res > EIGEN_RESIDUAL_TOL {
            return Err(RrmError::Pencil(format!(
                "eigenpair at tau = {tau} has residual {res:e}"
            )));
        }
        result.taus.push(tau);
        result.lambdas.push(tau.sqrt());
        result.vectors.push(x);
        result.residuals.push(res);
    }
    if result.taus.len() < k {
        return Err(RrmError::PartialEigen {
            requested: k,
            found: result.taus.len(),
            lambdas: result.lambdas,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        let n = rows.len();
        SparseMatrix::from_dense(&DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Symmetric positive definite test matrix `GᵀG + I` with `G` banded.
    fn spd(n: usize, seed: u64) -> SparseMatrix {
        let mut state = seed;
        let mut rand = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) <= 3 { rand() } else { 0.0 });
        SparseMatrix::from_dense(&(g.transpose() * &g + DMatrix::identity(n, n)))
    }

    #[test]
    fn spd_small_cases() {
        let m = dense(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let x = solve_spd(&m, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let d = dense(&[&[2.0, 0.0, 0.0], &[0.0, 4.0, 0.0], &[0.0, 0.0, 8.0]]);
        let x = solve_spd(&d, &[1.0, 1.0, 1.0]).unwrap();
        for (a, b) in x.iter().zip([0.5, 0.25, 0.125]) {
            assert!((a - b).abs() < 1e-16);
        }
        let bad = dense(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(solve_spd(&bad, &[1.0, 1.0]), Err(RrmError::Solver(_))));
    }

    #[test]
    fn spd_random_residual_and_determinism() {
        let m = spd(50, 7);
        let rhs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = solve_spd(&m, &rhs).unwrap();
        let r: Vec<f64> = rhs.iter().zip(m.matvec(&x)).map(|(b, ax)| b - ax).collect();
        assert!(norm2(&r) / norm2(&rhs) <= 1e-10);
        assert_eq!(x, solve_spd(&m, &rhs).unwrap());
    }

    #[test]
    fn banded_lu_matches_dense() {
        let m = spd(40, 3).lin_comb(1.0, &SparseMatrix::identity(40), -3.0);
        let rhs: Vec<f64> = (0..40).map(|i| i as f64 - 20.0).collect();
        let x = BandedLu::factor(&m).unwrap().solve(&rhs);
        let r: Vec<f64> = rhs.iter().zip(m.matvec(&x)).map(|(b, ax)| b - ax).collect();
        assert!(norm2(&r) < 1e-10 * norm2(&rhs));
        let z = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)], true);
        assert_eq!(BandedLu::factor(&z).unwrap().solve(&[2.0, 3.0]), vec![3.0, 2.0]);
    }

    #[test]
    fn scalar_quadratics() {
        let s = |v: f64| dense(&[&[v]]);
        let r = solve_quadratic_eigen(&s(2.0), &s(-3.0), &s(1.0), 2).unwrap();
        assert!((r.taus[0] - 1.0).abs() < 1e-12 && (r.taus[1] - 2.0).abs() < 1e-12);
        assert!((r.lambdas[1] - 2f64.sqrt()).abs() < 1e-12);

        let r = solve_quadratic_eigen(&s(-1.0), &s(0.0), &s(1.0), 1).unwrap();
        assert!((r.taus[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.rejected.len(), 1);
        assert!(matches!(
            solve_quadratic_eigen(&s(-1.0), &s(0.0), &s(1.0), 2),
            Err(RrmError::PartialEigen { found: 1, .. })
        ));
        assert!(matches!(
            solve_quadratic_eigen(&s(1.0), &s(0.0), &s(0.0), 1),
            Err(RrmError::Pencil(_))
        ));
    }

    #[test]
    fn complex_pairs_are_filtered() {
        // τ² + 1 = 0 has no admissible roots
        let s = |v: f64| dense(&[&[v]]);
        let r = solve_quadratic_eigen(&s(1.0), &s(0.0), &s(1.0), 1);
        assert!(matches!(r, Err(RrmError::PartialEigen { found: 0, .. })));
        assert!(is_admissible(Complex::new(3.0, 1e-9)));
        assert!(!is_admissible(Complex::new(3.0, 1e-6)));
        assert!(!is_admissible(Complex::new(-3.0, 0.0)));
    }

    #[test]
    fn diagonal_pencil_by_both_routes() {
        // decoupled scalar quadratics (τ - i)(τ - i - 0.5) with known roots
        let n = 30;
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        let mut tc = Vec::new();
        for i in 0..n {
            let (r1, r2) = (1.0 + i as f64, 1.5 + i as f64);
            ta.push((i, i, r1 * r2));
            tb.push((i, i, -(r1 + r2)));
            tc.push((i, i, 1.0));
        }
        let a = SparseMatrix::from_triplets(n, ta, true);
        let b = SparseMatrix::from_triplets(n, tb, true);
        let c = SparseMatrix::from_triplets(n, tc, true);
        let expect = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5];
        for method in [EigenMethod::Dense, EigenMethod::ShiftInvert] {
            let opts = EigenOptions {
                method,
                shift: Some(0.5),
                krylov_dim: 20,
                ..Default::default()
            };
            let r = solve_quadratic_eigen_with(&a, &b, &c, 6, &opts).unwrap();
            for (t, e) in r.taus.iter().zip(expect) {
                assert!((t - e).abs() < 1e-9, "{method:?}: {t} vs {e}");
            }
        }
    }
}
