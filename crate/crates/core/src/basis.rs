//! Patch-supported basis functions of the reduced rectangular Morley space.
//!
//! Each basis function `φ_K` lives on the 3×3 patch `M_K` centered at `K`
//! and is quadratic on each of the nine cells. It is built by combining the
//! eight rectangular Morley reference shapes on every sub-cell with the
//! patch coefficient matrix ([`coe_matrix`]) and then checking that the
//! cubic parts cancel.
//!
//! Reference conventions on `[0,1]^2`: shapes 1..4 belong to the vertex
//! values at `(0,0)`, `(0,1)`, `(1,1)`, `(1,0)`; shapes 5..8 to the edge
//! means of `∂ξ` on `ξ=0`, `∂η` on `η=1`, `∂ξ` on `ξ=1` and `∂η` on `η=0`.
//! Sub-cells are numbered row-major from the lower-left cell of the patch.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::SMatrix;
use rayon::prelude::*;

use crate::error::{Result, RrmError};
use crate::grid::{patch3x3, CellId, ExtendedGrid, Grid, PatchGeometry, Rect, Topology};

/// Tolerance on the cubic coefficients left after combining reference shapes.
pub const CUBIC_TOLERANCE: f64 = 1e-10;

/// Sub-cell offsets `(dx, dy)` in patch numbering order.
pub const PATCH_OFFSETS: [(i32, i32); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Reference monomials `{1, ξ, η, ξ², ξη, η², ξ³, η³}`.
fn monomials(xi: f64, eta: f64) -> [f64; 8] {
    [1.0, xi, eta, xi * xi, xi * eta, eta * eta, xi * xi * xi, eta * eta * eta]
}

/// Edge mean of `∂ξ` along `ξ = const` for each monomial.
fn mean_dxi(xi: f64) -> [f64; 8] {
    [0.0, 1.0, 0.0, 2.0 * xi, 0.5, 0.0, 3.0 * xi * xi, 0.0]
}

/// Edge mean of `∂η` along `η = const` for each monomial.
fn mean_deta(eta: f64) -> [f64; 8] {
    [0.0, 0.0, 1.0, 0.0, 0.5, 2.0 * eta, 0.0, 3.0 * eta * eta]
}

/// Degrees of freedom of the rectangular Morley element applied to the
/// eight monomials: row `i` is DOF `i`.
pub fn morley_dof_matrix() -> [[f64; 8]; 8] {
    [
        monomials(0.0, 0.0),
        monomials(0.0, 1.0),
        monomials(1.0, 1.0),
        monomials(1.0, 0.0),
        mean_dxi(0.0),
        mean_deta(1.0),
        mean_dxi(1.0),
        mean_deta(0.0),
    ]
}

/// The eight reference shape functions; `coeffs[j]` holds shape `j` over the
/// monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMorleyShapes {
    pub coeffs: [[f64; 8]; 8],
}

impl ReferenceMorleyShapes {
    pub fn value(&self, j: usize, xi: f64, eta: f64) -> f64 {
        let m = monomials(xi, eta);
        self.coeffs[j].iter().zip(m).map(|(c, m)| c * m).sum()
    }
}

pub fn reference_morley_shapes() -> Result<ReferenceMorleyShapes> {
    let d = morley_dof_matrix();
    let dm = SMatrix::<f64, 8, 8>::from_fn(|i, m| d[i][m]);
    let inv = dm
        .try_inverse()
        .ok_or_else(|| RrmError::Solver("Morley DOF matrix is singular".into()))?;
    // D * S = I where column j of S is shape j
    let mut coeffs = [[0.0; 8]; 8];
    for (j, shape) in coeffs.iter_mut().enumerate() {
        for (m, c) in shape.iter_mut().enumerate() {
            *c = inv[(m, j)];
        }
    }
    Ok(ReferenceMorleyShapes { coeffs })
}

fn shapes() -> &'static ReferenceMorleyShapes {
    static SHAPES: std::sync::OnceLock<ReferenceMorleyShapes> = std::sync::OnceLock::new();
    SHAPES.get_or_init(|| reference_morley_shapes().expect("Morley element is unisolvent"))
}

/// Patch coefficient matrix for `v_{1,1} = 1`: row `i` lists the reference
/// DOF values of the basis function on sub-cell `i`.
///
/// Entry (5, 8) is `H_K (1 + γx) / H_{K,-1}`, the bottom-edge derivative
/// value `u_{2,1}` scaled to the center cell.
pub fn coe_matrix(p: &PatchGeometry) -> [[f64; 8]; 9] {
    let gx = p.gamma_x();
    let gy = p.gamma_y();
    let [lm, l, lp] = p.lengths;
    let [hm, h, hp] = p.heights;
    let (rlm, rlp) = (l / lm, l / lp);
    let (rhm, rhp) = (h / hm, h / hp);
    [
        [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
        [0.0, 1.0, gx, 0.0, rlm, 1.0 + gx, -rlp * gx, 0.0],
        [0.0, gx, 0.0, 0.0, -gx, gx, 0.0, 0.0],
        [0.0, 0.0, gy, 1.0, 0.0, -rhp * gy, 1.0 + gy, rhm],
        [
            1.0,
            gy,
            gy * gx,
            gx,
            rlm * (1.0 + gy),
            -rhp * gy * (1.0 + gx),
            -rlp * gx * (1.0 + gy),
            rhm * (1.0 + gx),
        ],
        [gx, gy * gx, 0.0, 0.0, -(1.0 + gy) * gx, -rhp * gy * gx, 0.0, rhm * gx],
        [0.0, 0.0, 0.0, gy, 0.0, 0.0, gy, -gy],
        [gy, 0.0, 0.0, gy * gx, rlm * gy, 0.0, -rlp * gy * gx, -(1.0 + gx) * gy],
        [gx * gy, 0.0, 0.0, 0.0, -gy * gx, 0.0, 0.0, -gy * gx],
    ]
}

/// A quadratic in cell-local coordinates over `{1, ξ, η, ξ², ξη, η²}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalQuadratic {
    pub c: [f64; 6],
}

/// Value, gradient and Hessian `[xx, xy, yy]` at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl PointEval {
    pub fn laplacian(&self) -> f64 {
        self.hess[0] + self.hess[2]
    }
}

impl LocalQuadratic {
    pub fn value_local(&self, xi: f64, eta: f64) -> f64 {
        let c = &self.c;
        c[0] + c[1] * xi + c[2] * eta + c[3] * xi * xi + c[4] * xi * eta + c[5] * eta * eta
    }

    /// Full evaluation at local coordinates on a cell of size `hx × hy`.
    pub fn eval_local(&self, xi: f64, eta: f64, hx: f64, hy: f64) -> PointEval {
        let c = &self.c;
        PointEval {
            value: self.value_local(xi, eta),
            grad: [
                (c[1] + 2.0 * c[3] * xi + c[4] * eta) / hx,
                (c[2] + c[4] * xi + 2.0 * c[5] * eta) / hy,
            ],
            hess: self.hessian(hx, hy),
        }
    }

    /// Constant Hessian on a cell of size `hx × hy`.
    pub fn hessian(&self, hx: f64, hy: f64) -> [f64; 3] {
        [2.0 * self.c[3] / (hx * hx), self.c[4] / (hx * hy), 2.0 * self.c[5] / (hy * hy)]
    }

    pub fn add_scaled(&mut self, a: f64, other: &LocalQuadratic) {
        for (x, y) in self.c.iter_mut().zip(other.c) {
            *x += a * y;
        }
    }
}

/// The restriction of a basis function to one cell of its patch.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub cell: CellId,
    pub rect: Rect,
    pub poly: LocalQuadratic,
}

impl Piece {
    pub fn eval(&self, x: f64, y: f64) -> PointEval {
        let [xi, eta] = self.rect.to_local(x, y);
        self.poly.eval_local(xi, eta, self.rect.hx, self.rect.hy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisFunction {
    pub center: CellId,
    pub patch: PatchGeometry,
    /// Nine pieces in patch numbering order.
    pub pieces: Vec<Piece>,
}

/// Build `φ_K` on the patch of `center`; `rect_of` supplies the geometry of
/// the nine patch cells.
pub fn build_phi<R>(patch: &PatchGeometry, center: CellId, rect_of: R) -> Result<BasisFunction>
where
    R: Fn(CellId) -> Rect,
{
    let coe = coe_matrix(patch);
    let v11 = patch.v11();
    let ref_shapes = shapes();
    let mut pieces = Vec::with_capacity(9);
    for (row, &(dx, dy)) in coe.iter().zip(PATCH_OFFSETS.iter()) {
        let mut full = [0.0; 8];
        for (j, &w) in row.iter().enumerate() {
            if w != 0.0 {
                for (f, s) in full.iter_mut().zip(ref_shapes.coeffs[j]) {
                    *f += w * v11 * s;
                }
            }
        }
        let scale = full.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let residual = full[6].abs().max(full[7].abs()) / scale;
        if residual > CUBIC_TOLERANCE {
            return Err(RrmError::CubicResidual {
                cell: center,
                residual,
            });
        }
        let cell = center.offset(dx, dy);
        let mut c = [0.0; 6];
        c.copy_from_slice(&full[..6]);
        pieces.push(Piece {
            cell,
            rect: rect_of(cell),
            poly: LocalQuadratic { c },
        });
    }
    Ok(BasisFunction {
        center,
        patch: *patch,
        pieces,
    })
}

/// Values of `φ_K` at the interior nodes and interior edge midpoints of its
/// patch, plus every boundary DOF (which must vanish).
#[derive(Clone, Debug, PartialEq)]
pub struct DofValues {
    /// `v[m-1][n-1] = φ(X_{m,n})`
    pub v: [[f64; 2]; 2],
    /// `u[m-1][n-1] = ∂yφ(Y_{m,n})`, `m` the column, `n` the interior horizontal line
    pub u: [[f64; 2]; 3],
    /// `z[m-1][n-1] = ∂xφ(Z_{m,n})`, `m` the interior vertical line, `n` the row
    pub z: [[f64; 3]; 2],
    /// Vertex values and mean normal derivatives on the patch boundary.
    pub boundary: Vec<f64>,
}

impl BasisFunction {
    fn piece_at(&self, x: f64, y: f64) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.rect.contains(x, y))
    }

    /// Piece on a given cell, if the cell belongs to the patch.
    pub fn piece_on(&self, cell: CellId) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.cell == cell)
    }

    /// Point evaluation; zero outside the patch, and on interfaces the piece
    /// with the lower patch index is used.
    pub fn eval(&self, x: f64, y: f64) -> PointEval {
        self.piece_at(x, y).map(|p| p.eval(x, y)).unwrap_or_default()
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y).value
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        self.eval(x, y).grad
    }

    pub fn hessian(&self, x: f64, y: f64) -> [f64; 3] {
        self.eval(x, y).hess
    }

    /// Patch node lines: `xs[0..4]` and `ys[0..4]`.
    fn patch_lines(&self) -> ([f64; 4], [f64; 4]) {
        let r0 = self.pieces[0].rect;
        let [lm, l, lp] = self.patch.lengths;
        let [hm, h, hp] = self.patch.heights;
        (
            [r0.x0, r0.x0 + lm, r0.x0 + lm + l, r0.x0 + lm + l + lp],
            [r0.y0, r0.y0 + hm, r0.y0 + hm + h, r0.y0 + hm + h + hp],
        )
    }

    pub fn dof_values(&self) -> DofValues {
        let (xs, ys) = self.patch_lines();
        let mut v = [[0.0; 2]; 2];
        for (m, row) in v.iter_mut().enumerate() {
            for (n, val) in row.iter_mut().enumerate() {
                *val = self.value(xs[m + 1], ys[n + 1]);
            }
        }
        let mut u = [[0.0; 2]; 3];
        for (m, row) in u.iter_mut().enumerate() {
            let xm = 0.5 * (xs[m] + xs[m + 1]);
            for (n, val) in row.iter_mut().enumerate() {
                *val = self.gradient(xm, ys[n + 1])[1];
            }
        }
        let mut z = [[0.0; 3]; 2];
        for (m, row) in z.iter_mut().enumerate() {
            for (n, val) in row.iter_mut().enumerate() {
                let ym = 0.5 * (ys[n] + ys[n + 1]);
                *val = self.gradient(xs[m + 1], ym)[0];
            }
        }

        // boundary DOFs are read from the piece inside the patch
        let mut boundary = Vec::with_capacity(24);
        let inside = |x: f64, y: f64, cell: (usize, usize)| {
            self.pieces[cell.1 * 3 + cell.0].eval(x, y)
        };
        for k in 0..4 {
            for &(iy, cy) in &[(0usize, 0usize), (3, 2)] {
                boundary.push(inside(xs[k], ys[iy], (k.min(2), cy)).value);
            }
        }
        for k in 1..3 {
            for &(ix, cx) in &[(0usize, 0usize), (3, 2)] {
                boundary.push(inside(xs[ix], ys[k], (cx, k.min(2))).value);
            }
        }
        for c in 0..3 {
            let xm = 0.5 * (xs[c] + xs[c + 1]);
            let ym = 0.5 * (ys[c] + ys[c + 1]);
            boundary.push(inside(xm, ys[0], (c, 0)).grad[1]);
            boundary.push(inside(xm, ys[3], (c, 2)).grad[1]);
            boundary.push(inside(xs[0], ym, (0, c)).grad[0]);
            boundary.push(inside(xs[3], ym, (2, c)).grad[0]);
        }
        DofValues { v, u, z, boundary }
    }

    /// Plain-text coefficient table, one line per patch cell.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# phi center=({}, {}) lengths={:?} heights={:?}",
            self.center.ix, self.center.iy, self.patch.lengths, self.patch.heights
        );
        let _ = writeln!(s, "# ix iy x0 y0 hx hy c1 cxi ceta cxixi cxieta cetaeta");
        for p in &self.pieces {
            let _ = write!(
                s,
                "{} {} {:e} {:e} {:e} {:e}",
                p.cell.ix, p.cell.iy, p.rect.x0, p.rect.y0, p.rect.hx, p.rect.hy
            );
            for c in p.poly.c {
                let _ = write!(s, " {c:e}");
            }
            s.push('\n');
        }
        s
    }
}

/// Basis centers of the interior space `V_h0^R`, row-major.
pub fn basis_index(topo: &Topology) -> Vec<CellId> {
    let mut ids = topo.interior_cells.clone();
    ids.sort();
    ids
}

/// Basis centers of the extended space, row-major.
pub fn extended_basis_index(egrid: &ExtendedGrid) -> Vec<CellId> {
    egrid.centers().to_vec()
}

/// A set of patch basis functions with the per-cell covering lists needed
/// for assembly and evaluation on the base grid.
#[derive(Clone, Debug)]
pub struct RrmSpace {
    grid: Grid,
    basis: Vec<BasisFunction>,
    index: HashMap<CellId, usize>,
    /// For each base cell (flat index), the `(basis, piece)` pairs covering it.
    cover: Vec<Vec<(usize, usize)>>,
}

impl RrmSpace {
    /// The space spanned by `φ_K`, `K` an interior cell.
    pub fn interior(grid: &Grid, topo: &Topology) -> Result<Self> {
        let centers = basis_index(topo);
        let basis: Vec<BasisFunction> = centers
            .par_iter()
            .map(|&k| {
                let patch = patch3x3(grid, topo, k)?;
                build_phi(&patch, k, |c| grid.rect(c))
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_basis(grid.clone(), basis))
    }

    /// The space spanned by `φ_K` over the extended index set, restricted to
    /// the base grid.
    pub fn extended(egrid: &ExtendedGrid) -> Result<Self> {
        let centers = extended_basis_index(egrid);
        let basis: Vec<BasisFunction> = centers
            .par_iter()
            .map(|&k| {
                let patch = egrid.patch(k)?;
                build_phi(&patch, k, |c| egrid.rect(c))
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_basis(egrid.base().clone(), basis))
    }

    fn from_basis(grid: Grid, basis: Vec<BasisFunction>) -> Self {
        let mut cover = vec![Vec::new(); grid.nx() * grid.ny()];
        let mut index = HashMap::with_capacity(basis.len());
        for (b, phi) in basis.iter().enumerate() {
            index.insert(phi.center, b);
            for (p, piece) in phi.pieces.iter().enumerate() {
                if grid.is_active(piece.cell) {
                    cover[grid.flat(piece.cell)].push((b, p));
                }
            }
        }
        RrmSpace {
            grid,
            basis,
            index,
            cover,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    pub fn centers(&self) -> Vec<CellId> {
        self.basis.iter().map(|b| b.center).collect()
    }

    pub fn index_of(&self, center: CellId) -> Option<usize> {
        self.index.get(&center).copied()
    }

    /// `(basis index, piece index)` pairs covering an active base cell.
    pub fn covering(&self, cell: CellId) -> &[(usize, usize)] {
        &self.cover[self.grid.flat(cell)]
    }

    pub fn piece(&self, basis: usize, piece: usize) -> &Piece {
        &self.basis[basis].pieces[piece]
    }

    /// Restriction of `Σ coeffs[i] φ_i` to one base cell.
    pub fn local_poly(&self, coeffs: &[f64], cell: CellId) -> LocalQuadratic {
        let mut q = LocalQuadratic::default();
        for &(b, p) in self.covering(cell) {
            q.add_scaled(coeffs[b], &self.basis[b].pieces[p].poly);
        }
        q
    }
}

/// Checkerboard weights `d_K L_K H_K` with `d_K = (-1)^(ix+iy)`.
pub fn checkerboard_coefficients(space: &RrmSpace) -> Vec<f64> {
    space
        .basis()
        .iter()
        .map(|b| {
            let d = if (b.center.ix + b.center.iy).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            d * b.patch.lengths[1] * b.patch.heights[1]
        })
        .collect()
}

/// Largest local coefficient of the checkerboard combination over the active
/// cells, relative to the largest weight. Vanishes on fully covered cells.
pub fn checkerboard_residual(space: &RrmSpace) -> f64 {
    let coeffs = checkerboard_coefficients(space);
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    space
        .grid()
        .cells()
        .map(|cell| {
            let q = space.local_poly(&coeffs, cell);
            q.c.iter().fold(0.0f64, |m, c| m.max(c.abs()))
        })
        .fold(0.0, f64::max)
        / scale
}
