//! Tensor-product rectangular grids with an active-cell mask, their
//! interior/boundary classification, 3×3 patch geometry and the virtual
//! extension used by the extended quasi-interpolant.
//!
//! Cells are addressed by [`CellId`] in the tensor frame of the base grid.
//! Virtual cells of an [`ExtendedGrid`] use the same frame with indices in
//! `-2..0` and `n..n+2`, so a cell keeps its id after extension.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, RrmError};

/// Default bound for `max h_K / rho_K`.
pub const DEFAULT_GAMMA0: f64 = 10.0;

/// Width of the virtual layer added around the base grid.
pub const EXTENSION_LAYERS: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    UnitSquare,
    Square { side: f64 },
    LShape,
}

impl Domain {
    /// Side length of the bounding box `(0, extent)^2`.
    pub fn extent(&self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::Square { side } => *side,
            Domain::LShape => 2.0,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::Square { side } => side * side,
            Domain::LShape => 3.0,
        }
    }

    /// Open-set membership; used on cell barycenters.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let a = self.extent();
        let in_box = x > 0.0 && x < a && y > 0.0 && y < a;
        match self {
            Domain::LShape => in_box && !(x > 1.0 && y > 1.0),
            _ => in_box,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Domain::Square { side } = self {
            if !(side.is_finite() && *side > 0.0) {
                return Err(RrmError::Config(format!("square side must be positive, got {side}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::UnitSquare => write!(f, "unit-square"),
            Domain::Square { side } => write!(f, "square:{side}"),
            Domain::LShape => write!(f, "l-shape"),
        }
    }
}

impl FromStr for Domain {
    type Err = RrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-square" => Ok(Domain::UnitSquare),
            "l-shape" => Ok(Domain::LShape),
            other => {
                if let Some(side) = other.strip_prefix("square:") {
                    let side: f64 = side
                        .parse()
                        .map_err(|_| RrmError::Parse(format!("bad square side in '{other}'")))?;
                    let d = Domain::Square { side };
                    d.validate()?;
                    Ok(d)
                } else {
                    Err(RrmError::Parse(format!("unknown domain '{other}'")))
                }
            }
        }
    }
}

/// Cell address in the tensor frame. Ordering is row-major (`iy` first),
/// which is the basis ordering used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellId {
    pub iy: i32,
    pub ix: i32,
}

impl CellId {
    pub const fn new(ix: i32, iy: i32) -> Self {
        CellId { iy, ix }
    }

    pub const fn offset(self, dx: i32, dy: i32) -> Self {
        CellId::new(self.ix + dx, self.iy + dy)
    }

    /// Chebyshev distance in cell units.
    pub fn distance(self, other: CellId) -> i32 {
        (self.ix - other.ix).abs().max((self.iy - other.iy).abs())
    }
}

/// Grid node address; node `(ix, iy)` sits at `(x_lines[ix], y_lines[iy])`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId {
    pub iy: i32,
    pub ix: i32,
}

/// An axis-aligned rectangle `[x0, x0 + hx] x [y0, y0 + hy]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Rect {
    pub fn center(&self) -> [f64; 2] {
        [self.x0 + 0.5 * self.hx, self.y0 + 0.5 * self.hy]
    }

    pub fn area(&self) -> f64 {
        self.hx * self.hy
    }

    /// `h_K / rho_K` with `rho_K` the inscribed radius.
    pub fn aspect(&self) -> f64 {
        self.hx.max(self.hy) / (0.5 * self.hx.min(self.hy))
    }

    /// Map cell-local `[0,1]^2` coordinates to physical ones.
    pub fn to_physical(&self, xi: f64, eta: f64) -> [f64; 2] {
        [self.x0 + xi * self.hx, self.y0 + eta * self.hy]
    }

    pub fn to_local(&self, x: f64, y: f64) -> [f64; 2] {
        [(x - self.x0) / self.hx, (y - self.y0) / self.hy]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x0 + self.hx && y >= self.y0 && y <= self.y0 + self.hy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: Domain,
    x_lines: Vec<f64>,
    y_lines: Vec<f64>,
    active: Vec<bool>,
}

impl Grid {
    /// Build a grid from tensor lines; cells are active when their barycenter
    /// lies in the domain.
    pub fn from_lines(domain: Domain, x_lines: Vec<f64>, y_lines: Vec<f64>) -> Result<Self> {
        let nx = x_lines.len().saturating_sub(1);
        let ny = y_lines.len().saturating_sub(1);
        let mut active = vec![false; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let cx = 0.5 * (x_lines[ix] + x_lines[ix + 1]);
                let cy = 0.5 * (y_lines[iy] + y_lines[iy + 1]);
                active[iy * nx + ix] = domain.contains(cx, cy);
            }
        }
        Self::with_mask(domain, x_lines, y_lines, active)
    }

    pub fn with_mask(
        domain: Domain,
        x_lines: Vec<f64>,
        y_lines: Vec<f64>,
        active: Vec<bool>,
    ) -> Result<Self> {
        domain.validate()?;
        if x_lines.len() < 2 || y_lines.len() < 2 {
            return Err(RrmError::Config("a grid needs at least one cell per axis".into()));
        }
        for lines in [&x_lines, &y_lines] {
            if lines.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(RrmError::Config("grid lines must be strictly increasing".into()));
            }
        }
        let nx = x_lines.len() - 1;
        let ny = y_lines.len() - 1;
        if active.len() != nx * ny {
            return Err(RrmError::Config(format!(
                "mask has {} entries, expected {}",
                active.len(),
                nx * ny
            )));
        }
        let grid = Grid {
            domain,
            x_lines,
            y_lines,
            active,
        };
        let area: f64 = grid.cells().map(|c| grid.rect(c).area()).sum();
        let target = domain.area();
        if (area - target).abs() > 1e-12 * target {
            return Err(RrmError::Config(format!(
                "active cells cover area {area}, domain area is {target}"
            )));
        }
        if grid.cells().any(|c| !grid.domain.contains(grid.rect(c).center()[0], grid.rect(c).center()[1])) {
            return Err(RrmError::Config("active cell outside the domain".into()));
        }
        let aspect = grid.max_aspect();
        if aspect > DEFAULT_GAMMA0 {
            return Err(RrmError::Config(format!(
                "grid regularity max h/rho = {aspect} exceeds {DEFAULT_GAMMA0}"
            )));
        }
        Ok(grid)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn nx(&self) -> usize {
        self.x_lines.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y_lines.len() - 1
    }

    pub fn x_lines(&self) -> &[f64] {
        &self.x_lines
    }

    pub fn y_lines(&self) -> &[f64] {
        &self.y_lines
    }

    pub fn in_range(&self, c: CellId) -> bool {
        c.ix >= 0 && c.iy >= 0 && (c.ix as usize) < self.nx() && (c.iy as usize) < self.ny()
    }

    /// Flat index of an in-range cell.
    pub fn flat(&self, c: CellId) -> usize {
        c.iy as usize * self.nx() + c.ix as usize
    }

    pub fn is_active(&self, c: CellId) -> bool {
        self.in_range(c) && self.active[self.flat(c)]
    }

    /// Geometry of an in-range tensor cell.
    pub fn rect(&self, c: CellId) -> Rect {
        let (ix, iy) = (c.ix as usize, c.iy as usize);
        Rect {
            x0: self.x_lines[ix],
            y0: self.y_lines[iy],
            hx: self.x_lines[ix + 1] - self.x_lines[ix],
            hy: self.y_lines[iy + 1] - self.y_lines[iy],
        }
    }

    /// Active cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        let nx = self.nx();
        (0..self.active.len())
            .filter(|&k| self.active[k])
            .map(move |k| CellId::new((k % nx) as i32, (k / nx) as i32))
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Mesh size `h = max_K max(h_x, h_y)`.
    pub fn mesh_size(&self) -> f64 {
        self.cells()
            .map(|c| {
                let r = self.rect(c);
                r.hx.max(r.hy)
            })
            .fold(0.0, f64::max)
    }

    pub fn max_aspect(&self) -> f64 {
        self.cells().map(|c| self.rect(c).aspect()).fold(0.0, f64::max)
    }

    pub fn vertex_point(&self, v: VertexId) -> [f64; 2] {
        [self.x_lines[v.ix as usize], self.y_lines[v.iy as usize]]
    }

    /// Plain-text dump: `nx ny`, the x lines, the y lines, then one row of
    /// 0/1 flags per cell row, bottom row first.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.nx(), self.ny());
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{}", join(&self.x_lines));
        let _ = writeln!(s, "{}", join(&self.y_lines));
        for iy in 0..self.ny() {
            let row: Vec<&str> = (0..self.nx())
                .map(|ix| if self.active[iy * self.nx() + ix] { "1" } else { "0" })
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(domain: Domain, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| RrmError::Parse(format!("missing {what} line")))
        };
        let header: Vec<usize> = parse_row(next("header")?)?;
        if header.len() != 2 {
            return Err(RrmError::Parse("header must be 'nx ny'".into()));
        }
        let (nx, ny) = (header[0], header[1]);
        let xs: Vec<f64> = parse_row(next("x_lines")?)?;
        let ys: Vec<f64> = parse_row(next("y_lines")?)?;
        if xs.len() != nx + 1 || ys.len() != ny + 1 {
            return Err(RrmError::Parse("line counts do not match header".into()));
        }
        let mut active = Vec::with_capacity(nx * ny);
        for _ in 0..ny {
            let row: Vec<u8> = parse_row(next("mask")?)?;
            if row.len() != nx || row.iter().any(|&b| b > 1) {
                return Err(RrmError::Parse("mask rows must hold nx flags of 0/1".into()));
            }
            active.extend(row.into_iter().map(|b| b == 1));
        }
        Grid::with_mask(domain, xs, ys, active)
    }
}

fn parse_row<T: FromStr>(line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| RrmError::Parse(format!("bad token '{t}'"))))
        .collect()
}

fn cells_per_axis(domain: Domain, n: usize) -> Result<usize> {
    let exact = domain.extent() * n as f64;
    let cells = exact.round();
    if (exact - cells).abs() > 1e-9 || cells < 1.0 {
        return Err(RrmError::Config(format!(
            "{n} cells per unit does not tile {domain}"
        )));
    }
    Ok(cells as usize)
}

/// Square cells of side `1/n` tiling the domain.
pub fn build_uniform_grid(domain: Domain, n: usize) -> Result<Grid> {
    domain.validate()?;
    if n < 4 {
        return Err(RrmError::Config(format!(
            "uniform grids need n >= 4 cells per unit, got {n}"
        )));
    }
    let m = cells_per_axis(domain, n)?;
    let lines: Vec<f64> = (0..=m).map(|k| k as f64 / n as f64).collect();
    Grid::from_lines(domain, lines.clone(), lines)
}

/// Split every cell of the uniform `1/n` grid into 2×2 children at relative
/// offset `ratio` along both axes.
pub fn build_graded_grid(domain: Domain, n: usize, ratio: f64) -> Result<Grid> {
    domain.validate()?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(RrmError::Config(format!("ratio must lie in (0,1), got {ratio}")));
    }
    if n < 2 {
        return Err(RrmError::Config(format!(
            "graded grids need n >= 2 cells per unit, got {n}"
        )));
    }
    let m = cells_per_axis(domain, n)?;
    let h = 1.0 / n as f64;
    let mut lines = Vec::with_capacity(2 * m + 1);
    for k in 0..m {
        lines.push(k as f64 * h);
        lines.push((k as f64 + ratio) * h);
    }
    lines.push(m as f64 * h);
    Grid::from_lines(domain, lines.clone(), lines)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CornerKind {
    Convex,
    Concave,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Corner {
    pub vertex: VertexId,
    pub point: [f64; 2],
    pub kind: CornerKind,
}

/// Unit edge between two adjacent grid nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
}

#[derive(Clone, Debug)]
pub struct Topology {
    pub interior_cells: Vec<CellId>,
    pub boundary_cells: Vec<CellId>,
    pub interior_vertices: Vec<VertexId>,
    pub boundary_vertices: Vec<VertexId>,
    pub interior_edges: Vec<Edge>,
    pub boundary_edges: Vec<Edge>,
    pub corners: Vec<Corner>,
    interior_mask: Vec<bool>,
    nx: usize,
}

impl Topology {
    pub fn is_interior(&self, c: CellId) -> bool {
        c.ix >= 0
            && c.iy >= 0
            && (c.ix as usize) < self.nx
            && self
                .interior_mask
                .get(c.iy as usize * self.nx + c.ix as usize)
                .copied()
                .unwrap_or(false)
    }

    pub fn corners_of(&self, kind: CornerKind) -> impl Iterator<Item = &Corner> {
        self.corners.iter().filter(move |c| c.kind == kind)
    }
}

/// Partition cells, vertices and edges into interior and boundary parts and
/// locate corner nodes.
pub fn classify(grid: &Grid) -> Result<Topology> {
    let (nx, ny) = (grid.nx() as i32, grid.ny() as i32);
    let around = |v: VertexId| {
        [
            grid.is_active(CellId::new(v.ix - 1, v.iy - 1)),
            grid.is_active(CellId::new(v.ix, v.iy - 1)),
            grid.is_active(CellId::new(v.ix - 1, v.iy)),
            grid.is_active(CellId::new(v.ix, v.iy)),
        ]
    };

    let mut interior_vertices = Vec::new();
    let mut boundary_vertices = Vec::new();
    let mut corners = Vec::new();
    let mut on_boundary = vec![false; ((nx + 1) * (ny + 1)) as usize];
    for iy in 0..=ny {
        for ix in 0..=nx {
            let v = VertexId { ix, iy };
            let a = around(v);
            let count = a.iter().filter(|&&x| x).count();
            match count {
                0 => {}
                4 => interior_vertices.push(v),
                _ => {
                    boundary_vertices.push(v);
                    on_boundary[(iy * (nx + 1) + ix) as usize] = true;
                    let kind = match count {
                        1 => Some(CornerKind::Convex),
                        3 => Some(CornerKind::Concave),
                        _ => {
                            // two cells: straight edge unless they touch diagonally
                            if a[0] == a[3] {
                                return Err(RrmError::Config(format!(
                                    "domain pinches at node {:?}",
                                    grid.vertex_point(v)
                                )));
                            }
                            None
                        }
                    };
                    if let Some(kind) = kind {
                        corners.push(Corner {
                            vertex: v,
                            point: grid.vertex_point(v),
                            kind,
                        });
                    }
                }
            }
        }
    }

    let vertex_on_boundary =
        |ix: i32, iy: i32| on_boundary[(iy * (nx + 1) + ix) as usize];
    let mut interior_cells = Vec::new();
    let mut boundary_cells = Vec::new();
    let mut interior_mask = vec![false; (nx * ny) as usize];
    for c in grid.cells() {
        let verts = [(c.ix, c.iy), (c.ix + 1, c.iy), (c.ix, c.iy + 1), (c.ix + 1, c.iy + 1)];
        if verts.iter().any(|&(x, y)| vertex_on_boundary(x, y)) {
            boundary_cells.push(c);
        } else {
            interior_mask[grid.flat(c)] = true;
            interior_cells.push(c);
        }
        let cell_corners: Vec<&Corner> = corners
            .iter()
            .filter(|k| verts.contains(&(k.vertex.ix, k.vertex.iy)))
            .collect();
        if cell_corners.len() > 1 {
            return Err(RrmError::CornerSeparation {
                cell: c,
                first: cell_corners[0].point,
                second: cell_corners[1].point,
            });
        }
    }

    let mut interior_edges = Vec::new();
    let mut boundary_edges = Vec::new();
    // horizontal edges separate cells (ix, iy-1) and (ix, iy)
    for iy in 0..=ny {
        for ix in 0..nx {
            let below = grid.is_active(CellId::new(ix, iy - 1));
            let above = grid.is_active(CellId::new(ix, iy));
            let e = Edge {
                a: VertexId { ix, iy },
                b: VertexId { ix: ix + 1, iy },
            };
            match (below, above) {
                (true, true) => interior_edges.push(e),
                (true, false) | (false, true) => boundary_edges.push(e),
                _ => {}
            }
        }
    }
    for iy in 0..ny {
        for ix in 0..=nx {
            let left = grid.is_active(CellId::new(ix - 1, iy));
            let right = grid.is_active(CellId::new(ix, iy));
            let e = Edge {
                a: VertexId { ix, iy },
                b: VertexId { ix, iy: iy + 1 },
            };
            match (left, right) {
                (true, true) => interior_edges.push(e),
                (true, false) | (false, true) => boundary_edges.push(e),
                _ => {}
            }
        }
    }
    interior_edges.sort();
    boundary_edges.sort();

    Ok(Topology {
        interior_cells,
        boundary_cells,
        interior_vertices,
        boundary_vertices,
        interior_edges,
        boundary_edges,
        corners,
        interior_mask,
        nx: nx as usize,
    })
}

/// The six side lengths of a 3×3 patch centered at `K`, ordered
/// left/center/right and down/center/up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PatchGeometry {
    pub lengths: [f64; 3],
    pub heights: [f64; 3],
}

impl PatchGeometry {
    pub fn uniform(h: f64) -> Self {
        PatchGeometry {
            lengths: [h; 3],
            heights: [h; 3],
        }
    }

    pub fn gamma_x(&self) -> f64 {
        let [lm, l, lp] = self.lengths;
        (1.0 + l / lm) / (1.0 + l / lp)
    }

    pub fn gamma_y(&self) -> f64 {
        let [hm, h, hp] = self.heights;
        (1.0 + h / hm) / (1.0 + h / hp)
    }

    /// Normalized value of the basis function at the lower-left interior
    /// vertex of the patch.
    pub fn v11(&self) -> f64 {
        let [lm, l, _] = self.lengths;
        let [hm, h, _] = self.heights;
        lm / (lm + l) * hm / (hm + h)
    }
}

/// Geometry of the patch `M_K` of an interior cell of the base grid.
pub fn patch3x3(grid: &Grid, topo: &Topology, k: CellId) -> Result<PatchGeometry> {
    if !topo.is_interior(k) {
        return Err(RrmError::PatchUnavailable {
            cell: k,
            reason: "cell is not interior".into(),
        });
    }
    for dy in -1..=1 {
        for dx in -1..=1 {
            if !grid.is_active(k.offset(dx, dy)) {
                return Err(RrmError::PatchUnavailable {
                    cell: k,
                    reason: format!("patch cell {:?} is not active", k.offset(dx, dy)),
                });
            }
        }
    }
    Ok(patch_from_lines(grid.x_lines(), grid.y_lines(), k, 0))
}

fn patch_from_lines(xs: &[f64], ys: &[f64], k: CellId, shift: i32) -> PatchGeometry {
    let len = |lines: &[f64], i: i32| {
        let i = (i + shift) as usize;
        lines[i + 1] - lines[i]
    };
    PatchGeometry {
        lengths: [len(xs, k.ix - 1), len(xs, k.ix), len(xs, k.ix + 1)],
        heights: [len(ys, k.iy - 1), len(ys, k.iy), len(ys, k.iy + 1)],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Outside,
    Base,
    Virtual,
}

/// The base grid together with the virtual cells outside the domain and the
/// extended index set of patch centers.
#[derive(Clone, Debug)]
pub struct ExtendedGrid {
    base: Grid,
    x_lines: Vec<f64>,
    y_lines: Vec<f64>,
    kinds: Vec<CellKind>,
    centers: Vec<CellId>,
    virtual_cells: Vec<CellId>,
    virtual_centers: Vec<CellId>,
}

/// Add virtual cells so that every base cell lies in exactly nine patches.
///
/// Virtual lines beyond the bounding box repeat the size of the adjacent
/// boundary cell; inside the bounding box (the cut-out of an L-shape) the
/// tensor lines of the base grid are reused.
pub fn extend_grid(grid: &Grid, _topo: &Topology) -> ExtendedGrid {
    let extend = |lines: &[f64]| {
        let n = lines.len();
        let first = lines[1] - lines[0];
        let last = lines[n - 1] - lines[n - 2];
        let mut out = Vec::with_capacity(n + 4);
        out.push(lines[0] - 2.0 * first);
        out.push(lines[0] - first);
        out.extend_from_slice(lines);
        out.push(lines[n - 1] + last);
        out.push(lines[n - 1] + 2.0 * last);
        out
    };
    let x_lines = extend(grid.x_lines());
    let y_lines = extend(grid.y_lines());
    let mx = x_lines.len() - 1;
    let my = y_lines.len() - 1;
    let s = EXTENSION_LAYERS;

    // distance from each extended cell to the nearest base cell, capped at 3
    let mut dist = vec![3i32; mx * my];
    for c in grid.cells() {
        for dy in -s..=s {
            for dx in -s..=s {
                let e = (c.ix + dx + s) as usize + (c.iy + dy + s) as usize * mx;
                dist[e] = dist[e].min(dx.abs().max(dy.abs()));
            }
        }
    }
    let mut kinds = vec![CellKind::Outside; mx * my];
    let mut centers = Vec::new();
    let mut virtual_cells = Vec::new();
    let mut virtual_centers = Vec::new();
    for ey in 0..my {
        for ex in 0..mx {
            let id = CellId::new(ex as i32 - s, ey as i32 - s);
            let d = dist[ey * mx + ex];
            let kind = if d == 0 {
                CellKind::Base
            } else if d <= s {
                CellKind::Virtual
            } else {
                CellKind::Outside
            };
            kinds[ey * mx + ex] = kind;
            if kind == CellKind::Virtual {
                virtual_cells.push(id);
            }
            if d <= 1 {
                centers.push(id);
                if kind == CellKind::Virtual {
                    virtual_centers.push(id);
                }
            }
        }
    }
    ExtendedGrid {
        base: grid.clone(),
        x_lines,
        y_lines,
        kinds,
        centers,
        virtual_cells,
        virtual_centers,
    }
}

impl ExtendedGrid {
    pub fn base(&self) -> &Grid {
        &self.base
    }

    fn ext_index(&self, c: CellId) -> Option<usize> {
        let s = EXTENSION_LAYERS;
        let mx = self.x_lines.len() - 1;
        let my = self.y_lines.len() - 1;
        let (ex, ey) = (c.ix + s, c.iy + s);
        if ex < 0 || ey < 0 || ex as usize >= mx || ey as usize >= my {
            None
        } else {
            Some(ey as usize * mx + ex as usize)
        }
    }

    pub fn kind(&self, c: CellId) -> CellKind {
        self.ext_index(c).map_or(CellKind::Outside, |k| self.kinds[k])
    }

    /// Geometry of any cell within the extended frame.
    pub fn rect(&self, c: CellId) -> Rect {
        let s = EXTENSION_LAYERS;
        let (ix, iy) = ((c.ix + s) as usize, (c.iy + s) as usize);
        Rect {
            x0: self.x_lines[ix],
            y0: self.y_lines[iy],
            hx: self.x_lines[ix + 1] - self.x_lines[ix],
            hy: self.y_lines[iy + 1] - self.y_lines[iy],
        }
    }

    /// The index set of patch centers (interior, boundary and added cells),
    /// row-major.
    pub fn centers(&self) -> &[CellId] {
        &self.centers
    }

    /// All cells outside the domain, including the outer layer that only
    /// completes patches.
    pub fn virtual_cells(&self) -> &[CellId] {
        &self.virtual_cells
    }

    /// Added cells that carry a basis function.
    pub fn virtual_centers(&self) -> &[CellId] {
        &self.virtual_centers
    }

    pub fn is_center(&self, c: CellId) -> bool {
        self.centers.binary_search(&c).is_ok()
    }

    pub fn patch(&self, k: CellId) -> Result<PatchGeometry> {
        if !self.is_center(k) {
            return Err(RrmError::PatchUnavailable {
                cell: k,
                reason: "not a patch center of the extended grid".into(),
            });
        }
        Ok(patch_from_lines(&self.x_lines, &self.y_lines, k, EXTENSION_LAYERS))
    }

    /// Number of patches `M_K`, `K` a center, that contain cell `t`.
    pub fn coverage(&self, t: CellId) -> usize {
        let mut n = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if self.is_center(t.offset(dx, dy)) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Union of the patches containing base cell `t`.
    pub fn delta_neighborhood(&self, t: CellId) -> Vec<CellId> {
        let mut cells = Vec::new();
        for dy in -2..=2 {
            for dx in -2..=2 {
                let c = t.offset(dx, dy);
                let covered = (-1..=1).any(|ky| {
                    (-1..=1).any(|kx| {
                        let k = c.offset(kx, ky);
                        k.distance(t) <= 1 && self.is_center(k)
                    })
                });
                if covered {
                    cells.push(c);
                }
            }
        }
        cells.sort();
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_unit_square() {
        let g = build_uniform_grid(Domain::UnitSquare, 8).unwrap();
        assert_eq!(g.num_active(), 64);
        for c in g.cells() {
            let r = g.rect(c);
            assert!((r.hx - 0.125).abs() < 1e-15 && (r.hy - 0.125).abs() < 1e-15);
        }
        let t = classify(&g).unwrap();
        assert_eq!(t.interior_cells.len(), 36);
        assert_eq!(t.boundary_cells.len(), 28);
        assert_eq!(t.corners.len(), 4);
        assert!(t.corners.iter().all(|c| c.kind == CornerKind::Convex));
        assert_eq!(t.boundary_edges.len(), 32);
        assert_eq!(t.interior_edges.len(), 2 * 8 * 7);
        assert_eq!(t.interior_vertices.len(), 49);
        assert_eq!(t.boundary_vertices.len(), 32);
    }

    #[test]
    fn small_grids() {
        let t = classify(&build_uniform_grid(Domain::UnitSquare, 4).unwrap()).unwrap();
        assert_eq!(t.interior_cells.len(), 4);
        assert!(build_uniform_grid(Domain::UnitSquare, 3).is_err());
        assert!(build_uniform_grid(Domain::UnitSquare, 32).is_ok());
    }

    #[test]
    fn l_shape_grid() {
        let g = build_uniform_grid(Domain::LShape, 4).unwrap();
        assert_eq!(g.nx() * g.ny(), 64);
        assert_eq!(g.num_active(), 48);
        let t = classify(&g).unwrap();
        let concave: Vec<_> = t.corners_of(CornerKind::Concave).collect();
        assert_eq!(concave.len(), 1);
        assert_eq!(concave[0].point, [1.0, 1.0]);
        assert_eq!(t.corners_of(CornerKind::Convex).count(), 5);
        // every interior cell has its full patch inside the domain
        for &k in &t.interior_cells {
            assert!(patch3x3(&g, &t, k).is_ok());
        }
    }

    #[test]
    fn graded_lines() {
        let g = build_graded_grid(Domain::UnitSquare, 2, 0.4).unwrap();
        let expect = [0.0, 0.2, 0.5, 0.7, 1.0];
        for (a, b) in g.x_lines().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let u = build_graded_grid(Domain::UnitSquare, 2, 0.5).unwrap();
        assert!(u.cells().all(|c| (u.rect(c).hx - 0.25).abs() < 1e-15));
        let g4 = build_graded_grid(Domain::UnitSquare, 4, 0.4).unwrap();
        assert!((g4.max_aspect() - 3.0).abs() < 1e-12);
        assert!(build_graded_grid(Domain::UnitSquare, 4, 1.0).is_err());
        assert!(build_graded_grid(Domain::UnitSquare, 4, 0.0).is_err());
    }

    #[test]
    fn corner_separation_is_enforced() {
        let g = Grid::from_lines(Domain::UnitSquare, vec![0.0, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert!(matches!(classify(&g), Err(RrmError::CornerSeparation { .. })));
        let l = Grid::from_lines(Domain::LShape, vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        assert!(classify(&l).is_err());
    }

    #[test]
    fn gamma_ratios() {
        let p = PatchGeometry::uniform(0.1);
        assert_eq!(p.gamma_x(), 1.0);
        assert_eq!(p.gamma_y(), 1.0);
        let q = PatchGeometry {
            lengths: [1.0, 2.0, 4.0],
            heights: [1.0, 1.0, 1.0],
        };
        assert!((q.gamma_x() - 2.0).abs() < 1e-15);
        let g = build_graded_grid(Domain::UnitSquare, 4, 0.4).unwrap();
        let t = classify(&g).unwrap();
        // (0.6, 0.4, 0.6)/n pattern around a short cell
        let k = CellId::new(2, 2);
        let p = patch3x3(&g, &t, k).unwrap();
        assert!((p.lengths[1] - 0.1).abs() < 1e-15 && (p.lengths[0] - 0.15).abs() < 1e-15);
        assert!((p.gamma_x() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn patch_errors() {
        let g = build_uniform_grid(Domain::UnitSquare, 4).unwrap();
        let t = classify(&g).unwrap();
        assert!(matches!(
            patch3x3(&g, &t, CellId::new(0, 0)),
            Err(RrmError::PatchUnavailable { .. })
        ));
    }

    #[test]
    fn extension_covers_every_cell_nine_times() {
        for (domain, n) in [(Domain::UnitSquare, 4), (Domain::LShape, 4), (Domain::UnitSquare, 8)] {
            let g = build_uniform_grid(domain, n).unwrap();
            let t = classify(&g).unwrap();
            let e = extend_grid(&g, &t);
            assert_eq!(e.centers().len(), g.num_active() + e.virtual_centers().len());
            for c in g.cells() {
                assert_eq!(e.coverage(c), 9);
            }
            for &v in e.virtual_cells() {
                let r = e.rect(v);
                assert!((r.hx - 1.0 / n as f64).abs() < 1e-14);
                assert!((r.hy - 1.0 / n as f64).abs() < 1e-14);
            }
            for &k in e.centers() {
                let p = e.patch(k).unwrap();
                assert!(p.lengths.iter().chain(&p.heights).all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn concave_corner_extension() {
        let g = build_uniform_grid(Domain::LShape, 4).unwrap();
        let t = classify(&g).unwrap();
        let e = extend_grid(&g, &t);
        // cells around (1,1): K (below-left), K_r, K_u and the added diagonal cell
        let k = CellId::new(3, 3);
        assert_eq!(e.kind(k), CellKind::Base);
        assert_eq!(e.kind(k.offset(1, 0)), CellKind::Base);
        assert_eq!(e.kind(k.offset(0, 1)), CellKind::Base);
        assert_eq!(e.kind(k.offset(1, 1)), CellKind::Virtual);
        for c in [k, k.offset(1, 0), k.offset(0, 1), k.offset(1, 1)] {
            assert!(e.is_center(c));
        }
    }

    #[test]
    fn delta_neighborhoods() {
        let g = build_uniform_grid(Domain::UnitSquare, 8).unwrap();
        let t = classify(&g).unwrap();
        let e = extend_grid(&g, &t);
        assert_eq!(e.delta_neighborhood(CellId::new(4, 4)).len(), 25);
        let corner = e.delta_neighborhood(CellId::new(0, 0));
        assert_eq!(corner.len(), 25);
        assert!(corner.iter().any(|&c| e.kind(c) == CellKind::Virtual));
    }

    #[test]
    fn text_round_trip() {
        let g = build_graded_grid(Domain::LShape, 2, 0.4).unwrap();
        let s = g.to_text();
        assert!(s.starts_with("8 8\n"));
        let back = Grid::from_text(Domain::LShape, &s).unwrap();
        assert_eq!(back, g);
        assert!(Grid::from_text(Domain::LShape, "2 2\n0 1\n").is_err());
    }

    #[test]
    fn domain_parsing() {
        assert_eq!("l-shape".parse::<Domain>().unwrap(), Domain::LShape);
        assert_eq!("square:2".parse::<Domain>().unwrap(), Domain::Square { side: 2.0 });
        assert!("circle".parse::<Domain>().is_err());
        let g = build_uniform_grid(Domain::Square { side: 0.5 }, 8).unwrap();
        assert_eq!(g.num_active(), 16);
    }
}
