//! Property batteries: discrete Grisvard identity, polynomial reproduction
//! and interpolation orders.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_hessian_stiffness, assemble_laplace_weighted, Weight};
use crate::basis::{checkerboard_residual, RrmSpace};
use crate::error::{Result, RrmError};
use crate::fields::{sin_squared_product, Polynomial};
use crate::grid::{classify, extend_grid, Domain, Grid};
use crate::interpolation::{cell_deviation, interpolate_extended, interpolation_rates, InterpolationRow};
use crate::problems::GridKind;
use crate::quadrature::{gauss_rule, ORDER_MASS};

pub const GRISVARD_TOL: f64 = 1e-12;
pub const REPRODUCTION_TOL: f64 = 1e-10;
pub const CHECKERBOARD_TOL: f64 = 1e-11;
pub const RATE_TOL: f64 = 0.2;
pub const DEFAULT_RATIO: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Grisvard,
    Reproduction,
    Interpolation,
    All,
}

impl FromStr for Suite {
    type Err = RrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grisvard" => Ok(Suite::Grisvard),
            "reproduction" => Ok(Suite::Reproduction),
            "interpolation" => Ok(Suite::Interpolation),
            "all" => Ok(Suite::All),
            _ => Err(RrmError::Parse(format!("unknown suite '{s}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Grisvard => "grisvard",
            Suite::Reproduction => "reproduction",
            Suite::Interpolation => "interpolation",
            Suite::All => "all",
        })
    }
}

/// One line of a suite summary; `measured ≤ tolerance` for deviations, or
/// `|measured - target| ≤ tolerance` for rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub case: String,
    pub measured: f64,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn bound(suite: Suite, case: String, measured: f64, tolerance: f64) -> Self {
        Check {
            suite,
            case,
            measured,
            target: None,
            tolerance,
            pass: measured <= tolerance,
        }
    }

    fn near(suite: Suite, case: String, measured: Option<f64>, target: f64, tolerance: f64) -> Self {
        let m = measured.unwrap_or(f64::NAN);
        Check {
            suite,
            case,
            measured: m,
            target: Some(target),
            tolerance,
            pass: (m - target).abs() <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// Interpolation error tables keyed by battery label.
    pub interpolation: Vec<(String, Vec<InterpolationRow>)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

/// A labelled grid of the standard battery.
pub struct BatteryGrid {
    pub label: String,
    pub grid: Grid,
}

fn label(domain: Domain, kind: GridKind, n: usize) -> String {
    match kind {
        GridKind::Uniform => format!("{domain} uniform n={n}"),
        GridKind::Graded { ratio } => format!("{domain} graded({ratio}) n={n}"),
    }
}

/// Uniform and graded grids over the square and the L-shape, `n ∈ {8, 16}`.
pub fn standard_battery() -> Result<Vec<BatteryGrid>> {
    let mut out = Vec::new();
    for domain in [Domain::UnitSquare, Domain::LShape] {
        for kind in [GridKind::Uniform, GridKind::Graded { ratio: DEFAULT_RATIO }] {
            for n in [8, 16] {
                out.push(BatteryGrid {
                    label: label(domain, kind, n),
                    grid: kind.build(domain, n)?,
                });
            }
        }
    }
    Ok(out)
}

/// `max |H - L| / max |H|` for the Hessian and Laplacian stiffness matrices.
pub fn grisvard_deviation(grid: &Grid) -> Result<f64> {
    let topo = classify(grid)?;
    let space = RrmSpace::interior(grid, &topo)?;
    let h = assemble_hessian_stiffness(&space)?;
    let l = assemble_laplace_weighted(&space, Weight::One)?;
    Ok(h.lin_comb(1.0, &l, -1.0).max_abs() / h.max_abs())
}

/// Largest cellwise deviation of `Π̃_h p` from each of the six quadratic
/// monomials, and the checkerboard residual of the extended space.
pub fn reproduction_deviation(grid: &Grid) -> Result<(f64, f64)> {
    let topo = classify(grid)?;
    let egrid = extend_grid(grid, &topo);
    let space = RrmSpace::extended(&egrid)?;
    let rule = gauss_rule(ORDER_MASS)?;
    let mut worst: f64 = 0.0;
    for p in Polynomial::quadratic_monomials() {
        let c = interpolate_extended(&p, &egrid)?;
        for cell in grid.cells() {
            worst = worst.max(cell_deviation(&p, &space, &c.values, cell, &rule));
        }
    }
    Ok((worst, checkerboard_residual(&space)))
}

fn run_grisvard(report: &mut VerifyReport) -> Result<()> {
    let battery = standard_battery()?;
    let devs: Vec<f64> = battery
        .par_iter()
        .map(|b| grisvard_deviation(&b.grid))
        .collect::<Result<_>>()?;
    for (b, d) in battery.iter().zip(devs) {
        report.checks.push(Check::bound(Suite::Grisvard, b.label.clone(), d, GRISVARD_TOL));
    }
    Ok(())
}

fn run_reproduction(report: &mut VerifyReport) -> Result<()> {
    let battery = standard_battery()?;
    let devs: Vec<(f64, f64)> = battery
        .par_iter()
        .map(|b| reproduction_deviation(&b.grid))
        .collect::<Result<_>>()?;
    for (b, (poly, cb)) in battery.iter().zip(devs) {
        report
            .checks
            .push(Check::bound(Suite::Reproduction, format!("{} P2", b.label), poly, REPRODUCTION_TOL));
        report.checks.push(Check::bound(
            Suite::Reproduction,
            format!("{} checkerboard", b.label),
            cb,
            CHECKERBOARD_TOL,
        ));
    }
    Ok(())
}

/// Mesh levels `n = 8, 16, 32, 64` of the interpolation study.
pub const INTERPOLATION_LEVELS: [usize; 4] = [8, 16, 32, 64];

/// `|v - Π_h0 v|_{k,h}` for `v = (sin πx sin πy)²` on one domain and grid kind.
pub fn interpolation_study(domain: Domain, kind: GridKind, levels: &[usize]) -> Result<Vec<InterpolationRow>> {
    let grids: Vec<Grid> = levels.iter().map(|&n| kind.build(domain, n)).collect::<Result<_>>()?;
    interpolation_rates(&sin_squared_product(), &grids)
}

fn run_interpolation(report: &mut VerifyReport) -> Result<()> {
    for domain in [Domain::UnitSquare, Domain::LShape] {
        for kind in [GridKind::Uniform, GridKind::Graded { ratio: DEFAULT_RATIO }] {
            let name = match kind {
                GridKind::Uniform => format!("{domain} uniform"),
                GridKind::Graded { ratio } => format!("{domain} graded({ratio})"),
            };
            let rows = interpolation_study(domain, kind, &INTERPOLATION_LEVELS)?;
            for w in rows.windows(2) {
                for k in 1..3 {
                    report.checks.push(Check::near(
                        Suite::Interpolation,
                        format!("{name} k={k} h={:.5}→{:.5}", w[0].h, w[1].h),
                        w[1].rates[k],
                        (3 - k) as f64,
                        RATE_TOL,
                    ));
                }
            }
            report.interpolation.push((name, rows));
        }
    }
    Ok(())
}

pub fn run_suite(suite: Suite) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    if matches!(suite, Suite::Grisvard | Suite::All) {
        run_grisvard(&mut report)?;
    }
    if matches!(suite, Suite::Reproduction | Suite::All) {
        run_reproduction(&mut report)?;
    }
    if matches!(suite, Suite::Interpolation | Suite::All) {
        run_interpolation(&mut report)?;
    }
    Ok(report)
}
