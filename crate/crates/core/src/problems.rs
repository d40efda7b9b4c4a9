//! End-to-end drivers for the singular perturbation problem
//! `ε²Δ(βΔu) - Δu = f` and the reduced transmission eigenproblem.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    boundary_layer_error, discrete_solution_error, eigen_rate_table, EigenRateTable, ErrorReport, RateTable,
};
use crate::assembly::{
    assemble_grad_stiffness, assemble_laplace_bilap, assemble_load, assemble_transmission, perturbation_f,
};
use crate::basis::RrmSpace;
use crate::error::{Result, RrmError};
use crate::fields::{sin_product, sin_squared_product, CoefficientField, ExactField};
use crate::grid::{build_graded_grid, build_uniform_grid, classify, Domain, Grid};
use crate::linalg::{solve_quadratic_eigen_with, solve_spd, EigenMethod, EigenOptions};

/// Desk-scale cap on cells per unit length for the perturbation problem.
pub const PERTURBATION_MAX_N: usize = 128;
/// Desk-scale cap on cells per unit length for eigenproblems.
pub const EIGEN_MAX_N: usize = 64;
pub const DEFAULT_EIGEN_COUNT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    Uniform,
    /// Each cell of the uniform `2/n` grid split at relative offset `ratio`,
    /// so a level still has `n` cells per unit length.
    Graded { ratio: f64 },
}

impl GridKind {
    pub fn build(&self, domain: Domain, n: usize) -> Result<Grid> {
        match *self {
            GridKind::Uniform => build_uniform_grid(domain, n),
            GridKind::Graded { ratio } => {
                if n % 2 != 0 {
                    return Err(RrmError::Config(format!("graded levels need even n, got {n}")));
                }
                build_graded_grid(domain, n / 2, ratio)
            }
        }
    }
}

/// Exact-solution presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExactPreset {
    /// `u = (sin πx sin πy)²`, `f` computed from `u`; errors against `u`.
    #[serde(rename = "example-5.1")]
    Example51,
    /// `f = 2π² sin πx sin πy`; errors against the reduced solution
    /// `u⁰ = sin πx sin πy`.
    #[serde(rename = "example-5.3-reduced")]
    Example53Reduced,
}

impl fmt::Display for ExactPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExactPreset::Example51 => "example-5.1",
            ExactPreset::Example53Reduced => "example-5.3-reduced",
        })
    }
}

impl FromStr for ExactPreset {
    type Err = RrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example-5.1" => Ok(ExactPreset::Example51),
            "example-5.3-reduced" => Ok(ExactPreset::Example53Reduced),
            _ => Err(RrmError::Parse(format!("unknown exact-solution preset '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationConfig {
    pub domain: Domain,
    pub grid: GridKind,
    /// Cells per unit length, ascending.
    pub levels: Vec<usize>,
    pub eps: Vec<f64>,
    pub beta: CoefficientField,
    pub exact: ExactPreset,
    /// Raises the desk-scale cap on `n`.
    pub max_n: Option<usize>,
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        check_levels(&self.levels, self.max_n.unwrap_or(PERTURBATION_MAX_N))?;
        if self.eps.is_empty() {
            return Err(RrmError::Config("no ε values given".into()));
        }
        if let Some(e) = self.eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(RrmError::Config(format!("ε must be positive, got {e}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransmissionConfig {
    pub domain: Domain,
    /// Cells per unit length, ascending.
    pub levels: Vec<usize>,
    pub beta: CoefficientField,
    pub k: usize,
    pub max_n: Option<usize>,
}

impl TransmissionConfig {
    pub fn validate(&self) -> Result<()> {
        check_levels(&self.levels, self.max_n.unwrap_or(EIGEN_MAX_N))?;
        if self.k == 0 {
            return Err(RrmError::Config("eigenvalue count must be positive".into()));
        }
        // β is affine, so its minimum over the bounding box sits at a corner
        let a = self.domain.extent();
        for (x, y) in [(0.0, 0.0), (a, 0.0), (0.0, a), (a, a)] {
            let b = self.beta.value(x, y);
            if !(b > 1.0) {
                return Err(RrmError::Config(format!(
                    "β must exceed 1 on the domain, got {b} at ({x}, {y})"
                )));
            }
        }
        Ok(())
    }
}

fn check_levels(levels: &[usize], max_n: usize) -> Result<()> {
    if levels.is_empty() {
        return Err(RrmError::Config("no mesh levels given".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RrmError::Config(format!("levels must be strictly ascending, got {levels:?}")));
    }
    let top = *levels.last().unwrap();
    if top > max_n {
        return Err(RrmError::Config(format!(
            "n = {top} exceeds the desk-scale cap {max_n}; raise it with RRM_MAX_N"
        )));
    }
    Ok(())
}

/// Reports for one `ε` across all levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsSeries {
    pub eps: f64,
    pub levels: Vec<usize>,
    pub reports: Vec<ErrorReport>,
    /// Rates of the preset's tracked error: relative energy error against
    /// `u`, or the energy error against `u⁰`.
    pub rates: RateTable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationStudy {
    pub config: PerturbationConfig,
    pub series: Vec<EpsSeries>,
    /// Non-fatal observations, e.g. an error that grew under refinement.
    pub warnings: Vec<String>,
}

/// Error measure whose rates are reported for a preset.
pub fn tracked_error(preset: ExactPreset, r: &ErrorReport) -> f64 {
    match preset {
        ExactPreset::Example51 => r.relative_energy_error,
        ExactPreset::Example53Reduced => r.energy_error,
    }
}

fn space_for(domain: Domain, grid: GridKind, n: usize) -> Result<RrmSpace> {
    let g = grid.build(domain, n)?;
    let topo = classify(&g)?;
    let space = RrmSpace::interior(&g, &topo)?;
    if space.dim() == 0 {
        return Err(RrmError::Config(format!("grid with n = {n} has no interior cells")));
    }
    Ok(space)
}

fn perturbation_level(cfg: &PerturbationConfig, n: usize) -> Result<Vec<ErrorReport>> {
    let space = space_for(cfg.domain, cfg.grid, n)?;
    let a = assemble_laplace_bilap(&space, &cfg.beta)?;
    let b = assemble_grad_stiffness(&space)?;
    let reduced_rhs = match cfg.exact {
        ExactPreset::Example53Reduced => {
            let u0 = sin_product();
            Some(assemble_load(&space, move |x, y| 2.0 * PI * PI * u0.value(x, y))?)
        }
        ExactPreset::Example51 => None,
    };
    cfg.eps
        .iter()
        .map(|&eps| {
            let m = a.lin_comb(eps * eps, &b, 1.0);
            match cfg.exact {
                ExactPreset::Example51 => {
                    let u = sin_squared_product();
                    let rhs = assemble_load(&space, perturbation_f(u, cfg.beta, eps))?;
                    let x = solve_spd(&m, &rhs)?;
                    discrete_solution_error(&u, &x, &space, eps)
                }
                ExactPreset::Example53Reduced => {
                    let x = solve_spd(&m, reduced_rhs.as_ref().unwrap())?;
                    boundary_layer_error(&sin_product(), &x, &space, eps)
                }
            }
        })
        .collect()
}

/// Solve every `(level, ε)` pair and tabulate rates per `ε`. Levels run
/// concurrently; output order follows the configuration.
pub fn run_perturbation(cfg: &PerturbationConfig) -> Result<PerturbationStudy> {
    cfg.validate()?;
    let per_level: Vec<Vec<ErrorReport>> = cfg
        .levels
        .par_iter()
        .map(|&n| perturbation_level(cfg, n))
        .collect::<Result<_>>()?;
    let mut series = Vec::with_capacity(cfg.eps.len());
    let mut warnings = Vec::new();
    for (e, &eps) in cfg.eps.iter().enumerate() {
        let reports: Vec<ErrorReport> = per_level.iter().map(|l| l[e]).collect();
        let rates =
            RateTable::from_errors(reports.iter().map(|r| (r.h, tracked_error(cfg.exact, r))).collect());
        if !rates.is_monotone() {
            warnings.push(format!("ε = {eps}: error does not decrease monotonically under refinement"));
        }
        series.push(EpsSeries {
            eps,
            levels: cfg.levels.clone(),
            reports,
            rates,
        });
    }
    Ok(PerturbationStudy {
        config: cfg.clone(),
        series,
        warnings,
    })
}

/// Eigen solve outcome for one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransmissionLevel {
    pub n: usize,
    pub h: f64,
    pub dim: usize,
    pub lambdas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransmissionStudy {
    pub config: TransmissionConfig,
    pub levels: Vec<TransmissionLevel>,
    pub table: EigenRateTable,
    pub warnings: Vec<String>,
}

fn transmission_level(cfg: &TransmissionConfig, n: usize) -> Result<TransmissionLevel> {
    let space = space_for(cfg.domain, GridKind::Uniform, n)?;
    let m = assemble_transmission(&space, &cfg.beta)?;
    let r = solve_quadratic_eigen_with(&m.a, &m.b, &m.c, cfg.k, &EigenOptions::default())?;
    let method = match r.method {
        Some(EigenMethod::Dense) => "dense",
        Some(EigenMethod::ShiftInvert) => "shift-invert",
        _ => "auto",
    };
    Ok(TransmissionLevel {
        n,
        h: space.grid().mesh_size(),
        dim: space.dim(),
        lambdas: r.lambdas,
        residuals: r.residuals,
        method: method.into(),
    })
}

/// Lowest `k` admissible `λ` per level and the three-level rates.
pub fn run_transmission(cfg: &TransmissionConfig) -> Result<TransmissionStudy> {
    cfg.validate()?;
    let levels: Vec<TransmissionLevel> = cfg
        .levels
        .par_iter()
        .map(|&n| transmission_level(cfg, n))
        .collect::<Result<_>>()?;
    let table = eigen_rate_table(
        levels.iter().map(|l| l.h).collect(),
        levels.iter().map(|l| l.lambdas.clone()).collect(),
    );
    let mut warnings = Vec::new();
    for i in 0..cfg.k {
        let seq: Vec<f64> = levels.iter().map(|l| l.lambdas[i]).collect();
        if seq.windows(2).any(|w| w[1] > w[0]) {
            warnings.push(format!("λ{} does not decrease monotonically under refinement", i + 1));
        }
    }
    Ok(TransmissionStudy {
        config: cfg.clone(),
        levels,
        table,
        warnings,
    })
}
