//! Tabular output: RFC-4180 CSV with a `#` metadata line, and a
//! whitespace-separated variant for gnuplot.

use crate::error::Result;
use crate::interpolation::InterpolationRow;
use crate::problems::{tracked_error, PerturbationStudy, TransmissionStudy};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip decimal form, so output is exact and reproducible.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV text; `meta` becomes a leading `# meta` line.
    pub fn to_csv(&self, meta: &str) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = w.into_inner().map_err(|e| e.into_error())?;
        let mut out = format!("# {meta}\n");
        out.push_str(&String::from_utf8_lossy(&body));
        Ok(out)
    }

    /// Whitespace-separated columns; missing values become `NaN`.
    pub fn to_gnuplot(&self, meta: &str) -> String {
        let mut out = format!("# {meta}\n# {}\n", self.columns.join(" "));
        for r in &self.rows {
            let cells: Vec<&str> = r.iter().map(|c| if c.is_empty() { "NaN" } else { c.as_str() }).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

/// One row per `(ε, level)` with every report field and the rate against the
/// previous level.
pub fn perturbation_table(study: &PerturbationStudy) -> Table {
    let mut t = Table::new([
        "eps",
        "n",
        "h",
        "h1_error",
        "h2_error",
        "energy_error",
        "energy_norm",
        "relative_energy_error",
        "tracked_error",
        "rate",
    ]);
    for s in &study.series {
        for (i, (r, n)) in s.reports.iter().zip(&s.levels).enumerate() {
            let rate = if i == 0 { None } else { s.rates.rates[i - 1] };
            t.push(vec![
                fmt_f64(s.eps),
                n.to_string(),
                fmt_f64(r.h),
                fmt_f64(r.h1_error),
                fmt_f64(r.h2_error),
                fmt_f64(r.energy_error),
                fmt_f64(r.energy_norm),
                fmt_f64(r.relative_energy_error),
                fmt_f64(tracked_error(study.config.exact, r)),
                fmt_opt(rate),
            ]);
        }
    }
    t
}

/// One row per eigenvalue index, one column per level, then the rate.
pub fn transmission_table(study: &TransmissionStudy) -> Table {
    let mut cols = vec!["index".to_string()];
    cols.extend(study.levels.iter().map(|l| format!("lambda_n{}", l.n)));
    cols.push("rate".into());
    let mut t = Table::new(cols);
    for i in 0..study.config.k {
        let mut row = vec![(i + 1).to_string()];
        row.extend(study.levels.iter().map(|l| fmt_f64(l.lambdas[i])));
        row.push(fmt_opt(study.table.rates.get(i).copied().flatten()));
        t.push(row);
    }
    t
}

pub fn interpolation_table(rows: &[InterpolationRow]) -> Table {
    let mut t = Table::new(["h", "error_k0", "error_k1", "error_k2", "rate_k0", "rate_k1", "rate_k2"]);
    for r in rows {
        let mut row = vec![fmt_f64(r.h)];
        row.extend(r.errors.iter().map(|&e| fmt_f64(e)));
        row.extend(r.rates.iter().map(|&e| fmt_opt(e)));
        t.push(row);
    }
    t
}
