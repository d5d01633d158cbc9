//! Long-format plot data: `x, y, series, ci_lo, ci_hi`, one row per point.

use std::path::{Path, PathBuf};

use crate::manifest::SUMMARY_FILE;
use crate::table::Table;
use crate::CliError;

pub const FIGURE_FILE: &str = "figure.csv";
pub const FIGURE_COLUMNS: [&str; 5] = ["x", "y", "series", "ci_lo", "ci_hi"];

/// Column lookups on one results table, failing with the file name.
struct Cols<'a> {
    table: &'a Table,
    file: String,
}

impl Cols<'_> {
    fn idx(&self, name: &str) -> Result<usize, CliError> {
        self.table
            .column(name)
            .ok_or_else(|| CliError::MissingColumn { file: self.file.clone(), column: name.to_string() })
    }

    /// `(x, y, ci_lo, ci_hi)` columns per row; a missing CI column name
    /// leaves those cells empty.
    fn points(&self, x: &str, y: &str, ci: Option<(&str, &str)>) -> Result<Vec<[String; 4]>, CliError> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        let ci = ci.map(|(lo, hi)| Ok::<_, CliError>((self.idx(lo)?, self.idx(hi)?))).transpose()?;
        Ok(self
            .table
            .rows
            .iter()
            .map(|r| {
                let (lo, hi) = ci.map_or((String::new(), String::new()), |(l, h)| (r[l].clone(), r[h].clone()));
                [r[xi].clone(), r[yi].clone(), lo, hi]
            })
            .collect())
    }
}

fn push_series(out: &mut Table, series: &str, points: Vec<[String; 4]>) {
    for [x, y, lo, hi] in points {
        out.push(vec![x, y, series.to_string(), lo, hi]);
    }
}

/// Same points split by the value of `key`, in first-seen order.
fn grouped(cols: &Cols, key: &str, label: &str, x: &str, y: &str, ci: Option<(&str, &str)>) -> Result<Table, CliError> {
    let ki = cols.idx(key)?;
    let points = cols.points(x, y, ci)?;
    let mut keys: Vec<&String> = Vec::new();
    for r in &cols.table.rows {
        if !keys.contains(&&r[ki]) {
            keys.push(&r[ki]);
        }
    }
    let mut out = Table::new(&FIGURE_COLUMNS);
    for k in keys {
        let pts = cols.table.rows.iter().zip(&points).filter(|(r, _)| &r[ki] == k).map(|(_, p)| p.clone()).collect();
        push_series(&mut out, &format!("{label}{k}"), pts);
    }
    Ok(out)
}

/// Builds the figure table for a results table of the given kind.
pub fn figure_table(kind: &str, table: &Table, file: &str) -> Result<Table, CliError> {
    let cols = Cols { table, file: file.to_string() };
    let mut out = Table::new(&FIGURE_COLUMNS);
    match kind {
        "gw_speed_curve" => return grouped(&cols, "pmf", "pmf ", "beta", "v", Some(("ci_lo", "ci_hi"))),
        "gw_lattice" => return grouped(&cols, "lambda", "lambda=", "k", "median", Some(("q25", "q75"))),
        "btm_aging" => {
            push_series(&mut out, "empirical", cols.points("ratio", "empirical", Some(("ci_lo", "ci_hi")))?);
            push_series(&mut out, "arcsine", cols.points("ratio", "arcsine", None)?);
        }
        "iic_aging" => {
            push_series(&mut out, "empirical", cols.points("limit", "prob", Some(("ci_lo", "ci_hi")))?);
            push_series(&mut out, "a/b", cols.points("limit", "limit", None)?);
        }
        "gw_einstein" => push_series(&mut out, "v/a", cols.points("a", "v_over_a", None)?),
        "perc_speed" => {
            push_series(&mut out, "speed", cols.points("lambda", "v", Some(("ci_lo", "ci_hi")))?);
            push_series(&mut out, "hitting slope", cols.points("lambda", "slope", Some(("slope_lo", "slope_hi")))?);
        }
        "perc_zeta" => push_series(&mut out, "P[BK > n]", cols.points("n", "prob", None)?),
        "gw_trap_tail" => push_series(&mut out, "tail ratio", cols.points("n", "ratio", None)?),
        "iic_height" => push_series(&mut out, "n P[H >= n]", cols.points("n", "scaled", None)?),
        "iic_displacement" => push_series(&mut out, "median level", cols.points("n", "median", None)?),
        other => return Err(CliError::Config(format!("no figure layout for experiment kind {other}"))),
    }
    Ok(out)
}

/// Reads a run directory and writes `figure.csv` next to its results.
pub fn figure(run_dir: &Path) -> Result<PathBuf, CliError> {
    let summary_path = run_dir.join(SUMMARY_FILE);
    let text =
        std::fs::read_to_string(&summary_path).map_err(|e| CliError::Config(format!("{}: {e}", summary_path.display())))?;
    let summary: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let kind = summary["kind"]
        .as_str()
        .ok_or_else(|| CliError::MissingColumn { file: SUMMARY_FILE.into(), column: "kind".into() })?;
    let results = run_dir.join("results.csv");
    let table = Table::read(&results)?;
    let out = figure_table(kind, &table, "results.csv")?;
    let path = run_dir.join(FIGURE_FILE);
    std::fs::write(&path, out.to_bytes())?;
    Ok(path)
}
