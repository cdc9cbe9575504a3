//! CSV and JSON output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tiler_core::tiling::{StageStats, StallDiagnostic};

use crate::config::Config;
use crate::error::{LabError, LabResult};

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: usize,
    pub eps: f64,
    pub mass_within_eps: f64,
    pub max_tile: usize,
    pub mean_tile: f64,
    pub wall_ms: u64,
}

/// Full per-stage record for the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub lambda: f64,
    pub min_ratio: f64,
    pub pack_ratio: f64,
    pub mass_within_eps: f64,
    pub frontier_mass: f64,
    pub covered_mass: f64,
    pub new_cells: usize,
    pub tiles: usize,
    pub max_tile: usize,
    pub mean_tile: f64,
    pub histogram: Vec<usize>,
    pub exhaustive: bool,
    /// Ratio runs only: μ-mass whose tile ratio is within ε of the target.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio_mass: Option<f64>,
    pub wall_ms: u64,
}

impl StageRecord {
    pub fn new(stats: &StageStats, wall_ms: u64) -> Self {
        StageRecord {
            stage: stats.stage,
            lambda: stats.lambda,
            min_ratio: stats.min_ratio,
            pack_ratio: stats.pack_ratio,
            mass_within_eps: stats.mass_within_eps,
            frontier_mass: stats.frontier_mass,
            covered_mass: stats.covered_mass,
            new_cells: stats.new_cells,
            tiles: stats.tiles,
            max_tile: stats.max_tile,
            mean_tile: stats.mean_tile,
            histogram: stats.histogram.clone(),
            exhaustive: stats.exhaustive,
            ratio_mass: None,
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallRecord {
    pub stage: usize,
    pub components: Vec<usize>,
    /// Components where the 2/13 flow-away bound fails.
    pub flow_violations: Vec<usize>,
}

impl From<&StallDiagnostic> for StallRecord {
    fn from(d: &StallDiagnostic) -> Self {
        StallRecord {
            stage: d.stage,
            components: d.components.clone(),
            flow_violations: d.flow_checks.iter().filter(|c| !c.holds).map(|c| c.component).collect(),
        }
    }
}

/// Everything a run reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Config,
    pub seed: u64,
    pub vertices: usize,
    pub eps: f64,
    /// `∫f dμ` as computed from the atoms.
    pub integral: f64,
    /// Closed-form value where the model has one.
    pub exact_integral: Option<f64>,
    pub stages: Vec<StageRecord>,
    pub reached: bool,
    pub stall: Option<StallRecord>,
    /// Ratio runs only: largest `|tile ratio − target|` over interior tiles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio_error: Option<f64>,
    pub wall_ms: u64,
    /// Classes of the final relation, written separately as a dump.
    #[serde(skip)]
    pub tiles: Vec<Vec<usize>>,
}

impl RunReport {
    /// CSV rows. Wall times are zeroed unless the config asks for timing.
    pub fn rows(&self) -> Vec<StageRow> {
        self.stages
            .iter()
            .map(|s| StageRow {
                stage: s.stage,
                eps: self.eps,
                mass_within_eps: s.ratio_mass.unwrap_or(s.mass_within_eps),
                max_tile: s.max_tile,
                mean_tile: s.mean_tile,
                wall_ms: if self.config.timing { s.wall_ms } else { 0 },
            })
            .collect()
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> LabError + '_ {
    move |source| LabError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv(path: &Path, rows: &[StageRow]) -> LabResult<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err(path))?;
    // Written by hand so that an empty report still gets its header.
    w.write_record(["stage", "eps", "mass_within_eps", "max_tile", "mean_tile", "wall_ms"])
        .map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_csv(path: &Path) -> LabResult<Vec<StageRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `stages.csv` and `summary.json` into `dir`, creating it.
pub fn emit_report(report: &RunReport, dir: &Path) -> LabResult<Emitted> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let csv = dir.join("stages.csv");
    let json = dir.join("summary.json");
    write_csv(&csv, &report.rows())?;
    let text = serde_json::to_string_pretty(report).map_err(|source| LabError::Json {
        path: json.clone(),
        source,
    })?;
    std::fs::write(&json, text + "\n").map_err(|e| LabError::io(&json, e))?;
    Ok(Emitted { csv, json })
}
