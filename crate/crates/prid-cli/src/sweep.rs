//! Parameter sweeps: decompose a family of models across a grid of one or
//! two coefficient values and tabulate every measure per grid point.
//!
//! Each grid point instantiates the base model with the swept coefficients
//! replaced, then computes the decomposition analytically from the model
//! parameters. No data is simulated unless estimation mode is requested,
//! in which case each point additionally simulates a series, refits, and
//! reports the estimated measures next to the analytic ones.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use prid::{
    decompose_model, run_analysis, AnalysisConfig, OrderSpec, PridError, PridResult, Result,
    Units, VarModel, DEFAULT_BURN_IN,
};

/// One swept coefficient: entry `(row, col)` of the lag-`lag` matrix walks
/// `steps` evenly spaced values from `min` to `max` inclusive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepParam {
    pub name: String,
    /// 1-based lag of the coefficient matrix.
    pub lag: usize,
    /// 0-based target row (unit receiving the influence).
    pub row: usize,
    /// 0-based source column (unit exerting the influence).
    pub col: usize,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepParam {
    fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let width = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + width * i as f64).collect()
    }
}

fn sweep_schema() -> String {
    "prid/sweep-v1".to_string()
}

/// A sweep definition: base model, one or two swept coefficients, and an
/// optional restriction of which measures to tabulate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default = "sweep_schema")]
    pub schema: String,
    pub base: VarModel,
    pub sweep: Vec<SweepParam>,
    /// Measure names to keep in the table; all when absent. Valid names:
    /// `pi`, `mi`, `unique`, `redundancy`, `synergy`, `delta_wms`,
    /// `delta_pid` (`mi` and `unique` expand to one column per unit).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
}

const MEASURE_GROUPS: [&str; 7] = [
    "pi",
    "mi",
    "unique",
    "redundancy",
    "synergy",
    "delta_wms",
    "delta_pid",
];

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec = serde_json::from_str(text)
            .map_err(|e| PridError::InvalidInput(format!("invalid sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != sweep_schema() {
            return Err(PridError::InvalidInput(format!(
                "unsupported sweep schema '{}', expected '{}'",
                self.schema,
                sweep_schema()
            )));
        }
        if self.sweep.is_empty() || self.sweep.len() > 2 {
            return Err(PridError::InvalidInput(format!(
                "sweep supports 1 or 2 parameters, got {}",
                self.sweep.len()
            )));
        }
        let n = self.base.n_vars();
        let p = self.base.order();
        for param in &self.sweep {
            if param.name.is_empty() {
                return Err(PridError::InvalidInput(
                    "sweep parameter name must not be empty".to_string(),
                ));
            }
            if param.lag == 0 || param.lag > p {
                return Err(PridError::InvalidInput(format!(
                    "sweep parameter '{}': lag {} outside the model's 1..={p}",
                    param.name, param.lag
                )));
            }
            if param.row >= n || param.col >= n {
                return Err(PridError::InvalidInput(format!(
                    "sweep parameter '{}': entry ({}, {}) outside a {n}x{n} matrix",
                    param.name, param.row, param.col
                )));
            }
            if param.steps == 0 {
                return Err(PridError::InvalidInput(format!(
                    "sweep parameter '{}': steps must be at least 1",
                    param.name
                )));
            }
            if !(param.min.is_finite() && param.max.is_finite()) || param.min > param.max {
                return Err(PridError::InvalidInput(format!(
                    "sweep parameter '{}': range [{}, {}] is not a valid interval",
                    param.name, param.min, param.max
                )));
            }
            if param.steps > 1 && param.min == param.max {
                return Err(PridError::InvalidInput(format!(
                    "sweep parameter '{}': {} steps over a zero-width range",
                    param.name, param.steps
                )));
            }
        }
        if self.sweep.len() == 2 && self.sweep[0].name == self.sweep[1].name {
            return Err(PridError::InvalidInput(format!(
                "sweep parameters must have distinct names, both are '{}'",
                self.sweep[0].name
            )));
        }
        if let Some(outputs) = &self.outputs {
            for name in outputs {
                if !MEASURE_GROUPS.contains(&name.as_str()) {
                    return Err(PridError::InvalidInput(format!(
                        "unknown output measure '{name}', valid: {}",
                        MEASURE_GROUPS.join(", ")
                    )));
                }
            }
        }
        Ok(())
    }

    /// All grid points in row-major order: the first parameter varies
    /// slowest, values ascending within each parameter.
    fn grid(&self) -> Vec<Vec<f64>> {
        let first = self.sweep[0].values();
        match self.sweep.get(1) {
            None => first.into_iter().map(|v| vec![v]).collect(),
            Some(second) => {
                let second = second.values();
                let mut points = Vec::with_capacity(first.len() * second.len());
                for a in &first {
                    for b in &second {
                        points.push(vec![*a, *b]);
                    }
                }
                points
            }
        }
    }

    /// The base model with the swept coefficients set to `point`.
    fn instantiate(&self, point: &[f64]) -> Result<VarModel> {
        let mut coeffs: Vec<_> = self.base.coeffs().to_vec();
        for (param, value) in self.sweep.iter().zip(point) {
            coeffs[param.lag - 1][(param.row, param.col)] = *value;
        }
        VarModel::new(coeffs, self.base.innov_cov().clone())
    }
}

/// How a grid point was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    /// The instantiated model is not stationary; measures are empty.
    Unstable,
    /// The decomposition failed numerically; measures are empty.
    Error,
}

impl PointStatus {
    fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Unstable => "unstable",
            PointStatus::Error => "error",
        }
    }
}

/// One tabulated grid point.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub status: PointStatus,
    pub result: Option<PridResult>,
    /// Present in estimation mode for points that resolved.
    pub estimated: Option<PridResult>,
    /// Failure detail for non-ok points.
    pub note: String,
}

/// Estimation mode: per grid point, simulate this many samples from the
/// instantiated model and refit before decomposing.
#[derive(Clone, Copy, Debug)]
pub struct EstimateConfig {
    pub samples: usize,
    pub seed: u64,
    pub max_order: usize,
}

/// Evaluates the whole grid in parallel; output order is row-major and
/// independent of scheduling.
pub fn run_sweep(
    spec: &SweepSpec,
    q: usize,
    units: Units,
    estimate: Option<EstimateConfig>,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points = spec.grid();
    points
        .into_par_iter()
        .enumerate()
        .map(|(index, point)| evaluate_point(spec, index, point, q, units, estimate))
        .collect()
}

fn evaluate_point(
    spec: &SweepSpec,
    index: usize,
    point: Vec<f64>,
    q: usize,
    units: Units,
    estimate: Option<EstimateConfig>,
) -> Result<SweepRow> {
    let model = spec.instantiate(&point)?;
    let result = match decompose_model(&model, q) {
        Ok(result) => result.in_units(units),
        Err(err) => {
            // Stationarity is checked where the covariances are computed,
            // so a non-stationary grid point surfaces here.
            let status = match err {
                PridError::NonStationary { .. } => PointStatus::Unstable,
                _ => PointStatus::Error,
            };
            return Ok(SweepRow {
                values: point,
                status,
                result: None,
                estimated: None,
                note: err.to_string(),
            });
        }
    };
    let mut note = String::new();
    let estimated = match estimate {
        None => None,
        Some(cfg) => {
            let run = || -> Result<PridResult> {
                let series = model.simulate(
                    cfg.samples,
                    DEFAULT_BURN_IN,
                    cfg.seed.wrapping_add(index as u64),
                )?;
                let analysis = AnalysisConfig {
                    order: OrderSpec::Bic {
                        max_order: cfg.max_order,
                    },
                    q,
                    report_q_sensitivity: false,
                    ..AnalysisConfig::default()
                };
                Ok(run_analysis(&series, &analysis)?.result.in_units(units))
            };
            // An estimation failure leaves the analytic value usable, so
            // it is noted on the row rather than aborting the grid.
            match run() {
                Ok(estimated) => Some(estimated),
                Err(err) => {
                    note = format!("estimation failed: {err}");
                    None
                }
            }
        }
    };
    Ok(SweepRow {
        values: point,
        status: PointStatus::Ok,
        result: Some(result),
        estimated,
        note,
    })
}

/// The measure columns implied by the spec's output selection for a model
/// with `n` units.
fn measure_columns(spec: &SweepSpec, n: usize) -> Vec<String> {
    let keep = |name: &str| match &spec.outputs {
        None => true,
        Some(outputs) => outputs.iter().any(|o| o == name),
    };
    let mut columns = Vec::new();
    if keep("pi") {
        columns.push("pi".to_string());
    }
    if keep("mi") {
        columns.extend((1..=n).map(|i| format!("mi_{i}")));
    }
    if keep("unique") {
        columns.extend((1..=n).map(|i| format!("unique_{i}")));
    }
    for name in ["redundancy", "synergy", "delta_wms", "delta_pid"] {
        if keep(name) {
            columns.push(name.to_string());
        }
    }
    columns
}

fn measure_value(result: &PridResult, column: &str) -> f64 {
    if let Some(rest) = column.strip_prefix("mi_") {
        let i: usize = rest.parse().expect("column index");
        return result.mi_single[i - 1];
    }
    if let Some(rest) = column.strip_prefix("unique_") {
        let i: usize = rest.parse().expect("column index");
        return result.unique[i - 1];
    }
    match column {
        "pi" => result.pi,
        "redundancy" => result.redundancy,
        "synergy" => result.synergy,
        "delta_wms" => result.delta_wms,
        "delta_pid" => result.delta_pid,
        other => unreachable!("unknown measure column {other}"),
    }
}

/// Writes the grid table as CSV: swept values, status, measures (empty for
/// unresolved points), estimated measures when present, and a note column.
pub fn write_sweep_csv<W: Write>(sink: W, spec: &SweepSpec, rows: &[SweepRow]) -> Result<()> {
    let n = spec.base.n_vars();
    let columns = measure_columns(spec, n);
    let mut writer = csv::Writer::from_writer(sink);

    let estimated_present = rows.iter().any(|r| r.estimated.is_some());
    let mut header: Vec<String> = spec.sweep.iter().map(|p| p.name.clone()).collect();
    header.push("status".to_string());
    header.extend(columns.iter().cloned());
    if estimated_present {
        header.extend(columns.iter().map(|c| format!("est_{c}")));
    }
    header.push("note".to_string());
    writer
        .write_record(&header)
        .map_err(|e| PridError::InvalidInput(format!("cannot write sweep header: {e}")))?;

    for row in rows {
        let mut record: Vec<String> = row.values.iter().map(f64::to_string).collect();
        record.push(row.status.as_str().to_string());
        push_measures(&mut record, row.result.as_ref(), &columns);
        if estimated_present {
            push_measures(&mut record, row.estimated.as_ref(), &columns);
        }
        record.push(row.note.clone());
        writer
            .write_record(&record)
            .map_err(|e| PridError::InvalidInput(format!("cannot write sweep row: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| PridError::InvalidInput(format!("cannot flush sweep output: {e}")))?;
    Ok(())
}

fn push_measures(record: &mut Vec<String>, result: Option<&PridResult>, columns: &[String]) {
    match result {
        Some(result) => {
            record.extend(columns.iter().map(|c| measure_value(result, c).to_string()))
        }
        None => record.extend(columns.iter().map(|_| String::new())),
    }
}
