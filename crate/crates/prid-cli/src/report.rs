//! Versioned JSON artifacts emitted by the command line, and the single
//! machine-parsable error record written to stderr on failure.

use serde::Serialize;

use prid::{
    AnalysisOutcome, ErrorKind, PridError, PridResult, SignificanceReport, TimeSeries, Units,
    VarModel,
};

/// Emergence indicators derived from the decomposition. Both are reported
/// because strictly positive synergy is only a sufficient condition for
/// the stronger net-synergy reading; no single verdict is forced.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmergenceFlags {
    /// Synergy strictly positive.
    pub synergy_positive: bool,
    /// Synergy exceeds redundancy (positive synergy-redundancy balance).
    pub net_synergy_positive: bool,
}

impl EmergenceFlags {
    pub fn from_result(result: &PridResult) -> EmergenceFlags {
        EmergenceFlags {
            synergy_positive: result.synergy > 0.0,
            net_synergy_positive: result.delta_pid > 0.0,
        }
    }
}

/// Everything an analysis run produces, in one self-describing document.
#[derive(Clone, Debug, Serialize)]
pub struct AnalysisArtifact {
    pub schema: String,
    pub n_samples: usize,
    pub n_vars: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub selected_order: usize,
    /// Criterion value per candidate order (`index + 1`) when order
    /// selection ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_criteria: Option<Vec<f64>>,
    pub q: usize,
    /// Largest shift of any subset information when the embedding grows
    /// by five lags; small values mean `q` was large enough.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_sensitivity: Option<f64>,
    pub model: VarModel,
    pub result: PridResult,
    pub flags: EmergenceFlags,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance: Option<SignificanceReport>,
}

impl AnalysisArtifact {
    pub fn new(
        series: &TimeSeries,
        outcome: AnalysisOutcome,
        significance: Option<SignificanceReport>,
        units: Units,
    ) -> AnalysisArtifact {
        let result = outcome.result.in_units(units);
        let flags = EmergenceFlags::from_result(&result);
        AnalysisArtifact {
            schema: "prid/analysis-v1".to_string(),
            n_samples: series.n_samples(),
            n_vars: series.n_vars(),
            labels: series.labels().map(<[String]>::to_vec),
            selected_order: outcome.selected_order,
            order_criteria: outcome.order_criteria,
            q: outcome.q_used,
            q_sensitivity: outcome.q_sensitivity,
            model: outcome.model,
            result,
            flags,
            significance: significance.map(|r| significance_in_units(r, units)),
        }
    }
}

/// Rescales the values in a significance report to the requested units.
/// Percentiles and decisions are scale invariant, so only the measure
/// values change.
pub fn significance_in_units(mut report: SignificanceReport, units: Units) -> SignificanceReport {
    let factor = match units {
        Units::Nats => return report,
        Units::Bits => 1.0 / std::f64::consts::LN_2,
    };
    for m in &mut report.measures {
        m.original *= factor;
        if let Some(values) = &mut m.surrogates {
            for v in values {
                *v *= factor;
            }
        }
    }
    report
}

/// The stderr error record: `{"schema": "prid/error-v1", "kind", "message"}`.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorArtifact {
    pub schema: String,
    pub kind: String,
    pub message: String,
}

impl ErrorArtifact {
    pub fn from_error(err: &PridError) -> ErrorArtifact {
        ErrorArtifact {
            schema: "prid/error-v1".to_string(),
            kind: match err.kind() {
                ErrorKind::Input => "input".to_string(),
                ErrorKind::Numerical => "numerical".to_string(),
            },
            message: err.to_string(),
        }
    }

    pub fn exit_code(err: &PridError) -> i32 {
        match err.kind() {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
        }
    }

    /// One line of JSON, safe for log scraping.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("error artifact serializes")
    }
}
