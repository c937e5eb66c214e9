//! End-to-end analysis: from a time series (or a known model) to the
//! decomposition of its predictive information.
//!
//! The pipeline mirrors how the measures are used in practice: center the
//! series, pick a model order, fit the model by least squares, then run
//! the information decomposition on the fitted parameters. Everything in
//! between is deterministic, so the only stochastic input is the data.

use crate::error::{PridError, Result};
use crate::info::{InfoContext, SigmaXSource};
use crate::lattice::{decompose, PridResult};
use crate::sources::SourceSet;
use crate::var::{estimate_var, select_order, TimeSeries, VarModel};

/// How the model order is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderSpec {
    /// Use this order as given.
    Fixed(usize),
    /// Minimize the Bayesian information criterion over `1..=max_order`.
    Bic { max_order: usize },
}

/// Where the process covariance in the information measures comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaXMode {
    /// Stationary covariance implied by the fitted model.
    ModelImplied,
    /// Sample covariance of the analyzed series.
    SampleEstimate,
}

/// Settings for [`run_analysis`].
#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub order: OrderSpec,
    /// Embedding order for restricted models.
    pub q: usize,
    pub sigma_x: SigmaXMode,
    /// Also report how much the subset informations move when the
    /// embedding order is extended by five lags. The embedding is a
    /// truncation of an in-principle unbounded regression, so a small
    /// value here indicates `q` was large enough.
    pub report_q_sensitivity: bool,
}

impl Default for AnalysisConfig {
    fn default() -> AnalysisConfig {
        AnalysisConfig {
            order: OrderSpec::Bic { max_order: 10 },
            q: 20,
            sigma_x: SigmaXMode::ModelImplied,
            report_q_sensitivity: true,
        }
    }
}

impl AnalysisConfig {
    fn validate(&self) -> Result<()> {
        match self.order {
            OrderSpec::Fixed(0) => Err(PridError::InvalidInput(
                "fixed model order must be at least 1".to_string(),
            )),
            OrderSpec::Bic { max_order: 0 } => Err(PridError::InvalidInput(
                "maximum order for selection must be at least 1".to_string(),
            )),
            _ if self.q == 0 => Err(PridError::InvalidInput(
                "embedding order q must be at least 1".to_string(),
            )),
            _ => Ok(()),
        }
    }
}

/// A finished analysis: the decomposition plus everything needed to
/// reproduce or audit it.
#[derive(Clone, Debug)]
pub struct AnalysisOutcome {
    pub result: PridResult,
    pub model: VarModel,
    pub selected_order: usize,
    /// Criterion value per candidate order (`index + 1`), when order
    /// selection ran.
    pub order_criteria: Option<Vec<f64>>,
    /// Effective embedding order used for restricted models.
    pub q_used: usize,
    /// Largest shift of any single-source or full-set information when
    /// the embedding is extended by five lags, in nats.
    pub q_sensitivity: Option<f64>,
}

/// Fits a model to the series per `config` and decomposes its predictive
/// information.
pub fn run_analysis(series: &TimeSeries, config: &AnalysisConfig) -> Result<AnalysisOutcome> {
    config.validate()?;
    let (order, criteria) = match config.order {
        OrderSpec::Fixed(p) => (p, None),
        OrderSpec::Bic { max_order } => {
            let selection = select_order(series, max_order)?;
            (selection.selected, Some(selection.criteria))
        }
    };
    let model = estimate_var(series, order)?;
    let source = match config.sigma_x {
        SigmaXMode::ModelImplied => SigmaXSource::ModelImplied,
        SigmaXMode::SampleEstimate => SigmaXSource::SampleEstimate(series.sample_covariance()),
    };
    let ctx = InfoContext::new(model.clone(), config.q, source)?;
    let result = decompose(&ctx)?;
    let q_sensitivity = if config.report_q_sensitivity {
        Some(q_shift(&ctx, 5)?)
    } else {
        None
    };
    Ok(AnalysisOutcome {
        result,
        model,
        selected_order: order,
        order_criteria: criteria,
        q_used: ctx.q(),
        q_sensitivity,
    })
}

/// Decomposes the predictive information of a known model analytically,
/// with the model-implied process covariance.
pub fn decompose_model(model: &VarModel, q: usize) -> Result<PridResult> {
    let ctx = InfoContext::new(model.clone(), q, SigmaXSource::ModelImplied)?;
    decompose(&ctx)
}

/// Largest absolute change of any single-source or full-set information
/// when the embedding order grows by `extra` lags.
fn q_shift(base: &InfoContext, extra: usize) -> Result<f64> {
    let source = if base.sample_mode() {
        SigmaXSource::SampleEstimate(base.sigma_x().clone())
    } else {
        SigmaXSource::ModelImplied
    };
    let wider = InfoContext::new(base.model().clone(), base.q() + extra, source)?;
    let n = base.n_vars();
    let mut worst = 0.0f64;
    for subset in (0..n)
        .map(SourceSet::singleton)
        .chain(std::iter::once(SourceSet::full(n)))
    {
        let narrow = base.subset_mutual_information(subset)?;
        let wide = wider.subset_mutual_information(subset)?;
        worst = worst.max((wide - narrow).abs());
    }
    Ok(worst)
}
