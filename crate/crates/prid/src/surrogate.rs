//! Permutation surrogates and percentile significance tests.
//!
//! Shuffling the sample order destroys every time-lagged dependency while
//! keeping the marginal distributions; applying the same shuffle to all
//! columns also keeps the zero-lag covariance, which the predictive
//! information does not measure. Re-running the full analysis on many
//! such surrogates yields a null distribution for each measure, and the
//! original value is compared against its percentiles: one-tailed for
//! non-negative measures, two-tailed for the signed balances.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{run_analysis, AnalysisConfig, AnalysisOutcome};
use crate::error::{PridError, Result};
use crate::lattice::PridResult;
use crate::var::TimeSeries;

/// Settings for surrogate generation and the percentile test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub n_surrogates: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Apply one shared row permutation to all columns (keeps zero-lag
    /// correlations); otherwise shuffle each column independently.
    pub shared_permutation: bool,
}

impl Default for SurrogateConfig {
    fn default() -> SurrogateConfig {
        SurrogateConfig {
            n_surrogates: 100,
            alpha: 0.05,
            seed: 0,
            shared_permutation: true,
        }
    }
}

impl SurrogateConfig {
    fn validate(&self) -> Result<()> {
        if self.n_surrogates < 20 {
            return Err(PridError::InvalidInput(format!(
                "at least 20 surrogates are needed to resolve percentiles, got {}",
                self.n_surrogates
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PridError::InvalidInput(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Which side(s) of the surrogate distribution count as significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// Non-negative measure: significant above the `1 - alpha` percentile.
    Upper,
    /// Signed balance: significant outside the central `1 - alpha` band.
    Two,
}

/// Test outcome for one measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSignificance {
    pub measure: String,
    pub original: f64,
    /// Share of surrogate values strictly below the original, in percent.
    pub percentile: f64,
    pub significant: bool,
    pub tail: Tail,
    /// The full surrogate distribution, omitted from serialized output
    /// when stripped via [`SignificanceReport::without_surrogate_values`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogates: Option<Vec<f64>>,
}

fn significance_schema() -> String {
    "prid/significance-v1".to_string()
}

/// Significance decisions for every decomposition measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    #[serde(default = "significance_schema")]
    pub schema: String,
    pub n_surrogates: usize,
    pub alpha: f64,
    pub measures: Vec<MeasureSignificance>,
}

impl SignificanceReport {
    pub fn measure(&self, name: &str) -> Option<&MeasureSignificance> {
        self.measures.iter().find(|m| m.measure == name)
    }

    /// Copy with the per-measure surrogate distributions dropped, for
    /// compact serialization.
    pub fn without_surrogate_values(&self) -> SignificanceReport {
        let mut out = self.clone();
        for m in &mut out.measures {
            m.surrogates = None;
        }
        out
    }
}

/// Returns a copy of the series with its sample order shuffled, using one
/// shared row permutation or independent per-column shuffles.
pub fn make_surrogate(
    series: &TimeSeries,
    shared_permutation: bool,
    rng: &mut impl Rng,
) -> TimeSeries {
    let data = series.data();
    let (t, n) = (data.nrows(), data.ncols());
    let shuffled = if shared_permutation {
        let mut rows: Vec<usize> = (0..t).collect();
        rows.shuffle(rng);
        DMatrix::from_fn(t, n, |r, c| data[(rows[r], c)])
    } else {
        let mut out = DMatrix::zeros(t, n);
        let mut rows: Vec<usize> = (0..t).collect();
        for c in 0..n {
            rows.shuffle(rng);
            for r in 0..t {
                out[(r, c)] = data[(rows[r], c)];
            }
        }
        out
    };
    let surrogate = TimeSeries::new(shuffled).expect("shuffled data stays finite and non-empty");
    match series.labels() {
        Some(labels) => surrogate
            .with_labels(labels.to_vec())
            .expect("label count unchanged"),
        None => surrogate,
    }
}

/// Nearest-rank percentile: the `ceil(p * n)`-th smallest value.
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// The measures extracted from a decomposition for testing, with their
/// tail rule. Indices in names are 1-based to match column labels.
fn measure_values(result: &PridResult) -> Vec<(String, f64, Tail)> {
    let mut out = vec![("pi".to_string(), result.pi, Tail::Upper)];
    for (i, mi) in result.mi_single.iter().enumerate() {
        out.push((format!("mi_{}", i + 1), *mi, Tail::Upper));
    }
    for (i, u) in result.unique.iter().enumerate() {
        out.push((format!("unique_{}", i + 1), *u, Tail::Upper));
    }
    out.push(("redundancy".to_string(), result.redundancy, Tail::Upper));
    out.push(("synergy".to_string(), result.synergy, Tail::Upper));
    out.push(("delta_wms".to_string(), result.delta_wms, Tail::Two));
    out.push(("delta_pid".to_string(), result.delta_pid, Tail::Two));
    out
}

/// Runs the analysis on the original series and on `n_surrogates`
/// shuffled copies, then tests each measure against the surrogate
/// percentiles. Returns the original analysis alongside the report.
///
/// Each surrogate draws from its own child random stream, so results are
/// reproducible for a given seed and independent of evaluation order. A
/// surrogate whose analysis fails is redrawn once; a second failure
/// aborts the test.
pub fn significance_test(
    series: &TimeSeries,
    cfg: &SurrogateConfig,
    analysis: &AnalysisConfig,
) -> Result<(AnalysisOutcome, SignificanceReport)> {
    cfg.validate()?;
    let outcome = run_analysis(series, analysis)?;
    let report = surrogate_pass(series, cfg, &outcome.result, |_, surrogate| {
        run_analysis(surrogate, analysis).map(|o| o.result)
    })?;
    Ok((outcome, report))
}

/// Surrogate loop with the per-surrogate analysis injected, so failure
/// handling is testable without constructing data that fails to fit.
fn surrogate_pass(
    series: &TimeSeries,
    cfg: &SurrogateConfig,
    original: &PridResult,
    analyze: impl Fn(usize, &TimeSeries) -> Result<PridResult> + Sync,
) -> Result<SignificanceReport> {
    let surrogate_results: Vec<PridResult> = (0..cfg.n_surrogates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            let first = make_surrogate(series, cfg.shared_permutation, &mut rng);
            match analyze(i, &first) {
                Ok(result) => Ok(result),
                Err(first_err) => {
                    let second = make_surrogate(series, cfg.shared_permutation, &mut rng);
                    analyze(i, &second).map_err(|_| PridError::SurrogateFailed {
                        index: i,
                        source: Box::new(first_err),
                    })
                }
            }
        })
        .collect::<Result<_>>()?;

    let originals = measure_values(original);
    let mut measures = Vec::with_capacity(originals.len());
    for (idx, (name, value, tail)) in originals.into_iter().enumerate() {
        let mut values: Vec<f64> = surrogate_results
            .iter()
            .map(|r| measure_values(r)[idx].1)
            .collect();
        values.sort_by(f64::total_cmp);
        let below = values.iter().filter(|v| **v < value).count();
        let percentile = 100.0 * below as f64 / values.len() as f64;
        let significant = match tail {
            Tail::Upper => value > nearest_rank(&values, 1.0 - cfg.alpha),
            Tail::Two => {
                value < nearest_rank(&values, cfg.alpha / 2.0)
                    || value > nearest_rank(&values, 1.0 - cfg.alpha / 2.0)
            }
        };
        measures.push(MeasureSignificance {
            measure: name,
            original: value,
            percentile,
            significant,
            tail,
            surrogates: Some(values),
        });
    }

    Ok(SignificanceReport {
        schema: significance_schema(),
        n_surrogates: cfg.n_surrogates,
        alpha: cfg.alpha,
        measures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::OrderSpec;
    use crate::var::VarModel;
    use std::collections::HashMap;
    use std::sync::Mutex;

    fn ar1_plus_noise(a: f64) -> VarModel {
        let mut a1 = DMatrix::zeros(2, 2);
        a1[(0, 0)] = a;
        VarModel::new(vec![a1], DMatrix::identity(2, 2)).unwrap()
    }

    fn quick_analysis() -> AnalysisConfig {
        AnalysisConfig {
            order: OrderSpec::Bic { max_order: 5 },
            report_q_sensitivity: false,
            ..AnalysisConfig::default()
        }
    }

    #[test]
    fn config_rejects_unresolvable_settings() {
        let mut cfg = SurrogateConfig {
            n_surrogates: 19,
            ..SurrogateConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.n_surrogates = 20;
        assert!(cfg.validate().is_ok());
        cfg.alpha = 0.0;
        assert!(cfg.validate().is_err());
        cfg.alpha = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn every_column_of_a_surrogate_is_a_permutation() {
        let series = ar1_plus_noise(0.8).simulate(200, 100, 1).unwrap();
        for shared in [true, false] {
            let mut rng = ChaCha12Rng::seed_from_u64(2);
            let surr = make_surrogate(&series, shared, &mut rng);
            for c in 0..2 {
                let mut orig: Vec<f64> = series.data().column(c).iter().copied().collect();
                let mut got: Vec<f64> = surr.data().column(c).iter().copied().collect();
                orig.sort_by(f64::total_cmp);
                got.sort_by(f64::total_cmp);
                assert_eq!(orig, got, "column {c}, shared={shared}");
            }
        }
    }

    fn sorted_rows(data: &DMatrix<f64>) -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> = (0..data.nrows())
            .map(|r| data.row(r).iter().copied().collect())
            .collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows
    }

    #[test]
    fn shared_permutation_preserves_the_rows_and_zero_lag_covariance() {
        let series = ar1_plus_noise(0.9).simulate(300, 100, 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let surr = make_surrogate(&series, true, &mut rng);
        // Same multiset of sample vectors: identical rows after sorting,
        // so any row-order-canonical statistic matches bit for bit.
        assert_eq!(sorted_rows(series.data()), sorted_rows(surr.data()));
        // In natural row order the accumulation order differs, which can
        // move the last few bits only.
        let orig_cov = series.sample_covariance();
        let surr_cov = surr.sample_covariance();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (orig_cov[(i, j)] - surr_cov[(i, j)]).abs() <= 1e-10,
                    "covariance entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn independent_shuffles_break_zero_lag_correlation() {
        // Two identical columns correlate perfectly; per-column shuffles
        // destroy that while the shared permutation keeps it.
        let base = ar1_plus_noise(0.5).simulate(400, 100, 5).unwrap();
        let col: Vec<f64> = base.data().column(0).iter().copied().collect();
        let data = DMatrix::from_fn(400, 2, |r, _| col[r]);
        let series = TimeSeries::new(data).unwrap();

        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let shared = make_surrogate(&series, true, &mut rng);
        let shared_cov = shared.sample_covariance();
        assert!((shared_cov[(0, 1)] - shared_cov[(0, 0)]).abs() <= 1e-10);

        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let independent = make_surrogate(&series, false, &mut rng);
        let ind_cov = independent.sample_covariance();
        let correlation = ind_cov[(0, 1)] / (ind_cov[(0, 0)] * ind_cov[(1, 1)]).sqrt();
        assert!(
            correlation.abs() < 0.2,
            "independent shuffles left correlation {correlation}"
        );
    }

    #[test]
    fn strong_autocorrelation_is_detected_as_significant() {
        let series = ar1_plus_noise(0.9).simulate(300, 100, 7).unwrap();
        let cfg = SurrogateConfig::default();
        let (outcome, report) = significance_test(&series, &cfg, &quick_analysis()).unwrap();
        let pi = report.measure("pi").unwrap();
        assert!(pi.significant);
        assert_eq!(pi.percentile, 100.0);
        assert_eq!(pi.original, outcome.result.pi);
        assert_eq!(pi.tail, Tail::Upper);
        assert!(pi
            .surrogates
            .as_ref()
            .unwrap()
            .iter()
            .all(|s| *s < pi.original));
        // The unit with the dynamics also shows significant own-past
        // information.
        assert!(report.measure("mi_1").unwrap().significant);
        assert_eq!(report.measure("delta_wms").unwrap().tail, Tail::Two);
    }

    #[test]
    fn white_noise_is_not_flagged_in_a_typical_run() {
        let model = VarModel::new(vec![], DMatrix::identity(3, 3)).unwrap();
        let series = model.simulate(300, 50, 8).unwrap();
        let (_, report) = significance_test(
            &series,
            &SurrogateConfig::default(),
            &quick_analysis(),
        )
        .unwrap();
        assert!(!report.measure("pi").unwrap().significant);
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let series = ar1_plus_noise(0.7).simulate(250, 100, 9).unwrap();
        let cfg = SurrogateConfig {
            n_surrogates: 30,
            seed: 42,
            ..SurrogateConfig::default()
        };
        let (_, a) = significance_test(&series, &cfg, &quick_analysis()).unwrap();
        let (_, b) = significance_test(&series, &cfg, &quick_analysis()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn surrogate_bias_floor_shrinks_with_series_length() {
        // Shuffled data still yields slightly positive fitted information
        // because the estimator chases noise; that bias must fall as the
        // series grows.
        let model = ar1_plus_noise(0.8);
        let mean_surrogate_pi = |t: usize| {
            let series = model.simulate(t, 100, 10).unwrap();
            let cfg = SurrogateConfig {
                n_surrogates: 40,
                ..SurrogateConfig::default()
            };
            let (_, report) = significance_test(&series, &cfg, &quick_analysis()).unwrap();
            let values = report.measure("pi").unwrap().surrogates.clone().unwrap();
            values.iter().sum::<f64>() / values.len() as f64
        };
        let short = mean_surrogate_pi(300);
        let long = mean_surrogate_pi(3000);
        assert!(short > 0.0);
        assert!(
            long < short,
            "bias floor grew with length: {long} vs {short}"
        );
    }

    #[test]
    fn nearest_rank_uses_the_stated_cut_points() {
        let sorted: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&sorted, 0.95), 95.0);
        assert_eq!(nearest_rank(&sorted, 0.025), 3.0);
        assert_eq!(nearest_rank(&sorted, 0.975), 98.0);
        let twenty: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&twenty, 0.95), 19.0);
        assert_eq!(nearest_rank(&twenty, 0.025), 1.0);
    }

    #[test]
    fn failing_surrogate_is_redrawn_once_then_reported() {
        let series = ar1_plus_noise(0.6).simulate(150, 50, 11).unwrap();
        let cfg = SurrogateConfig {
            n_surrogates: 20,
            ..SurrogateConfig::default()
        };
        let template = crate::analysis::run_analysis(&series, &quick_analysis())
            .unwrap()
            .result;

        // One transient failure at index 2: the redraw succeeds.
        let attempts: Mutex<HashMap<usize, usize>> = Mutex::new(HashMap::new());
        let report = surrogate_pass(&series, &cfg, &template, |i, _| {
            let mut attempts = attempts.lock().unwrap();
            let n = attempts.entry(i).or_insert(0);
            *n += 1;
            if i == 2 && *n == 1 {
                Err(PridError::InvalidInput("transient".to_string()))
            } else {
                Ok(template.clone())
            }
        })
        .unwrap();
        assert_eq!(report.measures.len(), 4 + 2 * 2 + 1);
        assert_eq!(attempts.lock().unwrap()[&2], 2);

        // A persistent failure surfaces with the surrogate's index.
        let err = surrogate_pass(&series, &cfg, &template, |i, _| {
            if i == 5 {
                Err(PridError::InvalidInput("broken".to_string()))
            } else {
                Ok(template.clone())
            }
        })
        .unwrap_err();
        match err {
            PridError::SurrogateFailed { index, .. } => assert_eq!(index, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn report_serialization_can_omit_the_distributions() {
        let series = ar1_plus_noise(0.8).simulate(200, 50, 12).unwrap();
        let cfg = SurrogateConfig {
            n_surrogates: 20,
            ..SurrogateConfig::default()
        };
        let (_, report) = significance_test(&series, &cfg, &quick_analysis()).unwrap();
        let full = serde_json::to_string(&report).unwrap();
        assert!(full.contains("\"schema\":\"prid/significance-v1\""));
        assert!(full.contains("\"surrogates\":["));
        assert!(full.contains("\"tail\":\"upper\""));
        let compact = serde_json::to_string(&report.without_surrogate_values()).unwrap();
        assert!(!compact.contains("\"surrogates\""));
        let back: SignificanceReport = serde_json::from_str(&full).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn original_analysis_errors_pass_through_unwrapped() {
        let model = ar1_plus_noise(0.5);
        let series = model.simulate(5, 0, 13).unwrap();
        let err = significance_test(&series, &SurrogateConfig::default(), &quick_analysis())
            .unwrap_err();
        assert!(
            !matches!(err, PridError::SurrogateFailed { .. }),
            "short input must fail before the surrogate loop: {err:?}"
        );
    }
}
