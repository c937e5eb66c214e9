//! Gaussian information measures computed from model parameters.
//!
//! For a stationary Gaussian process the mutual information between the next
//! state and any collection of past values reduces to a log-determinant
//! ratio of covariances. Two measures are exposed:
//!
//! * predictive information: `0.5 * ln(det sigma_x / det innov_cov)`, the
//!   information the entire system past carries about the next state;
//! * subset mutual information: `0.5 * ln(det sigma_x / det resid_cov(M))`,
//!   where the residual covariance comes from regressing the next state on
//!   the last `q` lags of subset `M` only.
//!
//! All values are in nats. An [`InfoContext`] fixes the model, the embedding
//! order `q` and the choice of `sigma_x`, and memoizes subset informations
//! so lattice evaluations touch each subset once.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::DMatrix;

use crate::error::{PridError, Result};
use crate::linalg;
use crate::moments::{lag_covariances, restricted_model, LagCovarianceSet};
use crate::sources::SourceSet;
use crate::var::VarModel;

/// Values this far below zero (in nats) are treated as roundoff and clamped;
/// anything lower is a hard inconsistency in model-implied mode.
pub const NEGATIVE_INFO_TOLERANCE: f64 = 1e-9;

/// Where the process covariance `sigma_x` comes from.
#[derive(Clone, Debug)]
pub enum SigmaXSource {
    /// The stationary covariance implied by the model (the default; keeps
    /// every information measure exactly consistent).
    ModelImplied,
    /// A caller-supplied estimate, e.g. the sample covariance of the data
    /// the model was fitted on. Estimation noise can then push small
    /// information values below zero; those are clamped to zero and
    /// reported, since they reflect sampling error rather than a broken
    /// computation.
    SampleEstimate(DMatrix<f64>),
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SubsetMi {
    pub value: f64,
    pub raw: f64,
    pub regularized: bool,
}

/// Fixed setting for a batch of information evaluations: model, embedding
/// order and `sigma_x`, with cached subset results.
#[derive(Debug)]
pub struct InfoContext {
    model: VarModel,
    cov: LagCovarianceSet,
    q: usize,
    q_raised: bool,
    sigma_x: DMatrix<f64>,
    sample_mode: bool,
    log_det_sigma_x: f64,
    pi_raw: f64,
    cache: RwLock<HashMap<u32, SubsetMi>>,
}

impl InfoContext {
    /// Builds a context. `q` is the embedding order for restricted models;
    /// it is raised to the model order if below it, because a shorter
    /// embedding cannot reproduce the model's own dynamics and would leave
    /// the full-subset information short of the predictive information.
    pub fn new(model: VarModel, q: usize, source: SigmaXSource) -> Result<InfoContext> {
        if q == 0 {
            return Err(PridError::InvalidInput(
                "embedding order q must be at least 1".to_string(),
            ));
        }
        let q_eff = q.max(model.order());
        let cov = lag_covariances(&model, q_eff)?;

        let n = model.n_vars();
        let (sigma_x, sample_mode) = match source {
            SigmaXSource::ModelImplied => (cov.sigma_x().clone(), false),
            SigmaXSource::SampleEstimate(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(PridError::InvalidInput(format!(
                        "sigma_x estimate is {}x{}, expected {n}x{n}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                linalg::check_spd(&m, "sigma_x estimate")?;
                (linalg::symmetrize(&m), true)
            }
        };

        let log_det_sigma_x = linalg::log_det_spd(&sigma_x, "sigma_x")?;
        let log_det_innov = linalg::log_det_spd(model.innov_cov(), "innovation covariance")?;
        let pi_raw = 0.5 * (log_det_sigma_x - log_det_innov);

        Ok(InfoContext {
            model,
            cov,
            q: q_eff,
            q_raised: q_eff != q,
            sigma_x,
            sample_mode,
            log_det_sigma_x,
            pi_raw,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn model(&self) -> &VarModel {
        &self.model
    }

    pub fn cov(&self) -> &LagCovarianceSet {
        &self.cov
    }

    pub fn n_vars(&self) -> usize {
        self.model.n_vars()
    }

    /// Effective embedding order (after any raise to the model order).
    pub fn q(&self) -> usize {
        self.q
    }

    pub(crate) fn q_raised(&self) -> bool {
        self.q_raised
    }

    pub fn sigma_x(&self) -> &DMatrix<f64> {
        &self.sigma_x
    }

    pub fn sample_mode(&self) -> bool {
        self.sample_mode
    }

    fn admit(&self, raw: f64, measure: &str) -> Result<f64> {
        if raw >= 0.0 {
            Ok(raw)
        } else if self.sample_mode || raw >= -NEGATIVE_INFO_TOLERANCE {
            Ok(0.0)
        } else {
            Err(PridError::NegativeInformation {
                measure: measure.to_string(),
                value: raw,
            })
        }
    }

    /// Information the collective past carries about the next state, in
    /// nats.
    pub fn predictive_information(&self) -> Result<f64> {
        self.admit(self.pi_raw, "predictive information")
    }

    /// Information the past of `subset` carries about the next full state,
    /// in nats. Results are cached per subset.
    pub fn subset_mutual_information(&self, subset: SourceSet) -> Result<f64> {
        Ok(self.subset_details(subset)?.value)
    }

    pub(crate) fn subset_details(&self, subset: SourceSet) -> Result<SubsetMi> {
        if let Some(hit) = self.cache.read().unwrap().get(&subset.bits()) {
            return Ok(*hit);
        }
        let restricted = restricted_model(&self.cov, subset, self.q)?;
        let ld_resid = linalg::log_det_spd(
            restricted.resid_cov(),
            &format!("residual covariance of subset {subset}"),
        )?;
        let raw = 0.5 * (self.log_det_sigma_x - ld_resid);
        let value = self.admit(raw, &format!("mutual information of subset {subset}"))?;
        let entry = SubsetMi {
            value,
            raw,
            regularized: restricted.regularized(),
        };
        self.cache.write().unwrap().insert(subset.bits(), entry);
        Ok(entry)
    }

    /// Subsets whose information was clamped from a negative raw value,
    /// with that raw value; includes the predictive information under the
    /// pseudo-subset key of the full set only if it was itself clamped.
    pub(crate) fn clamped_measures(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        if self.pi_raw < 0.0 && (self.sample_mode || self.pi_raw >= -NEGATIVE_INFO_TOLERANCE) {
            out.push(("predictive information".to_string(), self.pi_raw));
        }
        let cache = self.cache.read().unwrap();
        let mut keys: Vec<u32> = cache.keys().copied().collect();
        keys.sort_unstable();
        for bits in keys {
            let e = &cache[&bits];
            if e.raw < 0.0 {
                out.push((format!("subset {}", SourceSet::from_bits(bits)), e.raw));
            }
        }
        out
    }

    /// Subsets whose restricted model needed ridge regularization.
    pub(crate) fn regularized_subsets(&self) -> Vec<SourceSet> {
        let cache = self.cache.read().unwrap();
        let mut keys: Vec<u32> = cache
            .iter()
            .filter(|(_, e)| e.regularized)
            .map(|(k, _)| *k)
            .collect();
        keys.sort_unstable();
        keys.into_iter().map(SourceSet::from_bits).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn white_noise(n: usize) -> VarModel {
        VarModel::new(vec![], DMatrix::identity(n, n)).unwrap()
    }

    /// Unit 0 is an isolated AR(1) with coefficient `a`; the remaining
    /// units are independent white noise.
    fn isolated_ar1(a: f64, n: usize) -> VarModel {
        let mut a1 = DMatrix::zeros(n, n);
        a1[(0, 0)] = a;
        VarModel::new(vec![a1], DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn white_noise_carries_no_information() {
        let ctx = InfoContext::new(white_noise(3), 20, SigmaXSource::ModelImplied).unwrap();
        assert!(ctx.predictive_information().unwrap() <= 1e-12);
        for bits in 1..8u32 {
            let mi = ctx.subset_mutual_information(SourceSet::from_bits(bits)).unwrap();
            assert!(mi <= 1e-12, "subset {bits:b} has mi {mi}");
        }
    }

    #[test]
    fn isolated_ar1_predictive_information_closed_form() {
        // PI = 0.5 ln(1 / (1 - a^2)) with unit innovation variance; for
        // a = 0.5 that is 0.5 ln(4/3).
        let ctx = InfoContext::new(isolated_ar1(0.5, 3), 20, SigmaXSource::ModelImplied).unwrap();
        let expect = 0.5 * (4.0f64 / 3.0).ln();
        assert_relative_eq!(ctx.predictive_information().unwrap(), expect, epsilon = 1e-9);
        // The driving unit's own past carries all of it; the others none.
        assert_relative_eq!(
            ctx.subset_mutual_information(SourceSet::singleton(0)).unwrap(),
            expect,
            epsilon = 1e-9
        );
        for i in 1..3 {
            let mi = ctx.subset_mutual_information(SourceSet::singleton(i)).unwrap();
            assert!(mi.abs() <= 1e-9, "unit {i} has mi {mi}");
        }
    }

    #[test]
    fn full_subset_information_equals_predictive_information() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..20 {
            let model = VarModel::random_stable(3, 2, 0.75, &mut rng).unwrap();
            let ctx = InfoContext::new(model, 20, SigmaXSource::ModelImplied).unwrap();
            let pi = ctx.predictive_information().unwrap();
            let full = ctx.subset_mutual_information(SourceSet::full(3)).unwrap();
            assert!((pi - full).abs() < 1e-10, "pi {pi} vs full-subset mi {full}");
        }
    }

    #[test]
    fn information_is_monotone_under_inclusion() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..20 {
            let model = VarModel::random_stable(4, 2, 0.7, &mut rng).unwrap();
            let ctx = InfoContext::new(model, 12, SigmaXSource::ModelImplied).unwrap();
            for bits in 1..16u32 {
                for extra in 0..4 {
                    let small = SourceSet::from_bits(bits);
                    if small.contains(extra) {
                        continue;
                    }
                    let large = SourceSet::from_bits(bits | 1 << extra);
                    let mi_small = ctx.subset_mutual_information(small).unwrap();
                    let mi_large = ctx.subset_mutual_information(large).unwrap();
                    assert!(
                        mi_large >= mi_small - 1e-10,
                        "{small} -> {large}: {mi_small} vs {mi_large}"
                    );
                }
            }
        }
    }

    #[test]
    fn disconnected_unit_is_informationless() {
        // Units 1 and 2 drive each other; unit 0 is pure noise with no
        // links in either direction.
        let a1 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.2, 0.5, 0.0, 0.4, 0.1]);
        let model = VarModel::new(vec![a1], DMatrix::identity(3, 3)).unwrap();
        let ctx = InfoContext::new(model, 20, SigmaXSource::ModelImplied).unwrap();
        let mi = ctx.subset_mutual_information(SourceSet::singleton(0)).unwrap();
        assert!(mi.abs() <= 1e-9, "disconnected unit mi {mi}");
        assert!(ctx.subset_mutual_information(SourceSet::singleton(2)).unwrap() > 0.01);
    }

    #[test]
    fn relabeling_units_permutes_informations() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let model = VarModel::random_stable(3, 2, 0.7, &mut rng).unwrap();
        // Cyclic permutation 0 -> 1 -> 2 -> 0 via P x.
        let perm = [1usize, 2, 0];
        let p = DMatrix::from_fn(3, 3, |i, j| if perm[j] == i { 1.0 } else { 0.0 });
        let coeffs = model
            .coeffs()
            .iter()
            .map(|a| &p * a * p.transpose())
            .collect();
        let innov = &p * model.innov_cov() * p.transpose();
        let permuted = VarModel::new(coeffs, innov).unwrap();

        let ctx = InfoContext::new(model, 15, SigmaXSource::ModelImplied).unwrap();
        let ctx_p = InfoContext::new(permuted, 15, SigmaXSource::ModelImplied).unwrap();
        assert_relative_eq!(
            ctx.predictive_information().unwrap(),
            ctx_p.predictive_information().unwrap(),
            epsilon = 1e-10
        );
        for (i, &pi) in perm.iter().enumerate() {
            let mi = ctx.subset_mutual_information(SourceSet::singleton(i)).unwrap();
            let mi_p = ctx_p
                .subset_mutual_information(SourceSet::singleton(pi))
                .unwrap();
            assert_relative_eq!(mi, mi_p, epsilon = 1e-10);
        }
    }

    #[test]
    fn sample_sigma_equal_to_model_covariance_changes_nothing() {
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        let model = VarModel::random_stable(3, 1, 0.6, &mut rng).unwrap();
        let implied = InfoContext::new(model.clone(), 10, SigmaXSource::ModelImplied).unwrap();
        let sigma = implied.sigma_x().clone();
        let sampled =
            InfoContext::new(model, 10, SigmaXSource::SampleEstimate(sigma)).unwrap();
        assert_relative_eq!(
            implied.predictive_information().unwrap(),
            sampled.predictive_information().unwrap(),
            epsilon = 1e-12
        );
        for bits in 1..8u32 {
            let s = SourceSet::from_bits(bits);
            assert_relative_eq!(
                implied.subset_mutual_information(s).unwrap(),
                sampled.subset_mutual_information(s).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn sample_mode_clamps_negative_values_and_records_them() {
        // A shrunken sigma_x makes every raw information negative; sample
        // mode clamps to zero instead of failing.
        let shrunk = DMatrix::identity(2, 2) * 0.9;
        let ctx =
            InfoContext::new(white_noise(2), 5, SigmaXSource::SampleEstimate(shrunk)).unwrap();
        assert_eq!(ctx.predictive_information().unwrap(), 0.0);
        assert_eq!(
            ctx.subset_mutual_information(SourceSet::singleton(0)).unwrap(),
            0.0
        );
        let clamped = ctx.clamped_measures();
        assert!(clamped.iter().any(|(m, _)| m == "predictive information"));
        assert!(clamped.iter().any(|(m, v)| m == "subset {0}" && *v < 0.0));
    }

    #[test]
    fn model_mode_rejects_informations_below_tolerance() {
        let shrunk = DMatrix::identity(2, 2) * 0.9;
        let ctx =
            InfoContext::new(white_noise(2), 5, SigmaXSource::SampleEstimate(shrunk)).unwrap();
        // Bypass sample mode by calling the policy directly.
        assert!(ctx.admit(-1e-10, "x").is_ok());
        let strict = InfoContext::new(white_noise(2), 5, SigmaXSource::ModelImplied).unwrap();
        assert!(matches!(
            strict.admit(-1e-6, "x"),
            Err(PridError::NegativeInformation { .. })
        ));
    }

    #[test]
    fn embedding_order_is_raised_to_the_model_order() {
        let model = isolated_ar1(0.5, 2);
        let a2 = vec![DMatrix::zeros(2, 2), {
            let mut m = DMatrix::zeros(2, 2);
            m[(0, 0)] = 0.4;
            m
        }];
        let order2 = VarModel::new(a2, DMatrix::identity(2, 2)).unwrap();
        let ctx = InfoContext::new(order2, 1, SigmaXSource::ModelImplied).unwrap();
        assert_eq!(ctx.q(), 2);
        assert!(ctx.q_raised());
        let ctx_ok = InfoContext::new(model, 20, SigmaXSource::ModelImplied).unwrap();
        assert!(!ctx_ok.q_raised());
    }
}
