//! Vector autoregressive models: representation, simulation, least-squares
//! estimation and information-criterion order selection.
//!
//! A model of order `p` over `n` units is
//!
//! ```text
//! x_t = A_1 x_{t-1} + ... + A_p x_{t-p} + u_t,    u_t ~ N(0, innov_cov)
//! ```
//!
//! with `A_k` the `n x n` coefficient matrix at lag `k`. Order 0 denotes
//! pure white noise. Stationarity is a property of the companion matrix and
//! is checked where it matters (simulation, stationary covariances) rather
//! than at construction, so that unstable candidate models can still be
//! inspected through [`VarModel::stability`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PridError, Result};
use crate::linalg;

/// Spectral-radius margin below 1 required to call a model stable; keeps
/// downstream covariance solves comfortably away from the unit circle.
pub const STABILITY_MARGIN: f64 = 1e-6;

/// Default number of warm-up samples discarded by simulation front ends.
pub const DEFAULT_BURN_IN: usize = 1000;

/// A vector autoregressive model with Gaussian innovations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "VarModelDto", into = "VarModelDto")]
pub struct VarModel {
    n_vars: usize,
    order: usize,
    coeffs: Vec<DMatrix<f64>>,
    innov_cov: DMatrix<f64>,
}

impl VarModel {
    /// Builds a model from per-lag coefficient matrices (`coeffs[k]` applies
    /// to lag `k + 1`) and the innovation covariance, which must be
    /// symmetric positive definite. An empty coefficient list yields a white
    /// noise model.
    pub fn new(coeffs: Vec<DMatrix<f64>>, innov_cov: DMatrix<f64>) -> Result<VarModel> {
        let n_vars = innov_cov.nrows();
        if n_vars == 0 {
            return Err(PridError::InvalidInput(
                "model must have at least one unit".to_string(),
            ));
        }
        for (k, a) in coeffs.iter().enumerate() {
            if a.nrows() != n_vars || a.ncols() != n_vars {
                return Err(PridError::InvalidInput(format!(
                    "coefficient matrix at lag {} is {}x{}, expected {n_vars}x{n_vars}",
                    k + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
            if !a.iter().all(|v| v.is_finite()) {
                return Err(PridError::InvalidInput(format!(
                    "coefficient matrix at lag {} contains non-finite entries",
                    k + 1
                )));
            }
        }
        linalg::check_spd(&innov_cov, "innovation covariance")?;
        Ok(VarModel {
            n_vars,
            order: coeffs.len(),
            coeffs,
            innov_cov: linalg::symmetrize(&innov_cov),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient matrices, one per lag starting at lag 1.
    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn innov_cov(&self) -> &DMatrix<f64> {
        &self.innov_cov
    }

    /// The `(n*p) x (n*p)` companion matrix (empty for order 0).
    pub fn companion_matrix(&self) -> DMatrix<f64> {
        let (n, p) = (self.n_vars, self.order);
        let mut c = DMatrix::zeros(n * p, n * p);
        for (k, a) in self.coeffs.iter().enumerate() {
            c.view_mut((0, k * n), (n, n)).copy_from(a);
        }
        for b in 1..p {
            c.view_mut((b * n, (b - 1) * n), (n, n))
                .copy_from(&DMatrix::identity(n, n));
        }
        c
    }

    /// Spectral radius of the companion matrix and the resulting verdict.
    pub fn stability(&self) -> StabilityReport {
        let radius = linalg::spectral_radius(&self.companion_matrix());
        StabilityReport {
            spectral_radius: radius,
            stable: radius < 1.0 - STABILITY_MARGIN,
        }
    }

    pub(crate) fn require_stable(&self) -> Result<()> {
        let report = self.stability();
        if report.stable {
            Ok(())
        } else {
            Err(PridError::NonStationary {
                radius: report.spectral_radius,
                limit: 1.0 - STABILITY_MARGIN,
            })
        }
    }

    /// Draws `n_samples` observations after discarding `burn_in` warm-up
    /// steps from a zero initial state.
    ///
    /// Randomness is fully reproducible: a ChaCha12 generator is seeded from
    /// `seed` and innovations are standard-normal draws (ziggurat transform)
    /// colored by the Cholesky factor of the innovation covariance, so the
    /// same inputs produce bit-identical output on every platform.
    pub fn simulate(&self, n_samples: usize, burn_in: usize, seed: u64) -> Result<TimeSeries> {
        if n_samples == 0 {
            return Err(PridError::InvalidInput(
                "simulation needs at least one sample".to_string(),
            ));
        }
        self.require_stable()?;
        let n = self.n_vars;
        let chol = nalgebra::Cholesky::new(self.innov_cov.clone()).ok_or_else(|| {
            PridError::NotPositiveDefinite {
                what: "innovation covariance".to_string(),
                detail: "Cholesky factorization failed".to_string(),
            }
        })?;
        let l = chol.l();

        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let p = self.order;
        let mut history: Vec<DVector<f64>> = vec![DVector::zeros(n); p];
        let mut data = DMatrix::zeros(n_samples, n);
        let mut z = DVector::zeros(n);
        for t in 0..burn_in + n_samples {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let mut x = &l * &z;
            for (coeff, past) in self.coeffs.iter().zip(&history) {
                x += coeff * past;
            }
            if p > 0 {
                history.rotate_right(1);
                history[0] = x.clone();
            }
            if t >= burn_in {
                data.row_mut(t - burn_in).copy_from(&x.transpose());
            }
        }
        TimeSeries::new(data)
    }

    /// Draws a random model whose companion matrix has exactly the requested
    /// spectral radius, paired with a well-conditioned random innovation
    /// covariance. Scaling lag-`k` coefficients by `s^k` scales every
    /// companion eigenvalue by `s`, which is what makes the radius exact.
    pub fn random_stable<R: Rng>(
        n_vars: usize,
        order: usize,
        spectral_radius: f64,
        rng: &mut R,
    ) -> Result<VarModel> {
        assert!(
            (0.0..1.0).contains(&spectral_radius),
            "target radius must lie in [0, 1)"
        );
        let n = n_vars;
        let scale = 1.0 / (n as f64 * (order.max(1) as f64).sqrt());
        let mut coeffs: Vec<DMatrix<f64>> = (0..order)
            .map(|_| DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale))
            .collect();

        let b = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let innov_cov = &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;

        let draft = VarModel::new(coeffs.clone(), innov_cov.clone())?;
        let radius = draft.stability().spectral_radius;
        if radius > 1e-12 {
            let s = spectral_radius / radius;
            for (k, a) in coeffs.iter_mut().enumerate() {
                *a *= s.powi(k as i32 + 1);
            }
        }
        VarModel::new(coeffs, innov_cov)
    }
}

/// Outcome of a stationarity check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StabilityReport {
    pub spectral_radius: f64,
    pub stable: bool,
}

/// JSON wire format for [`VarModel`]: row-major nested arrays.
#[derive(Serialize, Deserialize)]
struct VarModelDto {
    #[serde(default = "model_schema")]
    schema: String,
    n_vars: usize,
    order: usize,
    coeffs: Vec<Vec<Vec<f64>>>,
    innov_cov: Vec<Vec<f64>>,
}

fn model_schema() -> String {
    "prid/model-v1".to_string()
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(PridError::InvalidInput(format!(
            "{what} must be a {n}x{n} array of rows"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl From<VarModel> for VarModelDto {
    fn from(m: VarModel) -> VarModelDto {
        VarModelDto {
            schema: model_schema(),
            n_vars: m.n_vars,
            order: m.order,
            coeffs: m.coeffs.iter().map(matrix_to_rows).collect(),
            innov_cov: matrix_to_rows(&m.innov_cov),
        }
    }
}

impl TryFrom<VarModelDto> for VarModel {
    type Error = PridError;

    fn try_from(dto: VarModelDto) -> Result<VarModel> {
        if dto.schema != model_schema() {
            return Err(PridError::InvalidInput(format!(
                "unsupported model schema '{}', expected '{}'",
                dto.schema,
                model_schema()
            )));
        }
        if dto.coeffs.len() != dto.order {
            return Err(PridError::InvalidInput(format!(
                "model declares order {} but provides {} coefficient matrices",
                dto.order,
                dto.coeffs.len()
            )));
        }
        let n = dto.n_vars;
        let coeffs = dto
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, rows)| rows_to_matrix(rows, n, &format!("coeffs[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let innov_cov = rows_to_matrix(&dto.innov_cov, n, "innov_cov")?;
        VarModel::new(coeffs, innov_cov)
    }
}

/// A multivariate sample: one row per time step, one column per unit.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    data: DMatrix<f64>,
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(data: DMatrix<f64>) -> Result<TimeSeries> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(PridError::InvalidInput(
                "time series must have at least one sample and one column".to_string(),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(PridError::InvalidInput(
                "time series contains non-finite values".to_string(),
            ));
        }
        Ok(TimeSeries { data, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<TimeSeries> {
        if labels.len() != self.n_vars() {
            return Err(PridError::InvalidInput(format!(
                "{} labels provided for {} columns",
                labels.len(),
                self.n_vars()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Per-column means.
    pub fn column_means(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n_vars(),
            self.data.column_iter().map(|c| c.mean()),
        )
    }

    /// Returns a copy with every column shifted to zero mean.
    pub fn center(&self) -> TimeSeries {
        let means = self.column_means();
        let mut data = self.data.clone();
        for (j, mut col) in data.column_iter_mut().enumerate() {
            col.add_scalar_mut(-means[j]);
        }
        TimeSeries {
            data,
            labels: self.labels.clone(),
        }
    }

    /// Sample covariance about the sample mean, divisor `T - 1`.
    pub fn sample_covariance(&self) -> DMatrix<f64> {
        let t = self.n_samples();
        let centered = self.center();
        let d = centered.data;
        (d.transpose() * &d) / (t as f64 - 1.0).max(1.0)
    }
}

/// Result of information-criterion order selection.
#[derive(Clone, Debug, Serialize)]
pub struct OrderSelection {
    /// Chosen order (ties resolved toward the smaller order).
    pub selected: usize,
    /// Criterion value per candidate order; index `i` holds order `i + 1`.
    pub criteria: Vec<f64>,
}

/// Lagged design matrix and targets: rows are `t = first_row .. T`, regressor
/// layout `[x_{t-1}, x_{t-2}, ..., x_{t-max_lag}]`.
fn lagged_design(
    data: &DMatrix<f64>,
    max_lag: usize,
    first_row: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = data.nrows();
    let n = data.ncols();
    let rows = t - first_row;
    let mut x = DMatrix::zeros(rows, n * max_lag);
    let mut y = DMatrix::zeros(rows, n);
    for (r, ti) in (first_row..t).enumerate() {
        y.row_mut(r).copy_from(&data.row(ti));
        for k in 1..=max_lag {
            x.view_mut((r, (k - 1) * n), (1, n))
                .copy_from(&data.row(ti - k));
        }
    }
    (x, y)
}

/// Solves the normal equations `gram * b = xty`, naming the collinear
/// regressor column on failure. The explicit pivot scan matters because a
/// plain Cholesky can slip through a numerically singular Gram matrix on
/// rounding noise and fail much later with a confusing message.
fn solve_normal_equations(
    gram: &DMatrix<f64>,
    xty: &DMatrix<f64>,
    n_vars: usize,
) -> Result<DMatrix<f64>> {
    if let Some(col) = linalg::first_nonpositive_pivot(gram) {
        return Err(PridError::SingularGram {
            detail: format!(
                "regressor column {col} (lag {}, unit {}) is collinear with earlier columns",
                col / n_vars + 1,
                col % n_vars
            ),
        });
    }
    match nalgebra::Cholesky::new(gram.clone()) {
        Some(chol) => Ok(chol.solve(xty)),
        None => Err(PridError::SingularGram {
            detail: "Gram matrix factorization failed".to_string(),
        }),
    }
}

/// Fits a model of the given order by ordinary least squares on the centered
/// series (no intercept). The innovation covariance is the residual
/// covariance with divisor `T - order`.
pub fn estimate_var(series: &TimeSeries, order: usize) -> Result<VarModel> {
    if order == 0 {
        return Err(PridError::InvalidInput(
            "estimation order must be at least 1".to_string(),
        ));
    }
    let t = series.n_samples();
    let n = series.n_vars();
    let required = n * order + 1;
    if t <= required {
        return Err(PridError::SeriesTooShort {
            required,
            n_vars: n,
            order,
            got: t,
        });
    }

    let centered = series.center();
    let (x, y) = lagged_design(centered.data(), order, order);
    let gram = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let b = solve_normal_equations(&gram, &xty, n)?;

    let resid = &y - &x * &b;
    let innov_cov = linalg::symmetrize(&(resid.transpose() * &resid / (t - order) as f64));

    let coeffs = (0..order)
        .map(|k| b.view((k * n, 0), (n, n)).transpose().into_owned())
        .collect();
    VarModel::new(coeffs, innov_cov)
}

/// Selects the model order by the Bayesian information criterion.
///
/// Every candidate order `1..=max_order` is fit on the common trailing
/// window of `T_eff = T - max_order` rows so the criterion values are
/// comparable, with
///
/// ```text
/// BIC(p) = ln det(innov_cov_hat(p)) + ln(T_eff) * p * n^2 / T_eff
/// ```
///
/// where the innovation covariance uses divisor `T_eff`. Ties go to the
/// smaller order.
pub fn select_order(series: &TimeSeries, max_order: usize) -> Result<OrderSelection> {
    if max_order == 0 {
        return Err(PridError::InvalidInput(
            "max_order must be at least 1".to_string(),
        ));
    }
    let t = series.n_samples();
    let n = series.n_vars();
    let required = n * max_order + 1 + max_order;
    if t <= required {
        return Err(PridError::SeriesTooShort {
            required,
            n_vars: n,
            order: max_order,
            got: t,
        });
    }

    let centered = series.center();
    let (x, y) = lagged_design(centered.data(), max_order, max_order);
    let t_eff = y.nrows() as f64;
    let gram = x.transpose() * &x;
    let xty = x.transpose() * &y;

    let mut criteria = Vec::with_capacity(max_order);
    for p in 1..=max_order {
        // Lags 1..=p occupy the leading p*n regressor columns, so the
        // order-p fit reuses leading blocks of the full Gram matrix.
        let cols = p * n;
        let gram_p = gram.view((0, 0), (cols, cols)).into_owned();
        let xty_p = xty.view((0, 0), (cols, n)).into_owned();
        let b = solve_normal_equations(&gram_p, &xty_p, n)?;
        let resid = &y - x.view((0, 0), (y.nrows(), cols)) * &b;
        let sigma = linalg::symmetrize(&(resid.transpose() * &resid / t_eff));
        let ld = linalg::log_det_spd(&sigma, "residual covariance")?;
        let penalty = t_eff.ln() * (p * n * n) as f64 / t_eff;
        criteria.push(ld + penalty);
    }

    let mut selected = 1;
    for p in 2..=max_order {
        if criteria[p - 1] < criteria[selected - 1] {
            selected = p;
        }
    }
    Ok(OrderSelection { selected, criteria })
}
