//! Stationary second moments of a VAR process and linear models restricted
//! to a subset of units.
//!
//! The lagged covariances `gamma_k = E[x_t x_{t-k}^T]` follow from the
//! companion-form state covariance, which solves a discrete Lyapunov
//! equation; higher lags extend through the Yule-Walker recursion
//! `gamma_k = sum_j A_j gamma_{k-j}`. A restricted model regresses the full
//! state `x_t` on the last `q` lags of a subset of units only, solved in
//! closed form from those covariances; its residual covariance is the
//! quantity that turns into subset mutual information downstream.

use nalgebra::DMatrix;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{PridError, Result};
use crate::linalg;
use crate::sources::SourceSet;
use crate::var::{matrix_to_rows, VarModel};

/// Stationary lagged covariances `gamma_0 .. gamma_max_lag`.
#[derive(Clone, Debug)]
pub struct LagCovarianceSet {
    n_vars: usize,
    max_lag: usize,
    gammas: Vec<DMatrix<f64>>,
}

impl LagCovarianceSet {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// `E[x_t x_{t-k}^T]` for `k <= max_lag`.
    pub fn gamma(&self, k: usize) -> &DMatrix<f64> {
        &self.gammas[k]
    }

    /// The process covariance `gamma_0`.
    pub fn sigma_x(&self) -> &DMatrix<f64> {
        &self.gammas[0]
    }

    #[cfg(test)]
    pub(crate) fn from_parts(gammas: Vec<DMatrix<f64>>) -> LagCovarianceSet {
        let n_vars = gammas[0].nrows();
        LagCovarianceSet {
            n_vars,
            max_lag: gammas.len() - 1,
            gammas,
        }
    }
}

/// Serialized as `{n_vars, max_lag, gammas}` with each covariance a
/// row-major nested array, for inspection and debugging dumps.
impl Serialize for LagCovarianceSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("LagCovarianceSet", 3)?;
        s.serialize_field("n_vars", &self.n_vars)?;
        s.serialize_field("max_lag", &self.max_lag)?;
        let gammas: Vec<Vec<Vec<f64>>> = self.gammas.iter().map(matrix_to_rows).collect();
        s.serialize_field("gammas", &gammas)?;
        s.end()
    }
}

/// Computes the stationary lagged covariances of a stable model.
///
/// The companion-state covariance solves `S = C S C^T + Xi` with `C` the
/// companion matrix and `Xi` the innovation covariance embedded in the
/// leading block; its first block row holds `gamma_0 .. gamma_{p-1}`, and
/// lags from `p` onward follow the Yule-Walker recursion.
pub fn lag_covariances(model: &VarModel, max_lag: usize) -> Result<LagCovarianceSet> {
    model.require_stable()?;
    let n = model.n_vars();
    let p = model.order();

    let mut gammas: Vec<DMatrix<f64>> = Vec::with_capacity(max_lag + 1);
    if p == 0 {
        gammas.push(model.innov_cov().clone());
        for _ in 1..=max_lag {
            gammas.push(DMatrix::zeros(n, n));
        }
    } else {
        let companion = model.companion_matrix();
        let mut xi = DMatrix::zeros(n * p, n * p);
        xi.view_mut((0, 0), (n, n)).copy_from(model.innov_cov());
        let state_cov = linalg::solve_discrete_lyapunov(&companion, &xi)?;

        for k in 0..=max_lag.min(p - 1) {
            let block = state_cov.view((0, k * n), (n, n)).into_owned();
            gammas.push(if k == 0 { linalg::symmetrize(&block) } else { block });
        }
        for k in p..=max_lag {
            let mut g = DMatrix::zeros(n, n);
            for (j, a) in model.coeffs().iter().enumerate() {
                g += a * &gammas[k - (j + 1)];
            }
            gammas.push(g);
        }
    }
    // max_lag < p leaves the loop early; truncate to the requested range.
    gammas.truncate(max_lag + 1);

    Ok(LagCovarianceSet {
        n_vars: n,
        max_lag,
        gammas,
    })
}

/// A linear predictor of the full state from the past of a subset of units.
#[derive(Clone, Debug)]
pub struct RestrictedModel {
    subset: SourceSet,
    q: usize,
    coeffs: Vec<DMatrix<f64>>,
    resid_cov: DMatrix<f64>,
    regularized: bool,
}

impl RestrictedModel {
    pub fn subset(&self) -> SourceSet {
        self.subset
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Coefficient matrices, one per lag starting at lag 1; each is
    /// `n_vars x |subset|` with columns ordered by ascending unit index.
    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// Covariance of the prediction residual.
    pub fn resid_cov(&self) -> &DMatrix<f64> {
        &self.resid_cov
    }

    /// True if a ridge term was needed to factor the regressor covariance.
    pub fn regularized(&self) -> bool {
        self.regularized
    }
}

/// Selects rows `rows` and columns `cols` of `m`.
fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Solves the normal equations of the subset regression at embedding order
/// `q`: regressors are `[x^M_{t-1}, .., x^M_{t-q}]`, targets the full `x_t`.
///
/// The regressor covariance is block-Toeplitz in the subset covariances; if
/// its factorization fails, one retry adds a ridge of
/// `1e-10 * trace / dim` to the diagonal and the result is flagged as
/// regularized.
pub fn restricted_model(
    cov: &LagCovarianceSet,
    subset: SourceSet,
    q: usize,
) -> Result<RestrictedModel> {
    let n = cov.n_vars();
    if subset.is_empty() {
        return Err(PridError::InvalidInput(
            "restricted model needs a non-empty subset".to_string(),
        ));
    }
    if !subset.is_subset_of(SourceSet::full(n)) {
        return Err(PridError::InvalidInput(format!(
            "subset {subset} references units outside 0..{n}"
        )));
    }
    if q == 0 {
        return Err(PridError::InvalidInput(
            "embedding order q must be at least 1".to_string(),
        ));
    }
    if cov.max_lag() < q {
        return Err(PridError::InvalidInput(format!(
            "covariances reach lag {} but q={q} requires lag q",
            cov.max_lag()
        )));
    }

    let idx = subset.indices();
    let all: Vec<usize> = (0..n).collect();
    let m = idx.len();

    // Subset blocks gamma_d[M, M] for d = 0..q-1 cover every block of the
    // regressor covariance via gamma_{-d} = gamma_d^T.
    let sub: Vec<DMatrix<f64>> = (0..q).map(|d| select(cov.gamma(d), &idx, &idx)).collect();
    let mut r = DMatrix::zeros(q * m, q * m);
    for i in 0..q {
        for j in 0..q {
            let block = if j >= i {
                sub[j - i].clone()
            } else {
                sub[i - j].transpose()
            };
            r.view_mut((i * m, j * m), (m, m)).copy_from(&block);
        }
    }
    let r = linalg::symmetrize(&r);

    // Cross covariance between the target x_t and the lag stack.
    let mut c = DMatrix::zeros(n, q * m);
    for j in 0..q {
        let block = select(cov.gamma(j + 1), &all, &idx);
        c.view_mut((0, j * m), (n, m)).copy_from(&block);
    }

    let ct = c.transpose();
    let (solution, regularized) = match nalgebra::Cholesky::new(r.clone()) {
        Some(chol) => (chol.solve(&ct), false),
        None => {
            let eps = 1e-10 * r.trace() / r.nrows() as f64;
            let ridged = &r + DMatrix::identity(r.nrows(), r.ncols()) * eps;
            match nalgebra::Cholesky::new(ridged) {
                Some(chol) => (chol.solve(&ct), true),
                None => {
                    return Err(PridError::SingularRestricted {
                        subset: subset.to_string(),
                        q,
                        detail: " even after ridge regularization".to_string(),
                    })
                }
            }
        }
    };
    let coeffs_flat = solution.transpose();

    let resid_cov = linalg::symmetrize(&(cov.gamma(0) - &coeffs_flat * &ct));
    let coeffs = (0..q)
        .map(|k| coeffs_flat.view((0, k * m), (n, m)).into_owned())
        .collect();

    Ok(RestrictedModel {
        subset,
        q,
        coeffs,
        resid_cov,
        regularized,
    })
}
