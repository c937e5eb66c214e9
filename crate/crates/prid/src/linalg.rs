//! Dense linear-algebra helpers: SPD checks, log-determinants and the
//! discrete Lyapunov solver used to obtain stationary covariances.

use nalgebra::DMatrix;

use crate::error::{PridError, Result};

/// Relative residual tolerance for the discrete Lyapunov solve.
pub const LYAPUNOV_TOLERANCE: f64 = 1e-12;

/// Dimension up to which the vectorized (Kronecker) solve is used; beyond
/// this the squaring iteration takes over to avoid an `n^2 x n^2` system.
const DIRECT_SOLVE_MAX_DIM: usize = 60;

/// Returns `(m + m^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute eigenvalue. Zero-dimensional matrices have radius 0.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|ev| ev.norm())
        .fold(0.0, f64::max)
}

/// Checks symmetry (relative to the largest entry) and positive definiteness
/// via a Cholesky factorization.
pub fn check_spd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(PridError::NotPositiveDefinite {
            what: what.to_string(),
            detail: format!("matrix is {}x{}, not square", m.nrows(), m.ncols()),
        });
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(PridError::NotPositiveDefinite {
            what: what.to_string(),
            detail: format!("asymmetry {asym:.3e} exceeds 1e-10 of the matrix scale"),
        });
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(PridError::NotPositiveDefinite {
            what: what.to_string(),
            detail: "matrix contains non-finite entries".to_string(),
        });
    }
    match first_nonpositive_pivot(m) {
        None => Ok(()),
        Some(col) => Err(PridError::NotPositiveDefinite {
            what: what.to_string(),
            detail: format!("leading principal minor ending at column {col} is not positive"),
        }),
    }
}

/// Log-determinant of an SPD matrix via Cholesky, computed in log space.
pub fn log_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(m)).ok_or_else(|| {
        PridError::NotPositiveDefinite {
            what: what.to_string(),
            detail: "Cholesky factorization failed".to_string(),
        }
    })?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Index of the first column whose LDL^T pivot is non-positive, if any.
/// Used to name the offending column when a Gram matrix is singular.
pub fn first_nonpositive_pivot(m: &DMatrix<f64>) -> Option<usize> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = vec![0.0f64; n];
    let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut dj = m[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if dj <= scale * 1e-13 {
            return Some(j);
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    None
}

/// Solves the discrete Lyapunov equation `x = a x a^T + xi` for the
/// stationary covariance `x`.
///
/// Small systems use the vectorized form `(I - a (x) a) vec(x) = vec(xi)`
/// solved directly; larger ones use the squaring iteration
/// `x_{k+1} = x_k + a_k x_k a_k^T`, `a_{k+1} = a_k^2`, which sums the series
/// `sum_j a^j xi (a^T)^j` in logarithmically many steps. Either way the
/// result is symmetrized and the residual is verified against
/// [`LYAPUNOV_TOLERANCE`] relative to `||xi||_F`.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, xi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "coefficient matrix must be square");
    assert_eq!(xi.nrows(), n, "constant term must match the state dimension");
    assert_eq!(xi.ncols(), n, "constant term must be square");
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let x = if n <= DIRECT_SOLVE_MAX_DIM {
        lyapunov_direct(a, xi)?
    } else {
        lyapunov_doubling(a, xi)
    };
    let x = symmetrize(&x);

    let residual = (&x - a * &x * a.transpose() - xi).norm();
    let tolerance = LYAPUNOV_TOLERANCE * xi.norm().max(f64::MIN_POSITIVE);
    if !residual.is_finite() || residual > tolerance {
        return Err(PridError::LyapunovResidual {
            residual,
            tolerance,
        });
    }
    Ok(x)
}

/// Vectorized solve: `vec(x) = (I - a (x) a)^{-1} vec(xi)`, relying on
/// column-major stacking so that `vec(a x a^T) = (a (x) a) vec(x)`.
fn lyapunov_direct(a: &DMatrix<f64>, xi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut system = a.kronecker(a);
    system.neg_mut();
    for i in 0..n * n {
        system[(i, i)] += 1.0;
    }
    let rhs = DMatrix::from_column_slice(n * n, 1, xi.as_slice());
    let sol = nalgebra::LU::new(system)
        .solve(&rhs)
        .ok_or(PridError::LyapunovResidual {
            residual: f64::INFINITY,
            tolerance: LYAPUNOV_TOLERANCE * xi.norm(),
        })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Squaring iteration; converges quadratically for spectral radius < 1.
fn lyapunov_doubling(a: &DMatrix<f64>, xi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = symmetrize(xi);
    let mut ak = a.clone();
    for _ in 0..128 {
        x = symmetrize(&(&x + &ak * &x * ak.transpose()));
        ak = &ak * &ak;
        let contraction = ak.norm();
        if contraction * contraction * x.norm() <= f64::EPSILON * x.norm().max(1.0) {
            break;
        }
    }
    x
}
