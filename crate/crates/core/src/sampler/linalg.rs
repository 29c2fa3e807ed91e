use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Cholesky factor of a symmetric positive definite matrix. On failure the
/// diagonal is lifted once by 1e-10 times its mean before giving up.
pub fn cholesky_jittered(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Cholesky::new(m).expect("empty matrix"));
    }
    let jitter = 1e-10 * m.trace().abs() / n as f64;
    match Cholesky::new(m.clone()) {
        Some(c) => Ok(c),
        None => {
            log::warn!("{what}: precision not positive definite, adding jitter {jitter:e}");
            let mut m = m;
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            Cholesky::new(m).ok_or_else(|| Error::Numeric(format!("{what}: Cholesky factorization failed")))
        }
    }
}

/// Draws x ~ N(P⁻¹b, P⁻¹) given the precision P and canonical vector b.
pub fn sample_canonical<R: Rng + ?Sized>(
    precision: DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
    what: &str,
) -> Result<DVector<f64>> {
    let chol = cholesky_jittered(precision, what)?;
    sample_factored(&chol, b, rng, what)
}

/// As [`sample_canonical`] with the precision already factored.
pub fn sample_factored<R: Rng + ?Sized>(
    chol: &Cholesky<f64, Dyn>,
    b: &DVector<f64>,
    rng: &mut R,
    what: &str,
) -> Result<DVector<f64>> {
    let n = b.len();
    let mean = chol.solve(b);
    let eps = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let dev = chol
        .l_dirty()
        .tr_solve_lower_triangular(&eps)
        .ok_or_else(|| Error::Numeric(format!("{what}: singular factor")))?;
    let x = mean + dev;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Numeric(format!("{what}: non-finite draw")))
    }
}
