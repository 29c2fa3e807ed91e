use nalgebra::{DMatrix, DVector};

use crate::config::PriorConfig;
use crate::data::PanelDataset;
use crate::design::DesignBuilder;
use crate::error::{Error, Result};

/// Closed-form posterior of the common coefficients when there are no
/// random effects and the cell variances are known: weighted least squares
/// shrunk toward the zero-mean normal prior. `cell_variance` is indexed
/// [country][period]. Accumulates observation by observation.
pub fn conjugate_oracle(
    data: &PanelDataset,
    cell_variance: &[Vec<f64>],
    priors: &PriorConfig,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let design = DesignBuilder::new(data);
    let dim = design.dim();
    let mut prec = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        priors.gamma_prior_variances(dim).into_iter().map(|v| 1.0 / v),
    ));
    let mut b = DVector::zeros(dim);
    for o in design.observations() {
        let z = DVector::from_vec(design.regressor(o.g, o.t, o.h)?);
        let w = 1.0 / cell_variance[o.g][o.h];
        prec += &z * z.transpose() * w;
        b += &z * (design.target(o.g, o.t, o.h) * w);
    }
    let cov = prec
        .try_inverse()
        .ok_or_else(|| Error::Numeric("conjugate oracle: singular precision".into()))?;
    let mean = &cov * b;
    Ok((mean, cov))
}
