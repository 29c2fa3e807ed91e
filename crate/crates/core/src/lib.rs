//! Bayesian panel regression of high-frequency targets on mixed-frequency
//! regressors, with hourly and country random effects and heteroskedastic
//! errors, estimated by Gibbs sampling.

pub mod config;
pub mod data;
pub mod design;
pub mod error;
pub mod posterior;
pub mod sampler;
pub mod synthetic;

pub use config::{FitConfig, ModelSpec, PriorConfig, SamplerConfig};
pub use data::PanelDataset;
pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/posterior.md")]
    mod posterior {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
