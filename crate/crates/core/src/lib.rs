//! Propagates segmentation uncertainty into imaging-biomarker statistics.
//!
//! The pipeline starts from stacks of Monte-Carlo segmentation samples (here
//! produced by four stochastic phantom samplers), reduces each stack to
//! per-organ confidence measures (IoU and the inverse coefficient of
//! variation), and feeds those measures into group-analysis regression and
//! disease-classification models as extra variables or instance weights.
//!
//! Modules:
//! - [`volume`]: 3-D label volumes, sample stacks, and the `blv1`/`bfv1` file formats
//! - [`cohort`]: subject records, cohort CSV ingestion, and z-scoring
//! - [`phantom`]: synthetic ellipsoid phantoms and their logit fields
//! - [`sampler`]: the four stochastic segmentation samplers
//! - [`simulate`]: cohort simulation with planted regression coefficients
//! - [`confidence`]: IoU, CV, Dice, uncertainty maps, consensus masks
//! - [`stats`]: design matrices, OLS/WLS, and weighted logistic regression
//! - [`eval`]: Dice/group/classification studies and report rendering

pub mod cohort;
pub mod confidence;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod phantom;
pub mod sampler;
pub mod seeding;
pub mod simulate;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
