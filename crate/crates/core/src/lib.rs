//! Rescaled Lasso via smart scaling, detection of sparse negative spikes,
//! low-degree likelihood ratio bounds and testing of Gaussian graphical
//! models.

pub mod error;
pub mod ggm;
pub mod io;
pub mod ldlr;
pub mod linalg;
pub mod models;
pub mod pca;
pub mod rescale;
pub mod solvers;

pub use error::{Error, Result};
