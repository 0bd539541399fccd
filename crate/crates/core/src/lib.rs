//! Foreground/background segmentation of 3D Gaussian splatting scenes.
//!
//! 2D masks or scribbles are lifted onto per-Gaussian foreground likelihoods
//! by a contribution-tracking rasterizer; the Gaussians are then partitioned
//! by an exact s-t min-cut over a k-nearest-neighbor graph.

pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod lift;
pub mod metrics;
pub mod mincut;
pub mod pipeline;
pub mod raster;
pub mod scene;

pub use error::{Error, Result};
pub use scene::{Camera, GaussianScene, Image, Mask, RawGaussian, Side};
