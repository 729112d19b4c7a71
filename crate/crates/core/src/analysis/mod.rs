//! Depth and lifetime extraction, map statistics and evaluation metrics.

mod depth;
mod lifetime;
mod stats;

pub use depth::{depth_map, TimeResolved, DEFAULT_SNR_THRESHOLD};
pub use lifetime::{fit_lifetimes, fit_trace, FitFlag, LifetimeFit, LifetimeFitConfig, TraceFit};
pub use stats::{
    diff_map, lifetime_histogram, metrics, metrics_with_threshold, summarize, Histogram, Metrics, Summary, PSNR_CAP,
};
