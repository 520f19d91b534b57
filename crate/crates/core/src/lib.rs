//! Multifractal terrain synthesis with the 3D Weierstrass-Mandelbrot function,
//! Moore-gradient roughness analysis, random straight-line missions and a
//! kinematic skid-steer traversal surrogate, plus the batch experiment that
//! ties them together.
//!
//! Pixel-parallel kernels and the per-map batch loops run on rayon when the
//! default `parallel` feature is enabled; every result is identical with the
//! feature disabled or under [`exec::Schedule::Sequential`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dem;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod missions;
pub mod roughness;
pub mod seed;
pub mod stats;
pub mod traversal;
pub mod wm;

pub use dem::{
    build_multifractal, combine_product, gaussian_smooth, normalize_zero_mean_unit, quantize_png16,
    to_heightfield, Dem, Heightfield, QuantizedDem, Stage,
};
pub use error::{Error, Result};
pub use missions::{sample_mission, sample_missions, Mission, MissionConstraints};
pub use roughness::{
    classify, composition, moore_gradient_map, morphological_close, Class, Composition,
    GradientMap, RoughnessMap, Thresholds,
};
pub use stats::{aggregate, median_iqr_outliers, rms, success_rate, BoxStats, GroupSummary, MapResult};
pub use traversal::{derive_dynamics, run_mission, Outcome, TraversalLog, VehicleSpec};
pub use wm::{amplitude_coefficient, evaluate_wm, generate_monofractal, GridSpec, PhaseMatrix, WmParams};
