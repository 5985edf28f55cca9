//! GLS-style random forests for spatially and serially correlated data.
//!
//! A regression forest whose node-splitting criterion and leaf values come
//! from a generalized least squares loss weighted by a working precision
//! matrix, together with the sparse working-precision factors (nearest
//! neighbor GP, autoregressive) that make it cheap, residual kriging, ML
//! covariance-parameter estimation, and a simulation benchmark harness.

pub mod cholfactor;
pub mod covmodel;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod glstree;
pub mod rng;
pub mod simbench;
pub mod spatial;

pub use cholfactor::{
    apply_factor, factor_from_str, factor_to_string, nngp_factor, order_locations, quad_form,
    resampled_precision, unit_precision, PrecisionFactor, PrecisionOperator,
};
pub use covmodel::{
    ar_cholesky_factor, build_cov_matrix, check_diag_dominance, check_diag_dominance_dense,
    check_diag_dominance_factor, matern_cov, CovKind, CovarianceSpec, DenseCov, DominanceMode,
    DominanceReport,
};
pub use dataset::{Location, SpatialDataset};
pub use error::{Error, Result};
pub use forest::{
    draw_resample_counts, fit_forest, forest_from_str, forest_to_string, predict_forest,
    predict_forest_row, ForestModel, ForestParams, Resample,
};
pub use glstree::{
    best_split, dart_criterion, gls_solve, grow_tree, predict_tree, split_profile, tree_from_str,
    tree_to_string, BestSplit, GlsSolution, Membership, SplitCandidate, TreeModel, TreeNode,
};
pub use simbench::{
    eval_mean, evaluation_points, figure2_experiment, gen_dataset, latin_hypercube, mise,
    relative_mse, run_experiment, sample_gp, spatial_holdout, ExperimentConfig, Figure2Config,
    Figure2Row, LocationScheme, MeanFunction, MeanKind, Method, ResultRecord, SurfaceParams,
};
pub use spatial::{
    estimate_params, fit_pipeline, krige_predict, neg_log_likelihood, recover_latent,
    FitReport, KrigingContext, ParamBounds, PipelineConfig,
};
