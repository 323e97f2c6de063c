//! Classification metrics, significance tests and the ablation harness.

mod ablation;
mod metrics;
mod stats;

pub use ablation::{
    ablate, alpha_grid, benchmark_grid, beta_grid, components_grid, render_table, run_seed, sampling_grid,
    summarize, write_results, Cell, CellResult, Grid, LocalRunner, PValues, SeedRunSet, BETA_VALUES, COMPONENT_MODES,
};
pub use metrics::{argmax, evaluate, ConfusionMatrix, Metrics};
pub use stats::{ln_gamma, mean, regularized_incomplete_beta, sample_std, student_t_cdf, t_test, TTest, Variance};
