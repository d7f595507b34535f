//! Sweeps that compare power-allocation methods, the validation commands,
//! and their CSV/SVG outputs.
//!
//! Every sweep point evaluates all methods on the same channel sequence:
//! channel `r` is drawn from the seed path `(seed, 0, r)`, independent of the
//! sweep point and the method. DQN training for a method uses `(seed, 1,
//! method)` at every point, and per-method action randomness at point `i`
//! uses `(seed, 2, method, i)`.

mod output;
mod run;
mod spec;
mod stats;
mod verify;

pub use output::{
    emit_outputs, plot_svg, read_embedded_manifest, read_table, table_csv, write_episode_log,
    CSV_HEADER, MANIFEST_FILE,
};
pub use run::{
    check_dims, evaluate_method, paired_channels, run_sweep, run_sweep_with, training_rng,
    training_seed, Metric, PointResult, SweepResult, SweepRow, TrainCache, TrainingRecord,
    CHANNELS, POLICY, TRAIN,
};
pub use spec::{Method, SweepParameter, SweepSpec, DEFAULT_REALIZATIONS};
pub use stats::{spearman, Summary};
pub use verify::{
    default_grid_levels, verify_gp, verify_outage, GpInstance, GpReport, OutageReport, OutageTrial,
    GP_SHORTFALL_LIMIT, OUTAGE_Z_LIMIT,
};
