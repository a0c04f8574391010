//! Command-line pipeline over `pinkslime-core`: a TOML run config, a staged
//! end-to-end runner with hashed artifacts, and one subcommand per stage.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod data;
pub mod pipeline;

pub use config::{RunConfig, Stage};
pub use pipeline::{run_pipeline, RunSummary};

/// Sets the size of the global worker pool; 0 keeps the default. Only the
/// first call has an effect.
pub fn init_threads(threads: usize) {
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::debug!("thread pool already initialised: {e}");
        }
    }
}
