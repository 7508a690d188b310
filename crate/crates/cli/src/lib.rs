//! Library face of the batch CLI: run configuration and the subcommand
//! implementations, kept separately from `main` so integration tests can
//! drive them in-process.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_attrs, cmd_bounds, cmd_compressive, cmd_design, cmd_montecarlo, ArraySource,
};
pub use config::RunConfig;

/// Exit code for configuration and input errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

/// Map a core error to the process exit code contract.
pub fn exit_code(err: &aosa_core::Error) -> i32 {
    use aosa_core::Error::*;
    match err {
        NumericalFailure(_) | DegenerateGeometry(_) => EXIT_NUMERICAL,
        InvalidArgument(_)
        | ConstraintViolation(_)
        | InfeasibleInstance(_)
        | InfeasibleScenario(_)
        | Parse { .. }
        | Io(_) => EXIT_CONFIG,
    }
}

/// Run a closure inside a rayon pool of the requested size (0 = default).
/// Results are independent of the pool size by construction; the knob only
/// trades latency.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(f)
}
