//! Command-line experiment runners for the ipiano toolkit.

pub mod config;
pub mod run;

pub use config::{parse_config_text, read_config_file, DataKind, Problem, RunConfig};
pub use run::{run, CertRow, Outcome};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CERTIFICATE_FAILED: i32 = 1;
    pub const CONFIG_OR_IO: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &ipiano_core::Error) -> i32 {
    if err.is_numerical() {
        exit::NUMERICAL
    } else {
        exit::CONFIG_OR_IO
    }
}
