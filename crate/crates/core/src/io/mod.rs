//! Run configuration, initial data, the time loop and its artifacts.

mod config;
mod init;
mod output;
mod run;
mod snapshot;

pub use config::{InitMode, PressureKind, RunConfig};
pub use init::{generate_initial_data, initial_size, random_smooth, InitialData};
pub use output::{CorridorVerdict, DiagnosticsCsv, ParticlesCsv, RunSummary, PARTICLE_COLUMNS};
pub use run::{run, Simulation};
pub use snapshot::{read_snapshot, read_snapshot_on, write_snapshot, MAGIC, VERSION};
