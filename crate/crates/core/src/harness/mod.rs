//! Experiment orchestration: seeded ill-prepared data, eps sweeps of the
//! full solver against the limit systems, wave-modulus studies, and
//! CSV/JSON/SVG report emission.

pub mod config;
pub mod initdata;
pub mod report;
pub mod svg;
pub mod sweep;

pub use config::RunConfig;
pub use initdata::{gen_ill_prepared, Amplitudes, InitialData};
pub use report::{emit_report, ReportFiles, ReportFormats, CSV_SCHEMA};
pub use sweep::{run_sweep, EpsSummary, SweepFlags, SweepRecord, SweepReport, SweepSlopes};
