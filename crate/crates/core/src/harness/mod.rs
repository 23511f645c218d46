//! Monte-Carlo BER/SER sweeps, complexity tables, runtime benchmarks and
//! constellation exports. Every table renders to CSV with a fixed column order.

mod bench;
mod complexity;
mod config;
mod constellation;
mod sweep;

pub use bench::{benchmark_runtime, BenchReport, BenchRow, HardwareInfo};
pub use complexity::{compare_complexity, ComplexityRow, ComplexityTable};
pub use config::{HiddenStack, RunConfig};
pub use constellation::{constellation_csv, constellation_projection, ConstellationPoint, PointKind};
pub use sweep::{
    count_errors, parse_grid, run_sweep, CodebookSource, Detector, DetectorSpec, StoppingRule, SweepPoint, SweepResult,
    SweepSpec, SWEEP_CSV_HEADER, SWEEP_SCHEMA_VERSION,
};
