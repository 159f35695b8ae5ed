//! Command line layer over the core engine: system loading, report
//! assembly, deterministic serialization, and batch scans.

pub mod app;
pub mod fcio;
pub mod jsonfmt;
pub mod manifest;
pub mod report;

pub use app::{run, run_from, ZERO_MEAN_TOL};
pub use fcio::{write_fcidump, write_operator};
pub use jsonfmt::{fmt_float, Json};
pub use manifest::{load_manifest, ScanManifest};
pub use report::{Diagnostics, Entropies, KickSection, MeasureReport, Norms, CSV_COLUMNS, SCHEMA};
