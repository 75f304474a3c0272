//! Parameter sweeps driven by a JSON config, with CSV/JSON tables and
//! peak extraction for spectra.

pub mod config;
pub mod engine;
pub mod peaks;
pub mod recipes;
pub mod table;

pub use config::{Axis, AxisName, ChainSpec, DisorderSettings, Engine, Fixed, Hold, Quantity, ScanConfig, Spacing};
pub use engine::run_scan;
pub use peaks::{extract_peaks, polariton_references, Peak, PeakReport, DEFAULT_PROMINENCE};
pub use table::{Cell, ScanRow, ScanTable};
