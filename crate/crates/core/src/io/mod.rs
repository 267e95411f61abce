//! File formats: graph documents, Touchstone files, CSV/JSON exports, SVG
//! plots, and measured-versus-simulated comparison.

pub mod compare;
pub mod export;
pub mod graph_doc;
pub mod plot;
pub mod touchstone;

pub use compare::{compare, compare_spectra, CompareError, CompareReport, PeakOffset, Residual};
pub use export::write_atomic;
pub use graph_doc::{parse_graph_file, GraphDocError, GraphDocument};
pub use plot::{LinePlot, Series};
pub use touchstone::{read_touchstone, write_touchstone, DataFormat, FrequencyUnit, MeasuredTwoPort, TouchstoneError};
