//! Experiment harness: configuration, dataset, training runs, BER sweeps,
//! constellation dumps and plots.

pub mod config;
pub mod constellations;
pub mod dataset;
pub mod experiment;
pub mod plot;
pub mod seeds;
pub mod sweep;

pub use config::{DecoderTag, ExperimentConfig, ScenarioKind};
pub use dataset::{generate_dataset, Dataset};
pub use sweep::{read_csv, run_ber_sweep, write_csv, BerRecord, CSV_HEADER};
pub use experiment::{train_checkpoint, train_scenario};
pub use constellations::{dump_constellations, ConstellationDump, DumpStats};
pub use plot::emit_plots;
