//! Synthetic generators, panel ingestion and standardization.

mod dataset_io;
mod generators;
mod panel;

pub use generators::{
    friedman_signal, gen_friedman, gen_het_panel, gen_linear2, gen_step10, Dataset, HetPanelSpec,
    NoiseProfile, SyntheticPanel,
};
pub use panel::{load_panel_csv, read_panel_csv, save_panel_csv, FactorPanel, LoadReport, StdConvention};
