//! Density-sweep experiment runner and report rendering.

mod report;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnosis::{SvmParams, DEFAULT_BETA};
use crate::scenario::{string_enum, ConfigClass, ScenarioConfig};

pub use report::{
    markdown_table, plot_data, read_rows_csv, read_summary_csv, render, write_rows_csv, write_summary_csv, PlotSeries,
    ReportFormat, ROWS_CSV_HEADER, SUMMARY_CSV_HEADER,
};
pub use sweep::{run_cell, run_sweep, split_epochs, summarize, CellRun, RunRow, SummaryRow, SweepResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("unknown report format `{0}` (expected csv, markdown or plot-data)")]
    UnknownFormat(String),
    #[error("malformed results file: {0}")]
    Parse(String),
    #[error("nothing to report: {0}")]
    Empty(String),
}

impl HarnessError {
    pub fn is_config_error(&self) -> bool {
        !matches!(self, HarnessError::Empty(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Standalone,
    Unified,
    Transfer,
}

string_enum!(Architecture {
    Standalone => "standalone",
    Unified => "unified",
    Transfer => "transfer",
});

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Standalone, Architecture::Unified, Architecture::Transfer];

    pub fn display_name(self) -> &'static str {
        match self {
            Architecture::Standalone => "Cell-specific",
            Architecture::Unified => "Unified model",
            Architecture::Transfer => "Transfer learning",
        }
    }
}

/// A group of configuration classes scored together: nominal plus the two
/// misconfigurations of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TxPower,
    HoMargin,
}

string_enum!(Family {
    TxPower => "tx_power",
    HoMargin => "ho_margin",
});

impl Family {
    pub const ALL: [Family; 2] = [Family::TxPower, Family::HoMargin];

    pub fn classes(self) -> [ConfigClass; 3] {
        match self {
            Family::TxPower => [ConfigClass::Nominal, ConfigClass::TxTooStrong, ConfigClass::TxTooWeak],
            Family::HoMargin => [ConfigClass::Nominal, ConfigClass::HoMarginTooLarge, ConfigClass::HoMarginTooSmall],
        }
    }

    pub fn contains(self, c: ConfigClass) -> bool {
        self.classes().contains(&c)
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Family::TxPower => "TX Power",
            Family::HoMargin => "HO Margin",
        }
    }
}

/// Everything a sweep depends on besides the seeds' own draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Femtocell counts to sweep.
    pub densities: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    /// Share of femtos misconfigured in each epoch.
    pub misconfig_fraction: f64,
    /// Share of epochs used for training.
    pub train_fraction: f64,
    pub beta: f64,
    pub svm: SvmParams,
    /// Users not tied to the femto count.
    pub base_users: usize,
    pub users_per_femto: usize,
    /// Base scenario; femto count, user count, epoch count and seed are
    /// overridden per job.
    pub scenario: ScenarioConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            densities: vec![20, 40, 60, 80, 100],
            seeds: (1..=10).collect(),
            epochs: 20,
            misconfig_fraction: 0.4,
            train_fraction: 0.7,
            beta: DEFAULT_BETA,
            svm: SvmParams::default(),
            base_users: 30,
            users_per_femto: 4,
            scenario: ScenarioConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.densities.is_empty() {
            return bad("no densities".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.epochs < 2 {
            return bad(format!("need at least 2 epochs to split, got {}", self.epochs));
        }
        if !(self.misconfig_fraction > 0.0 && self.misconfig_fraction < 1.0) {
            return bad(format!("misconfig_fraction must be in (0, 1), got {}", self.misconfig_fraction));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.svm.c > 0.0 && self.svm.c.is_finite()) || self.svm.max_epochs == 0 {
            return bad("svm needs c > 0 and max_epochs > 0".into());
        }
        for &d in &self.densities {
            if d == 0 {
                return bad("density 0 leaves nothing to diagnose".into());
            }
            self.scenario_for(d, self.seeds[0])
                .validate()
                .map_err(|e| HarnessError::Config(format!("density {d}: {e}")))?;
        }
        Ok(())
    }

    /// The scenario of one (density, seed) job.
    pub fn scenario_for(&self, density: usize, seed: u64) -> ScenarioConfig {
        let mut s = self.scenario.clone();
        s.cells.femto_count = density;
        s.users.count = self.base_users + self.users_per_femto * density;
        s.timing.epochs_per_run = self.epochs;
        s.rng_seed = crate::rng::derive_seed(seed, &[density as u64]);
        s
    }
}
