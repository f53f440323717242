//! Discrete-time simulation: mobility, handover and radio-link failure,
//! traffic, and per-cell KPI aggregation into labeled instances.

mod engine;
mod export;
mod handover;
mod kpi;
mod mobility;
mod traffic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::CellId;

pub use engine::{run_epoch, AssignmentPlan, EpochOutput, SessionOutcome, Simulation, UserSummary};
pub use export::{
    read_event_log, read_instances_csv, write_event_log, write_instances_csv, LogEvent, LogRecord,
    EVENT_LOG_SCHEMA_VERSION,
};
pub use handover::{classify_rlf, evaluate_handover, HandoverEvent, HandoverOutcome, Measurement, RecentHandover, RlfClass};
pub use kpi::{aggregate_kpis, CellEpochLog, CellEvent, CellEventKind, FeatureVector, LinkStats, UserStat, FEATURE_COUNT, FEATURE_NAMES};
pub use mobility::{generate_users, step_mobility, MobilityBounds, MobilityClass, TrajectorySample, UserEquipment};
pub use traffic::{generate_traffic, AppCategory, TrafficProfile, TrafficRecord};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("malformed export: {0}")]
    Export(String),
}

/// Radio-link monitoring and handover-robustness parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MroParams {
    /// SINR below which the serving link counts as out of sync.
    pub q_out_db: f64,
    /// Time the link must stay out of sync before a radio-link failure.
    pub t_rlf_ms: u32,
    /// Window after a handover in which a failure is blamed on that handover.
    pub t_store_ms: u32,
    pub femto_session_capacity: u32,
    /// Standard deviation of the per-sample measurement error on reported
    /// received power.
    pub measurement_noise_db: f64,
    /// Layer-3 filter weight of the newest sample,
    /// F = (1 − a)·F_prev + a·M. 1 disables filtering.
    pub l3_filter_coefficient: f64,
    /// Neighbors weaker than the serving cell by more than this are not
    /// reported.
    pub report_range_db: f64,
    /// SINR threshold for the block-error proxy.
    pub bler_sinr_threshold_db: f64,
}

impl Default for MroParams {
    fn default() -> Self {
        MroParams {
            q_out_db: -6.0,
            t_rlf_ms: 500,
            t_store_ms: 5000,
            femto_session_capacity: 4,
            measurement_noise_db: 2.5,
            l3_filter_coefficient: 0.5,
            report_range_db: 15.0,
            bler_sinr_threshold_db: -3.0,
        }
    }
}

impl MroParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        if !self.q_out_db.is_finite() {
            return Err(("mro.q_out_db", "must be finite".into()));
        }
        if self.t_rlf_ms == 0 {
            return Err(("mro.t_rlf_ms", "must be > 0".into()));
        }
        if !(self.measurement_noise_db.is_finite() && self.measurement_noise_db >= 0.0) {
            return Err(("mro.measurement_noise_db", "must be finite and >= 0".into()));
        }
        if !(self.l3_filter_coefficient > 0.0 && self.l3_filter_coefficient <= 1.0) {
            return Err(("mro.l3_filter_coefficient", "must be in (0, 1]".into()));
        }
        if !(self.report_range_db.is_finite() && self.report_range_db >= 0.0) {
            return Err(("mro.report_range_db", "must be finite and >= 0".into()));
        }
        if !self.bler_sinr_threshold_db.is_finite() {
            return Err(("mro.bler_sinr_threshold_db", "must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficParams {
    /// Session arrivals per second for a normal user.
    pub session_rate_per_s: f64,
    pub mean_session_s: f64,
    /// Arrival-rate multiplier for users in vehicles.
    pub vehicle_rate_multiplier: f64,
    /// Arrival-rate multiplier for stationary users, who are mostly indoors
    /// on Wi-Fi and put less traffic on the cellular network.
    pub stationary_rate_multiplier: f64,
    pub heavy_user_fraction: f64,
    pub heavy_rate_multiplier: f64,
    /// Log-space standard deviation of session volume.
    pub bytes_sigma_ln: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            session_rate_per_s: 0.05,
            mean_session_s: 15.0,
            vehicle_rate_multiplier: 2.0,
            stationary_rate_multiplier: 0.3,
            heavy_user_fraction: 0.1,
            heavy_rate_multiplier: 3.0,
            bytes_sigma_ln: 1.0,
        }
    }
}

impl TrafficParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        for (field, v) in [
            ("traffic.session_rate_per_s", self.session_rate_per_s),
            ("traffic.mean_session_s", self.mean_session_s),
            ("traffic.vehicle_rate_multiplier", self.vehicle_rate_multiplier),
            ("traffic.heavy_rate_multiplier", self.heavy_rate_multiplier),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err((field, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.stationary_rate_multiplier > 0.0 && self.stationary_rate_multiplier <= 1.0) {
            return Err(("traffic.stationary_rate_multiplier", "must be in (0, 1]".into()));
        }
        if self.vehicle_rate_multiplier <= 1.0 {
            return Err(("traffic.vehicle_rate_multiplier", "must exceed 1".into()));
        }
        if !(0.0..=1.0).contains(&self.heavy_user_fraction) {
            return Err(("traffic.heavy_user_fraction", "must lie in [0, 1]".into()));
        }
        if !(self.bytes_sigma_ln.is_finite() && self.bytes_sigma_ln >= 0.0) {
            return Err(("traffic.bytes_sigma_ln", "must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// One labeled training record: a femto's KPI vector over one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub cell: CellId,
    pub epoch: u64,
    pub features: FeatureVector,
    pub label: crate::scenario::ConfigClass,
}
