use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::handover::{HandoverEvent, HandoverOutcome};
use super::SimError;
use crate::scenario::CellId;

pub const FEATURE_COUNT: usize = 13;

/// Persisted dimension order. Never reorder: instance exports and saved
/// models index features by position.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "dcr",
    "bcr",
    "bler_proxy",
    "handover_attempts",
    "ho_too_late_count",
    "ho_too_early_count",
    "ho_wrong_cell_count",
    "mean_rssi_dbm",
    "mean_sinr_db",
    "traffic_bytes",
    "active_users",
    "mean_user_rog_m",
    "handover_rate_per_user",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

macro_rules! accessors {
    ($($name:ident = $idx:expr),+ $(,)?) => {
        impl FeatureVector {
            $(pub fn $name(&self) -> f64 { self.0[$idx] })+
        }
    };
}

accessors!(
    dcr = 0,
    bcr = 1,
    bler_proxy = 2,
    handover_attempts = 3,
    ho_too_late_count = 4,
    ho_too_early_count = 5,
    ho_wrong_cell_count = 6,
    mean_rssi_dbm = 7,
    mean_sinr_db = 8,
    traffic_bytes = 9,
    active_users = 10,
    mean_user_rog_m = 11,
    handover_rate_per_user = 12,
);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-step serving-link samples accumulated for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub samples: u64,
    pub sum_rssi_dbm: f64,
    pub sum_sinr_db: f64,
    pub low_sinr_samples: u64,
}

impl LinkStats {
    pub fn record(&mut self, rssi_dbm: f64, sinr_db: f64, low: bool) {
        self.samples += 1;
        self.sum_rssi_dbm += rssi_dbm;
        self.sum_sinr_db += sinr_db;
        self.low_sinr_samples += u64::from(low);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellEventKind {
    SessionAdmitted { user: u32, bytes: u64 },
    SessionBlocked { user: u32 },
    /// A session admitted by this cell was cut by a radio-link failure.
    SessionDropped { user: u32 },
    Handover(HandoverEvent),
}

/// An event tagged with the cell and epoch it is attributed to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEvent {
    pub cell: CellId,
    pub epoch: u64,
    pub kind: CellEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserStat {
    pub user: u32,
    pub rog_m: f64,
}

/// Everything attributed to one cell during one epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellEpochLog {
    pub cell: CellId,
    pub epoch: u64,
    pub events: Vec<CellEvent>,
    pub link: LinkStats,
    /// Users served by the cell at any step of the epoch.
    pub users: Vec<UserStat>,
}

impl CellEpochLog {
    pub fn new(cell: CellId, epoch: u64) -> Self {
        CellEpochLog {
            cell,
            epoch,
            ..Default::default()
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Reduces a cell's epoch log to its KPI vector. Every 0/0 ratio is 0.
pub fn aggregate_kpis(log: &CellEpochLog) -> Result<FeatureVector, SimError> {
    let mut admitted = 0u64;
    let mut blocked = 0u64;
    let mut dropped = 0u64;
    let mut bytes = 0u64;
    let mut attempts = 0u64;
    let (mut late, mut early, mut wrong) = (0u64, 0u64, 0u64);
    for ev in &log.events {
        if ev.cell != log.cell || ev.epoch != log.epoch {
            return Err(SimError::Contract(format!(
                "event tagged (cell {}, epoch {}) in log for (cell {}, epoch {})",
                ev.cell, ev.epoch, log.cell, log.epoch
            )));
        }
        match &ev.kind {
            CellEventKind::SessionAdmitted { bytes: b, .. } => {
                admitted += 1;
                bytes += b;
            }
            CellEventKind::SessionBlocked { .. } => blocked += 1,
            CellEventKind::SessionDropped { .. } => dropped += 1,
            CellEventKind::Handover(h) => {
                if h.source != log.cell {
                    return Err(SimError::Contract(format!(
                        "handover from cell {} attributed to cell {}",
                        h.source, log.cell
                    )));
                }
                attempts += 1;
                match h.outcome {
                    HandoverOutcome::RlfTooLate => late += 1,
                    HandoverOutcome::RlfTooEarly => early += 1,
                    HandoverOutcome::RlfWrongCell => wrong += 1,
                    HandoverOutcome::Success | HandoverOutcome::Blocked => {}
                }
            }
        }
    }
    let distinct: BTreeSet<u32> = log.users.iter().map(|u| u.user).collect();
    if distinct.len() != log.users.len() {
        return Err(SimError::Contract(format!("duplicate user entries in log for cell {}", log.cell)));
    }
    let users = log.users.len() as f64;
    let link = &log.link;
    let n = link.samples as f64;
    Ok(FeatureVector([
        ratio(dropped as f64, admitted as f64).min(1.0),
        ratio(blocked as f64, (admitted + blocked) as f64),
        ratio(link.low_sinr_samples as f64, n),
        attempts as f64,
        late as f64,
        early as f64,
        wrong as f64,
        ratio(link.sum_rssi_dbm, n),
        ratio(link.sum_sinr_db, n),
        bytes as f64,
        users,
        ratio(log.users.iter().map(|u| u.rog_m).sum(), users),
        ratio(attempts as f64, users),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(kind: CellEventKind) -> CellEvent {
        CellEvent { cell: CellId(4), epoch: 2, kind }
    }

    fn ho(outcome: HandoverOutcome) -> CellEventKind {
        CellEventKind::Handover(HandoverEvent {
            user: 1,
            time_ms: 0,
            source: CellId(4),
            target: CellId(5),
            reconnect: None,
            outcome,
            vertical: false,
        })
    }

    #[test]
    fn empty_log_is_all_zero() {
        let fv = aggregate_kpis(&CellEpochLog::new(CellId(4), 2)).unwrap();
        assert_eq!(fv, FeatureVector::default());
    }

    #[test]
    fn drop_rate_ratio() {
        let mut log = CellEpochLog::new(CellId(4), 2);
        for u in 0..10 {
            log.events.push(ev(CellEventKind::SessionAdmitted { user: u, bytes: 100 }));
        }
        log.events.push(ev(CellEventKind::SessionDropped { user: 1 }));
        log.events.push(ev(CellEventKind::SessionDropped { user: 2 }));
        log.events.push(ev(CellEventKind::SessionBlocked { user: 3 }));
        let fv = aggregate_kpis(&log).unwrap();
        assert_eq!(fv.dcr(), 0.2);
        assert_eq!(fv.bcr(), 1.0 / 11.0);
        assert_eq!(fv.traffic_bytes(), 1000.0);
    }

    #[test]
    fn handover_counts() {
        let mut log = CellEpochLog::new(CellId(4), 2);
        log.events.push(ev(ho(HandoverOutcome::Success)));
        log.events.push(ev(ho(HandoverOutcome::RlfTooLate)));
        log.events.push(ev(ho(HandoverOutcome::Success)));
        log.users = vec![UserStat { user: 1, rog_m: 10.0 }, UserStat { user: 2, rog_m: 30.0 }];
        let fv = aggregate_kpis(&log).unwrap();
        assert_eq!(fv.handover_attempts(), 3.0);
        assert_eq!(fv.ho_too_late_count(), 1.0);
        assert_eq!(fv.ho_too_early_count(), 0.0);
        assert_eq!(fv.ho_wrong_cell_count(), 0.0);
        assert_eq!(fv.active_users(), 2.0);
        assert_eq!(fv.mean_user_rog_m(), 20.0);
        assert_eq!(fv.handover_rate_per_user(), 1.5);
    }

    #[test]
    fn link_means() {
        let mut log = CellEpochLog::new(CellId(4), 2);
        log.link.record(-70.0, 5.0, false);
        log.link.record(-80.0, -5.0, true);
        let fv = aggregate_kpis(&log).unwrap();
        assert_eq!(fv.mean_rssi_dbm(), -75.0);
        assert_eq!(fv.mean_sinr_db(), 0.0);
        assert_eq!(fv.bler_proxy(), 0.5);
    }

    #[test]
    fn mismatched_tags_rejected() {
        let mut log = CellEpochLog::new(CellId(4), 2);
        log.events.push(CellEvent { cell: CellId(4), epoch: 3, kind: CellEventKind::SessionBlocked { user: 0 } });
        assert!(matches!(aggregate_kpis(&log), Err(SimError::Contract(_))));
        let mut log = CellEpochLog::new(CellId(4), 2);
        log.events.push(CellEvent { cell: CellId(1), epoch: 2, kind: CellEventKind::SessionBlocked { user: 0 } });
        assert!(aggregate_kpis(&log).is_err());
    }

    #[test]
    fn feature_names_are_frozen() {
        assert_eq!(FEATURE_NAMES.len(), FEATURE_COUNT);
        assert_eq!(FEATURE_NAMES[0], "dcr");
        assert_eq!(FEATURE_NAMES[12], "handover_rate_per_user");
    }
}
