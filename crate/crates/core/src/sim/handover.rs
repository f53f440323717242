use serde::{Deserialize, Serialize};

use super::mobility::UserEquipment;
use super::SimError;
use crate::scenario::{string_enum, CellId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandoverOutcome {
    Success,
    RlfTooLate,
    RlfTooEarly,
    RlfWrongCell,
    Blocked,
}

string_enum!(HandoverOutcome {
    Success => "success",
    RlfTooLate => "rlf_too_late",
    RlfTooEarly => "rlf_too_early",
    RlfWrongCell => "rlf_wrong_cell",
    Blocked => "blocked",
});

/// Mobility-robustness class of a radio-link failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RlfClass {
    TooLate,
    TooEarly,
    WrongCell,
    /// Re-established on the cell that failed: a coverage or interference
    /// outage rather than a mobility failure.
    SameCell,
}

impl RlfClass {
    /// The handover outcome this failure is logged as, if any.
    pub fn outcome(self) -> Option<HandoverOutcome> {
        match self {
            RlfClass::TooLate => Some(HandoverOutcome::RlfTooLate),
            RlfClass::TooEarly => Some(HandoverOutcome::RlfTooEarly),
            RlfClass::WrongCell => Some(HandoverOutcome::RlfWrongCell),
            RlfClass::SameCell => None,
        }
    }
}

/// A handover attempt or a mobility failure.
///
/// For executed handovers (success, too early, wrong cell, blocked) `source`
/// is the cell the user left and `target` the cell it was sent to. For a
/// too-late failure `source` is the serving cell that failed and `target`
/// the cell the user re-established on. `reconnect` is set for every
/// failure. Events are attributed to `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoverEvent {
    pub user: u32,
    pub time_ms: u64,
    pub source: CellId,
    pub target: CellId,
    pub reconnect: Option<CellId>,
    pub outcome: HandoverOutcome,
    /// True when source and target belong to different tiers.
    pub vertical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecentHandover {
    pub time_ms: u64,
    pub source: CellId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub cell: CellId,
    pub rx_dbm: f64,
}

/// A3-style trigger: while the strongest neighbor exceeds the serving cell
/// by more than `margin_db` the time-to-trigger timer accumulates, otherwise
/// it resets. Once the timer reaches `ttt_ms` the user is handed to that
/// neighbor and a [`HandoverOutcome::Success`] event is returned; the caller
/// may downgrade it if execution fails.
pub fn evaluate_handover(
    ue: &mut UserEquipment,
    measurements: &[Measurement],
    margin_db: f64,
    ttt_ms: u32,
    dt_ms: u32,
    now_ms: u64,
) -> Result<Option<HandoverEvent>, SimError> {
    let serving = measurements
        .iter()
        .find(|m| m.cell == ue.serving_cell)
        .ok_or_else(|| {
            SimError::Contract(format!(
                "user {}: serving cell {} missing from measurements",
                ue.id, ue.serving_cell
            ))
        })?;
    // Strongest neighbor; ties go to the lower cell id.
    let best = measurements
        .iter()
        .filter(|m| m.cell != ue.serving_cell)
        .fold(None::<&Measurement>, |best, m| match best {
            Some(b) if b.rx_dbm > m.rx_dbm || (b.rx_dbm == m.rx_dbm && b.cell < m.cell) => Some(b),
            _ => Some(m),
        });
    let Some(best) = best else {
        ue.ttt_timer_ms = 0;
        return Ok(None);
    };
    if best.rx_dbm > serving.rx_dbm + margin_db {
        ue.ttt_timer_ms = ue.ttt_timer_ms.saturating_add(dt_ms);
    } else {
        ue.ttt_timer_ms = 0;
    }
    if ue.ttt_timer_ms < ttt_ms {
        return Ok(None);
    }
    let source = ue.serving_cell;
    ue.ttt_timer_ms = 0;
    ue.serving_cell = best.cell;
    ue.recent_handover = Some(RecentHandover { time_ms: now_ms, source });
    Ok(Some(HandoverEvent {
        user: ue.id,
        time_ms: now_ms,
        source,
        target: best.cell,
        reconnect: None,
        outcome: HandoverOutcome::Success,
        vertical: false,
    }))
}

/// Classifies a radio-link failure of `ue` on its current serving cell.
///
/// A failure within `t_store_ms` of a handover is too early when the user
/// comes back on the handover source, and a wrong-cell handover when it
/// re-establishes on a third cell. Re-establishing on the failed cell itself
/// is not a mobility failure. Everything else is too late.
pub fn classify_rlf(ue: &UserEquipment, event_time_ms: u64, reconnect: CellId, t_store_ms: u32) -> Result<RlfClass, SimError> {
    let recent = ue
        .recent_handover
        .filter(|h| event_time_ms >= h.time_ms && event_time_ms - h.time_ms <= u64::from(t_store_ms));
    if let Some(h) = recent {
        if h.source == ue.serving_cell {
            return Err(SimError::Contract(format!(
                "user {}: recent handover source equals serving cell {}",
                ue.id, h.source
            )));
        }
        if reconnect == h.source {
            return Ok(RlfClass::TooEarly);
        }
        if reconnect != ue.serving_cell {
            return Ok(RlfClass::WrongCell);
        }
    }
    if reconnect == ue.serving_cell {
        Ok(RlfClass::SameCell)
    } else {
        Ok(RlfClass::TooLate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Position;
    use crate::sim::MobilityClass;

    fn ue_on(cell: u32) -> UserEquipment {
        UserEquipment::new(1, Position::new(0.0, 0.0), MobilityClass::Pedestrian, CellId(cell))
    }

    fn meas(list: &[(u32, f64)]) -> Vec<Measurement> {
        list.iter().map(|&(c, rx)| Measurement { cell: CellId(c), rx_dbm: rx }).collect()
    }

    #[test]
    fn equal_powers_with_zero_margin_do_not_accumulate() {
        let mut ue = ue_on(1);
        ue.ttt_timer_ms = 100;
        let ev = evaluate_handover(&mut ue, &meas(&[(1, -80.0), (2, -80.0)]), 0.0, 160, 100, 0).unwrap();
        assert!(ev.is_none());
        assert_eq!(ue.ttt_timer_ms, 0);
        evaluate_handover(&mut ue, &meas(&[(1, -80.0), (2, -79.999)]), 0.0, 160, 100, 0).unwrap();
        assert_eq!(ue.ttt_timer_ms, 100);
    }

    #[test]
    fn hand_stepped_ttt() {
        // neighbor +5 dB, margin 3, TTT 160, dt 100: timer 100 -> no event, 200 -> event
        let mut ue = ue_on(1);
        let m = meas(&[(1, -85.0), (2, -80.0), (3, -95.0)]);
        assert!(evaluate_handover(&mut ue, &m, 3.0, 160, 100, 100).unwrap().is_none());
        assert_eq!(ue.ttt_timer_ms, 100);
        let ev = evaluate_handover(&mut ue, &m, 3.0, 160, 100, 200).unwrap().unwrap();
        assert_eq!((ev.source, ev.target, ev.time_ms), (CellId(1), CellId(2), 200));
        assert_eq!(ev.outcome, HandoverOutcome::Success);
        assert_eq!(ue.serving_cell, CellId(2));
        assert_eq!(ue.ttt_timer_ms, 0);
        assert_eq!(ue.recent_handover, Some(RecentHandover { time_ms: 200, source: CellId(1) }));
    }

    #[test]
    fn large_margin_never_triggers_on_five_db() {
        let mut ue = ue_on(1);
        let m = meas(&[(1, -85.0), (2, -80.0)]);
        for t in 0..50 {
            assert!(evaluate_handover(&mut ue, &m, 10.0, 160, 100, t * 100).unwrap().is_none());
            assert_eq!(ue.ttt_timer_ms, 0);
        }
    }

    #[test]
    fn condition_dropping_resets_timer() {
        let mut ue = ue_on(1);
        evaluate_handover(&mut ue, &meas(&[(1, -85.0), (2, -80.0)]), 3.0, 300, 100, 0).unwrap();
        evaluate_handover(&mut ue, &meas(&[(1, -85.0), (2, -80.0)]), 3.0, 300, 100, 0).unwrap();
        assert_eq!(ue.ttt_timer_ms, 200);
        evaluate_handover(&mut ue, &meas(&[(1, -85.0), (2, -83.0)]), 3.0, 300, 100, 0).unwrap();
        assert_eq!(ue.ttt_timer_ms, 0);
    }

    #[test]
    fn strongest_neighbor_is_chosen() {
        let mut ue = ue_on(1);
        let m = meas(&[(3, -70.0), (1, -90.0), (2, -75.0)]);
        let ev = evaluate_handover(&mut ue, &m, 3.0, 100, 100, 0).unwrap().unwrap();
        assert_eq!(ev.target, CellId(3));
    }

    #[test]
    fn missing_serving_measurement_is_contract_error() {
        let mut ue = ue_on(5);
        let r = evaluate_handover(&mut ue, &meas(&[(1, -80.0)]), 3.0, 160, 100, 0);
        assert!(matches!(r, Err(SimError::Contract(_))));
    }

    #[test]
    fn rlf_definition_cases() {
        let mut ue = ue_on(2);
        ue.recent_handover = Some(RecentHandover { time_ms: 10_000, source: CellId(1) });
        // 1 s after handover
        assert_eq!(classify_rlf(&ue, 11_000, CellId(1), 5000).unwrap(), RlfClass::TooEarly);
        assert_eq!(classify_rlf(&ue, 11_000, CellId(3), 5000).unwrap(), RlfClass::WrongCell);
        // handover too long ago
        assert_eq!(classify_rlf(&ue, 16_000, CellId(1), 5000).unwrap(), RlfClass::TooLate);
        ue.recent_handover = None;
        assert_eq!(classify_rlf(&ue, 11_000, CellId(3), 5000).unwrap(), RlfClass::TooLate);
        // re-establishing on the failed cell is an outage, with or without a
        // recent handover
        assert_eq!(classify_rlf(&ue, 11_000, CellId(2), 5000).unwrap(), RlfClass::SameCell);
        ue.recent_handover = Some(RecentHandover { time_ms: 10_000, source: CellId(1) });
        assert_eq!(classify_rlf(&ue, 11_000, CellId(2), 5000).unwrap(), RlfClass::SameCell);
        assert_eq!(RlfClass::SameCell.outcome(), None);
        assert_eq!(RlfClass::TooLate.outcome(), Some(HandoverOutcome::RlfTooLate));
    }

    #[test]
    fn inconsistent_history_is_contract_error() {
        let mut ue = ue_on(2);
        ue.recent_handover = Some(RecentHandover { time_ms: 0, source: CellId(2) });
        assert!(matches!(classify_rlf(&ue, 100, CellId(1), 5000), Err(SimError::Contract(_))));
    }
}
