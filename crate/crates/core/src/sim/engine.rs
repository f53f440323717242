use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::handover::{classify_rlf, evaluate_handover, HandoverEvent, HandoverOutcome, Measurement, RlfClass};
use super::kpi::{aggregate_kpis, CellEpochLog, CellEvent, CellEventKind, UserStat};
use super::mobility::{generate_users, step_mobility, MobilityBounds, MobilityClass, UserEquipment};
use super::traffic::{generate_traffic, TrafficRecord};
use super::{Instance, SimError};
use crate::analytics::rog_of_points;
use crate::radio::{dbm_to_mw, Propagation, ShadowMap};
use crate::rng::{stream, stream_rng, SimRng};
use crate::scenario::{apply_class, generate_layout, CellId, ConfigClass, NetworkLayout, ScenarioConfig, Tier};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub user: u32,
    pub cell: CellId,
    pub time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user: u32,
    pub mobility_class: MobilityClass,
    pub handovers: u32,
    pub bytes: u64,
    pub rog_m: f64,
    pub cell_rog_m: f64,
    pub visited_cells: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutput {
    pub epoch: u64,
    /// One instance per femto, in cell-id order.
    pub instances: Vec<Instance>,
    /// One log per cell including the macro, in cell-id order.
    pub cell_logs: Vec<CellEpochLog>,
    pub traffic: Vec<TrafficRecord>,
    pub handovers: Vec<HandoverEvent>,
    pub blocked: Vec<SessionOutcome>,
    pub dropped: Vec<SessionOutcome>,
    pub users: Vec<UserSummary>,
}

#[derive(Debug, Clone, Copy)]
struct ActiveSession {
    end_ms: u64,
    admitted_by: CellId,
}

struct CellGeom {
    x: f64,
    y: f64,
    tx_dbm: f64,
    is_macro: bool,
    indoor: bool,
}

struct Radio<'a> {
    cells: Vec<CellGeom>,
    prop: Propagation,
    shadow: &'a ShadowMap,
    wall_db: f64,
}

impl Radio<'_> {
    /// Fills per-cell rx power for one user and returns the total in mW.
    fn compute(&self, user: usize, ue: &UserEquipment, rx: &mut [f64], mw: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (c, g) in self.cells.iter().enumerate() {
            let dx = ue.position.x - g.x;
            let dy = ue.position.y - g.y;
            let d2 = dx * dx + dy * dy;
            let loss = if g.is_macro {
                self.prop.macro_loss(d2)
            } else {
                self.prop.femto_loss(d2)
            };
            let wall = if g.indoor != ue.indoor { self.wall_db } else { 0.0 };
            let v = g.tx_dbm - loss - wall + self.shadow.get(user, c);
            rx[c] = v;
            let m = dbm_to_mw(v);
            mw[c] = m;
            total += m;
        }
        total
    }
}

fn strongest(rx: &[f64]) -> CellId {
    let mut best = 0;
    for (c, &v) in rx.iter().enumerate() {
        if v > rx[best] {
            best = c;
        }
    }
    CellId(best as u32)
}

fn sinr_db(signal_mw: f64, total_mw: f64, noise_mw: f64) -> f64 {
    10.0 * (signal_mw / ((total_mw - signal_mw).max(0.0) + noise_mw)).log10()
}

struct EpochState {
    sessions: Vec<Vec<ActiveSession>>,
    load: Vec<u32>,
    handovers: Vec<HandoverEvent>,
    /// Index into `handovers` of each user's last successful handover.
    last_handover: Vec<Option<usize>>,
    dropped: Vec<SessionOutcome>,
}

impl EpochState {
    fn move_user(&mut self, user: usize, from: CellId, to: CellId) {
        let n = self.sessions[user].len() as u32;
        self.load[from.index()] -= n;
        self.load[to.index()] += n;
    }

    fn drop_sessions(&mut self, user: usize, serving: CellId, now: u64) {
        let n = self.sessions[user].len() as u32;
        self.load[serving.index()] -= n;
        for s in self.sessions[user].drain(..) {
            self.dropped.push(SessionOutcome {
                user: user as u32,
                cell: s.admitted_by,
                time_ms: now,
            });
        }
    }
}

/// Simulates one epoch of `config.timing.epoch_duration_s` in steps of
/// `config.timing.step_ms`. Users carry position, serving cell and timers
/// across epochs; trajectories and handover history start fresh.
pub fn run_epoch(
    layout: &NetworkLayout,
    users: &mut [UserEquipment],
    config: &ScenarioConfig,
    epoch: u64,
    rng: &mut SimRng,
) -> Result<EpochOutput> {
    let n_cells = layout.cells.len();
    for (i, c) in layout.cells.iter().enumerate() {
        if c.id.index() != i {
            return Err(SimError::Contract(format!("cell at index {i} has id {}", c.id)).into());
        }
    }
    for ue in users.iter() {
        if ue.serving_cell.index() >= n_cells {
            return Err(SimError::Contract(format!("user {} served by unknown cell {}", ue.id, ue.serving_cell)).into());
        }
    }

    let radio_p = &config.radio;
    let mro = &config.mro;
    let step_ms = config.timing.step_ms;
    let dt_s = f64::from(step_ms) / 1000.0;
    let steps = config.timing.steps_per_epoch();
    let t0 = epoch * config.timing.epoch_duration_ms();
    let noise_mw = dbm_to_mw(radio_p.noise_dbm);
    let bounds = MobilityBounds::from_config(config);

    let sigmas: Vec<f64> = layout
        .cells
        .iter()
        .map(|c| if c.indoor { radio_p.shadow_sigma_indoor_db } else { radio_p.shadow_sigma_outdoor_db })
        .collect();
    let shadow = ShadowMap::generate(config.rng_seed, epoch, users.len(), &sigmas);
    let radio = Radio {
        cells: layout
            .cells
            .iter()
            .map(|c| CellGeom {
                x: c.position.x,
                y: c.position.y,
                tx_dbm: c.tx_power_dbm,
                is_macro: c.tier == Tier::Macro,
                indoor: c.indoor,
            })
            .collect(),
        prop: Propagation::new(radio_p).map_err(Error::from)?,
        shadow: &shadow,
        wall_db: radio_p.wall_loss_db,
    };

    let n_users = users.len();
    let mut rx = vec![0.0; n_users * n_cells];
    let mut mw = vec![0.0; n_users * n_cells];
    let mut total_mw = vec![0.0; n_users];
    for (u, ue) in users.iter_mut().enumerate() {
        ue.trajectory.clear();
        // Failure attribution is epoch-local: an earlier epoch's handover
        // events are already aggregated and cannot be reclassified.
        ue.recent_handover = None;
        total_mw[u] = radio.compute(u, ue, &mut rx[u * n_cells..(u + 1) * n_cells], &mut mw[u * n_cells..(u + 1) * n_cells]);
    }

    let mut logs: Vec<CellEpochLog> = layout.cells.iter().map(|c| CellEpochLog::new(c.id, epoch)).collect();
    let mut st = EpochState {
        sessions: vec![Vec::new(); n_users],
        load: vec![0; n_cells],
        handovers: Vec::new(),
        last_handover: vec![None; n_users],
        dropped: Vec::new(),
    };
    let mut traffic = Vec::new();
    let mut blocked = Vec::new();
    let mut report: Vec<Measurement> = Vec::with_capacity(n_cells);
    // (1 + step of last update, filtered value) per user and cell. A cell
    // missing from the previous report restarts from the raw sample.
    let mut filtered: Vec<(u64, f64)> = vec![(0, 0.0); n_users * n_cells];
    let a = mro.l3_filter_coefficient;

    for step in 0..steps {
        let now = t0 + (step + 1) * u64::from(step_ms);
        for (u, ue) in users.iter_mut().enumerate() {
            if ue.mobility_class != MobilityClass::Stationary {
                step_mobility(ue, dt_s, &bounds, rng)?;
                total_mw[u] = radio.compute(u, ue, &mut rx[u * n_cells..(u + 1) * n_cells], &mut mw[u * n_cells..(u + 1) * n_cells]);
            }
        }

        for (u, ue) in users.iter_mut().enumerate() {
            let rx_u = &rx[u * n_cells..(u + 1) * n_cells];
            let mw_u = &mw[u * n_cells..(u + 1) * n_cells];

            // session expiry
            let before = st.sessions[u].len();
            st.sessions[u].retain(|s| s.end_ms > now);
            st.load[ue.serving_cell.index()] -= (before - st.sessions[u].len()) as u32;

            let serving = ue.serving_cell;
            let sinr = sinr_db(mw_u[serving.index()], total_mw[u], noise_mw);
            logs[serving.index()]
                .link
                .record(rx_u[serving.index()], sinr, sinr < mro.bler_sinr_threshold_db);

            // radio-link monitoring
            if sinr < mro.q_out_db {
                ue.rlf_timer_ms += step_ms;
            } else {
                ue.rlf_timer_ms = 0;
            }
            if ue.rlf_timer_ms >= mro.t_rlf_ms {
                let reconnect = strongest(rx_u);
                let class = classify_rlf(ue, now, reconnect, mro.t_store_ms)?;
                match (class, st.last_handover[u]) {
                    (RlfClass::TooEarly | RlfClass::WrongCell, Some(idx)) => {
                        let ev = &mut st.handovers[idx];
                        ev.outcome = class.outcome().expect("mobility failure class");
                        ev.reconnect = Some(reconnect);
                    }
                    (RlfClass::TooEarly | RlfClass::WrongCell, None) => {
                        return Err(SimError::Contract(format!("user {}: handover failure without a logged handover", ue.id)).into());
                    }
                    (RlfClass::TooLate, _) => st.handovers.push(HandoverEvent {
                        user: ue.id,
                        time_ms: now,
                        source: serving,
                        target: reconnect,
                        reconnect: Some(reconnect),
                        outcome: HandoverOutcome::RlfTooLate,
                        vertical: layout.cells[serving.index()].tier != layout.cells[reconnect.index()].tier,
                    }),
                    (RlfClass::SameCell, _) => {}
                }
                st.drop_sessions(u, serving, now);
                ue.serving_cell = reconnect;
                ue.rlf_timer_ms = 0;
                ue.ttt_timer_ms = 0;
                ue.recent_handover = None;
                st.last_handover[u] = None;
            } else {
                // measurement report: serving plus detectable neighbors, with
                // per-sample measurement error smoothed by the L3 filter
                report.clear();
                let floor = rx_u[serving.index()] - mro.report_range_db;
                for (c, &v) in rx_u.iter().enumerate() {
                    if c == serving.index() || v >= floor {
                        let err: f64 = rng.sample(StandardNormal);
                        let sample = v + mro.measurement_noise_db * err;
                        let slot = &mut filtered[u * n_cells + c];
                        let value = if slot.0 == step { (1.0 - a) * slot.1 + a * sample } else { sample };
                        *slot = (step + 1, value);
                        report.push(Measurement {
                            cell: CellId(c as u32),
                            rx_dbm: value,
                        });
                    }
                }
                let sc = &layout.cells[serving.index()];
                let prev_recent = ue.recent_handover;
                if let Some(mut ev) = evaluate_handover(ue, &report, sc.handover_margin_db, sc.ttt_ms, step_ms, now)? {
                    let target = ev.target;
                    let tc = &layout.cells[target.index()];
                    ev.vertical = sc.tier != tc.tier;
                    let n_sess = st.sessions[u].len() as u32;
                    if tc.tier == Tier::Femto && n_sess > 0 && st.load[target.index()] + n_sess > mro.femto_session_capacity {
                        ev.outcome = HandoverOutcome::Blocked;
                        ue.serving_cell = serving;
                        ue.recent_handover = prev_recent;
                        st.handovers.push(ev);
                    } else if sinr_db(mw_u[target.index()], total_mw[u], noise_mw) < mro.q_out_db {
                        // handover execution fails in the target cell
                        let reconnect = strongest(rx_u);
                        let class = classify_rlf(ue, now, reconnect, mro.t_store_ms)?;
                        st.drop_sessions(u, serving, now);
                        ue.rlf_timer_ms = 0;
                        if let Some(outcome) = class.outcome() {
                            ev.outcome = outcome;
                            ev.reconnect = Some(reconnect);
                            st.handovers.push(ev);
                            ue.serving_cell = reconnect;
                            ue.recent_handover = None;
                            st.last_handover[u] = None;
                        } else {
                            // re-established on the target after an outage
                            st.last_handover[u] = Some(st.handovers.len());
                            st.handovers.push(ev);
                        }
                    } else {
                        st.move_user(u, serving, target);
                        st.last_handover[u] = Some(st.handovers.len());
                        st.handovers.push(ev);
                        ue.rlf_timer_ms = 0;
                    }
                }
            }

            // traffic on the (possibly new) serving cell
            let cell = &layout.cells[ue.serving_cell.index()];
            for rec in generate_traffic(ue, cell.location_type, cell.id, now, dt_s, &config.traffic, rng)? {
                if cell.tier == Tier::Femto && st.load[cell.id.index()] >= mro.femto_session_capacity {
                    blocked.push(SessionOutcome {
                        user: ue.id,
                        cell: cell.id,
                        time_ms: now,
                    });
                } else {
                    st.sessions[u].push(ActiveSession {
                        end_ms: now + rec.duration_ms,
                        admitted_by: cell.id,
                    });
                    st.load[cell.id.index()] += 1;
                    traffic.push(rec);
                }
            }

            ue.trajectory.push(super::mobility::TrajectorySample {
                time_ms: now,
                cell: ue.serving_cell,
                position: ue.position,
            });
        }
    }

    // Sessions still open at the epoch boundary are closed normally.
    let EpochState { handovers, dropped, .. } = st;

    let mut summaries = Vec::with_capacity(n_users);
    let mut cell_users: Vec<Vec<UserStat>> = vec![Vec::new(); n_cells];
    let mut per_user_handovers = vec![0u32; n_users];
    for h in &handovers {
        per_user_handovers[h.user as usize] += 1;
    }
    let mut per_user_bytes = vec![0u64; n_users];
    for r in &traffic {
        per_user_bytes[r.user as usize] += r.bytes;
    }
    for (u, ue) in users.iter().enumerate() {
        let rog = rog_of_points(ue.trajectory.iter().map(|s| s.position)).unwrap_or(0.0);
        let cell_rog =
            rog_of_points(ue.trajectory.iter().map(|s| layout.cells[s.cell.index()].position)).unwrap_or(0.0);
        let visited: BTreeSet<CellId> = ue.trajectory.iter().map(|s| s.cell).collect();
        for c in &visited {
            cell_users[c.index()].push(UserStat { user: ue.id, rog_m: rog });
        }
        summaries.push(UserSummary {
            user: ue.id,
            mobility_class: ue.mobility_class,
            handovers: per_user_handovers[u],
            bytes: per_user_bytes[u],
            rog_m: rog,
            cell_rog_m: cell_rog,
            visited_cells: visited.len() as u32,
        });
    }

    let tag = |cell: CellId, kind| CellEvent { cell, epoch, kind };
    for r in &traffic {
        logs[r.cell.index()].events.push(tag(r.cell, CellEventKind::SessionAdmitted { user: r.user, bytes: r.bytes }));
    }
    for b in &blocked {
        logs[b.cell.index()].events.push(tag(b.cell, CellEventKind::SessionBlocked { user: b.user }));
    }
    for d in &dropped {
        logs[d.cell.index()].events.push(tag(d.cell, CellEventKind::SessionDropped { user: d.user }));
    }
    for h in &handovers {
        logs[h.source.index()].events.push(tag(h.source, CellEventKind::Handover(h.clone())));
    }
    for (log, stats) in logs.iter_mut().zip(cell_users) {
        log.users = stats;
    }

    let mut instances = Vec::with_capacity(layout.femto_count());
    for (cell, log) in layout.cells.iter().zip(&logs) {
        if cell.is_femto() {
            instances.push(Instance {
                cell: cell.id,
                epoch,
                features: aggregate_kpis(log)?,
                label: cell.config_class,
            });
        }
    }

    Ok(EpochOutput {
        epoch,
        instances,
        cell_logs: logs,
        traffic,
        handovers,
        blocked,
        dropped,
        users: summaries,
    })
}

/// Which femtos carry which misconfiguration in each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub epochs: Vec<Vec<(CellId, ConfigClass)>>,
}

impl AssignmentPlan {
    /// Every femto nominal in every epoch.
    pub fn nominal(epochs: usize) -> Self {
        AssignmentPlan {
            epochs: vec![Vec::new(); epochs],
        }
    }

    /// Per epoch, misconfigures a random `fraction` of femtos, dealing the
    /// four misconfiguration classes round-robin so they are as even as
    /// possible.
    pub fn random(layout: &NetworkLayout, epochs: usize, fraction: f64, seed: u64) -> Self {
        let femtos: Vec<CellId> = layout.femtos().map(|c| c.id).collect();
        let k = ((fraction * femtos.len() as f64).round() as usize).min(femtos.len());
        let plan = (0..epochs)
            .map(|e| {
                let mut rng = stream_rng(seed, &[stream::MISCONFIG, e as u64]);
                let mut ids = femtos.clone();
                ids.shuffle(&mut rng);
                let mut classes = ConfigClass::MISCONFIGURATIONS;
                classes.shuffle(&mut rng);
                let mut chosen: Vec<(CellId, ConfigClass)> =
                    ids.into_iter().take(k).enumerate().map(|(i, id)| (id, classes[i % 4])).collect();
                chosen.sort();
                chosen
            })
            .collect();
        AssignmentPlan { epochs: plan }
    }

    pub fn layout_for(&self, base: &NetworkLayout, epoch: usize) -> Result<NetworkLayout> {
        let mut layout = base.clone();
        for &(id, class) in self.epochs.get(epoch).map(Vec::as_slice).unwrap_or(&[]) {
            let cell = layout.cell(id).ok_or(crate::scenario::ScenarioError::UnknownCell(id))?;
            if cell.tier == Tier::Macro {
                return Err(crate::scenario::ScenarioError::MacroNotInjectable(id).into());
            }
            apply_class(&mut layout.cells[id.index()], &base.nominal, &base.offsets, class);
        }
        Ok(layout)
    }
}

/// A seeded multi-epoch run over one layout and user population.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: ScenarioConfig,
    pub layout: NetworkLayout,
    pub users: Vec<UserEquipment>,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let layout = generate_layout(&config)?;
        Self::with_layout(config, layout)
    }

    pub fn with_layout(config: ScenarioConfig, layout: NetworkLayout) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.rng_seed, &[stream::USERS]);
        let mut users = generate_users(&layout, &config, &mut rng);
        // Initial attachment by mean received power (no shadowing).
        let prop = Propagation::new(&config.radio)?;
        for ue in &mut users {
            let rx: Vec<f64> = layout
                .cells
                .iter()
                .map(|c| {
                    let d2 = ue.position.distance_sq(c.position);
                    let loss = if c.tier == Tier::Macro { prop.macro_loss(d2) } else { prop.femto_loss(d2) };
                    let wall = if c.indoor != ue.indoor { config.radio.wall_loss_db } else { 0.0 };
                    c.tx_power_dbm - loss - wall
                })
                .collect();
            ue.serving_cell = strongest(&rx);
        }
        Ok(Simulation { config, layout, users })
    }

    pub fn epoch_rng(&self, epoch: u64) -> SimRng {
        stream_rng(self.config.rng_seed, &[stream::EPOCH, epoch])
    }

    /// Runs epoch `epoch` with the given per-epoch layout.
    pub fn run_epoch_with(&mut self, layout: &NetworkLayout, epoch: u64) -> Result<EpochOutput> {
        let mut rng = self.epoch_rng(epoch);
        run_epoch(layout, &mut self.users, &self.config, epoch, &mut rng)
    }

    /// Runs every epoch of the plan in order.
    pub fn run(&mut self, plan: &AssignmentPlan) -> Result<Vec<EpochOutput>> {
        let base = self.layout.clone();
        (0..plan.epochs.len())
            .map(|e| {
                let layout = plan.layout_for(&base, e)?;
                self.run_epoch_with(&layout, e as u64)
            })
            .collect()
    }
}
