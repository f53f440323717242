use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, CellId, ConfigClass, Position, ScenarioConfig, ScenarioError, Tier};
use crate::rng::{stream, stream_rng};

/// Attempts to place one femto inside its hotspot before falling back to a
/// uniform draw over the whole region.
const CLUSTER_ATTEMPTS: usize = 200;
const FALLBACK_ATTEMPTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NominalFemto {
    pub tx_power_dbm: f64,
    pub handover_margin_db: f64,
    pub ttt_ms: u32,
}

/// One macrocell (always id 0, at the region center) plus femtocells with
/// ids `1..=femto_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub width_m: f64,
    pub height_m: f64,
    pub cells: Vec<Cell>,
    pub nominal: NominalFemto,
    pub offsets: super::MisconfigOffsets,
}

impl NetworkLayout {
    pub fn cell(&self, id: CellId) -> Option<&Cell> {
        self.cells.get(id.index()).filter(|c| c.id == id)
    }

    pub fn macro_cell(&self) -> &Cell {
        &self.cells[0]
    }

    pub fn femtos(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_femto())
    }

    pub fn femto_count(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn contains(&self, p: Position) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }
}

fn uniform_in_disk<R: Rng>(rng: &mut R, center: Position, radius: f64) -> Position {
    // Rejection sampling keeps placement free of transcendental functions,
    // so layouts are bit-identical across platforms.
    loop {
        let dx = rng.gen_range(-1.0..1.0);
        let dy = rng.gen_range(-1.0..1.0);
        if dx * dx + dy * dy <= 1.0 {
            return Position::new(center.x + dx * radius, center.y + dy * radius);
        }
    }
}

pub fn generate_layout(config: &ScenarioConfig) -> Result<NetworkLayout, ScenarioError> {
    config.validate()?;
    let mut rng = stream_rng(config.rng_seed, &[stream::LAYOUT]);
    let (w, h) = (config.region.width_m, config.region.height_m);
    let params = &config.cells;
    let n = params.femto_count;

    let nominal = NominalFemto {
        tx_power_dbm: params.femto_tx_nominal_dbm,
        handover_margin_db: params.handover_margin_nominal_db,
        ttt_ms: params.ttt_nominal_ms,
    };

    let mut cells = Vec::with_capacity(n + 1);
    cells.push(Cell {
        id: CellId::MACRO,
        tier: Tier::Macro,
        position: Position::new(w / 2.0, h / 2.0),
        indoor: false,
        tx_power_dbm: params.macro_tx_dbm,
        handover_margin_db: params.handover_margin_nominal_db,
        ttt_ms: params.ttt_nominal_ms,
        location_type: config.location_type_mix.pick(rng.gen()),
        config_class: ConfigClass::Nominal,
    });

    if n > 0 {
        let r = params.hotspot_radius_m;
        let hotspots = n.div_ceil(params.femtos_per_hotspot);
        // Keep hotspot centers a radius away from the border when the region
        // is large enough to allow it.
        let inset_x = if w > 2.0 * r { r } else { 0.0 };
        let inset_y = if h > 2.0 * r { r } else { 0.0 };
        let parents: Vec<(Position, _)> = (0..hotspots)
            .map(|_| {
                let p = Position::new(
                    rng.gen_range(inset_x..=w - inset_x),
                    rng.gen_range(inset_y..=h - inset_y),
                );
                (p, config.location_type_mix.pick(rng.gen()))
            })
            .collect();

        let min_sep_sq = params.min_separation_m * params.min_separation_m;
        let mut placed: Vec<Position> = Vec::with_capacity(n);
        let fits = |p: Position, placed: &[Position]| {
            (0.0..=w).contains(&p.x)
                && (0.0..=h).contains(&p.y)
                && placed.iter().all(|q| p.distance_sq(*q) >= min_sep_sq)
        };

        for k in 0..n {
            let (center, location_type) = parents[k % hotspots];
            let mut pos = None;
            for _ in 0..CLUSTER_ATTEMPTS {
                let p = uniform_in_disk(&mut rng, center, r);
                if fits(p, &placed) {
                    pos = Some(p);
                    break;
                }
            }
            if pos.is_none() {
                for _ in 0..FALLBACK_ATTEMPTS {
                    let p = Position::new(rng.gen_range(0.0..=w), rng.gen_range(0.0..=h));
                    if fits(p, &placed) {
                        pos = Some(p);
                        break;
                    }
                }
            }
            let position = pos.ok_or(ScenarioError::Placement {
                requested: n,
                placed: placed.len(),
                min_separation_m: params.min_separation_m,
            })?;
            placed.push(position);
            cells.push(Cell {
                id: CellId(k as u32 + 1),
                tier: Tier::Femto,
                position,
                // Station and airport small cells are mounted outdoors.
                indoor: location_type != super::LocationType::Transportation,
                tx_power_dbm: nominal.tx_power_dbm,
                handover_margin_db: nominal.handover_margin_db,
                ttt_ms: nominal.ttt_ms,
                location_type,
                config_class: ConfigClass::Nominal,
            });
        }
    }

    Ok(NetworkLayout {
        width_m: w,
        height_m: h,
        cells,
        nominal,
        offsets: config.misconfig.clone(),
    })
}

/// Returns a copy of `layout` in which femto `cell_id` carries the
/// parameters of `class`. Every class is applied relative to the nominal
/// values, so injecting [`ConfigClass::Nominal`] restores the cell.
pub fn inject_misconfiguration(
    layout: &NetworkLayout,
    cell_id: CellId,
    class: ConfigClass,
) -> Result<NetworkLayout, ScenarioError> {
    let cell = layout.cell(cell_id).ok_or(ScenarioError::UnknownCell(cell_id))?;
    if cell.tier == Tier::Macro {
        return Err(ScenarioError::MacroNotInjectable(cell_id));
    }
    let mut out = layout.clone();
    apply_class(&mut out.cells[cell_id.index()], &layout.nominal, &layout.offsets, class);
    Ok(out)
}

pub(crate) fn apply_class(
    cell: &mut Cell,
    nominal: &NominalFemto,
    offsets: &super::MisconfigOffsets,
    class: ConfigClass,
) {
    cell.tx_power_dbm = nominal.tx_power_dbm;
    cell.handover_margin_db = nominal.handover_margin_db;
    cell.ttt_ms = nominal.ttt_ms;
    match class {
        ConfigClass::Nominal => {}
        ConfigClass::TxTooStrong => cell.tx_power_dbm += offsets.tx_too_strong_delta_db,
        ConfigClass::TxTooWeak => cell.tx_power_dbm += offsets.tx_too_weak_delta_db,
        ConfigClass::HoMarginTooLarge => cell.handover_margin_db = offsets.margin_too_large_db,
        ConfigClass::HoMarginTooSmall => cell.handover_margin_db = offsets.margin_too_small_db,
    }
    cell.config_class = class;
}
