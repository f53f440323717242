use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    layout::NominalFemto, Cell, CellId, ConfigClass, LocationType, MisconfigOffsets, NetworkLayout, Position,
    ScenarioConfig, ScenarioError, Tier,
};
use crate::Error;

pub const LAYOUT_CSV_HEADER: &str = "id,tier,x_m,y_m,indoor,tx_dbm,margin_db,ttt_ms,location_type,config_class";

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a TOML scenario. Omitted keys take their defaults;
/// unknown keys are rejected.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_scenario(&text)?)
}

pub fn scenario_to_toml(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("scenario config is always representable as TOML")
}

pub fn save_scenario(config: &ScenarioConfig, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    std::fs::write(path, scenario_to_toml(config)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct LayoutRecord {
    id: u32,
    tier: String,
    x_m: f64,
    y_m: f64,
    indoor: bool,
    tx_dbm: f64,
    margin_db: f64,
    ttt_ms: u32,
    location_type: String,
    config_class: String,
}

pub fn write_layout_csv<W: Write>(layout: &NetworkLayout, out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    for c in &layout.cells {
        w.serialize(LayoutRecord {
            id: c.id.0,
            tier: c.tier.to_string(),
            x_m: c.position.x,
            y_m: c.position.y,
            indoor: c.indoor,
            tx_dbm: c.tx_power_dbm,
            margin_db: c.handover_margin_db,
            ttt_ms: c.ttt_ms,
            location_type: c.location_type.to_string(),
            config_class: c.config_class.to_string(),
        })
        .map_err(|e| ScenarioError::Layout(e.to_string()))?;
    }
    w.flush().map_err(|e| ScenarioError::Layout(e.to_string()))
}

/// Reads a layout export back. Nominal femto parameters are recovered from
/// the first nominal femto (or the macro when none exists); misconfiguration
/// offsets are not part of the export and take their defaults.
pub fn read_layout_csv<R: Read>(input: R) -> Result<NetworkLayout, ScenarioError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| ScenarioError::Layout(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != LAYOUT_CSV_HEADER {
        return Err(ScenarioError::Layout(format!("unexpected header `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut cells = Vec::new();
    for (i, rec) in r.deserialize::<LayoutRecord>().enumerate() {
        let rec = rec.map_err(|e| ScenarioError::Layout(e.to_string()))?;
        let bad = |m: String| ScenarioError::Layout(format!("row {}: {m}", i + 1));
        if rec.id as usize != i {
            return Err(bad(format!("cell ids must be dense and ordered, found {}", rec.id)));
        }
        cells.push(Cell {
            id: CellId(rec.id),
            tier: rec.tier.parse::<Tier>().map_err(bad)?,
            position: Position::new(rec.x_m, rec.y_m),
            indoor: rec.indoor,
            tx_power_dbm: rec.tx_dbm,
            handover_margin_db: rec.margin_db,
            ttt_ms: rec.ttt_ms,
            location_type: rec.location_type.parse::<LocationType>().map_err(bad)?,
            config_class: rec.config_class.parse::<ConfigClass>().map_err(bad)?,
        });
    }
    match cells.first() {
        Some(c) if c.tier == Tier::Macro => {}
        _ => return Err(ScenarioError::Layout("first row must be the macrocell".into())),
    }
    if cells[1..].iter().any(|c| c.tier != Tier::Femto) {
        return Err(ScenarioError::Layout("exactly one macrocell is allowed".into()));
    }
    let reference = cells[1..]
        .iter()
        .find(|c| c.config_class == ConfigClass::Nominal)
        .unwrap_or(&cells[0]);
    let nominal = NominalFemto {
        tx_power_dbm: reference.tx_power_dbm,
        handover_margin_db: reference.handover_margin_db,
        ttt_ms: reference.ttt_ms,
    };
    let macro_pos = cells[0].position;
    Ok(NetworkLayout {
        width_m: macro_pos.x * 2.0,
        height_m: macro_pos.y * 2.0,
        cells,
        nominal,
        offsets: MisconfigOffsets::default(),
    })
}
