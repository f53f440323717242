//! Network layouts, scenario configuration and misconfiguration injection.

mod config;
mod io;
mod layout;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{CellParams, LocationMix, MisconfigOffsets, Region, ScenarioConfig, Timing, UserParams};
pub use io::{load_scenario, parse_scenario, read_layout_csv, save_scenario, scenario_to_toml, write_layout_csv, LAYOUT_CSV_HEADER};
pub use layout::{generate_layout, inject_misconfiguration, NetworkLayout, NominalFemto};
pub(crate) use layout::apply_class;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("scenario parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot place {requested} femtocells (placed {placed}) with minimum separation {min_separation_m} m")]
    Placement {
        requested: usize,
        placed: usize,
        min_separation_m: f64,
    },
    #[error("cell {0} is the macrocell; only femtocells can be misconfigured")]
    MacroNotInjectable(CellId),
    #[error("unknown cell id {0}")]
    UnknownCell(CellId),
    #[error("malformed layout record: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl CellId {
    pub const MACRO: CellId = CellId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! string_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl ::std::fmt::Display for $ty {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> ::std::result::Result<Self, Self::Err> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(format!("unknown {} `{}`", stringify!($ty), other)),
                }
            }
        }
    };
}
pub(crate) use string_enum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Macro,
    Femto,
}

string_enum!(Tier { Macro => "macro", Femto => "femto" });

/// Functional class of the area a cell covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationType {
    Transportation,
    Education,
    Work,
    Entertainment,
}

string_enum!(LocationType {
    Transportation => "transportation",
    Education => "education",
    Work => "work",
    Entertainment => "entertainment",
});

impl LocationType {
    pub const ALL: [LocationType; 4] = [
        LocationType::Transportation,
        LocationType::Education,
        LocationType::Work,
        LocationType::Entertainment,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Configuration state of a cell. Declaration order is the tie-break order
/// used by every argmax in the diagnosis module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigClass {
    Nominal,
    TxTooStrong,
    TxTooWeak,
    HoMarginTooLarge,
    HoMarginTooSmall,
}

string_enum!(ConfigClass {
    Nominal => "nominal",
    TxTooStrong => "tx_too_strong",
    TxTooWeak => "tx_too_weak",
    HoMarginTooLarge => "ho_margin_too_large",
    HoMarginTooSmall => "ho_margin_too_small",
});

impl ConfigClass {
    pub const ALL: [ConfigClass; 5] = [
        ConfigClass::Nominal,
        ConfigClass::TxTooStrong,
        ConfigClass::TxTooWeak,
        ConfigClass::HoMarginTooLarge,
        ConfigClass::HoMarginTooSmall,
    ];

    pub const MISCONFIGURATIONS: [ConfigClass; 4] = [
        ConfigClass::TxTooStrong,
        ConfigClass::TxTooWeak,
        ConfigClass::HoMarginTooLarge,
        ConfigClass::HoMarginTooSmall,
    ];

    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ConfigClass> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance_sq(self, other: Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Position) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: CellId,
    pub tier: Tier,
    pub position: Position,
    pub indoor: bool,
    pub tx_power_dbm: f64,
    pub handover_margin_db: f64,
    pub ttt_ms: u32,
    pub location_type: LocationType,
    pub config_class: ConfigClass,
}

impl Cell {
    pub const MIN_TX_DBM: f64 = -10.0;
    pub const MAX_TX_DBM: f64 = 46.0;

    pub fn is_femto(&self) -> bool {
        self.tier == Tier::Femto
    }
}
