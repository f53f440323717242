use serde::{Deserialize, Serialize};

use super::{Cell, LocationType, ScenarioError, SCENARIO_SCHEMA_VERSION};
use crate::radio::RadioParams;
use crate::sim::{MroParams, TrafficParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Region {
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region {
            width_m: 1000.0,
            height_m: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellParams {
    /// Number of femtocells overlaid on the macrocell ("cell density").
    pub femto_count: usize,
    pub macro_tx_dbm: f64,
    pub femto_tx_nominal_dbm: f64,
    pub handover_margin_nominal_db: f64,
    pub ttt_nominal_ms: u32,
    pub min_separation_m: f64,
    pub hotspot_radius_m: f64,
    pub femtos_per_hotspot: usize,
}

impl Default for CellParams {
    fn default() -> Self {
        CellParams {
            femto_count: 20,
            macro_tx_dbm: 43.0,
            femto_tx_nominal_dbm: 13.0,
            handover_margin_nominal_db: 3.0,
            ttt_nominal_ms: 160,
            min_separation_m: 10.0,
            hotspot_radius_m: 60.0,
            femtos_per_hotspot: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UserParams {
    pub count: usize,
    /// Fraction of users whose home lies inside a femto hotspot; the rest
    /// are spread uniformly over the region.
    pub hotspot_fraction: f64,
    /// Radius around the home femto in which hotspot users are homed.
    pub home_radius_m: f64,
    /// Pedestrian waypoints are drawn within this radius of home.
    pub pedestrian_roam_radius_m: f64,
    /// Log-normal spread of per-femto attractiveness: hotspot users pick
    /// their home femto with probability proportional to exp(σ·z).
    pub popularity_sigma: f64,
}

impl Default for UserParams {
    fn default() -> Self {
        UserParams {
            count: 110,
            hotspot_fraction: 0.8,
            home_radius_m: 40.0,
            pedestrian_roam_radius_m: 200.0,
            popularity_sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timing {
    pub epoch_duration_s: f64,
    pub epochs_per_run: usize,
    pub step_ms: u32,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            epoch_duration_s: 60.0,
            epochs_per_run: 20,
            step_ms: 100,
        }
    }
}

impl Timing {
    pub fn steps_per_epoch(&self) -> u64 {
        (self.epoch_duration_s * 1000.0 / f64::from(self.step_ms)).round() as u64
    }

    pub fn epoch_duration_ms(&self) -> u64 {
        self.steps_per_epoch() * u64::from(self.step_ms)
    }
}

/// Fractions of femto hotspots per location type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocationMix {
    pub transportation: f64,
    pub education: f64,
    pub work: f64,
    pub entertainment: f64,
}

impl Default for LocationMix {
    fn default() -> Self {
        LocationMix {
            transportation: 0.2,
            education: 0.2,
            work: 0.3,
            entertainment: 0.3,
        }
    }
}

impl LocationMix {
    pub fn fractions(&self) -> [f64; 4] {
        [self.transportation, self.education, self.work, self.entertainment]
    }

    /// Maps a uniform draw in [0, 1) to a location type by cumulative mix.
    pub fn pick(&self, u: f64) -> LocationType {
        let mut acc = 0.0;
        for (ty, f) in LocationType::ALL.iter().zip(self.fractions()) {
            acc += f;
            if u < acc {
                return *ty;
            }
        }
        // u lands past the cumulative sum only through rounding; take the
        // last type with nonzero mass.
        LocationType::ALL
            .iter()
            .zip(self.fractions())
            .rev()
            .find(|(_, f)| *f > 0.0)
            .map(|(ty, _)| *ty)
            .unwrap_or(LocationType::Work)
    }
}

/// Parameter values a misconfigured femto takes on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MisconfigOffsets {
    pub tx_too_strong_delta_db: f64,
    pub tx_too_weak_delta_db: f64,
    pub margin_too_large_db: f64,
    pub margin_too_small_db: f64,
}

impl Default for MisconfigOffsets {
    fn default() -> Self {
        MisconfigOffsets {
            tx_too_strong_delta_db: 10.0,
            tx_too_weak_delta_db: -13.0,
            margin_too_large_db: 10.0,
            margin_too_small_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub rng_seed: u64,
    pub region: Region,
    pub cells: CellParams,
    pub users: UserParams,
    pub timing: Timing,
    pub location_type_mix: LocationMix,
    pub misconfig: MisconfigOffsets,
    pub radio: RadioParams,
    pub mro: MroParams,
    pub traffic: TrafficParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            schema_version: SCENARIO_SCHEMA_VERSION,
            rng_seed: 1,
            region: Region::default(),
            cells: CellParams::default(),
            users: UserParams::default(),
            timing: Timing::default(),
            location_type_mix: LocationMix::default(),
            misconfig: MisconfigOffsets::default(),
            radio: RadioParams::default(),
            mro: MroParams::default(),
            traffic: TrafficParams::default(),
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field,
        reason: reason.into(),
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn fraction(field: &'static str, v: f64) -> Result<(), ScenarioError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

fn tx_range(field: &'static str, v: f64) -> Result<(), ScenarioError> {
    if (Cell::MIN_TX_DBM..=Cell::MAX_TX_DBM).contains(&v) {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("{v} dBm outside [{}, {}]", Cell::MIN_TX_DBM, Cell::MAX_TX_DBM),
        ))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCENARIO_SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        positive("region.width_m", self.region.width_m)?;
        positive("region.height_m", self.region.height_m)?;

        let c = &self.cells;
        tx_range("cells.macro_tx_dbm", c.macro_tx_dbm)?;
        tx_range("cells.femto_tx_nominal_dbm", c.femto_tx_nominal_dbm)?;
        for (field, delta) in [
            ("misconfig.tx_too_strong_delta_db", self.misconfig.tx_too_strong_delta_db),
            ("misconfig.tx_too_weak_delta_db", self.misconfig.tx_too_weak_delta_db),
        ] {
            tx_range(field, c.femto_tx_nominal_dbm + delta)?;
        }
        for (field, m) in [
            ("cells.handover_margin_nominal_db", c.handover_margin_nominal_db),
            ("misconfig.margin_too_large_db", self.misconfig.margin_too_large_db),
            ("misconfig.margin_too_small_db", self.misconfig.margin_too_small_db),
        ] {
            if !m.is_finite() || m < 0.0 {
                return Err(invalid(field, format!("must be finite and >= 0, got {m}")));
            }
        }
        if c.ttt_nominal_ms == 0 {
            return Err(invalid("cells.ttt_nominal_ms", "must be > 0"));
        }
        if !(c.min_separation_m.is_finite() && c.min_separation_m >= 0.0) {
            return Err(invalid("cells.min_separation_m", "must be finite and >= 0"));
        }
        positive("cells.hotspot_radius_m", c.hotspot_radius_m)?;
        if c.femtos_per_hotspot == 0 {
            return Err(invalid("cells.femtos_per_hotspot", "must be >= 1"));
        }

        fraction("users.hotspot_fraction", self.users.hotspot_fraction)?;
        positive("users.home_radius_m", self.users.home_radius_m)?;
        positive("users.pedestrian_roam_radius_m", self.users.pedestrian_roam_radius_m)?;
        if !(self.users.popularity_sigma >= 0.0 && self.users.popularity_sigma.is_finite()) {
            return Err(ScenarioError::Invalid {
                field: "users.popularity_sigma",
                reason: format!("must be finite and >= 0, got {}", self.users.popularity_sigma),
            });
        }

        positive("timing.epoch_duration_s", self.timing.epoch_duration_s)?;
        if self.timing.step_ms == 0 {
            return Err(invalid("timing.step_ms", "must be > 0"));
        }
        if self.timing.steps_per_epoch() == 0 {
            return Err(invalid("timing.epoch_duration_s", "shorter than one step"));
        }

        let mix = self.location_type_mix.fractions();
        for f in mix {
            fraction("location_type_mix", f)?;
        }
        let sum: f64 = mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid("location_type_mix", format!("fractions sum to {sum}, expected 1")));
        }

        self.radio.validate().map_err(|(field, reason)| invalid(field, reason))?;
        self.mro.validate().map_err(|(field, reason)| invalid(field, reason))?;
        self.traffic.validate().map_err(|(field, reason)| invalid(field, reason))?;
        Ok(())
    }
}
