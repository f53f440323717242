//! Propagation and link-budget arithmetic.
//!
//! Macro links use COST231-Hata (urban, +3 dB metropolitan correction);
//! femto links use the ITU indoor site-general form with a distance power
//! loss coefficient of 30. All powers are dBm, losses dB, distances meters.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream, stream_rng};

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("parameter `{name}` = {value} outside valid domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
}

fn check(name: &'static str, value: f64, ok: bool, domain: &'static str) -> Result<(), RadioError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(RadioError::Domain { name, value, domain })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    pub carrier_mhz: f64,
    pub noise_dbm: f64,
    /// Penetration loss when a link crosses an indoor/outdoor boundary.
    pub wall_loss_db: f64,
    pub shadow_sigma_outdoor_db: f64,
    pub shadow_sigma_indoor_db: f64,
    pub macro_height_m: f64,
    pub ue_height_m: f64,
    pub indoor_floors: u32,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            carrier_mhz: 2000.0,
            noise_dbm: -104.0,
            wall_loss_db: 10.0,
            shadow_sigma_outdoor_db: 8.0,
            shadow_sigma_indoor_db: 4.0,
            macro_height_m: 30.0,
            ue_height_m: 1.5,
            indoor_floors: 0,
        }
    }
}

impl RadioParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        // Probe both models once; that checks every parameter they consume.
        path_loss_cost231(1000.0, self.carrier_mhz, self.macro_height_m, self.ue_height_m)
            .and_then(|_| path_loss_itu_indoor(1.0, self.carrier_mhz, self.indoor_floors))
            .map_err(|e| match e {
                RadioError::Domain { name, .. } => (
                    match name {
                        "freq" => "radio.carrier_mhz",
                        "h_base" => "radio.macro_height_m",
                        "h_mobile" => "radio.ue_height_m",
                        _ => "radio",
                    },
                    e.to_string(),
                ),
            })?;
        for (field, v) in [
            ("radio.noise_dbm", self.noise_dbm),
            ("radio.wall_loss_db", self.wall_loss_db),
            ("radio.shadow_sigma_outdoor_db", self.shadow_sigma_outdoor_db),
            ("radio.shadow_sigma_indoor_db", self.shadow_sigma_indoor_db),
        ] {
            if !v.is_finite() {
                return Err((field, format!("must be finite, got {v}")));
            }
        }
        for (field, v) in [
            ("radio.wall_loss_db", self.wall_loss_db),
            ("radio.shadow_sigma_outdoor_db", self.shadow_sigma_outdoor_db),
            ("radio.shadow_sigma_indoor_db", self.shadow_sigma_indoor_db),
        ] {
            if v < 0.0 {
                return Err((field, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn cost231_correction(freq_mhz: f64, h_mobile: f64) -> f64 {
    let lf = freq_mhz.log10();
    (1.1 * lf - 0.7) * h_mobile - (1.56 * lf - 0.8)
}

/// COST231-Hata path loss in dB.
pub fn path_loss_cost231(distance_m: f64, freq_mhz: f64, h_base: f64, h_mobile: f64) -> Result<f64, RadioError> {
    check("distance", distance_m, distance_m >= 1.0, "[1, inf) m")?;
    check("freq", freq_mhz, (1500.0..=2000.0).contains(&freq_mhz), "[1500, 2000] MHz")?;
    check("h_base", h_base, (30.0..=200.0).contains(&h_base), "[30, 200] m")?;
    check("h_mobile", h_mobile, (1.0..=10.0).contains(&h_mobile), "[1, 10] m")?;
    let lhb = h_base.log10();
    Ok(46.3 + 33.9 * freq_mhz.log10() - 13.82 * lhb - cost231_correction(freq_mhz, h_mobile)
        + (44.9 - 6.55 * lhb) * (distance_m / 1000.0).log10()
        + 3.0)
}

/// Floor penetration term of the indoor model.
pub fn floor_loss_db(floors: u32) -> f64 {
    if floors == 0 {
        0.0
    } else {
        15.0 + 4.0 * (f64::from(floors) - 1.0)
    }
}

/// ITU indoor path loss in dB with distance power loss coefficient 30.
pub fn path_loss_itu_indoor(distance_m: f64, freq_mhz: f64, floors: u32) -> Result<f64, RadioError> {
    check("distance", distance_m, distance_m >= 1.0, "[1, inf) m")?;
    check("freq", freq_mhz, freq_mhz > 0.0, "(0, inf) MHz")?;
    Ok(20.0 * freq_mhz.log10() + 30.0 * distance_m.log10() + floor_loss_db(floors) - 28.0)
}

pub fn received_power(tx_dbm: f64, path_loss_db: f64, wall_db: f64, shadow_db: f64) -> f64 {
    tx_dbm - path_loss_db - wall_db + shadow_db
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// SINR in dB, summing interference and noise in the linear domain.
pub fn sinr(serving_dbm: f64, interferers_dbm: &[f64], noise_dbm: f64) -> f64 {
    let denom: f64 = interferers_dbm.iter().map(|&i| dbm_to_mw(i)).sum::<f64>() + dbm_to_mw(noise_dbm);
    mw_to_dbm(dbm_to_mw(serving_dbm) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    pub wall_loss_db: f64,
    pub rx_power_dbm: f64,
}

impl LinkBudget {
    pub fn new(tx_power_dbm: f64, path_loss_db: f64, wall_loss_db: f64, shadowing_db: f64) -> Self {
        LinkBudget {
            tx_power_dbm,
            path_loss_db,
            shadowing_db,
            wall_loss_db,
            rx_power_dbm: received_power(tx_power_dbm, path_loss_db, wall_loss_db, shadowing_db),
        }
    }
}

/// Precomputed distance-only forms of the two models, for the simulation
/// inner loop. Distances below 1 m are clamped to 1 m.
#[derive(Debug, Clone, Copy)]
pub struct Propagation {
    macro_intercept: f64,
    macro_slope_per_ln_d2: f64,
    femto_intercept: f64,
}

impl Propagation {
    pub fn new(p: &RadioParams) -> Result<Self, RadioError> {
        let at_1km = path_loss_cost231(1000.0, p.carrier_mhz, p.macro_height_m, p.ue_height_m)?;
        let slope = 44.9 - 6.55 * p.macro_height_m.log10();
        let femto_at_1m = path_loss_itu_indoor(1.0, p.carrier_mhz, p.indoor_floors)?;
        Ok(Propagation {
            // PL = at_1km + slope * log10(d / 1000)
            macro_intercept: at_1km - 3.0 * slope,
            macro_slope_per_ln_d2: slope / (2.0 * std::f64::consts::LN_10),
            femto_intercept: femto_at_1m,
        })
    }

    #[inline]
    pub fn macro_loss(&self, distance_sq: f64) -> f64 {
        self.macro_intercept + self.macro_slope_per_ln_d2 * distance_sq.max(1.0).ln()
    }

    #[inline]
    pub fn femto_loss(&self, distance_sq: f64) -> f64 {
        // 30 log10(d) = 15 log10(d^2)
        self.femto_intercept + (15.0 / std::f64::consts::LN_10) * distance_sq.max(1.0).ln()
    }
}

/// Log-normal shadowing samples for one epoch, indexed by (user, cell).
#[derive(Debug, Clone)]
pub struct ShadowMap {
    cells: usize,
    samples: Vec<f64>,
}

impl ShadowMap {
    /// `sigma_for_cell[c]` is the standard deviation for links from cell c.
    pub fn generate(seed: u64, epoch: u64, users: usize, sigma_for_cell: &[f64]) -> Self {
        let mut rng = stream_rng(seed, &[stream::SHADOW, epoch]);
        let cells = sigma_for_cell.len();
        let mut samples = Vec::with_capacity(users * cells);
        for _ in 0..users {
            for &sigma in sigma_for_cell {
                let z: f64 = rng.sample(StandardNormal);
                samples.push(z * sigma);
            }
        }
        ShadowMap { cells, samples }
    }

    #[inline]
    pub fn get(&self, user: usize, cell: usize) -> f64 {
        self.samples[user * self.cells + cell]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cost231_reference_point() {
        // Hand evaluation: log10(2000) = 3.30103, log10(30) = 1.47712
        // 46.3 + 111.90492 - 20.41383 - a(1.5) + (44.9 - 9.67516) * 0 + 3
        // a(1.5) = (3.631133 - 0.7) * 1.5 - (5.149607 - 0.8) = 0.047093
        let expected = 46.3 + 111.904_920 - 20.413_834 - 0.047_093 + 3.0;
        let pl = path_loss_cost231(1000.0, 2000.0, 30.0, 1.5).unwrap();
        assert!((pl - expected).abs() < 1e-4, "{pl} vs {expected}");
    }

    #[test]
    fn cost231_at_one_meter_is_intercept_at_one_millimeter_km() {
        let pl = path_loss_cost231(1.0, 2000.0, 30.0, 1.5).unwrap();
        let slope = 44.9 - 6.55 * 30f64.log10();
        let at_1km = path_loss_cost231(1000.0, 2000.0, 30.0, 1.5).unwrap();
        assert!((pl - (at_1km + slope * (-3.0))).abs() < 1e-9);
    }

    #[test]
    fn cost231_doubling_slope() {
        for d in [1.0, 17.0, 250.0, 999.0, 4000.0] {
            for hb in [30.0, 45.0, 200.0] {
                let diff = path_loss_cost231(2.0 * d, 1800.0, hb, 1.5).unwrap()
                    - path_loss_cost231(d, 1800.0, hb, 1.5).unwrap();
                assert!((diff - (44.9 - 6.55 * f64::log10(hb)) * 2f64.log10()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cost231_domain_errors_name_parameter() {
        let err = |r: Result<f64, RadioError>| match r.unwrap_err() {
            RadioError::Domain { name, .. } => name,
        };
        assert_eq!(err(path_loss_cost231(0.5, 2000.0, 30.0, 1.5)), "distance");
        assert_eq!(err(path_loss_cost231(10.0, 900.0, 30.0, 1.5)), "freq");
        assert_eq!(err(path_loss_cost231(10.0, 2000.0, 10.0, 1.5)), "h_base");
        assert_eq!(err(path_loss_cost231(10.0, 2000.0, 30.0, 11.0)), "h_mobile");
        assert_eq!(err(path_loss_itu_indoor(0.0, 2000.0, 0)), "distance");
        assert_eq!(err(path_loss_itu_indoor(f64::NAN, 2000.0, 0)), "distance");
    }

    #[test]
    fn itu_indoor_cases() {
        let at1 = path_loss_itu_indoor(1.0, 2000.0, 0).unwrap();
        assert!((at1 - (20.0 * 2000f64.log10() - 28.0)).abs() < 1e-12);
        let at10 = path_loss_itu_indoor(10.0, 2000.0, 0).unwrap();
        assert!((at10 - at1 - 30.0).abs() < 1e-12);
        // 20*3.30103 + 30*1.30103 + 15 - 28 = 66.0206 + 39.0309 - 13
        let v = path_loss_itu_indoor(20.0, 2000.0, 1).unwrap();
        assert!((v - 92.0515).abs() < 1e-3, "{v}");
        assert_eq!(floor_loss_db(3), 23.0);
    }

    #[test]
    fn received_power_cases() {
        assert_eq!(received_power(13.0, 80.0, 0.0, 0.0), -67.0);
        assert_eq!(received_power(13.0, 80.0, 10.0, 0.0), received_power(13.0, 80.0, 0.0, 0.0) - 10.0);
        assert_eq!(received_power(13.0, 80.0, 10.0, -2.0), -79.0);
        let lb = LinkBudget::new(13.0, 80.0, 10.0, -2.0);
        assert_eq!(lb.rx_power_dbm, lb.tx_power_dbm - lb.path_loss_db - lb.wall_loss_db + lb.shadowing_db);
    }

    #[test]
    fn sinr_cases() {
        assert!(sinr(-104.0, &[], -104.0).abs() < 1e-12);
        let v = sinr(-104.0, &[-104.0], -104.0);
        assert!((v + 10.0 * 2f64.log10()).abs() < 1e-12);
        assert!((v + 3.0103).abs() < 1e-4);
        assert!((sinr(-70.0, &[], -104.0) - 34.0).abs() < 1e-9);
    }

    #[test]
    fn propagation_matches_closed_forms() {
        let p = RadioParams::default();
        let prop = Propagation::new(&p).unwrap();
        for d in [1.0, 3.5, 42.0, 300.0, 1414.0] {
            let m = path_loss_cost231(d, 2000.0, 30.0, 1.5).unwrap();
            let f = path_loss_itu_indoor(d, 2000.0, 0).unwrap();
            assert!((prop.macro_loss(d * d) - m).abs() < 1e-9);
            assert!((prop.femto_loss(d * d) - f).abs() < 1e-9);
        }
        assert_eq!(prop.femto_loss(0.01), prop.femto_loss(1.0));
    }

    #[test]
    fn shadow_map_is_seeded_and_fixed() {
        let sig = [8.0, 4.0, 4.0];
        let a = ShadowMap::generate(3, 1, 5, &sig);
        let b = ShadowMap::generate(3, 1, 5, &sig);
        let c = ShadowMap::generate(3, 2, 5, &sig);
        assert_eq!(a.get(4, 2), b.get(4, 2));
        assert_ne!(a.get(4, 2), c.get(4, 2));
    }

    proptest! {
        #[test]
        fn path_loss_monotone_in_distance(d in 1.0f64..5000.0, k in 1.0f64..10.0,
                                          f in 1500.0f64..2000.0, hb in 30.0f64..200.0,
                                          hm in 1.0f64..10.0, floors in 0u32..6) {
            prop_assert!(path_loss_cost231(d * k, f, hb, hm).unwrap() >= path_loss_cost231(d, f, hb, hm).unwrap());
            prop_assert!(path_loss_itu_indoor(d * k, f, floors).unwrap() >= path_loss_itu_indoor(d, f, floors).unwrap());
            prop_assert!(path_loss_itu_indoor(d, f, floors + 1).unwrap() >= path_loss_itu_indoor(d, f, floors).unwrap());
        }

        #[test]
        fn sinr_monotone(s in -120.0f64..-30.0, i in proptest::collection::vec(-130.0f64..-40.0, 0..6),
                         bump in 0.01f64..20.0, idx in 0usize..6, extra in -130.0f64..-40.0) {
            let base = sinr(s, &i, -104.0);
            prop_assert!(sinr(s + bump, &i, -104.0) > base);
            let mut more = i.clone();
            more.push(extra);
            prop_assert!(sinr(s, &more, -104.0) <= base);
            if !i.is_empty() {
                let mut louder = i.clone();
                let k = idx % louder.len();
                louder[k] += bump;
                prop_assert!(sinr(s, &louder, -104.0) <= base);
            }
        }
    }
}
