use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mobility::{MobilityClass, UserEquipment};
use super::{SimError, TrafficParams};
use crate::scenario::{string_enum, CellId, LocationType};

/// The thirteen application groups of the traffic taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppCategory {
    Web,
    P2p,
    InstantMessage,
    Reading,
    SocialNetwork,
    Video,
    Music,
    AppMarket,
    Game,
    Email,
    StockTrading,
    OnlineShopping,
    Map,
}

string_enum!(AppCategory {
    Web => "web",
    P2p => "p2p",
    InstantMessage => "instant_message",
    Reading => "reading",
    SocialNetwork => "social_network",
    Video => "video",
    Music => "music",
    AppMarket => "app_market",
    Game => "game",
    Email => "email",
    StockTrading => "stock_trading",
    OnlineShopping => "online_shopping",
    Map => "map",
});

impl AppCategory {
    pub const COUNT: usize = 13;
    pub const ALL: [AppCategory; 13] = [
        AppCategory::Web,
        AppCategory::P2p,
        AppCategory::InstantMessage,
        AppCategory::Reading,
        AppCategory::SocialNetwork,
        AppCategory::Video,
        AppCategory::Music,
        AppCategory::AppMarket,
        AppCategory::Game,
        AppCategory::Email,
        AppCategory::StockTrading,
        AppCategory::OnlineShopping,
        AppCategory::Map,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Median session volume in bytes.
    pub fn median_bytes(self) -> f64 {
        match self {
            AppCategory::Web => 500e3,
            AppCategory::P2p => 5e6,
            AppCategory::InstantMessage => 20e3,
            AppCategory::Reading => 300e3,
            AppCategory::SocialNetwork => 800e3,
            AppCategory::Video => 8e6,
            AppCategory::Music => 3e6,
            AppCategory::AppMarket => 10e6,
            AppCategory::Game => 400e3,
            AppCategory::Email => 100e3,
            AppCategory::StockTrading => 50e3,
            AppCategory::OnlineShopping => 600e3,
            AppCategory::Map => 1e6,
        }
    }
}

/// Relative session weights per category (columns in `AppCategory::ALL`
/// order) for each location type. Work areas lean on music and P2P,
/// education on P2P, transportation on maps, entertainment on video and
/// social networking.
const CATEGORY_MIX: [[f64; 13]; 4] = [
    // web p2p  im  read soc  vid  mus  app  game mail stk  shop map
    [8.0, 3.0, 12.0, 10.0, 10.0, 10.0, 8.0, 2.0, 8.0, 3.0, 3.0, 3.0, 20.0],
    [10.0, 14.0, 12.0, 8.0, 10.0, 12.0, 8.0, 3.0, 10.0, 3.0, 1.0, 4.0, 2.0],
    [10.0, 12.0, 10.0, 6.0, 5.0, 6.0, 22.0, 2.0, 3.0, 10.0, 8.0, 3.0, 2.0],
    [8.0, 4.0, 10.0, 5.0, 18.0, 22.0, 8.0, 3.0, 8.0, 2.0, 1.0, 10.0, 4.0],
];

/// Location-type multiplier on session arrival rate.
const LOCATION_RATE: [f64; 4] = [1.2, 1.0, 0.8, 1.3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub rate_multiplier: f64,
    pub category_affinity: [f64; 13],
}

impl Default for TrafficProfile {
    fn default() -> Self {
        TrafficProfile {
            rate_multiplier: 1.0,
            category_affinity: [1.0; 13],
        }
    }
}

impl TrafficProfile {
    /// Normal users take the default profile; heavy users get a higher
    /// arrival rate and a tilt toward bulk categories.
    pub fn draw<R: Rng>(rng: &mut R, params: &TrafficParams) -> Self {
        let mut p = TrafficProfile::default();
        if rng.gen_bool(params.heavy_user_fraction) {
            p.rate_multiplier = params.heavy_rate_multiplier;
            for c in [AppCategory::Video, AppCategory::P2p, AppCategory::AppMarket] {
                p.category_affinity[c.index()] = 2.0;
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub user: u32,
    pub time_ms: u64,
    pub category: AppCategory,
    pub bytes: u64,
    pub cell: CellId,
    pub duration_ms: u64,
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u32 {
    // Inversion; means here are well below 1.
    let mut k = 0;
    let mut p = (-mean).exp();
    let mut cdf = p;
    let u: f64 = rng.gen();
    while u > cdf && k < 1000 {
        k += 1;
        p *= mean / f64::from(k);
        cdf += p;
    }
    k
}

/// Session arrivals for one user over `dt_s` seconds. Arrivals are Poisson,
/// the category follows the location mix tilted by the user's affinity, and
/// volume is log-normal around the category median.
pub fn generate_traffic<R: Rng>(
    ue: &UserEquipment,
    location: LocationType,
    serving: CellId,
    now_ms: u64,
    dt_s: f64,
    params: &TrafficParams,
    rng: &mut R,
) -> Result<Vec<TrafficRecord>, SimError> {
    if !(dt_s > 0.0 && dt_s.is_finite()) {
        return Err(SimError::Precondition(format!("traffic step dt must be > 0, got {dt_s}")));
    }
    let mut rate = params.session_rate_per_s * LOCATION_RATE[location.index()] * ue.traffic_profile.rate_multiplier;
    match ue.mobility_class {
        MobilityClass::Vehicle => rate *= params.vehicle_rate_multiplier,
        MobilityClass::Stationary => rate *= params.stationary_rate_multiplier,
        MobilityClass::Pedestrian => {}
    }
    let n = poisson(rng, rate * dt_s);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mix = &CATEGORY_MIX[location.index()];
    let weights: Vec<f64> = mix.iter().zip(&ue.traffic_profile.category_affinity).map(|(m, a)| m * a).collect();
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let mut u = rng.gen::<f64>() * total;
        let mut category = AppCategory::Map;
        for (c, w) in AppCategory::ALL.iter().zip(&weights) {
            if u < *w {
                category = *c;
                break;
            }
            u -= w;
        }
        let z: f64 = rng.sample(StandardNormal);
        let bytes = (category.median_bytes().ln() + params.bytes_sigma_ln * z).exp().ceil().max(1.0) as u64;
        let duration_s = -params.mean_session_s * (1.0 - rng.gen::<f64>()).ln();
        out.push(TrafficRecord {
            user: ue.id,
            time_ms: now_ms,
            category,
            bytes,
            cell: serving,
            duration_ms: (duration_s * 1000.0).round().max(1.0) as u64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::scenario::Position;

    fn user(class: MobilityClass) -> UserEquipment {
        UserEquipment::new(3, Position::new(0.0, 0.0), class, CellId(1))
    }

    #[test]
    fn zero_step_is_rejected() {
        let mut rng = stream_rng(1, &[]);
        let r = generate_traffic(&user(MobilityClass::Pedestrian), LocationType::Work, CellId(1), 0, 0.0, &TrafficParams::default(), &mut rng);
        assert!(matches!(r, Err(SimError::Precondition(_))));
    }

    #[test]
    fn records_are_positive_and_reproducible() {
        let params = TrafficParams::default();
        let run = |seed| {
            let mut rng = stream_rng(seed, &[]);
            let ue = user(MobilityClass::Vehicle);
            (0..2000u64)
                .flat_map(|t| generate_traffic(&ue, LocationType::Entertainment, CellId(1), t * 100, 0.1, &params, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let a = run(5);
        assert!(!a.is_empty());
        assert!(a.iter().all(|r| r.bytes > 0 && r.user == 3 && r.cell == CellId(1)));
        assert_eq!(a, run(5));
    }

    #[test]
    fn vehicles_generate_more_sessions() {
        let params = TrafficParams::default();
        let count = |class| {
            let mut rng = stream_rng(9, &[]);
            let ue = user(class);
            (0..20_000u64)
                .map(|t| generate_traffic(&ue, LocationType::Work, CellId(1), t, 1.0, &params, &mut rng).unwrap().len())
                .sum::<usize>()
        };
        assert!(count(MobilityClass::Vehicle) > count(MobilityClass::Pedestrian));
    }

    #[test]
    fn poisson_mean_matches() {
        let mut rng = stream_rng(4, &[]);
        let n = 200_000;
        let total: u32 = (0..n).map(|_| poisson(&mut rng, 0.3)).sum();
        let mean = f64::from(total) / n as f64;
        assert!((mean - 0.3).abs() < 0.01, "{mean}");
    }
}
