use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::handover::RecentHandover;
use super::traffic::TrafficProfile;
use super::SimError;
use crate::scenario::{CellId, LocationType, NetworkLayout, Position, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityClass {
    Stationary,
    Pedestrian,
    Vehicle,
}

impl MobilityClass {
    pub const PEDESTRIAN_SPEED: (f64, f64) = (0.5, 2.5);
    pub const VEHICLE_SPEED: (f64, f64) = (8.0, 20.0);

    pub fn draw_speed<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            MobilityClass::Stationary => 0.0,
            MobilityClass::Pedestrian => rng.gen_range(Self::PEDESTRIAN_SPEED.0..=Self::PEDESTRIAN_SPEED.1),
            MobilityClass::Vehicle => rng.gen_range(Self::VEHICLE_SPEED.0..=Self::VEHICLE_SPEED.1),
        }
    }

    pub fn speed_is_valid(self, speed: f64) -> bool {
        match self {
            MobilityClass::Stationary => speed == 0.0,
            MobilityClass::Pedestrian => (Self::PEDESTRIAN_SPEED.0..=Self::PEDESTRIAN_SPEED.1).contains(&speed),
            MobilityClass::Vehicle => (Self::VEHICLE_SPEED.0..=Self::VEHICLE_SPEED.1).contains(&speed),
        }
    }
}

/// (stationary, pedestrian, vehicle) shares of users homed in each kind of
/// hotspot, in `LocationType::ALL` order.
const HOTSPOT_MOBILITY_MIX: [[f64; 3]; 4] = [
    [0.18, 0.76, 0.06],
    [0.45, 0.52, 0.03],
    [0.55, 0.41, 0.04],
    [0.30, 0.66, 0.04],
];
/// Mix for users homed outside any hotspot.
const OPEN_AREA_MOBILITY_MIX: [f64; 3] = [0.30, 0.62, 0.08];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time_ms: u64,
    pub cell: CellId,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: u32,
    pub position: Position,
    pub home: Position,
    pub indoor: bool,
    pub mobility_class: MobilityClass,
    pub speed_mps: f64,
    pub waypoint: Position,
    pub serving_cell: CellId,
    pub ttt_timer_ms: u32,
    pub rlf_timer_ms: u32,
    pub recent_handover: Option<RecentHandover>,
    pub trajectory: Vec<TrajectorySample>,
    pub traffic_profile: TrafficProfile,
}

impl UserEquipment {
    pub fn new(id: u32, position: Position, mobility_class: MobilityClass, serving_cell: CellId) -> Self {
        UserEquipment {
            id,
            position,
            home: position,
            indoor: mobility_class == MobilityClass::Stationary,
            mobility_class,
            speed_mps: 0.0,
            waypoint: position,
            serving_cell,
            ttt_timer_ms: 0,
            rlf_timer_ms: 0,
            recent_handover: None,
            trajectory: Vec::new(),
            traffic_profile: TrafficProfile::default(),
        }
    }
}

/// Spatial limits for waypoint draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityBounds {
    pub width_m: f64,
    pub height_m: f64,
    pub pedestrian_roam_radius_m: f64,
}

impl MobilityBounds {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        MobilityBounds {
            width_m: config.region.width_m,
            height_m: config.region.height_m,
            pedestrian_roam_radius_m: config.users.pedestrian_roam_radius_m,
        }
    }

    fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(0.0, self.width_m), p.y.clamp(0.0, self.height_m))
    }

    fn uniform<R: Rng>(&self, rng: &mut R) -> Position {
        Position::new(rng.gen_range(0.0..=self.width_m), rng.gen_range(0.0..=self.height_m))
    }

    fn near<R: Rng>(&self, rng: &mut R, center: Position, radius: f64) -> Position {
        for _ in 0..64 {
            let dx: f64 = rng.gen_range(-1.0..1.0);
            let dy: f64 = rng.gen_range(-1.0..1.0);
            if dx * dx + dy * dy > 1.0 {
                continue;
            }
            let p = Position::new(center.x + dx * radius, center.y + dy * radius);
            if (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y) {
                return p;
            }
        }
        self.clamp(center)
    }

    fn next_waypoint<R: Rng>(&self, rng: &mut R, ue: &UserEquipment) -> Position {
        match ue.mobility_class {
            MobilityClass::Stationary => ue.position,
            MobilityClass::Pedestrian => self.near(rng, ue.home, self.pedestrian_roam_radius_m),
            MobilityClass::Vehicle => self.uniform(rng),
        }
    }
}

/// Random-waypoint step: move toward the waypoint at the current speed; on
/// arrival draw the next waypoint and leg speed. Pedestrians roam around
/// their home, vehicles anywhere in the region, stationary users never move.
pub fn step_mobility<R: Rng>(
    ue: &mut UserEquipment,
    dt_s: f64,
    bounds: &MobilityBounds,
    rng: &mut R,
) -> Result<(), SimError> {
    if !(dt_s > 0.0 && dt_s.is_finite()) {
        return Err(SimError::Precondition(format!("mobility step dt must be > 0, got {dt_s}")));
    }
    if ue.mobility_class == MobilityClass::Stationary {
        return Ok(());
    }
    let reach = ue.speed_mps * dt_s;
    let dx = ue.waypoint.x - ue.position.x;
    let dy = ue.waypoint.y - ue.position.y;
    let dist = (dx * dx + dy * dy).sqrt();
    if dist <= reach {
        ue.position = ue.waypoint;
        ue.waypoint = bounds.next_waypoint(rng, ue);
        ue.speed_mps = ue.mobility_class.draw_speed(rng);
    } else {
        let f = reach / dist;
        ue.position = Position::new(ue.position.x + dx * f, ue.position.y + dy * f);
    }
    Ok(())
}

fn pick_class(mix: &[f64; 3], u: f64) -> MobilityClass {
    if u < mix[0] {
        MobilityClass::Stationary
    } else if u < mix[0] + mix[1] {
        MobilityClass::Pedestrian
    } else {
        MobilityClass::Vehicle
    }
}

/// Draws the user population. Hotspot users are homed near a random femto
/// and take that femto's location-type mobility mix.
pub fn generate_users<R: Rng>(
    layout: &NetworkLayout,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<UserEquipment> {
    let bounds = MobilityBounds::from_config(config);
    let femtos: Vec<(Position, LocationType)> = layout.femtos().map(|c| (c.position, c.location_type)).collect();
    let sigma = config.users.popularity_sigma;
    let popularity: Vec<f64> = femtos.iter().map(|_| (sigma * rng.sample::<f64, _>(StandardNormal)).exp()).collect();
    let pick_femto = WeightedIndex::new(&popularity).ok();
    (0..config.users.count)
        .map(|i| {
            let hotspot = !femtos.is_empty() && rng.gen_bool(config.users.hotspot_fraction);
            let (home, mix) = if let (true, Some(pick)) = (hotspot, &pick_femto) {
                let (center, ty) = femtos[pick.sample(rng)];
                (bounds.near(rng, center, config.users.home_radius_m), HOTSPOT_MOBILITY_MIX[ty.index()])
            } else {
                (bounds.uniform(rng), OPEN_AREA_MOBILITY_MIX)
            };
            let class = pick_class(&mix, rng.gen());
            let mut ue = UserEquipment::new(i as u32, home, class, CellId::MACRO);
            ue.speed_mps = class.draw_speed(rng);
            ue.waypoint = bounds.next_waypoint(rng, &ue);
            ue.traffic_profile = TrafficProfile::draw(rng, &config.traffic);
            ue
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn bounds() -> MobilityBounds {
        MobilityBounds {
            width_m: 1000.0,
            height_m: 1000.0,
            pedestrian_roam_radius_m: 200.0,
        }
    }

    #[test]
    fn stationary_user_never_moves() {
        let mut rng = stream_rng(1, &[]);
        let mut ue = UserEquipment::new(0, Position::new(10.0, 20.0), MobilityClass::Stationary, CellId(0));
        for dt in [0.1, 1.0, 1000.0] {
            step_mobility(&mut ue, dt, &bounds(), &mut rng).unwrap();
            assert_eq!(ue.position, Position::new(10.0, 20.0));
        }
    }

    #[test]
    fn pedestrian_displacement_bounded_by_speed() {
        let mut rng = stream_rng(2, &[]);
        let mut ue = UserEquipment::new(0, Position::new(500.0, 500.0), MobilityClass::Pedestrian, CellId(0));
        ue.speed_mps = 1.5;
        ue.waypoint = Position::new(650.0, 500.0);
        let before = ue.position;
        step_mobility(&mut ue, 1.0, &bounds(), &mut rng).unwrap();
        assert!(before.distance(ue.position) <= 1.5 + 1e-12);
        assert!((ue.position.x - 501.5).abs() < 1e-12);
        for _ in 0..5000 {
            let p = ue.position;
            let v = ue.speed_mps;
            step_mobility(&mut ue, 1.0, &bounds(), &mut rng).unwrap();
            assert!(p.distance(ue.position) <= v + 1e-9);
            assert!(ue.mobility_class.speed_is_valid(ue.speed_mps));
            assert!(ue.home.distance(ue.waypoint) <= 200.0 + 1e-9);
        }
    }

    #[test]
    fn rejects_non_positive_step() {
        let mut rng = stream_rng(2, &[]);
        let mut ue = UserEquipment::new(0, Position::new(0.0, 0.0), MobilityClass::Vehicle, CellId(0));
        assert!(step_mobility(&mut ue, 0.0, &bounds(), &mut rng).is_err());
    }
}
