//! Trace statistics over one nominal epoch: radius of gyration per mobility
//! class, the handover/traffic rank correlation and per-location traffic mix.
//!
//!     cargo run --release --example mobility_analytics

use std::collections::BTreeMap;

use hetnet::analytics::{handover_traffic_correlation, traffic_by_category_and_location};
use hetnet::sim::{AssignmentPlan, Simulation};
use hetnet::ScenarioConfig;

fn main() -> hetnet::Result<()> {
    let mut config = ScenarioConfig::default();
    config.cells.femto_count = 40;
    config.users.count = 400;
    config.rng_seed = 11;

    let mut sim = Simulation::new(config)?;
    let layout = sim.layout.clone();
    let out = sim.run(&AssignmentPlan::nominal(1))?.remove(0);

    let mut by_class: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for u in &out.users {
        let e = by_class.entry(format!("{:?}", u.mobility_class).to_lowercase()).or_default();
        e.0 += u.rog_m;
        e.1 += f64::from(u.visited_cells);
        e.2 += 1;
    }
    println!("{:>12} {:>6} {:>10} {:>14}", "class", "users", "rog_m", "visited_cells");
    for (class, (rog, visited, n)) in &by_class {
        let n = *n as f64;
        println!("{class:>12} {:>6} {:>10.1} {:>14.2}", n, rog / n, visited / n);
    }

    let pairs: Vec<(f64, f64)> = out.users.iter().map(|u| (f64::from(u.handovers), u.bytes as f64)).collect();
    println!("\nspearman(handovers, bytes) = {:.3}", handover_traffic_correlation(&pairs)?);

    println!("\nmean bytes per cell");
    for row in traffic_by_category_and_location(&out.traffic, &layout)? {
        println!("{:>14} {:>16} {:>14.0}", row.category.to_string(), row.location_type.to_string(), row.mean_bytes);
    }
    Ok(())
}
