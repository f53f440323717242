//! Runs a few epochs with random misconfigurations and prints the KPI
//! instances of the misconfigured femtos, then the event log size.
//!
//!     cargo run --release --example simulate_epoch

use hetnet::sim::{AssignmentPlan, Simulation, FEATURE_NAMES};
use hetnet::{ConfigClass, ScenarioConfig};

fn main() -> hetnet::Result<()> {
    let mut config = ScenarioConfig::default();
    config.cells.femto_count = 20;
    config.users.count = 110;
    config.rng_seed = 3;

    let mut sim = Simulation::new(config)?;
    let plan = AssignmentPlan::random(&sim.layout, 3, 0.4, 99);
    let outputs = sim.run(&plan)?;

    let shown = [3usize, 4, 5, 7, 8];
    print!("{:>6} {:>6} {:>22}", "epoch", "cell", "label");
    for &d in &shown {
        print!(" {:>18}", FEATURE_NAMES[d]);
    }
    println!();
    for out in &outputs {
        for i in out.instances.iter().filter(|i| i.label != ConfigClass::Nominal) {
            print!("{:>6} {:>6} {:>22}", i.epoch, i.cell.to_string(), i.label.to_string());
            for &d in &shown {
                print!(" {:>18.2}", i.features.0[d]);
            }
            println!();
        }
        eprintln!(
            "epoch {}: {} sessions, {} handover events, {} blocked, {} dropped, {} log records",
            out.epoch,
            out.traffic.len(),
            out.handovers.len(),
            out.blocked.len(),
            out.dropped.len(),
            out.log_records().len()
        );
    }
    Ok(())
}
