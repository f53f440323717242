//! Trains the three diagnosers on one simulated job, prints per-family
//! accuracy and the transfer vote weights of one target femto, and round
//! trips the transfer model through JSON.
//!
//!     cargo run --release --example diagnosis

use hetnet::diagnosis::{evaluate_accuracy, export_model, import_model, Diagnoser};
use hetnet::harness::{run_cell, Family, SweepConfig};

fn main() -> hetnet::Result<()> {
    let config = SweepConfig::default();
    let run = run_cell(&config, 20, 1)?;
    println!("{} training and {} test instances", run.train.len(), run.test.len());

    for family in Family::ALL {
        let test: Vec<_> = run.test.iter().filter(|i| family.contains(i.label)).cloned().collect();
        for (arch, d) in &run.diagnosers {
            println!("{:>10} {:>18} {:.3}", family.display_name(), arch.display_name(), evaluate_accuracy(d, &test)?);
        }
    }

    let Diagnoser::Transfer(ensembles) = &run.diagnosers[2].1 else {
        unreachable!("third diagnoser is transfer")
    };
    let (target, ensemble) = ensembles.iter().next().expect("one ensemble per femto");
    let mut members: Vec<_> = ensemble.members.iter().collect();
    members.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    println!("\nvote weights for {target} (beta = {}):", ensemble.beta);
    for m in members.iter().take(5).chain(members.iter().rev().take(2)) {
        println!("  {:>6}  D = {:.3}  w = {:.3}", m.cell.to_string(), m.divergence, m.weight);
    }

    let json = export_model(&run.diagnosers[2].1)?;
    let back = import_model(&json)?;
    assert_eq!(back, run.diagnosers[2].1);
    println!("\nexported transfer model: {} bytes, round trip ok", json.len());
    Ok(())
}
