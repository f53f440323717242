//! A reduced density sweep (3 densities, 2 seeds) rendered as the markdown
//! accuracy table. `hetnet sweep` runs the full default grid.
//!
//!     cargo run --release --example density_sweep

use hetnet::harness::{render, run_sweep, ReportFormat, SweepConfig};

fn main() -> hetnet::Result<()> {
    let config = SweepConfig {
        densities: vec![20, 60, 100],
        seeds: vec![1, 2],
        ..SweepConfig::default()
    };
    let result = run_sweep(&config)?;
    print!("{}", render(&result, ReportFormat::Markdown)?);
    Ok(())
}
