//! Builds a 20-femto layout, misconfigures one femto and prints the layout
//! table.
//!
//!     cargo run --example layout

use hetnet::scenario::{generate_layout, inject_misconfiguration, write_layout_csv};
use hetnet::{ConfigClass, ScenarioConfig};

fn main() -> hetnet::Result<()> {
    let mut config = ScenarioConfig::default();
    config.cells.femto_count = 20;
    config.rng_seed = 7;

    let layout = generate_layout(&config)?;
    let target = layout.femtos().next().expect("layout has femtos").id;
    let layout = inject_misconfiguration(&layout, target, ConfigClass::HoMarginTooLarge)?;

    let mut counts = std::collections::BTreeMap::new();
    for c in layout.femtos() {
        *counts.entry(c.location_type).or_insert(0) += 1;
    }
    eprintln!("{} femtos by location type: {counts:?}", layout.femto_count());
    eprintln!("{target} now carries {}", layout.cell(target).unwrap().config_class);

    write_layout_csv(&layout, std::io::stdout().lock())?;
    Ok(())
}
