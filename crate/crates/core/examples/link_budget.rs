//! Path loss, received power and SINR for one user between the macro and a
//! femto, at nominal and misconfigured femto power.
//!
//!     cargo run --example link_budget

use hetnet::radio::{path_loss_cost231, path_loss_itu_indoor, sinr, LinkBudget};
use hetnet::ScenarioConfig;

fn main() -> Result<(), hetnet::radio::RadioError> {
    let config = ScenarioConfig::default();
    let p = &config.radio;
    let nominal = config.cells.femto_tx_nominal_dbm;
    let femto_tx = [
        ("nominal", nominal),
        ("too strong", nominal + config.misconfig.tx_too_strong_delta_db),
        ("too weak", nominal + config.misconfig.tx_too_weak_delta_db),
    ];

    println!("{:>8} {:>10} {:>10} {:>12} {:>12}", "d_macro", "macro_pl", "femto_pl", "femto_cfg", "sinr_db");
    for d_macro in [100.0, 300.0, 600.0] {
        let macro_pl = path_loss_cost231(d_macro, p.carrier_mhz, p.macro_height_m, p.ue_height_m)?;
        // User indoors, 15 m from its femto; macro signal crosses a wall.
        let femto_pl = path_loss_itu_indoor(15.0, p.carrier_mhz, p.indoor_floors)?;
        let macro_link = LinkBudget::new(config.cells.macro_tx_dbm, macro_pl, p.wall_loss_db, 0.0);
        for (name, tx) in femto_tx {
            let femto_link = LinkBudget::new(tx, femto_pl, 0.0, 0.0);
            let s = sinr(femto_link.rx_power_dbm, &[macro_link.rx_power_dbm], p.noise_dbm);
            println!("{d_macro:>8.0} {macro_pl:>10.1} {femto_pl:>10.1} {name:>12} {s:>12.1}");
        }
    }
    Ok(())
}
