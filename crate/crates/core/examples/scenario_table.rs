//! Trains the [20, 2, 2] equalizer once on every preset scenario and prints
//! the resulting training summary as CSV.
//!
//!     cargo run --release --example scenario_table

use fdxsic::harness::{run_scenarios, write_table1_csv, Experiment, Table1Row};
use fdxsic::sigmodel::{preset, presets};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let setups = presets();
    let mut template = Experiment::new(preset("epa").expect("epa preset"));
    template.plan.record_wall_time = true;
    let reports = run_scenarios(&template, &setups)?;
    for (setup, r) in setups.iter().zip(&reports) {
        println!(
            "{:<4} paths at {:?}°: {} epochs, best {}, γ = {:.2}",
            r.label, setup.scenario.int_angles_deg, r.report.epochs_run, r.report.best_epoch, r.report.gamma
        );
    }
    println!();
    let rows: Vec<Table1Row> = reports.iter().map(|r| Table1Row::from_report(r, true)).collect();
    write_table1_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
