//! Validation MSE against hidden-layer width.
//!
//! Every width is trained on the same pilots and split, so the only thing
//! that changes between rows is the network size.
//!
//!     cargo run --release --example neuron_sweep [max_width] [snr_db]

use fdxsic::harness::{run_neuron_sweep, Experiment};
use fdxsic::sigmodel::preset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let max_width: usize = args.first().map_or(Ok(6), |s| s.parse())?;
    let mut exp = Experiment::new(preset("epa").expect("epa preset"));
    if let Some(s) = args.get(1) {
        exp.plan.sweep_snr_db = Some(s.parse()?);
    }
    let widths: Vec<usize> = (1..=max_width).collect();
    let rows = run_neuron_sweep(&exp, &widths)?;
    match exp.plan.sweep_snr_db {
        Some(snr) => println!("{} at {snr} dB SNR", exp.scenario.label),
        None => println!("{} at its own noise level", exp.scenario.label),
    }
    println!("{:>7} {:>11} {:>10}", "neurons", "val mse", "best epoch");
    for r in &rows {
        println!("{:>7} {:>11.4e} {:>10}", r.n_neurons, r.val_mse, r.best_epoch);
    }
    Ok(())
}
