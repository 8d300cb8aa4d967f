//! Monte-Carlo BER of every receiver on one scenario.
//!
//! The neural equalizer is trained once per SNR on pilots pooled from
//! separate training blocks; all receivers are then scored on the same
//! payload blocks. Prints the table and each method's BER = 1e-2 crossing.
//!
//!     cargo run --release --example ber_comparison [scenario] [blocks]

use fdxsic::harness::{ber_crossing, run_ber, write_ber_csv, Experiment, Method};
use fdxsic::sigmodel::ScenarioFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let setup = ScenarioFile::resolve(args.first().map_or("epa", String::as_str))?;
    let mut exp = Experiment::new(setup);
    exp.plan.snr_db = vec![-8.0, -6.0, -4.0, -2.0, 0.0, 2.0];
    exp.plan.blocks = args.get(1).map_or(Ok(100), |s| s.parse())?;

    let points = run_ber(&exp)?;
    println!("{}: {} SNR points, {} payload bits each", exp.scenario.label, exp.plan.snr_db.len(), points[0].bits);
    print!("{:>7}", "snr dB");
    for m in &exp.plan.methods {
        print!("{:>14}", m.as_str());
    }
    println!();
    for row in points.chunks(exp.plan.methods.len()) {
        print!("{:>7}", row[0].snr_db);
        for p in row {
            print!("{:>14.3e}", p.ber);
        }
        println!();
    }
    println!();
    for &m in &exp.plan.methods {
        match ber_crossing(&points, m, 1e-2) {
            Some(s) => println!("{:<14} reaches 1e-2 at {s:>6.2} dB", m.as_str()),
            None => println!("{:<14} does not cross 1e-2 on this grid", m.as_str()),
        }
    }
    if let (Some(ann), Some(lcmv)) = (
        ber_crossing(&points, Method::Ann, 1e-2),
        ber_crossing(&points, Method::LcmvOracle, 1e-2),
    ) {
        println!("ann - lcmv_oracle: {:+.2} dB", ann - lcmv);
    }

    println!("\nber.csv:");
    write_ber_csv(std::io::stdout().lock(), &points)?;
    Ok(())
}
