//! Trains the neural equalizer on pooled pilots and scores it on payload.
//!
//! A [20, N, 2] network maps the real and imaginary parts of a 10-antenna
//! snapshot to the in-phase and quadrature components of the desired symbol.
//! Training is Levenberg-Marquardt with Bayesian regularization.
//!
//!     cargo run --release --example train_equalizer [snr_db] [hidden] [activation] [model.txt]

use fdxsic::harness::{pooled_pilots, Experiment};
use fdxsic::neuralnet::{equalize, train_bayesian_lm, write_model, Activation, Dataset, MlpParams};
use fdxsic::sigmodel::{preset, qpsk_demodulate, random_symbols, synthesize};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let snr_db: f64 = args.first().map_or(Ok(0.0), |s| s.parse())?;
    let hidden: usize = args.get(1).map_or(Ok(2), |s| s.parse())?;
    let activation: Activation = args.get(2).map_or(Ok(Activation::SigmoidSym), |s| s.parse())?;

    let exp = Experiment::new(preset("epa").expect("epa preset"));
    let scenario = exp.scenario.with_noise_db(-snr_db);
    let (x, symbols) = pooled_pilots(&exp, &scenario, 0)?;
    let data = Dataset::from_snapshots(&x, &symbols)?;

    let layers = [2 * exp.array.n_antennas, hidden, 2];
    let init = MlpParams::random(&layers, activation, 1)?;
    let (net, report) = train_bayesian_lm(&init, &data, &exp.train)?;
    println!("layers {layers:?}, {} activation, {} training samples", activation.as_str(), data.len());
    println!("{:>5} {:>11} {:>11} {:>9} {:>10}", "epoch", "train mse", "val mse", "gamma", "mu");
    for log in &report.history {
        println!(
            "{:>5} {:>11.3e} {:>11.3e} {:>9.2} {:>10.1e}",
            log.epoch, log.train_mse, log.val_mse, log.gamma, log.mu
        );
    }
    println!(
        "stopped by {} after {} epochs; best epoch {}, γ = {:.2} of {} parameters, test mse {:.3e}",
        report.stopping, report.epochs_run, report.best_epoch, report.gamma, report.n_params, report.test_mse
    );

    // One fresh block of payload through the trained network.
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let n = exp.frame.block_len;
    let desired = random_symbols(&mut rng, n);
    let si = random_symbols(&mut rng, n + scenario.max_delay());
    let block = synthesize(&scenario, &exp.array, &desired, &si, 100)?;
    let decided = equalize(&net, &block)?;
    let sent = qpsk_demodulate(&desired.symbols);
    let got = qpsk_demodulate(&decided.symbols);
    let errors = sent.iter().zip(&got).filter(|(a, b)| a != b).count();
    println!("fresh block at {snr_db} dB SNR: {errors} bit errors in {}", sent.len());

    if let Some(path) = args.get(3) {
        write_model(path.as_ref(), &net)?;
        println!("model written to {path}");
    }
    Ok(())
}
