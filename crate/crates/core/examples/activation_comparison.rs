//! Symmetric sigmoid against ReLU hidden units.
//!
//! Trains the same [20, 2, 2] network with both activations on identical
//! pilots and reports validation MSE, decisions per QPSK quadrant and symbol
//! errors on one payload block.
//!
//!     cargo run --release --example activation_comparison [snr_db]

use fdxsic::harness::{pooled_pilots, Experiment};
use fdxsic::neuralnet::{soft_outputs, train_bayesian_lm, Activation, Dataset, MlpParams};
use fdxsic::sigmodel::{preset, random_symbols, synthesize};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snr_db: f64 = std::env::args().nth(1).map_or(Ok(0.0), |s| s.parse())?;
    let exp = Experiment::new(preset("epa").expect("epa preset"));
    let scenario = &exp.scenario.with_noise_db(-snr_db);
    let (x, symbols) = pooled_pilots(&exp, scenario, 0)?;
    let data = Dataset::from_snapshots(&x, &symbols)?;

    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let desired = random_symbols(&mut rng, exp.frame.block_len);
    let si = random_symbols(&mut rng, exp.frame.block_len + scenario.max_delay());
    let block = synthesize(scenario, &exp.array, &desired, &si, 8)?;

    for act in [Activation::SigmoidSym, Activation::Relu] {
        let init = MlpParams::random(&[20, 2, 2], act, 1)?;
        let (net, report) = train_bayesian_lm(&init, &data, &exp.train)?;
        let mut quadrants = [0usize; 4];
        let mut errors = 0;
        for (y, s) in soft_outputs(&net, &block)?.iter().zip(&desired.symbols) {
            quadrants[usize::from(y.re < 0.0) * 2 + usize::from(y.im < 0.0)] += 1;
            if (y.re < 0.0) != (s.re < 0.0) || (y.im < 0.0) != (s.im < 0.0) {
                errors += 1;
            }
        }
        println!(
            "{:<11} val mse {:.3e}, decisions per quadrant (++, +-, -+, --) {:?}, symbol errors {errors}/{}",
            act.as_str(),
            report.val_mse,
            quadrants,
            desired.len()
        );
    }
    Ok(())
}
