//! Blind LCMV constraints from the eigenvectors of received pilots.
//!
//! The interference directions are not given to the beamformer. They are
//! recovered as the dominant eigenvectors of the pilot covariance after the
//! known desired contribution is removed.
//!
//!     cargo run --example evd_constraints [drop_ratio]

use fdxsic::beamform::{beam_pattern, build_constraints_evd, lcmv_weights, BeamMethod};
use fdxsic::harness::{pooled_pilots, Experiment};
use fdxsic::sigmodel::{preset, steering_vector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let drop_ratio: f64 = match std::env::args().nth(1) {
        Some(s) => s.parse()?,
        None => 0.01,
    };
    let exp = Experiment::new(preset("epa").expect("epa preset"));
    let (scenario, array) = (&exp.scenario, &exp.array);
    let (pilots, symbols) = pooled_pilots(&exp, scenario, 0)?;
    println!("{} pilot snapshots from {} blocks", pilots.n_symbols(), exp.plan.train_blocks);

    let a_d = steering_vector(array, scenario.desired_angle_deg);
    let (constraints, sel) = build_constraints_evd(&pilots, &a_d, drop_ratio, Some(&symbols))?;
    let lambda_max = sel.eigenvalues[0];
    println!("candidate eigenvalues (relative to the largest), drop ratio {drop_ratio}:");
    for (k, l) in sel.eigenvalues.iter().take(sel.n_interference() + 3).enumerate() {
        let mark = if k < sel.n_interference() { "kept" } else { "" };
        println!("  λ{k:<2} {:>10.3e} {mark}", l / lambda_max);
    }
    println!("{} interference directions found, {} in the scenario", sel.n_interference(), scenario.n_paths());

    let w = lcmv_weights(&pilots.sample_covariance(), &constraints, BeamMethod::LcmvEvd)?;
    let mut angles = vec![scenario.desired_angle_deg];
    angles.extend(&scenario.int_angles_deg);
    for (a, g) in angles.iter().zip(beam_pattern(&w, array, &angles)) {
        println!("  gain at {a:>5}°: {g:>8.2} dB");
    }
    Ok(())
}
