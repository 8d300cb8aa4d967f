//! MVDR and oracle LCMV on the EPA scenario.
//!
//! Both beamformers see the analytic interference-plus-noise covariance.
//! LCMV places exact nulls on the known interference directions; MVDR only
//! suppresses them as far as the noise level allows.
//!
//!     cargo run --example mvdr_vs_lcmv

use fdxsic::beamform::{
    beam_pattern, build_constraints_oracle, conventional_weights, lcmv_weights, mvdr_weights, BeamMethod,
};
use fdxsic::numerics::inv_by_lemma;
use fdxsic::sigmodel::{analytic_covariance, interference_steering, preset, steering_vector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let setup = preset("epa").expect("epa preset");
    let (scenario, array) = (&setup.scenario, &setup.array);
    let a_d = steering_vector(array, scenario.desired_angle_deg);
    let s_nu = analytic_covariance(scenario, array);

    // The covariance is σ²I plus a low-rank term, so its inverse has a closed form.
    let lemma = inv_by_lemma(scenario.noise_variance(), &interference_steering(array, scenario), &scenario.int_powers_linear())?;
    let check = lemma.matmul(&s_nu).max_abs_diff(&fdxsic::numerics::CMat::identity(array.n_antennas));
    println!("|S⁻¹S - I|max via the inversion lemma: {check:.2e}\n");

    let conventional = conventional_weights(array, scenario.desired_angle_deg);
    let mvdr = mvdr_weights(&s_nu, &a_d)?;
    let constraints = build_constraints_oracle(array, scenario)?;
    let lcmv = lcmv_weights(&s_nu, &constraints, BeamMethod::LcmvOracle)?;

    let mut angles = vec![scenario.desired_angle_deg];
    angles.extend(&scenario.int_angles_deg);
    print!("{:<14}", "gain (dB)");
    for a in &angles {
        print!("{:>10}", format!("{a}°"));
    }
    println!("{:>12}", "SINR (dB)");
    for w in [&conventional, &mvdr, &lcmv] {
        print!("{:<14}", w.method.as_str());
        for g in beam_pattern(w, array, &angles) {
            print!("{g:>10.1}");
        }
        println!("{:>12.2}", 10.0 * w.sinr(scenario, array).log10());
    }
    println!("\nLCMV constraint residual: {:.2e}", constraints.residual(&lcmv));
    Ok(())
}
