//! Steering vectors and beam patterns of a uniform linear array.
//!
//! Prints the conventional (delay-and-sum) pattern of the EPA array on a
//! coarse grid and checks the front/back mirror symmetry of a ULA.
//!
//!     cargo run --example steering_and_patterns

use fdxsic::beamform::{beam_pattern, conventional_weights, pattern_grid};
use fdxsic::sigmodel::{preset, steering_vector};

fn main() {
    let setup = preset("epa").expect("epa preset");
    let array = setup.array;
    let desired = setup.scenario.desired_angle_deg;

    let a = steering_vector(&array, desired);
    println!("a({desired}°), {} antennas, d = {}λ:", array.n_antennas, array.spacing_wavelengths);
    for (n, z) in a.iter().enumerate() {
        println!("  n={n:<2} {:+.4} {:+.4}j", z.re, z.im);
    }

    let w = conventional_weights(&array, desired);
    let coarse: Vec<f64> = (-6..=6).map(|k| 30.0 * k as f64).filter(|&t| t > -180.0).collect();
    println!("\nconventional pattern:");
    for (angle, gain) in coarse.iter().zip(beam_pattern(&w, &array, &coarse)) {
        let bar = "#".repeat(((gain + 40.0).max(0.0) / 2.0) as usize);
        println!("  {angle:>6.0}° {gain:>8.2} dB {bar}");
    }

    let grid = pattern_grid();
    let mirrored: Vec<f64> = grid.iter().map(|t| 180.0 - t).collect();
    let g = beam_pattern(&w, &array, &grid);
    let gm = beam_pattern(&w, &array, &mirrored);
    let worst = g.iter().zip(&gm).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("\nmax |G(θ) - G(180°-θ)| over {} grid points: {worst:e} dB", grid.len());
}
