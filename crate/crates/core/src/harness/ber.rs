use rayon::prelude::*;
use serde::Serialize;

use super::runs::{beam_receiver, fit_equalizer, make_block, pooled_pilots};
use super::{q_function, unit_rng, unit_seed, Domain, Experiment, HarnessError, Method};
use crate::beamform::BeamWeights;
use crate::neuralnet::{equalize, Dataset, MlpParams};
use crate::sigmodel::{db_to_linear, qpsk_demodulate, SnapshotMatrix};

/// Bit-error count for one (SNR, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub method: Method,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// √(p(1−p)/bits); zero for the analytic bound.
    pub stderr: f64,
}

impl BerPoint {
    fn measured(snr_db: f64, method: Method, bits: u64, errors: u64) -> Self {
        let ber = errors as f64 / bits as f64;
        BerPoint {
            snr_db,
            method,
            bits,
            errors,
            ber,
            stderr: (ber * (1.0 - ber) / bits as f64).sqrt(),
        }
    }
}

/// QPSK BER after ideal coherent combining over `n_antennas` white-noise
/// branches: Q(√(2·N·Eb/N0)) with Eb/N0 = SNR/2 per antenna.
pub fn matched_bound_ber(n_antennas: usize, snr_db: f64) -> f64 {
    q_function((n_antennas as f64 * db_to_linear(snr_db)).sqrt())
}

enum Receiver {
    Beam(BeamWeights),
    Ann(Option<MlpParams>),
    Bound(f64),
}

fn count_errors(decided: &[u8], truth: &[u8]) -> u64 {
    decided.iter().zip(truth).filter(|(a, b)| a != b).count() as u64
}

fn beam_decisions(w: &BeamWeights, x: &SnapshotMatrix) -> Vec<u8> {
    let y: Vec<_> = x.columns().map(|col| w.apply(col)).collect();
    qpsk_demodulate(&y)
}

fn run_point(exp: &Experiment, point: usize, snr_db: f64) -> Result<Vec<BerPoint>, HarnessError> {
    let scenario = exp.scenario.with_noise_db(-snr_db);
    let plan = &exp.plan;
    let n_pilots = exp.frame.pilot_count();
    let len = exp.frame.block_len;
    let layers = plan.layer_sizes(exp.array.n_antennas, &plan.hidden);
    let k = point as u64;

    let needs_pilots = plan.methods.iter().any(|m| matches!(m, Method::LcmvEvd | Method::Ann));
    let pilots = if needs_pilots {
        Some(pooled_pilots(exp, &scenario, point)?)
    } else {
        None
    };

    let receivers = plan
        .methods
        .iter()
        .map(|&m| {
            Ok(match m {
                Method::Ann if plan.retrain_per_block => Receiver::Ann(None),
                Method::Ann => {
                    let (x, s) = pilots.as_ref().expect("pilots pooled for ann");
                    let data = Dataset::from_snapshots(x, s)?;
                    let seed = unit_seed(plan.seed, Domain::NetInit, k, 0);
                    Receiver::Ann(Some(fit_equalizer(exp, &layers, &data, seed)?.0))
                }
                Method::MatchedBound => Receiver::Bound(matched_bound_ber(exp.array.n_antennas, snr_db)),
                beam => Receiver::Beam(beam_receiver(
                    exp,
                    &scenario,
                    beam.beam_method().expect("beamforming method"),
                    pilots.as_ref(),
                )?),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let zero = || vec![0u64; receivers.len()];
    let errors = (0..plan.blocks)
        .into_par_iter()
        .map(|j| -> Result<Vec<u64>, HarnessError> {
            let b = (plan.train_blocks + j) as u64;
            let block = make_block(exp, &scenario, &mut unit_rng(plan.seed, Domain::Block, k, b))?;
            let payload = block.x.select(n_pilots..len);
            let truth = &block.symbols.bits[2 * n_pilots..];
            let mut counts = zero();
            for (count, rx) in counts.iter_mut().zip(&receivers) {
                *count = match rx {
                    Receiver::Beam(w) => count_errors(&beam_decisions(w, &payload), truth),
                    Receiver::Ann(Some(net)) => count_errors(&equalize(net, &payload)?.bits, truth),
                    Receiver::Ann(None) => {
                        let data = Dataset::from_snapshots(
                            &block.x.select(0..n_pilots),
                            &block.symbols.symbols[..n_pilots],
                        )?;
                        let seed = unit_seed(plan.seed, Domain::NetInit, k, b);
                        let net = fit_equalizer(exp, &layers, &data, seed)?.0;
                        count_errors(&equalize(&net, &payload)?.bits, truth)
                    }
                    Receiver::Bound(_) => 0,
                };
            }
            Ok(counts)
        })
        .try_reduce(zero, |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            Ok(a)
        })?;

    let bits = (plan.blocks * exp.frame.payload_count() * 2) as u64;
    Ok(plan
        .methods
        .iter()
        .zip(&receivers)
        .zip(errors)
        .map(|((&method, rx), errs)| match rx {
            Receiver::Bound(p) => BerPoint {
                snr_db,
                method,
                bits,
                errors: (p * bits as f64).round() as u64,
                ber: *p,
                stderr: 0.0,
            },
            _ => BerPoint::measured(snr_db, method, bits, errs),
        })
        .collect())
}

/// BER of every plan method at every SNR point, ordered by SNR then method.
///
/// Per point: pilots from `train_blocks` blocks train the equalizer and the
/// EVD constraint set; MVDR and oracle LCMV use the analytic covariance;
/// the payload of `blocks` further blocks is scored.
pub fn run_ber(exp: &Experiment) -> Result<Vec<BerPoint>, HarnessError> {
    exp.validate()?;
    let per_point: Vec<Vec<BerPoint>> = exp
        .plan
        .snr_db
        .par_iter()
        .enumerate()
        .map(|(k, &snr)| run_point(exp, k, snr))
        .collect::<Result<_, _>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

/// SNR at which `method`'s BER falls through `target`, interpolating
/// log10(BER) linearly between the bracketing points. A zero count is
/// floored at half an error.
pub fn ber_crossing(points: &[BerPoint], method: Method, target: f64) -> Option<f64> {
    let mut curve: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.method == method)
        .map(|p| (p.snr_db, p.ber.max(0.5 / p.bits as f64).log10()))
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let t = target.log10();
    curve.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        (b0 >= t && b1 < t).then(|| s0 + (b0 - t) / (b0 - b1) * (s1 - s0))
    })
}
