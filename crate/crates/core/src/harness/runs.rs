use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{unit_rng, unit_seed, Domain, Experiment, HarnessError};
use crate::beamform::{
    beam_pattern, build_constraints_evd, build_constraints_oracle, conventional_weights, lcmv_weights, mvdr_weights,
    pattern_grid, BeamMethod, BeamWeights, BeamformError, ConstraintSet, PatternRow,
};
use crate::neuralnet::{train_bayesian_lm, Dataset, MlpParams, NetError, TrainReport};
use crate::numerics::Cplx;
use crate::sigmodel::{
    analytic_covariance, random_symbols, steering_vector, synthesize_with, Components, Scenario, ScenarioFile,
    SnapshotMatrix, SymbolStream,
};

/// One synthesized block: transmitted symbols and received snapshots.
pub(crate) struct Block {
    pub symbols: SymbolStream,
    pub x: SnapshotMatrix,
}

pub(crate) fn make_block<R: Rng>(exp: &Experiment, scenario: &Scenario, rng: &mut R) -> Result<Block, HarnessError> {
    let len = exp.frame.block_len;
    let symbols = random_symbols(rng, len);
    let si = random_symbols(rng, len + scenario.max_delay());
    let x = synthesize_with(scenario, &exp.array, &symbols.symbols, &si.symbols, Components::ALL, rng)?;
    Ok(Block { symbols, x })
}

/// The training pilots the BER run pools for SNR point `point`: pilot
/// snapshots and symbols of `plan.train_blocks` blocks, stacked.
pub fn pooled_pilots(
    exp: &Experiment,
    scenario: &Scenario,
    point: usize,
) -> Result<(SnapshotMatrix, Vec<Cplx>), HarnessError> {
    pooled_pilots_in(exp, scenario, Domain::Block, point as u64)
}

pub(crate) fn pooled_pilots_in(
    exp: &Experiment,
    scenario: &Scenario,
    domain: Domain,
    unit: u64,
) -> Result<(SnapshotMatrix, Vec<Cplx>), HarnessError> {
    let n_pilots = exp.frame.pilot_count();
    let mut x = SnapshotMatrix::zeros(exp.array.n_antennas, 0);
    let mut symbols = Vec::with_capacity(n_pilots * exp.plan.train_blocks);
    for b in 0..exp.plan.train_blocks {
        let block = make_block(exp, scenario, &mut unit_rng(exp.plan.seed, domain, unit, b as u64))?;
        x.extend(&block.x.select(0..n_pilots));
        symbols.extend_from_slice(&block.symbols.symbols[..n_pilots]);
    }
    Ok((x, symbols))
}

/// Trains `plan.restarts` networks on `data` (same split, different
/// initialisations) and keeps the one with the lowest validation MSE.
pub(crate) fn fit_equalizer(
    exp: &Experiment,
    layers: &[usize],
    data: &Dataset,
    base_seed: u64,
) -> Result<(MlpParams, TrainReport), NetError> {
    let mut config = exp.train.clone();
    config.seed = base_seed;
    let mut best: Option<(MlpParams, TrainReport)> = None;
    for r in 0..exp.plan.restarts {
        let init = MlpParams::random(layers, exp.plan.activation, unit_seed(base_seed, Domain::NetInit, r as u64, 0))?;
        let fit = train_bayesian_lm(&init, data, &config)?;
        if best.as_ref().is_none_or(|b| fit.1.val_mse < b.1.val_mse) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Beamformer weights for `scenario`. The EVD variant needs pilot snapshots
/// and symbols; its covariance is the pilots' sample covariance.
pub(crate) fn beam_receiver(
    exp: &Experiment,
    scenario: &Scenario,
    method: BeamMethod,
    pilots: Option<&(SnapshotMatrix, Vec<Cplx>)>,
) -> Result<BeamWeights, HarnessError> {
    let geometry = &exp.array;
    let a_d = steering_vector(geometry, scenario.desired_angle_deg);
    let weights = match method {
        BeamMethod::Conventional => conventional_weights(geometry, scenario.desired_angle_deg),
        BeamMethod::Mvdr => mvdr_weights(&analytic_covariance(scenario, geometry), &a_d)?,
        BeamMethod::LcmvOracle => lcmv_weights(
            &analytic_covariance(scenario, geometry),
            &build_constraints_oracle(geometry, scenario)?,
            BeamMethod::LcmvOracle,
        )?,
        BeamMethod::LcmvEvd => {
            let (x, symbols) = pilots.ok_or_else(|| HarnessError::InvalidPlan("lcmv_evd needs pilot snapshots".into()))?;
            let constraints = match build_constraints_evd(x, &a_d, exp.plan.drop_ratio, Some(symbols)) {
                Ok((c, _)) => c,
                // No eigenvalue drop means no resolvable interferer.
                Err(BeamformError::NoSharpDrop { .. }) => ConstraintSet::desired_only(a_d.clone()),
                Err(e) => return Err(e.into()),
            };
            lcmv_weights(&x.sample_covariance(), &constraints, BeamMethod::LcmvEvd)?
        }
    };
    Ok(weights)
}

/// One point of the hidden-width sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub n_neurons: usize,
    pub val_mse: f64,
    pub best_epoch: usize,
}

/// Trains one single-hidden-layer network per width on the same pooled
/// pilots and the same train/validation split.
pub fn run_neuron_sweep(exp: &Experiment, widths: &[usize]) -> Result<Vec<SweepResult>, HarnessError> {
    exp.validate()?;
    if widths.is_empty() || widths.contains(&0) {
        return Err(HarnessError::InvalidPlan(format!("widths must be positive and non-empty, got {widths:?}")));
    }
    let scenario = match exp.plan.sweep_snr_db {
        Some(snr) => exp.scenario.with_noise_db(-snr),
        None => exp.scenario.clone(),
    };
    let (x, symbols) = pooled_pilots_in(exp, &scenario, Domain::Sweep, 0)?;
    let data = Dataset::from_snapshots(&x, &symbols)?;
    let base = unit_seed(exp.plan.seed, Domain::Sweep, 1, 0);
    widths
        .par_iter()
        .map(|&w| {
            let layers = exp.plan.layer_sizes(exp.array.n_antennas, &[w]);
            let (_, report) = fit_equalizer(exp, &layers, &data, base)?;
            Ok(SweepResult {
                n_neurons: w,
                val_mse: report.val_mse,
                best_epoch: report.best_epoch,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub label: String,
    pub report: TrainReport,
}

/// Trains the plan's equalizer once per scenario, on pooled pilots at the
/// scenario's own noise level.
pub fn run_scenarios(template: &Experiment, setups: &[ScenarioFile]) -> Result<Vec<ScenarioReport>, HarnessError> {
    template.plan.validate()?;
    template.train.validate()?;
    setups
        .par_iter()
        .enumerate()
        .map(|(i, setup)| {
            let exp = Experiment {
                plan: template.plan.clone(),
                train: template.train.clone(),
                ..Experiment::new(setup.clone())
            };
            exp.validate()?;
            let (x, symbols) = pooled_pilots_in(&exp, &exp.scenario, Domain::Scenario, i as u64)?;
            let data = Dataset::from_snapshots(&x, &symbols)?;
            let layers = exp.plan.layer_sizes(exp.array.n_antennas, &exp.plan.hidden);
            let base = unit_seed(exp.plan.seed, Domain::Scenario, i as u64, 1 << 31);
            let (_, report) = fit_equalizer(&exp, &layers, &data, base)?;
            Ok(ScenarioReport {
                label: setup.scenario.label.clone(),
                report,
            })
        })
        .collect()
}

/// Gain over the 1° grid for each beamformer, at the scenario's own noise
/// level.
pub fn run_beampatterns(exp: &Experiment, methods: &[BeamMethod]) -> Result<Vec<PatternRow>, HarnessError> {
    exp.setup().validate()?;
    let pilots = if methods.contains(&BeamMethod::LcmvEvd) {
        Some(pooled_pilots_in(exp, &exp.scenario, Domain::Pattern, 0)?)
    } else {
        None
    };
    let grid = pattern_grid();
    let mut rows = Vec::with_capacity(grid.len() * methods.len());
    for &method in methods {
        let w = beam_receiver(exp, &exp.scenario, method, pilots.as_ref())?;
        for (&angle_deg, gain_db) in grid.iter().zip(beam_pattern(&w, &exp.array, &grid)) {
            rows.push(PatternRow {
                angle_deg,
                method: method.as_str().to_string(),
                gain_db,
            });
        }
    }
    Ok(rows)
}
