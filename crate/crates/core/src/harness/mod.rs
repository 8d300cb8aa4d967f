//! Monte-Carlo experiments: BER curves, the hidden-width sweep, per-scenario
//! training reports and beam patterns.
//!
//! Every random draw comes from a ChaCha stream keyed by the plan seed and
//! the work unit (SNR point, block, scenario, width), so results do not
//! depend on how rayon schedules the units.

mod ber;
mod output;
mod runs;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::beamform::{BeamMethod, BeamformError, DEFAULT_DROP_RATIO};
use crate::neuralnet::{Activation, NetError, TrainConfig};
use crate::sigmodel::{ArrayGeometry, FrameSpec, Scenario, ScenarioFile, SignalError};

pub use ber::{ber_crossing, matched_bound_ber, run_ber, BerPoint};
pub use output::{
    write_ber_csv, write_sweep_csv, write_table1_csv, Manifest, Table1Row, MANIFEST_FILE,
};
pub use runs::{pooled_pilots, run_beampatterns, run_neuron_sweep, run_scenarios, ScenarioReport, SweepResult};

/// Environment variable capping the rayon worker count.
pub const DEFAULT_SWEEP_SNR_DB: f64 = -3.0;

pub const THREADS_ENV: &str = "FDXSIC_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Beamform(#[from] BeamformError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Receivers compared in the BER experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Conventional,
    Mvdr,
    LcmvOracle,
    LcmvEvd,
    Ann,
    MatchedBound,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Conventional,
        Method::Mvdr,
        Method::LcmvOracle,
        Method::LcmvEvd,
        Method::Ann,
        Method::MatchedBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Conventional => "conventional",
            Method::Mvdr => "mvdr",
            Method::LcmvOracle => "lcmv_oracle",
            Method::LcmvEvd => "lcmv_evd",
            Method::Ann => "ann",
            Method::MatchedBound => "matched_bound",
        }
    }

    pub fn beam_method(self) -> Option<BeamMethod> {
        match self {
            Method::Conventional => Some(BeamMethod::Conventional),
            Method::Mvdr => Some(BeamMethod::Mvdr),
            Method::LcmvOracle => Some(BeamMethod::LcmvOracle),
            Method::LcmvEvd => Some(BeamMethod::LcmvEvd),
            Method::Ann | Method::MatchedBound => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ann" => Ok(Method::Ann),
            "matched_bound" | "bound" => Ok(Method::MatchedBound),
            other => other
                .parse::<BeamMethod>()
                .map(|b| match b {
                    BeamMethod::Conventional => Method::Conventional,
                    BeamMethod::Mvdr => Method::Mvdr,
                    BeamMethod::LcmvOracle => Method::LcmvOracle,
                    BeamMethod::LcmvEvd => Method::LcmvEvd,
                })
                .map_err(|_| format!("unknown method '{other}'")),
        }
    }
}

/// Experiment knobs that are not part of the scenario itself.
///
/// `snr_db` is the per-antenna input SNR: the desired symbols have unit
/// power, so each point runs the scenario with `noise_power_db = −snr_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    pub snr_db: Vec<f64>,
    /// Payload blocks scored per SNR point.
    pub blocks: usize,
    /// Blocks whose pilots are pooled for training; never scored.
    pub train_blocks: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Hidden layer widths of the equalizer network.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Retrain the equalizer on each payload block's own pilots.
    pub retrain_per_block: bool,
    /// Networks trained per fit from different initialisations; the one with
    /// the lowest validation MSE is kept.
    pub restarts: usize,
    pub drop_ratio: f64,
    /// Per-antenna SNR of the width sweep; the scenario's own noise level
    /// when absent. The default sits where pilots are not yet separable, so
    /// widths are actually distinguishable.
    pub sweep_snr_db: Option<f64>,
    /// Fill the time_s column of table1.csv (makes the file non-reproducible).
    pub record_wall_time: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            snr_db: (-4..=10).step_by(2).map(f64::from).collect(),
            blocks: 100,
            train_blocks: 10,
            methods: Method::ALL.to_vec(),
            seed: 1,
            hidden: vec![2],
            activation: Activation::SigmoidSym,
            retrain_per_block: false,
            restarts: 1,
            drop_ratio: DEFAULT_DROP_RATIO,
            sweep_snr_db: Some(DEFAULT_SWEEP_SNR_DB),
            record_wall_time: false,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidPlan(m));
        if self.snr_db.is_empty() {
            return bad("snr list is empty".into());
        }
        if let Some(s) = self.snr_db.iter().chain(&self.sweep_snr_db).find(|s| !s.is_finite()) {
            return bad(format!("snr {s} is not finite"));
        }
        if self.blocks == 0 {
            return bad("blocks must be at least 1".into());
        }
        if self.train_blocks == 0 {
            return bad("train_blocks must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if !(self.drop_ratio > 0.0 && self.drop_ratio < 1.0) {
            return bad(format!("drop_ratio {} outside (0, 1)", self.drop_ratio));
        }
        Ok(())
    }

    /// [2N, hidden…, 2]
    pub fn layer_sizes(&self, n_antennas: usize, hidden: &[usize]) -> Vec<usize> {
        std::iter::once(2 * n_antennas).chain(hidden.iter().copied()).chain([2]).collect()
    }
}

/// Everything a run depends on; serialized into the manifest.
///
/// `train.seed` is ignored by the harness, which derives one seed per
/// trained network from `plan.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub scenario: Scenario,
    #[serde(default)]
    pub array: ArrayGeometry,
    #[serde(default)]
    pub frame: FrameSpec,
    #[serde(default)]
    pub plan: ExperimentPlan,
    #[serde(default)]
    pub train: TrainConfig,
}

impl Experiment {
    pub fn new(setup: ScenarioFile) -> Self {
        Experiment {
            scenario: setup.scenario,
            array: setup.array,
            frame: setup.frame,
            plan: ExperimentPlan::default(),
            train: TrainConfig::default(),
        }
    }

    pub fn setup(&self) -> ScenarioFile {
        ScenarioFile {
            scenario: self.scenario.clone(),
            array: self.array,
            frame: self.frame,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.setup().validate()?;
        self.plan.validate()?;
        self.train.validate()?;
        Ok(())
    }
}

/// Independent random streams, one per (purpose, a, b).
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Domain {
    Block = 1,
    NetInit = 2,
    Sweep = 3,
    Scenario = 4,
    Pattern = 5,
}

pub(crate) fn unit_rng(seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha12Rng {
    debug_assert!(a < 1 << 24 && b < 1 << 32);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | (a << 32) | b);
    rng
}

pub(crate) fn unit_seed(seed: u64, domain: Domain, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    unit_rng(seed, domain, a, b).next_u64()
}

/// Gaussian tail probability Q(x) = ½·erfc(x/√2).
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Runs `f` on a rayon pool sized by `FDXSIC_THREADS` (all cores if unset).
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R, HarnessError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::InvalidPlan(format!("{THREADS_ENV}={v} is not a positive integer")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::InvalidPlan(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmodel::preset;

    #[test]
    fn q_function_reference_values() {
        assert_eq!(q_function(0.0), 0.5);
        // Q(1), Q(3) from 30-digit arbitrary-precision erfc.
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((q_function(3.0) - 0.001_349_898_031_630_094_5).abs() < 1e-17);
        assert!((q_function(-1.0) - (1.0 - q_function(1.0))).abs() < 1e-15);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("lcmv".parse::<Method>().unwrap(), Method::LcmvOracle);
        assert!("zf".parse::<Method>().is_err());
    }

    #[test]
    fn plan_validation() {
        assert!(ExperimentPlan::default().validate().is_ok());
        let cases = [
            ExperimentPlan { snr_db: vec![], ..Default::default() },
            ExperimentPlan { blocks: 0, ..Default::default() },
            ExperimentPlan { hidden: vec![0], ..Default::default() },
            ExperimentPlan { methods: vec![], ..Default::default() },
            ExperimentPlan { snr_db: vec![f64::NAN], ..Default::default() },
        ];
        for plan in cases {
            assert!(matches!(plan.validate(), Err(HarnessError::InvalidPlan(_))));
        }
    }

    #[test]
    fn experiment_toml_round_trip() {
        let exp = Experiment::new(preset("s5").unwrap());
        let text = toml::to_string(&exp).unwrap();
        let back: Experiment = toml::from_str(&text).unwrap();
        assert_eq!(back, exp);
        assert_eq!(exp.plan.layer_sizes(10, &[2]), vec![20, 2, 2]);
    }

    #[test]
    fn unit_streams_are_distinct_and_reproducible() {
        let a = unit_seed(7, Domain::Block, 0, 1);
        assert_eq!(a, unit_seed(7, Domain::Block, 0, 1));
        assert_ne!(a, unit_seed(7, Domain::Block, 1, 0));
        assert_ne!(a, unit_seed(7, Domain::NetInit, 0, 1));
        assert_ne!(a, unit_seed(8, Domain::Block, 0, 1));
    }
}
