//! Pilot-trained MLP equalizer.
//!
//! The network maps the interleaved I/Q samples of one array snapshot
//! (2·N real inputs) to the I/Q of the desired symbol. Hidden layers use the
//! symmetric sigmoid; the readout is linear.

mod jacobian;
mod model_file;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::Cplx;
use crate::sigmodel::{qpsk_demodulate, qpsk_modulate, SnapshotMatrix, SymbolStream};

pub use jacobian::{jacobian, residuals};
pub use model_file::{model_from_str, model_to_string, read_model, write_model, ModelFileError, MODEL_FORMAT_VERSION};
pub use train::{train_bayesian_lm, EpochLog, StopReason, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("training diverged at epoch {epoch} (non-finite objective)")]
    DivergentTraining { epoch: usize },
    #[error("data split leaves the {0} set empty")]
    EmptySplit(&'static str),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

/// f(x) = 2/(1 + e^{−2x}) − 1, which is tanh(x).
pub fn sigmoid_sym(x: f64) -> f64 {
    x.tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    SigmoidSym,
    Relu,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::SigmoidSym => sigmoid_sym(x),
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::SigmoidSym => 1.0 - y * y,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::SigmoidSym => "sigmoid_sym",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sigmoid_sym" | "tansig" | "tanh" => Ok(Activation::SigmoidSym),
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

/// Fully connected network parameters in one flat vector.
///
/// Layout, layer by layer: the fan_out×fan_in weight block (one row of
/// fan_in weights per output unit), then the fan_out biases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    hidden: Activation,
    values: Vec<f64>,
}

pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize], hidden: Activation) -> Result<Self, NetError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(NetError::InvalidArchitecture(format!("layer sizes {layer_sizes:?}")));
        }
        Ok(MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            hidden,
            values: vec![0.0; param_count(layer_sizes)],
        })
    }

    /// Uniform in [−0.5, 0.5]/√fan_in for every weight and bias.
    pub fn random(layer_sizes: &[usize], hidden: Activation, seed: u64) -> Result<Self, NetError> {
        let mut p = Self::zeros(layer_sizes, hidden)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut k = 0;
        for l in 0..p.n_layers() {
            let (fan_in, fan_out) = (p.layer_sizes[l], p.layer_sizes[l + 1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..(fan_in + 1) * fan_out {
                p.values[k] = rng.random_range(-0.5..=0.5) * scale;
                k += 1;
            }
        }
        Ok(p)
    }

    pub fn from_values(layer_sizes: &[usize], hidden: Activation, values: Vec<f64>) -> Result<Self, NetError> {
        let mut p = Self::zeros(layer_sizes, hidden)?;
        if values.len() != p.values.len() {
            return Err(NetError::SizeMismatch(format!(
                "{} parameters for layers {:?}, expected {}",
                values.len(),
                layer_sizes,
                p.values.len()
            )));
        }
        p.values = values;
        Ok(p)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn n_params(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn layer_offset(&self, layer: usize) -> usize {
        param_count(&self.layer_sizes[..=layer])
    }

    pub fn weight_index(&self, layer: usize, out: usize, inp: usize) -> usize {
        self.layer_offset(layer) + out * self.layer_sizes[layer] + inp
    }

    pub fn bias_index(&self, layer: usize, out: usize) -> usize {
        let (fan_in, fan_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        self.layer_offset(layer) + fan_out * fan_in + out
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.n_layers() {
            Activation::Linear
        } else {
            self.hidden
        }
    }

    /// Runs the network keeping every layer's pre-activations and outputs;
    /// `outputs[0]` is the input itself.
    pub(crate) fn forward_trace(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut pre = Vec::with_capacity(self.n_layers());
        let mut outs = vec![input.to_vec()];
        for l in 0..self.n_layers() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let off = self.layer_offset(l);
            let w = &self.values[off..off + fan_in * fan_out];
            let b = &self.values[off + fan_in * fan_out..off + (fan_in + 1) * fan_out];
            let x = outs.last().expect("input present");
            let z: Vec<f64> = (0..fan_out)
                .map(|j| b[j] + w[j * fan_in..(j + 1) * fan_in].iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>())
                .collect();
            let act = self.activation(l);
            outs.push(z.iter().map(|&v| act.apply(v)).collect());
            pre.push(z);
        }
        (pre, outs)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NetError> {
        if input.len() != self.n_inputs() {
            return Err(NetError::SizeMismatch(format!(
                "input of length {}, network expects {}",
                input.len(),
                self.n_inputs()
            )));
        }
        let (_, mut outs) = self.forward_trace(input);
        Ok(outs.pop().expect("output layer"))
    }

    /// Row-major batch: `inputs.len()` must be a multiple of the input width.
    pub fn forward_batch(&self, inputs: &[f64]) -> Result<Vec<f64>, NetError> {
        let n_in = self.n_inputs();
        if !inputs.len().is_multiple_of(n_in) {
            return Err(NetError::SizeMismatch(format!(
                "batch of {} values is not a multiple of {}",
                inputs.len(),
                n_in
            )));
        }
        let mut out = Vec::with_capacity(inputs.len() / n_in * self.n_outputs());
        for row in inputs.chunks_exact(n_in) {
            out.extend(self.forward(row)?);
        }
        Ok(out)
    }
}

/// Supervised pairs, both stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_inputs: usize,
    n_outputs: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

/// Interleaved (re, im) per antenna.
pub fn snapshot_features(snapshot: &[Cplx]) -> Vec<f64> {
    snapshot.iter().flat_map(|z| [z.re, z.im]).collect()
}

impl Dataset {
    pub fn new(n_inputs: usize, n_outputs: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self, NetError> {
        if n_inputs == 0 || n_outputs == 0 || !inputs.len().is_multiple_of(n_inputs) || !targets.len().is_multiple_of(n_outputs) {
            return Err(NetError::SizeMismatch("ragged dataset".into()));
        }
        if inputs.len() / n_inputs != targets.len() / n_outputs {
            return Err(NetError::SizeMismatch(format!(
                "{} input rows, {} target rows",
                inputs.len() / n_inputs,
                targets.len() / n_outputs
            )));
        }
        Ok(Dataset {
            n_inputs,
            n_outputs,
            inputs,
            targets,
        })
    }

    /// Snapshot t paired with the known symbol `symbols[t]`.
    pub fn from_snapshots(snapshots: &SnapshotMatrix, symbols: &[Cplx]) -> Result<Self, NetError> {
        if snapshots.n_symbols() != symbols.len() {
            return Err(NetError::SizeMismatch(format!(
                "{} snapshots, {} symbols",
                snapshots.n_symbols(),
                symbols.len()
            )));
        }
        let inputs = snapshots.columns().flat_map(snapshot_features).collect();
        let targets = symbols.iter().flat_map(|z| [z.re, z.im]).collect();
        Self::new(2 * snapshots.n_antennas(), 2, inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.n_inputs
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.n_inputs..(i + 1) * self.n_inputs]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.n_outputs..(i + 1) * self.n_outputs]
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(rows.len() * self.n_inputs);
        let mut targets = Vec::with_capacity(rows.len() * self.n_outputs);
        for &r in rows {
            inputs.extend_from_slice(self.input(r));
            targets.extend_from_slice(self.target(r));
        }
        Dataset {
            n_inputs: self.n_inputs,
            n_outputs: self.n_outputs,
            inputs,
            targets,
        }
    }

    /// Appends the rows of `other`.
    pub fn extend(&mut self, other: &Dataset) {
        assert_eq!((self.n_inputs, self.n_outputs), (other.n_inputs, other.n_outputs));
        self.inputs.extend_from_slice(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
    }

    /// Mean squared error per output element.
    pub fn mse(&self, params: &MlpParams) -> f64 {
        if self.is_empty() {
            return f64::NAN;
        }
        let e = residuals(params, self);
        e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64
    }
}

/// Network outputs per snapshot, read as (re, im).
pub fn soft_outputs(params: &MlpParams, snapshots: &SnapshotMatrix) -> Result<Vec<Cplx>, NetError> {
    if params.n_inputs() != 2 * snapshots.n_antennas() || params.n_outputs() != 2 {
        return Err(NetError::SizeMismatch(format!(
            "network {:?} cannot equalize {} antennas",
            params.layer_sizes(),
            snapshots.n_antennas()
        )));
    }
    snapshots
        .columns()
        .map(|x| {
            let y = params.forward(&snapshot_features(x))?;
            Ok(Cplx::new(y[0], y[1]))
        })
        .collect()
}

/// Nearest-QPSK decisions on the network outputs.
pub fn equalize(params: &MlpParams, snapshots: &SnapshotMatrix) -> Result<SymbolStream, NetError> {
    let soft = soft_outputs(params, snapshots)?;
    Ok(qpsk_modulate(&qpsk_demodulate(&soft)).expect("two bits per symbol"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmodel::{qpsk_symbol, QPSK_AMPLITUDE};
    use proptest::prelude::*;

    #[test]
    fn default_architecture_has_48_parameters() {
        assert_eq!(param_count(&[20, 2, 2]), 48);
        assert_eq!(MlpParams::zeros(&[20, 2, 2], Activation::SigmoidSym).unwrap().n_params(), 48);
    }

    #[test]
    fn sigmoid_matches_formula_and_tanh_oracle() {
        assert_eq!(sigmoid_sym(0.0), 0.0);
        // tanh(1) from the series e = Σ 1/k!, tanh(1) = (e² − 1)/(e² + 1)
        let e: f64 = (0..25).map(|k| 1.0 / (1..=k).map(f64::from).product::<f64>()).sum();
        let oracle = (e * e - 1.0) / (e * e + 1.0);
        assert!((sigmoid_sym(1.0) - oracle).abs() < 1e-15);
        assert!((sigmoid_sym(1.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
        for x in [-30.0_f64, -2.5, -0.1, 0.3, 1.7, 40.0] {
            let literal = 2.0 / (1.0 + (-2.0 * x).exp()) - 1.0;
            assert!((sigmoid_sym(x) - literal).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::zeros(&[20, 2, 2], Activation::SigmoidSym).unwrap();
        assert_eq!(p.forward(&[0.3; 20]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_path_propagates_tanh() {
        let mut p = MlpParams::zeros(&[20, 2, 2], Activation::SigmoidSym).unwrap();
        let w_in = p.weight_index(0, 0, 0);
        let w_out = p.weight_index(1, 0, 0);
        p.values_mut()[w_in] = 1.0;
        p.values_mut()[w_out] = 1.0;
        let mut x = vec![0.0; 20];
        x[0] = 1.0;
        let y = p.forward(&x).unwrap();
        assert!((y[0] - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn size_mismatch() {
        let p = MlpParams::zeros(&[4, 2, 2], Activation::SigmoidSym).unwrap();
        assert!(matches!(p.forward(&[1.0; 3]), Err(NetError::SizeMismatch(_))));
        assert!(MlpParams::zeros(&[4, 0, 2], Activation::Relu).is_err());
    }

    #[test]
    fn batch_equals_per_sample() {
        let p = MlpParams::random(&[6, 3, 2], Activation::SigmoidSym, 9).unwrap();
        let xs: Vec<f64> = (0..30).map(|k| (k as f64 * 0.37).sin()).collect();
        let batch = p.forward_batch(&xs).unwrap();
        for (i, row) in xs.chunks(6).enumerate() {
            assert_eq!(&batch[2 * i..2 * i + 2], p.forward(row).unwrap().as_slice());
        }
    }

    #[test]
    fn untrained_equalizer_decides_quadrant_00() {
        let p = MlpParams::zeros(&[20, 2, 2], Activation::SigmoidSym).unwrap();
        let x = SnapshotMatrix::zeros(10, 5);
        let s = equalize(&p, &x).unwrap();
        assert!(s.bits.iter().all(|&b| b == 0));
        assert!(s.symbols.iter().all(|&z| z == Cplx::new(QPSK_AMPLITUDE, QPSK_AMPLITUDE)));
        let wrong = SnapshotMatrix::zeros(8, 1);
        assert!(matches!(equalize(&p, &wrong), Err(NetError::SizeMismatch(_))));
    }

    /// A pass-through ReLU layer collapses every quadrant with a negative
    /// component onto an axis or the origin.
    #[test]
    fn relu_collapses_negative_quadrants() {
        let mut p = MlpParams::zeros(&[2, 2, 2], Activation::Relu).unwrap();
        for k in 0..2 {
            let i = p.weight_index(0, k, k);
            let o = p.weight_index(1, k, k);
            p.values_mut()[i] = 1.0;
            p.values_mut()[o] = 1.0;
        }
        let mut errors = [0usize; 4];
        for (q, bits) in [[0u8, 0], [0, 1], [1, 1], [1, 0]].iter().enumerate() {
            let s = qpsk_symbol(bits[0], bits[1]);
            let y = p.forward(&[s.re, s.im]).unwrap();
            let decided = qpsk_demodulate(&[Cplx::new(y[0], y[1])]);
            errors[q] = decided.iter().zip(bits).filter(|(a, b)| a != b).count();
        }
        assert_eq!(errors[0], 0);
        assert!(errors[1] > 0 && errors[2] > 0 && errors[3] > 0);
        let origin = p.forward(&[-QPSK_AMPLITUDE, -QPSK_AMPLITUDE]).unwrap();
        assert_eq!(origin, vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn sigmoid_is_odd_and_bounded(x in -50.0f64..50.0) {
            prop_assert_eq!(sigmoid_sym(x) + sigmoid_sym(-x), 0.0);
            prop_assert!(sigmoid_sym(x).abs() <= 1.0);
        }

        #[test]
        fn hidden_outputs_bounded(seed in any::<u64>(), scale in 0.1f64..100.0) {
            let p = MlpParams::random(&[4, 3, 2], Activation::SigmoidSym, seed).unwrap();
            let x = [scale, -scale, 0.5 * scale, 1.0];
            let (_, outs) = p.forward_trace(&x);
            prop_assert!(outs[1].iter().all(|h| h.abs() <= 1.0));
        }
    }
}
