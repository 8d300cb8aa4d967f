//! Levenberg–Marquardt with Bayesian regularization.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{jacobian, residuals, Dataset, MlpParams, NetError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub min_gradient: f64,
    pub mu_init: f64,
    pub mu_inc: f64,
    pub mu_dec: f64,
    pub mu_max: f64,
    /// (train, validation, test) fractions.
    pub split: (f64, f64, f64),
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 1000,
            min_gradient: 1e-7,
            mu_init: 0.005,
            mu_inc: 10.0,
            mu_dec: 0.1,
            mu_max: 1e10,
            split: (0.70, 0.15, 0.15),
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let (tr, va, te) = self.split;
        let bad = |msg: &str| Err(NetError::InvalidConfig(msg.to_string()));
        if [tr, va, te].iter().any(|f| !(0.0..=1.0).contains(f)) || ((tr + va + te) - 1.0).abs() > 1e-9 {
            return bad("split fractions must be in [0, 1] and sum to 1");
        }
        if tr <= 0.5 {
            return bad("train fraction must exceed 0.5");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if !(self.min_gradient >= 0.0) {
            return bad("min_gradient must be non-negative");
        }
        if !(self.mu_init > 0.0 && self.mu_inc > 1.0 && self.mu_dec > 0.0 && self.mu_dec < 1.0) {
            return bad("need mu_init > 0, mu_inc > 1, 0 < mu_dec < 1");
        }
        if !(self.mu_max > self.mu_init) {
            return bad("mu_max must exceed mu_init");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MinGradient,
    MaxEpochs,
    MuOverflow,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MinGradient => "min_gradient",
            StopReason::MaxEpochs => "max_epochs",
            StopReason::MuOverflow => "mu_overflow",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State after an epoch; epoch 0 is the initial parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    /// F = βE_D + αE_W before and after this epoch's step, both under the
    /// α, β in force when the step was taken.
    pub objective_start: f64,
    pub objective: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub gradient: f64,
    pub weight_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub gamma: f64,
    pub n_params: usize,
    pub stopping: StopReason,
    pub final_train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
    pub wall_time_s: f64,
    pub history: Vec<EpochLog>,
}

struct Split {
    train: Dataset,
    val: Dataset,
    test: Dataset,
}

fn split_dataset(data: &Dataset, config: &TrainConfig) -> Result<Split, NetError> {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha12Rng::seed_from_u64(config.seed));
    let n_train = (config.split.0 * n as f64).round() as usize;
    let n_val = ((config.split.1 * n as f64).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    let (train, rest) = order.split_at(n_train);
    let (val, test) = rest.split_at(n_val);
    if train.is_empty() {
        return Err(NetError::EmptySplit("training"));
    }
    if val.is_empty() {
        return Err(NetError::EmptySplit("validation"));
    }
    if test.is_empty() && config.split.2 > 0.0 {
        return Err(NetError::EmptySplit("test"));
    }
    Ok(Split {
        train: data.subset(train),
        val: data.subset(val),
        test: data.subset(test),
    })
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Solves (H + λI)x = b for symmetric positive definite H + λI.
fn solve_shifted(h: &DMatrix<f64>, lambda: f64, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let a = h + DMatrix::identity(n, n) * lambda;
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(b)),
        None => a.lu().solve(b),
    }
}

fn trace_shifted_inverse(h: &DMatrix<f64>, lambda: f64) -> Option<f64> {
    let n = h.nrows();
    let a = h + DMatrix::identity(n, n) * lambda;
    let inv = match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a.try_inverse()?,
    };
    Some(inv.trace())
}

/// Trains `params` on a seeded train/validation/test split of `data` and
/// returns the parameters of the epoch with the lowest validation MSE.
pub fn train_bayesian_lm(
    params: &MlpParams,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(MlpParams, TrainReport), NetError> {
    config.validate()?;
    if data.n_inputs() != params.n_inputs() || data.n_outputs() != params.n_outputs() {
        return Err(NetError::SizeMismatch(format!(
            "dataset {}→{} for network {:?}",
            data.n_inputs(),
            data.n_outputs(),
            params.layer_sizes()
        )));
    }
    let started = Instant::now();
    let Split { train, val, test } = split_dataset(data, config)?;
    let n_params = params.n_params();
    let n_err = (train.len() * train.n_outputs()) as f64;

    let mut w = params.clone();
    let mut e = residuals(&w, &train);
    let mut jac = jacobian(&w, &train);
    let mut jtj = jac.tr_mul(&jac);
    let mut e_d = sum_sq(&e);
    let mut e_w = sum_sq(w.values());

    // Evidence initialisation with γ = N_params.
    let mut gamma = n_params as f64;
    let mut alpha = if e_w > 0.0 { gamma / (2.0 * e_w) } else { 1.0 };
    let mut beta = if e_d > 0.0 && n_err > gamma {
        (n_err - gamma) / (2.0 * e_d)
    } else {
        1.0
    };
    let mut mu = config.mu_init;

    // Returns βJᵀe + αw (half of ∇F) and the stopping measure: the ∞-norm of
    // ∇F/(β·n_err), the gradient of the regularized mean squared error. It
    // does not grow with β or with the number of training samples.
    let grad_inf = |jac: &DMatrix<f64>, e: &[f64], w: &MlpParams, alpha: f64, beta: f64| -> (DVector<f64>, f64) {
        let g = jac.tr_mul(&DVector::from_column_slice(e)) * beta + DVector::from_column_slice(w.values()) * alpha;
        let inf = 2.0 * g.amax() / (beta * n_err);
        (g, inf)
    };

    let mut history = vec![EpochLog {
        epoch: 0,
        train_mse: e_d / n_err,
        val_mse: val.mse(&w),
        objective_start: beta * e_d + alpha * e_w,
        objective: beta * e_d + alpha * e_w,
        gamma,
        alpha,
        beta,
        mu,
        gradient: grad_inf(&jac, &e, &w, alpha, beta).1,
        weight_norm: e_w.sqrt(),
    }];
    let mut best = (0usize, history[0].val_mse, w.clone());
    let mut stopping = StopReason::MaxEpochs;
    let mut epochs_run = 0;

    'epochs: for epoch in 1..=config.max_epochs {
        let f_old = beta * e_d + alpha * e_w;
        if !f_old.is_finite() {
            return Err(NetError::DivergentTraining { epoch });
        }
        let (g, g_inf) = grad_inf(&jac, &e, &w, alpha, beta);
        if g_inf < config.min_gradient {
            stopping = StopReason::MinGradient;
            break;
        }
        let h = &jtj * beta;
        let neg_g = -g;

        // Inner μ loop: raise μ until F decreases.
        loop {
            let accepted = solve_shifted(&h, alpha + mu, &neg_g).and_then(|delta| {
                let mut trial = w.clone();
                for (p, d) in trial.values_mut().iter_mut().zip(delta.iter()) {
                    *p += d;
                }
                let e_trial = residuals(&trial, &train);
                let (ed, ew) = (sum_sq(&e_trial), sum_sq(trial.values()));
                let f_new = beta * ed + alpha * ew;
                (f_new.is_finite() && f_new < f_old).then_some((trial, e_trial, ed, ew))
            });
            if let Some((trial, e_trial, ed, ew)) = accepted {
                w = trial;
                e = e_trial;
                e_d = ed;
                e_w = ew;
                mu *= config.mu_dec;
                break;
            }
            mu *= config.mu_inc;
            if mu > config.mu_max {
                stopping = StopReason::MuOverflow;
                break 'epochs;
            }
        }
        epochs_run = epoch;
        jac = jacobian(&w, &train);
        jtj = jac.tr_mul(&jac);

        let objective = beta * e_d + alpha * e_w;
        let h = &jtj * beta;
        let tr = trace_shifted_inverse(&h, alpha).ok_or(NetError::DivergentTraining { epoch })?;
        gamma = (n_params as f64 - alpha * tr).clamp(0.0, n_params as f64);
        if e_w > 0.0 {
            alpha = gamma / (2.0 * e_w);
        }
        if e_d > 0.0 {
            beta = (n_err - gamma).max(0.0) / (2.0 * e_d);
        }
        if !(alpha.is_finite() && beta.is_finite()) || beta <= 0.0 {
            return Err(NetError::DivergentTraining { epoch });
        }

        let val_mse = val.mse(&w);
        history.push(EpochLog {
            epoch,
            train_mse: e_d / n_err,
            val_mse,
            objective_start: f_old,
            objective,
            gamma,
            alpha,
            beta,
            mu,
            gradient: grad_inf(&jac, &e, &w, alpha, beta).1,
            weight_norm: e_w.sqrt(),
        });
        if val_mse < best.1 {
            best = (epoch, val_mse, w.clone());
        }
    }

    let (best_epoch, val_mse, best_params) = best;
    let report = TrainReport {
        epochs_run,
        best_epoch,
        gamma,
        n_params,
        stopping,
        final_train_mse: train.mse(&best_params),
        val_mse,
        test_mse: test.mse(&best_params),
        wall_time_s: started.elapsed().as_secs_f64(),
        history,
    };
    Ok((best_params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{equalize, Activation};
    use crate::numerics::Cplx;
    use crate::sigmodel::{preset, random_symbols, synthesize, ArrayGeometry, SnapshotMatrix, SymbolStream};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn toy_identity(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-0.7..0.7)).collect();
        Dataset::new(2, 2, inputs.clone(), inputs).unwrap()
    }

    fn epa_pilots(n_pilots: usize, seed: u64) -> Dataset {
        let geometry = ArrayGeometry::default();
        let scenario = preset("epa").unwrap().scenario;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_symbols(&mut rng, n_pilots);
        let si = random_symbols(&mut rng, n_pilots + scenario.max_delay());
        let x = synthesize(&scenario, &geometry, &d, &si, seed + 2).unwrap();
        Dataset::from_snapshots(&x, &d.symbols).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let mut c = TrainConfig::default();
        c.split = (0.5, 0.25, 0.25);
        assert!(c.validate().is_err());
        c.split = (0.7, 0.2, 0.2);
        assert!(c.validate().is_err());
        c = TrainConfig {
            mu_inc: 0.5,
            ..TrainConfig::default()
        };
        assert!(matches!(c.validate(), Err(NetError::InvalidConfig(_))));
    }

    #[test]
    fn empty_split_reported() {
        let data = toy_identity(3, 1);
        let p = MlpParams::random(&[2, 2, 2], Activation::SigmoidSym, 1).unwrap();
        assert!(matches!(
            train_bayesian_lm(&p, &data, &TrainConfig::default()),
            Err(NetError::EmptySplit(_))
        ));
    }

    #[test]
    fn learns_identity_map() {
        // A linear least-squares fit reaches zero error on this map, and the
        // tanh network is near-linear on |x| < 0.7 with two hidden units.
        let data = toy_identity(200, 3);
        let p = MlpParams::random(&[2, 2, 2], Activation::SigmoidSym, 5).unwrap();
        let config = TrainConfig {
            max_epochs: 50,
            ..TrainConfig::default()
        };
        let (_, report) = train_bayesian_lm(&p, &data, &config).unwrap();
        assert!(report.final_train_mse < 1e-4, "{report:?}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let data = epa_pilots(400, 8);
        let p = MlpParams::random(&[20, 2, 2], Activation::SigmoidSym, 8).unwrap();
        let config = TrainConfig::default();
        let (pa, mut ra) = train_bayesian_lm(&p, &data, &config).unwrap();
        let (pb, mut rb) = train_bayesian_lm(&p, &data, &config).unwrap();
        ra.wall_time_s = 0.0;
        rb.wall_time_s = 0.0;
        assert_eq!(ra, rb);
        assert_eq!(pa, pb);
    }

    #[test]
    fn report_invariants_on_epa() {
        let data = epa_pilots(1000, 21);
        let p = MlpParams::random(&[20, 2, 2], Activation::SigmoidSym, 21).unwrap();
        let (best, report) = train_bayesian_lm(&p, &data, &TrainConfig::default()).unwrap();
        assert_eq!(report.n_params, 48);
        assert!(report.best_epoch <= report.epochs_run);
        assert_eq!(report.history.len(), report.epochs_run + 1);
        for log in &report.history {
            assert!((0.0..=48.0).contains(&log.gamma));
            assert!(report.val_mse <= log.val_mse);
        }
        let split = split_dataset(&data, &TrainConfig::default()).unwrap();
        assert!((split.val.mse(&best) - report.val_mse).abs() < 1e-15);
        assert_eq!(report.stopping, StopReason::MinGradient, "{report:?}");
        assert!(report.epochs_run <= 100, "{}", report.epochs_run);
    }

    #[test]
    fn objective_decreases_on_every_accepted_step() {
        let data = epa_pilots(600, 4);
        let p = MlpParams::random(&[20, 2, 2], Activation::SigmoidSym, 4).unwrap();
        let (_, report) = train_bayesian_lm(&p, &data, &TrainConfig::default()).unwrap();
        for log in &report.history[1..] {
            assert!(log.objective < log.objective_start, "{log:?}");
        }
    }

    #[test]
    fn zero_targets_shrink_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 300;
        let inputs: Vec<f64> = (0..4 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = Dataset::new(4, 2, inputs, vec![0.0; 2 * n]).unwrap();
        let p = MlpParams::random(&[4, 3, 2], Activation::SigmoidSym, 12).unwrap();
        let config = TrainConfig {
            max_epochs: 40,
            ..TrainConfig::default()
        };
        let (_, report) = train_bayesian_lm(&p, &data, &config).unwrap();
        let norms: Vec<f64> = report.history.iter().map(|l| l.weight_norm).collect();
        for pair in norms[2..].windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-9), "{norms:?}");
        }
        assert!(norms.last().unwrap() < &(0.1 * norms[0]));
    }

    #[test]
    fn clean_identity_channel_equalizes_pilots() {
        // One antenna, no interference or noise: the snapshot is the symbol.
        let d = random_symbols(&mut ChaCha8Rng::seed_from_u64(2), 300);
        let cols: Vec<&[Cplx]> = d.symbols.iter().map(std::slice::from_ref).collect();
        let x = SnapshotMatrix::from_columns(1, &cols);
        let data = Dataset::from_snapshots(&x, &d.symbols).unwrap();
        let p = MlpParams::random(&[2, 2, 2], Activation::SigmoidSym, 2).unwrap();
        let (best, _) = train_bayesian_lm(&p, &data, &TrainConfig::default()).unwrap();
        let decided: SymbolStream = equalize(&best, &x).unwrap();
        assert_eq!(decided.bits, d.bits);
    }
}
