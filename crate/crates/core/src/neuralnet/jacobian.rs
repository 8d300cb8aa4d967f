use nalgebra::DMatrix;

use super::{Dataset, MlpParams};

/// e = y − t, sample-major then output.
pub fn residuals(params: &MlpParams, data: &Dataset) -> Vec<f64> {
    let mut e = Vec::with_capacity(data.len() * data.n_outputs());
    for i in 0..data.len() {
        let (_, outs) = params.forward_trace(data.input(i));
        let y = outs.last().expect("output layer");
        e.extend(y.iter().zip(data.target(i)).map(|(y, t)| y - t));
    }
    e
}

/// ∂e/∂w by back-propagation: one row per (sample, output), one column per
/// parameter in [`MlpParams`] layout order.
pub fn jacobian(params: &MlpParams, data: &Dataset) -> DMatrix<f64> {
    let n_out = params.n_outputs();
    let n_layers = params.n_layers();
    let sizes = params.layer_sizes();
    let mut jac = DMatrix::zeros(data.len() * n_out, params.n_params());

    let offsets: Vec<usize> = (0..n_layers).map(|l| params.layer_offset(l)).collect();
    let mut row_buf = vec![0.0; params.n_params()];

    for i in 0..data.len() {
        let (pre, outs) = params.forward_trace(data.input(i));
        for k in 0..n_out {
            row_buf.iter_mut().for_each(|v| *v = 0.0);
            // Linear readout: ∂y_k/∂z_out = e_k.
            let mut delta: Vec<f64> = (0..n_out).map(|j| if j == k { 1.0 } else { 0.0 }).collect();
            for l in (0..n_layers).rev() {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let off = offsets[l];
                let below = &outs[l];
                for j in 0..fan_out {
                    if delta[j] == 0.0 {
                        continue;
                    }
                    let w_row = &mut row_buf[off + j * fan_in..off + (j + 1) * fan_in];
                    for (dst, &x) in w_row.iter_mut().zip(below) {
                        *dst = delta[j] * x;
                    }
                    row_buf[off + fan_out * fan_in + j] = delta[j];
                }
                if l > 0 {
                    let act = params.hidden_activation();
                    let w = &params.values()[off..off + fan_in * fan_out];
                    delta = (0..fan_in)
                        .map(|m| {
                            let back: f64 = (0..fan_out).map(|j| w[j * fan_in + m] * delta[j]).sum();
                            back * act.derivative(pre[l - 1][m], outs[l][m])
                        })
                        .collect();
                }
            }
            let row = i * n_out + k;
            for (c, &v) in row_buf.iter().enumerate() {
                jac[(row, c)] = v;
            }
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::Activation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central differences of the residual vector, independent of back-prop.
    fn finite_difference(params: &MlpParams, data: &Dataset, step: f64) -> DMatrix<f64> {
        let rows = data.len() * params.n_outputs();
        let mut fd = DMatrix::zeros(rows, params.n_params());
        for p in 0..params.n_params() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.values_mut()[p] += step;
            minus.values_mut()[p] -= step;
            let ep = residuals(&plus, data);
            let em = residuals(&minus, data);
            for r in 0..rows {
                fd[(r, p)] = (ep[r] - em[r]) / (2.0 * step);
            }
        }
        fd
    }

    fn random_data(rng: &mut impl Rng, n_in: usize, n_out: usize, n: usize) -> Dataset {
        let inputs = (0..n * n_in).map(|_| rng.random_range(-1.5..1.5)).collect();
        let targets = (0..n * n_out).map(|_| rng.random_range(-1.0..1.0)).collect();
        Dataset::new(n_in, n_out, inputs, targets).unwrap()
    }

    #[test]
    fn matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let sizes = [rng.random_range(1..6), rng.random_range(1..5), 2];
            let p = MlpParams::random(&sizes, Activation::SigmoidSym, trial).unwrap();
            let data = random_data(&mut rng, sizes[0], 2, 6);
            let j = jacobian(&p, &data);
            let fd = finite_difference(&p, &data, 1e-6);
            for (a, b) in j.iter().zip(fd.iter()) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_hidden_weights_closed_form() {
        // One hidden unit, all weights zero except the output weight v:
        // y = v·tanh(0) + c, so ∂y/∂w_in = v·(1 − 0)·x, ∂y/∂v = 0, ∂y/∂c = 1.
        let mut p = MlpParams::zeros(&[2, 1, 1], Activation::SigmoidSym).unwrap();
        let v = p.weight_index(1, 0, 0);
        p.values_mut()[v] = 0.5;
        let data = Dataset::new(2, 1, vec![0.3, -2.0], vec![1.0]).unwrap();
        let j = jacobian(&p, &data);
        assert!((j[(0, p.weight_index(0, 0, 0))] - 0.15).abs() < 1e-15);
        assert!((j[(0, p.weight_index(0, 0, 1))] + 1.0).abs() < 1e-15);
        assert!((j[(0, p.bias_index(0, 0))] - 0.5).abs() < 1e-15);
        assert_eq!(j[(0, v)], 0.0);
        assert_eq!(j[(0, p.bias_index(1, 0))], 1.0);
    }

    #[test]
    fn constant_input_ties_weight_and_bias_gradients() {
        // With input m fixed to c, ∂e/∂w_jm = c·∂e/∂b_j for every hidden unit j.
        let p = MlpParams::random(&[3, 4, 2], Activation::SigmoidSym, 2).unwrap();
        let c = 0.75;
        let data = Dataset::new(3, 2, vec![0.1, c, -0.4, 1.2, c, 0.9], vec![0.5, -0.5, -0.5, 0.5]).unwrap();
        let j = jacobian(&p, &data);
        for r in 0..j.nrows() {
            for unit in 0..4 {
                let w = j[(r, p.weight_index(0, unit, 1))];
                let b = j[(r, p.bias_index(0, unit))];
                assert!((w - c * b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn relu_and_deep_networks_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (k, act) in [Activation::Relu, Activation::SigmoidSym].into_iter().enumerate() {
            let p = MlpParams::random(&[4, 3, 3, 2], act, 40 + k as u64).unwrap();
            let data = random_data(&mut rng, 4, 2, 5);
            let j = jacobian(&p, &data);
            let fd = finite_difference(&p, &data, 1e-6);
            for (a, b) in j.iter().zip(fd.iter()) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3));
            }
        }
    }
}
