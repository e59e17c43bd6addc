//! Fully connected ReLU network for regression, trained with Adam.
//!
//! Hidden layers compute `a = ReLU(W a_prev + b)`; the output layer is linear.
//! The loss is `1/(2n) Σ (ŷ - y)^2`. Inputs are standardized with training
//! statistics; targets are used raw. Training stops after `max_epochs` or
//! when the held-out validation loss has not improved for `patience`
//! consecutive epochs, and the best validation weights are kept.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![10, 5],
            max_epochs: 1000,
            patience: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Layer sizes `[inputs, hidden.., 1]` and a flat parameter vector holding,
/// per layer, the row-major `out x in` weights followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub sizes: Vec<usize>,
    pub theta: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub epochs_run: usize,
}

pub fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

/// Forward pass on already-standardized input.
pub fn forward(sizes: &[usize], theta: &[f64], x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut off = 0;
    let layers = sizes.len() - 1;
    for l in 0..layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let w = &theta[off..off + n_out * n_in];
        let b = &theta[off + n_out * n_in..off + n_out * (n_in + 1)];
        off += n_out * (n_in + 1);
        let mut z: Vec<f64> = (0..n_out)
            .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&a).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        if l + 1 < layers {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        a = z;
    }
    a[0]
}

/// Loss `1/(2n) Σ (ŷ - y)^2` and its gradient with respect to `theta`.
pub fn loss_and_gradient(sizes: &[usize], theta: &[f64], x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; theta.len()];
    let loss = accumulate_gradient(sizes, theta, x.iter().map(Vec::as_slice), y.iter().copied(), x.len(), &mut grad);
    (loss, grad)
}

fn accumulate_gradient<'a>(
    sizes: &[usize],
    theta: &[f64],
    xs: impl Iterator<Item = &'a [f64]>,
    ys: impl Iterator<Item = f64>,
    n: usize,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let layers = sizes.len() - 1;
    let offsets: Vec<usize> = sizes
        .windows(2)
        .scan(0, |acc, w| {
            let o = *acc;
            *acc += w[1] * (w[0] + 1);
            Some(o)
        })
        .collect();
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); layers + 1];
    for (x, y) in xs.zip(ys) {
        acts[0].clear();
        acts[0].extend_from_slice(x);
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let off = offsets[l];
            let w = &theta[off..off + n_out * n_in];
            let b = &theta[off + n_out * n_in..off + n_out * (n_in + 1)];
            let (prev, rest) = acts.split_at_mut(l + 1);
            let a_prev = &prev[l];
            let a = &mut rest[0];
            a.clear();
            for o in 0..n_out {
                let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(a_prev).map(|(p, q)| p * q).sum::<f64>();
                a.push(if l + 1 < layers { z.max(0.0) } else { z });
            }
        }
        let err = acts[layers][0] - y;
        loss += 0.5 * err * err * inv_n;

        let mut delta = vec![err * inv_n];
        for l in (0..layers).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let off = offsets[l];
            let a_prev = &acts[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, &a) in row.iter_mut().zip(a_prev) {
                    *g += d * a;
                }
                grad[off + n_out * n_in + o] += d;
            }
            if l > 0 {
                let w = &theta[off..off + n_out * n_in];
                delta = (0..n_in)
                    .map(|i| {
                        if a_prev[i] > 0.0 {
                            (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
    }
    loss
}

/// Glorot-uniform weights and biases in `±sqrt(6 / (fan_in + fan_out))`.
pub fn init_parameters<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Vec<f64> {
    let mut theta = Vec::with_capacity(parameter_count(sizes));
    for w in sizes.windows(2) {
        let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
        theta.extend((0..w[1] * (w[0] + 1)).map(|_| rng.gen_range(-bound..=bound)));
    }
    theta
}

fn standardizer(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = x.first().map_or(0, Vec::len);
    let n = x.len().max(1) as f64;
    let mean: Vec<f64> = (0..m).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let scale = (0..m)
        .map(|j| {
            let sd = (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

fn mse(sizes: &[usize], theta: &[f64], x: &[Vec<f64>], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(r, &t)| (forward(sizes, theta, r) - t).powi(2))
        .sum::<f64>()
        / x.len() as f64
}

pub fn fit_mlp(x: &[Vec<f64>], y: &[f64], cfg: &MlpConfig) -> Result<MlpModel> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("MLP needs at least one training row".into()));
    }
    if cfg.batch_size == 0 || cfg.hidden.contains(&0) {
        return Err(Error::InvalidArgument("MLP batch size and layer widths must be positive".into()));
    }
    let m = x[0].len();
    let mut sizes = vec![m];
    sizes.extend(&cfg.hidden);
    sizes.push(1);

    let (mean, scale) = standardizer(x);
    let xs: Vec<Vec<f64>> = x.iter().map(|r| standardize(r, &mean, &scale)).collect();

    let mut rng = substream(cfg.seed, 0);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(&mut rng);
    let n_val = if xs.len() >= 2 {
        ((xs.len() as f64 * cfg.validation_fraction).round() as usize).clamp(1, xs.len() - 1)
    } else {
        0
    };
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let val_x: Vec<Vec<f64>> = val_idx.iter().map(|&i| xs[i].clone()).collect();
    let val_y: Vec<f64> = val_idx.iter().map(|&i| y[i]).collect();

    let mut theta = init_parameters(&sizes, &mut rng);
    let (mut m1, mut m2) = (vec![0.0; theta.len()], vec![0.0; theta.len()]);
    let mut grad = vec![0.0; theta.len()];
    let mut step = 0i32;
    let mut best = (f64::INFINITY, theta.clone());
    let mut stale = 0;
    let mut epochs_run = 0;

    for _ in 0..cfg.max_epochs {
        epochs_run += 1;
        train_idx.shuffle(&mut rng);
        for batch in train_idx.chunks(cfg.batch_size) {
            accumulate_gradient(
                &sizes,
                &theta,
                batch.iter().map(|&i| xs[i].as_slice()),
                batch.iter().map(|&i| y[i]),
                batch.len(),
                &mut grad,
            );
            step += 1;
            let c1 = 1.0 - cfg.beta1.powi(step);
            let c2 = 1.0 - cfg.beta2.powi(step);
            for k in 0..theta.len() {
                m1[k] = cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * grad[k];
                m2[k] = cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
                theta[k] -= cfg.learning_rate * (m1[k] / c1) / ((m2[k] / c2).sqrt() + cfg.epsilon);
            }
        }
        let monitor = if n_val > 0 {
            mse(&sizes, &theta, &val_x, &val_y)
        } else {
            mse(&sizes, &theta, &xs, y)
        };
        if monitor < best.0 {
            best = (monitor, theta.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NonConvergence {
            model: "mlp",
            iterations: epochs_run,
            residual: best.0,
        });
    }
    Ok(MlpModel {
        sizes,
        theta: best.1,
        mean,
        scale,
        epochs_run,
    })
}

impl MlpModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        forward(&self.sizes, &self.theta, &standardize(x, &self.mean, &self.scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_zero() {
        let sizes = [3, 10, 5, 1];
        let theta = vec![0.0; parameter_count(&sizes)];
        assert_eq!(forward(&sizes, &theta, &[0.3, -2.0, 7.0]), 0.0);
        assert_eq!(parameter_count(&sizes), 10 * 4 + 5 * 11 + 6);
    }

    #[test]
    fn learns_a_smooth_function() {
        let mut rng = substream(5, 5);
        let x: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1]).collect();
        let model = fit_mlp(&x, &y, &MlpConfig::default()).unwrap();
        let err = x.iter().zip(&y).map(|(r, t)| (model.predict(r) - t).powi(2)).sum::<f64>() / 400.0;
        let var = {
            let mean = y.iter().sum::<f64>() / 400.0;
            y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / 400.0
        };
        assert!(err < 0.2 * var, "mse {err} vs variance {var}");
        let again = fit_mlp(&x, &y, &MlpConfig::default()).unwrap();
        assert_eq!(again.theta, model.theta);
    }
}
