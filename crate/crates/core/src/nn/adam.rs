use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for an ordered list of parameter tensors.
///
/// Tensors are updated in the order they are passed to [`AdamState::step`];
/// callers always pass them in the same order (for an MLP: `w0, b0, w1, b1, ...`,
/// followed by any extra tensors such as a policy's `log_std`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(tensor_lens: &[usize], config: AdamConfig) -> Self {
        AdamState {
            step: 0,
            config,
            m: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn tensor_lens(&self) -> Vec<usize> {
        self.m.iter().map(Vec::len).collect()
    }

    /// Applies one bias-corrected Adam update.
    ///
    /// Every gradient is checked for finiteness before any parameter moves, so a
    /// failed call leaves both parameters and moments untouched.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], names: &[String]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::dims("AdamState::step tensors", self.m.len(), params.len()));
        }
        if grads.len() != params.len() {
            return Err(Error::dims("AdamState::step gradients", params.len(), grads.len()));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() {
                return Err(Error::dims("AdamState::step tensor length", self.m[i].len(), p.len()));
            }
            if g.len() != p.len() {
                return Err(Error::dims("AdamState::step gradient length", p.len(), g.len()));
            }
            if g.iter().any(|x| !x.is_finite()) {
                let layer = names.get(i).cloned().unwrap_or_else(|| format!("tensor {i}"));
                return Err(Error::NonFiniteGradient { layer });
            }
        }

        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }

    #[test]
    fn zero_gradient_is_identity_on_params() {
        let mut state = AdamState::new(&[3], cfg(0.1));
        let mut p = vec![1.0, -2.0, 0.5];
        state.step(&mut [&mut p], &[&[0.0, 0.0, 0.0]], &[]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // t=1: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        let mut state = AdamState::new(&[1], cfg(0.1));
        let mut p = vec![0.0];
        state.step(&mut [&mut p], &[&[1.0]], &[]).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-8, "{}", p[0]);
    }

    #[test]
    fn identical_inputs_identical_results() {
        let run = || {
            let mut state = AdamState::new(&[2], cfg(0.01));
            let mut p = vec![0.3, -0.7];
            for _ in 0..5 {
                state.step(&mut [&mut p], &[&[0.2, -1.5]], &[]).unwrap();
            }
            (p, state)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_names_layer_and_leaves_state() {
        let mut state = AdamState::new(&[1, 2], cfg(0.1));
        let mut a = vec![1.0];
        let mut b = vec![1.0, 1.0];
        let names = vec!["layer0.weight".to_string(), "layer0.bias".to_string()];
        let err = state
            .step(&mut [&mut a, &mut b], &[&[1.0], &[f64::NAN, 0.0]], &names)
            .unwrap_err();
        match err {
            Error::NonFiniteGradient { layer } => assert_eq!(layer, "layer0.bias"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(state.step, 0);
        assert_eq!(a, vec![1.0]);
    }
}
