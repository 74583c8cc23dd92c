//! Dense feed-forward networks with hand-derived gradients.
//!
//! Everything is `f64` and single-threaded per call; networks are plain data
//! and can be cloned into rollout workers.

mod adam;
mod gaussian;
mod matrix;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use gaussian::{gaussian_log_prob, GaussianPolicy, ACTION_DIM, LOG_STD_INIT, LOG_STD_MAX, LOG_STD_MIN};
pub use matrix::Matrix;
pub use mlp::{Mlp, MlpGrads, MlpTrace};

/// Hidden layer widths used for the policy and every critic.
pub const HIDDEN: [usize; 2] = [64, 64];

/// Layer sizes `input -> 64 -> 64 -> output`.
pub fn standard_layers(input: usize, output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(HIDDEN.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(&HIDDEN);
    sizes.push(output);
    sizes
}

/// Scales every gradient tensor so that the global L2 norm is at most `max_norm`.
/// Returns the norm before scaling.
pub fn clip_global_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = grads.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let scale = max_norm / (norm + 1e-12);
        for g in grads.iter_mut() {
            g.iter_mut().for_each(|x| *x *= scale);
        }
    }
    norm
}
