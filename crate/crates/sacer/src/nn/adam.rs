//! Adam with bias correction, specialized to [`Mlp`] parameters plus a
//! scalar variant for the entropy coefficient.

use super::mlp::{Mlp, MlpGrads};
use super::NnError;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// One elementwise Adam update with bias-corrected moments.
#[inline]
fn adam_update(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, corr1: f64, corr2: f64, lr: f64) {
    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
    let m_hat = *m / corr1;
    let v_hat = *v / corr2;
    *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
}

/// First/second-moment accumulators mirroring an [`Mlp`]'s parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    m_weights: Vec<Array2<f64>>,
    v_weights: Vec<Array2<f64>>,
    m_biases: Vec<Array1<f64>>,
    v_biases: Vec<Array1<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn for_mlp(net: &Mlp) -> Self {
        Self {
            m_weights: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_weights: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_biases: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_biases: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            step: 0,
        }
    }

    /// Apply one optimization step of `grads` to `net`.
    pub fn apply(&mut self, net: &mut Mlp, grads: &MlpGrads, lr: f64) -> Result<(), NnError> {
        if grads.weights.len() != net.weights.len()
            || self.m_weights.len() != net.weights.len()
            || net
                .weights
                .iter()
                .zip(&grads.weights)
                .any(|(w, g)| w.dim() != g.dim())
            || net
                .weights
                .iter()
                .zip(&self.m_weights)
                .any(|(w, m)| w.dim() != m.dim())
        {
            return Err(NnError::ShapeMismatch("gradients or optimizer moments".into()));
        }
        self.step += 1;
        let corr1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let corr2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        for i in 0..net.weights.len() {
            azip_update(
                net.weights[i].as_slice_mut().unwrap(),
                grads.weights[i].as_slice().unwrap(),
                self.m_weights[i].as_slice_mut().unwrap(),
                self.v_weights[i].as_slice_mut().unwrap(),
                corr1,
                corr2,
                lr,
            );
            azip_update(
                net.biases[i].as_slice_mut().unwrap(),
                grads.biases[i].as_slice().unwrap(),
                self.m_biases[i].as_slice_mut().unwrap(),
                self.v_biases[i].as_slice_mut().unwrap(),
                corr1,
                corr2,
                lr,
            );
        }
        Ok(())
    }
}

fn azip_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], c1: f64, c2: f64, lr: f64) {
    for i in 0..p.len() {
        adam_update(&mut p[i], g[i], &mut m[i], &mut v[i], c1, c2, lr);
    }
}

/// Adam for a single scalar parameter (the log entropy coefficient).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScalarAdam {
    m: f64,
    v: f64,
    pub step: u64,
}

impl ScalarAdam {
    pub fn apply(&mut self, p: &mut f64, g: f64, lr: f64) {
        self.step += 1;
        let corr1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let corr2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        adam_update(p, g, &mut self.m, &mut self.v, corr1, corr2, lr);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_relative_eq;

    #[test]
    fn first_step_hand_evaluation() {
        // param 0, grad 1, lr 1e-3: m_hat = v_hat = 1, so the update is
        // lr / (1 + eps).
        let mut adam = ScalarAdam::default();
        let mut p = 0.0;
        adam.apply(&mut p, 1.0, 1e-3);
        assert_relative_eq!(p, -1e-3 / (1.0 + ADAM_EPSILON), epsilon = 1e-15);
        assert_relative_eq!(p, -0.000999999990, epsilon = 1e-12);
    }

    #[test]
    fn zero_gradient_is_a_fixpoint() {
        let mut net = Mlp::new(&[3, 4, 2], &mut derive_rng(0, "adam-test"));
        let before = net.flat_params();
        let mut adam = AdamState::for_mlp(&net);
        let grads = MlpGrads {
            weights: net.weights.iter().map(|w| ndarray::Array2::zeros(w.dim())).collect(),
            biases: net.biases.iter().map(|b| ndarray::Array1::zeros(b.len())).collect(),
        };
        for _ in 0..5 {
            adam.apply(&mut net, &grads, 1e-3).unwrap();
        }
        assert_eq!(net.flat_params(), before);
    }

    #[test]
    fn identical_calls_are_deterministic() {
        let run = || {
            let mut net = Mlp::new(&[3, 4, 2], &mut derive_rng(1, "adam-det"));
            let mut adam = AdamState::for_mlp(&net);
            let grads = MlpGrads {
                weights: net.weights.iter().map(|w| w.mapv(|x| x * 0.1)).collect(),
                biases: net.biases.iter().map(|b| b.mapv(|x| x * 0.1)).collect(),
            };
            for _ in 0..7 {
                adam.apply(&mut net, &grads, 3e-4).unwrap();
            }
            net.flat_params()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut rng = derive_rng(0, "adam-shape");
        let mut net = Mlp::new(&[3, 4, 2], &mut rng);
        let other = Mlp::new(&[3, 5, 2], &mut rng);
        let mut adam = AdamState::for_mlp(&net);
        let grads = MlpGrads {
            weights: other.weights.iter().map(|w| w.clone()).collect(),
            biases: other.biases.iter().map(|b| b.clone()).collect(),
        };
        assert!(matches!(
            adam.apply(&mut net, &grads, 1e-3),
            Err(NnError::ShapeMismatch(_))
        ));
    }
}
