//! Fully connected network with rectifier hidden layers and an identity
//! output layer, plus exact reverse-mode gradients.

use super::NnError;
use ndarray::{Array1, Array2, Axis};
use rand::RngExt;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Dense network. `weights[i]` has shape `(fan_in, fan_out)`; rows of a batch
/// are samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Cached activations of one forward pass: `activations[0]` is the input,
/// `activations[i + 1]` the output of layer `i`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

/// Parameter gradients mirroring [`Mlp`]'s shapes.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Mlp {
    /// Fresh network with the given layer widths (`dims[0]` inputs through
    /// `dims.last()` outputs), parameters uniform in ±1/sqrt(fan_in).
    pub fn new(dims: &[usize], rng: &mut ChaCha20Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| {
                rng.random_range(-bound..bound)
            }));
            biases.push(Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..bound)));
        }
        Self { weights, biases }
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().ncols()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.weights.iter().map(|w| w.ncols()));
        d
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// All parameters flattened (weights then bias, layer by layer).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.param_count() {
            return Err(NnError::DimensionMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut i = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = flat[i];
                i += 1;
            }
            for v in b.iter_mut() {
                *v = flat[i];
                i += 1;
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<(), NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Batched forward pass (rows are samples).
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(x)?;
        let n = self.layer_count();
        let mut a = x.clone();
        for i in 0..n {
            let mut z = a.dot(&self.weights[i]) + &self.biases[i];
            if i + 1 < n {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        Ok(a)
    }

    /// Forward pass keeping the per-layer activations for [`Mlp::backward`].
    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache), NnError> {
        self.check_input(x)?;
        let n = self.layer_count();
        let mut activations = Vec::with_capacity(n + 1);
        activations.push(x.clone());
        for i in 0..n {
            let mut z = activations[i].dot(&self.weights[i]) + &self.biases[i];
            if i + 1 < n {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(z);
        }
        let out = activations.last().unwrap().clone();
        Ok((out, ForwardCache { activations }))
    }

    /// Exact reverse-mode gradients for the scalar loss whose output gradient
    /// is `grad_out`. Returns the parameter gradients and the gradient with
    /// respect to the input batch.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_out: &Array2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>), NnError> {
        let n = self.layer_count();
        if cache.activations.len() != n + 1 {
            return Err(NnError::StaleCache(format!(
                "cache has {} activations for a {}-layer network",
                cache.activations.len(),
                n
            )));
        }
        for (i, a) in cache.activations.iter().enumerate() {
            let want = if i == 0 { self.input_dim() } else { self.weights[i - 1].ncols() };
            if a.ncols() != want {
                return Err(NnError::StaleCache(format!(
                    "activation {i} has width {}, expected {want}",
                    a.ncols()
                )));
            }
        }
        if grad_out.dim() != cache.activations[n].dim() {
            return Err(NnError::StaleCache(format!(
                "output gradient shape {:?} does not match cached output {:?}",
                grad_out.dim(),
                cache.activations[n].dim()
            )));
        }

        let mut grads = MlpGrads {
            weights: self.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: self.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        };
        let mut g = grad_out.clone();
        for i in (0..n).rev() {
            if i + 1 < n {
                // Rectifier gate from the cached post-activation.
                g.zip_mut_with(&cache.activations[i + 1], |gv, &av| {
                    if av <= 0.0 {
                        *gv = 0.0;
                    }
                });
            }
            grads.weights[i] = cache.activations[i].t().dot(&g);
            grads.biases[i] = g.sum_axis(Axis(0));
            g = g.dot(&self.weights[i].t());
        }
        Ok((grads, g))
    }
}

impl MlpGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for w in &mut self.weights {
            w.mapv_inplace(|v| v * k);
        }
        for b in &mut self.biases {
            b.mapv_inplace(|v| v * k);
        }
        self
    }

    pub fn add(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }
}
