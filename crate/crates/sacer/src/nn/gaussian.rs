//! Squashed-Gaussian policy head: two independent Gaussians, tanh-squashed
//! and scaled to the acceleration box, with the change-of-variables
//! correction on the log-density.

use crate::kinematics::ACCEL_LIMIT;

pub const ACTION_DIM: usize = 2;
pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Cap on the pre-squash value; tanh of this is still strictly below 1 in
/// f64, so squashed actions stay strictly inside the box.
const PRE_SQUASH_CAP: f64 = 18.0;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Distribution parameters for one state: per-dimension mean and clamped
/// log standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianHead {
    pub mean: [f64; ACTION_DIM],
    pub log_std: [f64; ACTION_DIM],
}

/// Everything recorded while sampling one action, enough to both evaluate
/// the log-density and backpropagate through the sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleInfo {
    pub action: [f64; ACTION_DIM],
    pub log_prob: f64,
    pub noise: [f64; ACTION_DIM],
    pub tanh_u: [f64; ACTION_DIM],
    /// 1 where the pre-squash value was inside the cap, else 0 (gradient gate).
    pub u_gate: [f64; ACTION_DIM],
}

/// Gradients of the log-density and the action with respect to the head
/// parameters, per dimension.
#[derive(Debug, Clone, Copy)]
pub struct HeadGrads {
    pub dlogp_dmean: [f64; ACTION_DIM],
    pub dlogp_dlogstd: [f64; ACTION_DIM],
    pub daction_dmean: [f64; ACTION_DIM],
    pub daction_dlogstd: [f64; ACTION_DIM],
}

/// Split a raw 4-wide network output row into a head, clamping the log-std
/// outputs. Returns the head and the clamp pass-through gates (0 where the
/// raw value was clipped).
pub fn head_from_output(row: &[f64]) -> (GaussianHead, [f64; ACTION_DIM]) {
    debug_assert_eq!(row.len(), 2 * ACTION_DIM);
    let mut head = GaussianHead { mean: [row[0], row[1]], log_std: [0.0; ACTION_DIM] };
    let mut gates = [0.0; ACTION_DIM];
    for d in 0..ACTION_DIM {
        let raw = row[ACTION_DIM + d];
        head.log_std[d] = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
        gates[d] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) { 1.0 } else { 0.0 };
    }
    (head, gates)
}

/// log(1 - tanh(u)^2), evaluated stably for large |u|.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    let a = u.abs();
    2.0 * (std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p())
}

/// Reparameterized sample: `u = mean + exp(log_std) * noise`, squashed to
/// `ACCEL_LIMIT * tanh(u)`. The log-density subtracts the tanh-and-scale
/// change-of-variables correction per dimension.
pub fn sample_action(head: &GaussianHead, noise: [f64; ACTION_DIM]) -> SampleInfo {
    let mut info = SampleInfo {
        action: [0.0; ACTION_DIM],
        log_prob: 0.0,
        noise,
        tanh_u: [0.0; ACTION_DIM],
        u_gate: [0.0; ACTION_DIM],
    };
    for d in 0..ACTION_DIM {
        let std = head.log_std[d].exp();
        let u = head.mean[d] + std * noise[d];
        let capped = u.clamp(-PRE_SQUASH_CAP, PRE_SQUASH_CAP);
        info.u_gate[d] = if u.abs() < PRE_SQUASH_CAP { 1.0 } else { 0.0 };
        let t = capped.tanh();
        info.tanh_u[d] = t;
        info.action[d] = ACCEL_LIMIT * t;
        info.log_prob += -0.5 * noise[d] * noise[d] - head.log_std[d] - HALF_LN_TWO_PI;
        info.log_prob -= ACCEL_LIMIT.ln() + log_one_minus_tanh_sq(capped);
    }
    info
}

/// Noise-free policy output: `ACCEL_LIMIT * tanh(mean)`.
pub fn deterministic_action(head: &GaussianHead) -> [f64; ACTION_DIM] {
    let mut a = [0.0; ACTION_DIM];
    for d in 0..ACTION_DIM {
        a[d] = ACCEL_LIMIT * head.mean[d].clamp(-PRE_SQUASH_CAP, PRE_SQUASH_CAP).tanh();
    }
    a
}

/// Log-density of an arbitrary in-box action under the head (inverse of the
/// squash). Used by density oracles rather than the training path.
pub fn log_prob_of_action(head: &GaussianHead, action: [f64; ACTION_DIM]) -> f64 {
    let mut logp = 0.0;
    for d in 0..ACTION_DIM {
        let t = (action[d] / ACCEL_LIMIT).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        let u = t.atanh();
        let std = head.log_std[d].exp();
        let z = (u - head.mean[d]) / std;
        logp += -0.5 * z * z - head.log_std[d] - HALF_LN_TWO_PI;
        logp -= ACCEL_LIMIT.ln() + log_one_minus_tanh_sq(u);
    }
    logp
}

/// Per-dimension derivatives of the sampled log-density and action with
/// respect to the head outputs, at a recorded sample.
///
/// With `u = mean + std * noise` and `T = tanh(u)`:
/// `d log_prob / d mean = 2 T`, `d log_prob / d log_std = -1 + 2 T std noise`,
/// `d action / d mean = L (1 - T^2)`, `d action / d log_std = L (1 - T^2) std noise`,
/// gated where the pre-squash cap clipped.
pub fn head_gradients(head: &GaussianHead, sample: &SampleInfo) -> HeadGrads {
    let mut g = HeadGrads {
        dlogp_dmean: [0.0; ACTION_DIM],
        dlogp_dlogstd: [0.0; ACTION_DIM],
        daction_dmean: [0.0; ACTION_DIM],
        daction_dlogstd: [0.0; ACTION_DIM],
    };
    for d in 0..ACTION_DIM {
        let std = head.log_std[d].exp();
        let t = sample.tanh_u[d];
        let gate = sample.u_gate[d];
        let du_dlogstd = std * sample.noise[d];
        let sech2 = 1.0 - t * t;
        g.dlogp_dmean[d] = 2.0 * t * gate;
        g.dlogp_dlogstd[d] = -1.0 + 2.0 * t * du_dlogstd * gate;
        g.daction_dmean[d] = ACCEL_LIMIT * sech2 * gate;
        g.daction_dlogstd[d] = ACCEL_LIMIT * sech2 * du_dlogstd * gate;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_relative_eq;
    use rand::RngExt;

    #[test]
    fn central_sample_is_zero() {
        let head = GaussianHead { mean: [0.0, 0.0], log_std: [0.0, 0.0] };
        let s = sample_action(&head, [0.0, 0.0]);
        assert_eq!(s.action, [0.0, 0.0]);
    }

    #[test]
    fn saturation_approaches_the_bound() {
        let head = GaussianHead { mean: [50.0, -50.0], log_std: [-3.0, -3.0] };
        let s = sample_action(&head, [0.0, 0.0]);
        assert!(s.action[0] > 2.999_999 && s.action[0] < 3.0);
        assert!(s.action[1] < -2.999_999 && s.action[1] > -3.0);
        assert!(s.log_prob.is_finite());
        let d = deterministic_action(&GaussianHead { mean: [10.0, -10.0], log_std: [0.0, 0.0] });
        assert_relative_eq!(d[0], 3.0, epsilon = 1e-6);
        assert_relative_eq!(d[1], -3.0, epsilon = 1e-6);
    }

    #[test]
    fn deterministic_equals_noise_free_sample() {
        let head = GaussianHead { mean: [0.4, -1.2], log_std: [0.3, -0.7] };
        let s = sample_action(&head, [0.0, 0.0]);
        assert_eq!(s.action, deterministic_action(&head));
    }

    #[test]
    fn log_std_clamp_and_gates() {
        let (head, gates) = head_from_output(&[0.1, 0.2, -25.0, 0.5]);
        assert_eq!(head.log_std[0], LOG_STD_MIN);
        assert_eq!(head.log_std[1], 0.5);
        assert_eq!(gates, [0.0, 1.0]);
    }

    #[test]
    fn density_integrates_to_one() {
        // Monte-Carlo estimate of the density integral over the action box.
        let head = GaussianHead { mean: [0.3, -0.2], log_std: [-0.3, 0.1] };
        let mut rng = derive_rng(2024, "mc-normalization");
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let a = [
                rng.random_range(-ACCEL_LIMIT..ACCEL_LIMIT),
                rng.random_range(-ACCEL_LIMIT..ACCEL_LIMIT),
            ];
            acc += log_prob_of_action(&head, a).exp();
        }
        let volume = (2.0 * ACCEL_LIMIT) * (2.0 * ACCEL_LIMIT);
        let integral = acc / n as f64 * volume;
        assert!(
            (0.98..=1.02).contains(&integral),
            "density integral {integral} outside [0.98, 1.02]"
        );
    }

    #[test]
    fn sampled_log_prob_matches_inverse_path() {
        let head = GaussianHead { mean: [0.5, -0.8], log_std: [-0.5, 0.2] };
        let mut rng = derive_rng(5, "sample-consistency");
        for _ in 0..200 {
            let noise = [
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            ];
            let s = sample_action(&head, noise);
            assert!(s.action.iter().all(|a| a.abs() < ACCEL_LIMIT));
            let via_inverse = log_prob_of_action(&head, s.action);
            assert_relative_eq!(s.log_prob, via_inverse, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn reparameterization_gradient_matches_finite_differences() {
        // d action / d mean = L (1 - tanh^2(u)) checked against central
        // differences, noise frozen.
        let noise = [0.7, -0.3];
        let base = GaussianHead { mean: [0.2, -0.4], log_std: [-0.2, 0.1] };
        let s = sample_action(&base, noise);
        let g = head_gradients(&base, &s);
        let h = 1e-6;
        for d in 0..ACTION_DIM {
            let mut up = base;
            up.mean[d] += h;
            let mut down = base;
            down.mean[d] -= h;
            let fd_a = (sample_action(&up, noise).action[d] - sample_action(&down, noise).action[d])
                / (2.0 * h);
            assert_relative_eq!(g.daction_dmean[d], fd_a, epsilon = 1e-6, max_relative = 1e-6);
            let fd_lp = (sample_action(&up, noise).log_prob - sample_action(&down, noise).log_prob)
                / (2.0 * h);
            assert_relative_eq!(g.dlogp_dmean[d], fd_lp, epsilon = 1e-6, max_relative = 1e-6);

            let mut up = base;
            up.log_std[d] += h;
            let mut down = base;
            down.log_std[d] -= h;
            let fd_a = (sample_action(&up, noise).action[d] - sample_action(&down, noise).action[d])
                / (2.0 * h);
            assert_relative_eq!(g.daction_dlogstd[d], fd_a, epsilon = 1e-6, max_relative = 1e-6);
            let fd_lp = (sample_action(&up, noise).log_prob - sample_action(&down, noise).log_prob)
                / (2.0 * h);
            assert_relative_eq!(g.dlogp_dlogstd[d], fd_lp, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn quadratic_pull_pushes_means_toward_zero() {
        // With alpha = 0 and Q(s, a) = -|a|^2, the policy-loss gradient
        // through the squash is 2 a * L (1 - tanh^2); its sign matches the
        // mean's, so descent moves means toward zero.
        for mean in [0.8, -1.3, 0.05] {
            let head = GaussianHead { mean: [mean, 0.0], log_std: [-0.4, -0.4] };
            let s = sample_action(&head, [0.0, 0.0]);
            let g = head_gradients(&head, &s);
            // dL/da for L = |a|^2 is 2a.
            let dl_dmean = 2.0 * s.action[0] * g.daction_dmean[0];
            assert_eq!(dl_dmean > 0.0, mean > 0.0);
        }
    }
}
