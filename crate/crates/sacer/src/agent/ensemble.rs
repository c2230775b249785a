//! The five-network ensemble (policy, twin Q, twin target Q) with the
//! entropy coefficient, and the three loss functions with exact gradients.
//!
//! Every loss takes its Gaussian noise explicitly, so the same computation
//! can be replayed for finite-difference checks with common random numbers.

use super::transition::Transition;
use super::AgentError;
use crate::nn::{
    head_from_output, head_gradients, sample_action, ForwardCache, GaussianHead, Mlp, MlpGrads,
    NnError, SampleInfo, ACTION_DIM,
};
use ndarray::{s, Array2};
use rand_chacha::ChaCha20Rng;

pub const OBS_DIM: usize = 8;
pub const Q_INPUT_DIM: usize = OBS_DIM + ACTION_DIM;
/// Policy head output: per-dimension mean and log-std.
const POLICY_OUT_DIM: usize = 2 * ACTION_DIM;

/// Policy, twin Q-networks and their targets, plus the entropy coefficient
/// (kept in log space so it stays positive).
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub policy: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    pub target_q1: Mlp,
    pub target_q2: Mlp,
    pub log_alpha: f64,
    pub target_entropy: f64,
}

impl Ensemble {
    /// Fresh ensemble; target networks start equal to the online ones.
    pub fn new(hidden_width: usize, target_entropy: f64, rng: &mut ChaCha20Rng) -> Self {
        let policy = Mlp::new(&[OBS_DIM, hidden_width, hidden_width, POLICY_OUT_DIM], rng);
        let q1 = Mlp::new(&[Q_INPUT_DIM, hidden_width, hidden_width, 1], rng);
        let q2 = Mlp::new(&[Q_INPUT_DIM, hidden_width, hidden_width, 1], rng);
        Self {
            target_q1: q1.clone(),
            target_q2: q2.clone(),
            policy,
            q1,
            q2,
            log_alpha: 0.0,
            target_entropy,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// Head for a single observation.
    pub fn policy_head(&self, obs: &[f64; OBS_DIM]) -> Result<GaussianHead, NnError> {
        let x = Array2::from_shape_vec((1, OBS_DIM), obs.to_vec()).unwrap();
        let out = self.policy.forward(&x)?;
        let (head, _) = head_from_output(out.row(0).as_slice().unwrap());
        Ok(head)
    }
}

/// Mini-batch assembled from sampled transitions.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
    /// True where the Q target drops its bootstrap term.
    pub terminal: Vec<bool>,
}

impl Batch {
    /// `mask_bootstrap_on_done` drops the bootstrap on terminal transitions
    /// (collision or reaching); time-limit truncations always bootstrap.
    pub fn from_transitions<'a>(
        transitions: impl Iterator<Item = &'a Transition>,
        mask_bootstrap_on_done: bool,
    ) -> Self {
        let items: Vec<&Transition> = transitions.collect();
        let b = items.len();
        let mut states = Array2::zeros((b, OBS_DIM));
        let mut actions = Array2::zeros((b, ACTION_DIM));
        let mut next_states = Array2::zeros((b, OBS_DIM));
        let mut rewards = Vec::with_capacity(b);
        let mut terminal = Vec::with_capacity(b);
        for (i, t) in items.iter().enumerate() {
            for j in 0..OBS_DIM {
                states[[i, j]] = t.state[j];
                next_states[[i, j]] = t.next_state[j];
            }
            actions[[i, 0]] = t.action[0];
            actions[[i, 1]] = t.action[1];
            rewards.push(t.total);
            terminal.push(mask_bootstrap_on_done && t.done && !t.truncated);
        }
        Self { states, actions, rewards, next_states, terminal }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

fn concat_state_action(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    let b = states.nrows();
    let mut out = Array2::zeros((b, Q_INPUT_DIM));
    out.slice_mut(s![.., ..OBS_DIM]).assign(states);
    out.slice_mut(s![.., OBS_DIM..]).assign(actions);
    out
}

/// Reparameterized policy samples on a batch of states.
struct PolicySamples {
    heads: Vec<GaussianHead>,
    clamp_gates: Vec<[f64; ACTION_DIM]>,
    infos: Vec<SampleInfo>,
    actions: Array2<f64>,
    cache: ForwardCache,
}

fn sample_policy(
    policy: &Mlp,
    states: &Array2<f64>,
    noise: &[[f64; ACTION_DIM]],
) -> Result<PolicySamples, NnError> {
    debug_assert_eq!(states.nrows(), noise.len());
    let (out, cache) = policy.forward_cached(states)?;
    let b = states.nrows();
    let mut heads = Vec::with_capacity(b);
    let mut clamp_gates = Vec::with_capacity(b);
    let mut infos = Vec::with_capacity(b);
    let mut actions = Array2::zeros((b, ACTION_DIM));
    for i in 0..b {
        let (head, gates) = head_from_output(out.row(i).as_slice().unwrap());
        let info = sample_action(&head, noise[i]);
        actions[[i, 0]] = info.action[0];
        actions[[i, 1]] = info.action[1];
        heads.push(head);
        clamp_gates.push(gates);
        infos.push(info);
    }
    Ok(PolicySamples { heads, clamp_gates, infos, actions, cache })
}

/// Bootstrap target for one transition: `r + gamma (min_j Q_target_j - alpha
/// log pi)`, with the bootstrap dropped on terminal transitions.
pub fn q_target(
    reward: f64,
    terminal: bool,
    min_target_q: f64,
    alpha_log_prob: f64,
    gamma: f64,
) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * (min_target_q - alpha_log_prob)
    }
}

/// Targets for a batch: next actions sampled from the current policy with
/// `noise`, evaluated by the target networks.
pub fn q_targets(
    ens: &Ensemble,
    batch: &Batch,
    noise: &[[f64; ACTION_DIM]],
    gamma: f64,
) -> Result<Vec<f64>, NnError> {
    let ps = sample_policy(&ens.policy, &batch.next_states, noise)?;
    let qin = concat_state_action(&batch.next_states, &ps.actions);
    let t1 = ens.target_q1.forward(&qin)?;
    let t2 = ens.target_q2.forward(&qin)?;
    let alpha = ens.alpha();
    Ok((0..batch.len())
        .map(|i| {
            let min_q = t1[[i, 0]].min(t2[[i, 0]]);
            q_target(
                batch.rewards[i],
                batch.terminal[i],
                min_q,
                alpha * ps.infos[i].log_prob,
                gamma,
            )
        })
        .collect())
}

/// Mean of `0.5 (Q(s, a) - y)^2` over the batch for one Q-network, with the
/// targets treated as constants. Returns the loss and parameter gradients.
pub fn q_loss(
    q: &Mlp,
    batch: &Batch,
    targets: &[f64],
) -> Result<(f64, MlpGrads), AgentError> {
    let qin = concat_state_action(&batch.states, &batch.actions);
    let (out, cache) = q.forward_cached(&qin)?;
    let b = batch.len() as f64;
    let mut loss = 0.0;
    let mut grad_out = Array2::zeros((batch.len(), 1));
    for i in 0..batch.len() {
        let resid = out[[i, 0]] - targets[i];
        loss += 0.5 * resid * resid;
        grad_out[[i, 0]] = resid / b;
    }
    let (grads, _) = q.backward(&cache, &grad_out)?;
    Ok((loss / b, grads))
}

/// Forward-only evaluation of [`q_loss`] (finite-difference oracle path).
pub fn q_loss_value(q: &Mlp, batch: &Batch, targets: &[f64]) -> Result<f64, AgentError> {
    let qin = concat_state_action(&batch.states, &batch.actions);
    let out = q.forward(&qin)?;
    let b = batch.len() as f64;
    let mut loss = 0.0;
    for i in 0..batch.len() {
        let resid = out[[i, 0]] - targets[i];
        loss += 0.5 * resid * resid;
    }
    Ok(loss / b)
}

/// Mean of `alpha log pi(f(eps; s) | s) - min_j Q_j(s, f(eps; s))`. Gradients
/// flow through the log-density and through the Q inputs' action columns,
/// not through Q parameters. Also returns the per-sample log-densities for
/// the entropy-coefficient update.
pub fn policy_loss(
    ens: &Ensemble,
    states: &Array2<f64>,
    noise: &[[f64; ACTION_DIM]],
) -> Result<(f64, MlpGrads, Vec<f64>), AgentError> {
    let b = states.nrows();
    let ps = sample_policy(&ens.policy, states, noise)?;
    let qin = concat_state_action(states, &ps.actions);
    let (q1v, c1) = ens.q1.forward_cached(&qin)?;
    let (q2v, c2) = ens.q2.forward_cached(&qin)?;
    let alpha = ens.alpha();
    let bf = b as f64;

    let mut loss = 0.0;
    let mut g1 = Array2::zeros((b, 1));
    let mut g2 = Array2::zeros((b, 1));
    for i in 0..b {
        let (v1, v2) = (q1v[[i, 0]], q2v[[i, 0]]);
        let min_q = v1.min(v2);
        loss += alpha * ps.infos[i].log_prob - min_q;
        // d(-min Q)/dQ_j = -1 for the winning network.
        if v1 <= v2 {
            g1[[i, 0]] = -1.0 / bf;
        } else {
            g2[[i, 0]] = -1.0 / bf;
        }
    }
    loss /= bf;

    // Gradient w.r.t. the sampled actions through the winning Q inputs.
    let (_, gin1) = ens.q1.backward(&c1, &g1)?;
    let (_, gin2) = ens.q2.backward(&c2, &g2)?;

    // Assemble the gradient at the policy's 4-wide output.
    let mut grad_out = Array2::zeros((b, POLICY_OUT_DIM));
    for i in 0..b {
        let hg = head_gradients(&ps.heads[i], &ps.infos[i]);
        for d in 0..ACTION_DIM {
            let dl_da = gin1[[i, OBS_DIM + d]] + gin2[[i, OBS_DIM + d]];
            grad_out[[i, d]] =
                (alpha / bf) * hg.dlogp_dmean[d] + dl_da * hg.daction_dmean[d];
            grad_out[[i, ACTION_DIM + d]] = ps.clamp_gates[i][d]
                * ((alpha / bf) * hg.dlogp_dlogstd[d] + dl_da * hg.daction_dlogstd[d]);
        }
    }
    let (grads, _) = ens.policy.backward(&ps.cache, &grad_out)?;
    let logps = ps.infos.iter().map(|s| s.log_prob).collect();
    Ok((loss, grads, logps))
}

/// Forward-only evaluation of [`policy_loss`].
pub fn policy_loss_value(
    ens: &Ensemble,
    states: &Array2<f64>,
    noise: &[[f64; ACTION_DIM]],
) -> Result<f64, AgentError> {
    let ps = sample_policy(&ens.policy, states, noise)?;
    let qin = concat_state_action(states, &ps.actions);
    let q1v = ens.q1.forward(&qin)?;
    let q2v = ens.q2.forward(&qin)?;
    let alpha = ens.alpha();
    let mut loss = 0.0;
    for i in 0..states.nrows() {
        loss += alpha * ps.infos[i].log_prob - q1v[[i, 0]].min(q2v[[i, 0]]);
    }
    Ok(loss / states.nrows() as f64)
}

/// Entropy-coefficient loss `mean(-alpha (log pi + H0))` and its gradient in
/// log-alpha space. Stationary when the policy entropy equals the target.
pub fn alpha_loss(log_probs: &[f64], log_alpha: f64, target_entropy: f64) -> (f64, f64) {
    let alpha = log_alpha.exp();
    let mean_term = log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>()
        / log_probs.len() as f64;
    (-alpha * mean_term, -alpha * mean_term)
}

/// Exponential tracking of the online parameters:
/// `target <- (1 - tau) target + tau online`, elementwise.
pub fn soft_update(online: &Mlp, target: &mut Mlp, tau: f64) -> Result<(), NnError> {
    if online.dims() != target.dims() {
        return Err(NnError::ShapeMismatch("target network".into()));
    }
    for (tw, ow) in target.weights.iter_mut().zip(&online.weights) {
        tw.zip_mut_with(ow, |t, &o| *t = (1.0 - tau) * *t + tau * o);
    }
    for (tb, ob) in target.biases.iter_mut().zip(&online.biases) {
        tb.zip_mut_with(ob, |t, &o| *t = (1.0 - tau) * *t + tau * o);
    }
    Ok(())
}
