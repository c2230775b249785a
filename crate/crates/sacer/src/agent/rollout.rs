//! Episode rollouts: a controller drives both vehicles to termination while
//! the online reward terms are recorded; the episode-replay pass then
//! finalizes the stored transitions.

use super::transition::Transition;
use super::AgentError;
use crate::env::{Action, Env, TerminationCause, TrajectoryRow};
use crate::geometry::Scenario;
use crate::nn::{deterministic_action, head_from_output, sample_action, Mlp};
use crate::reward::{
    replay_recompute, safety_reward, svo_reward, PendingStep, RewardBreakdown, RewardWeights,
    SVO_ERROR_SCALE, SVO_MISSING_GT_PENALTY, VELOCITY_SUM_SCALE,
};
use ndarray::Array2;
use rand::RngExt;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_PI_2;

/// Which online imitation term the trainer uses: the SVO error (SACER-SVO)
/// or the velocity deviation from the dataset (SACER-V).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    Svo,
    Velocity,
}

/// Source of joint actions during a rollout.
pub trait Controller {
    fn act(&mut self, obs: &[f64; 8], t: usize) -> [f64; 2];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    Stochastic,
    Deterministic,
}

/// Drives both vehicles from a policy network, either sampling with
/// reparameterized noise or taking the squashed mean.
pub struct PolicyController<'a> {
    pub policy: &'a Mlp,
    pub mode: PolicyMode,
    pub rng: &'a mut ChaCha20Rng,
}

impl Controller for PolicyController<'_> {
    fn act(&mut self, obs: &[f64; 8], _t: usize) -> [f64; 2] {
        let x = Array2::from_shape_vec((1, 8), obs.to_vec()).unwrap();
        let out = self.policy.forward(&x).expect("policy input is 8-wide");
        let (head, _) = head_from_output(out.row(0).as_slice().unwrap());
        match self.mode {
            PolicyMode::Deterministic => deterministic_action(&head),
            PolicyMode::Stochastic => {
                let noise = [
                    self.rng.sample(StandardNormal),
                    self.rng.sample(StandardNormal),
                ];
                sample_action(&head, noise).action
            }
        }
    }
}

/// Replays a precomputed action sequence (zero action once exhausted).
pub struct ScriptedController {
    pub actions: Vec<[f64; 2]>,
}

impl Controller for ScriptedController {
    fn act(&mut self, _obs: &[f64; 8], t: usize) -> [f64; 2] {
        self.actions.get(t).copied().unwrap_or([0.0, 0.0])
    }
}

/// A finished episode: pending transitions (totals zero until
/// [`finalize_episode`]), the trajectory rows for logging, and the stats the
/// trainer and evaluator need.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub transitions: Vec<Transition>,
    pub rows: Vec<TrajectoryRow>,
    pub l_episode: usize,
    pub l_gt: usize,
    pub cause: TerminationCause,
    pub final_velocities: (f64, f64),
    pub final_arclengths: (f64, f64),
}

impl EpisodeRecord {
    /// Total finalized reward divided by the episode length.
    pub fn avg_step_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.total).sum::<f64>() / self.l_episode as f64
    }
}

/// SVO term of one transition, optionally averaging the two vehicles'
/// orientation errors. The other vehicle's optimum is the complement of the
/// ego's, so its GT value is the complement of the stored sequence.
fn svo_reward_term(
    scenario: &Scenario,
    t_next: usize,
    phi_ego: f64,
    phi_other: f64,
    both: bool,
) -> f64 {
    if !both {
        let phi = crate::svo::SvoAngle::new(phi_ego).expect("environment orientation in range");
        return svo_reward(phi, t_next, &scenario.gt_svo_sequence, scenario.l_gt);
    }
    match scenario.gt_svo_at(t_next) {
        None => SVO_MISSING_GT_PENALTY,
        Some(gt_ego) => {
            let gt_other = FRAC_PI_2 - gt_ego;
            let err = 0.5 * ((gt_ego - phi_ego).abs() + (gt_other - phi_other).abs());
            (err / SVO_ERROR_SCALE).min(1.0)
        }
    }
}

/// Velocity-deviation term of the SACER-V baseline: summed absolute
/// deviation of both vehicles from the dataset velocities at the next step,
/// normalized like the velocity scale and capped at 1; the flat penalty
/// applies once the GT trajectory has run out.
fn velocity_deviation_term(scenario: &Scenario, t_next: usize, v_ego: f64, v_other: f64) -> f64 {
    match scenario.gt_velocities_at(t_next) {
        None => SVO_MISSING_GT_PENALTY,
        Some((gt_ego, gt_other)) => {
            (((gt_ego - v_ego).abs() + (gt_other - v_other).abs()) / VELOCITY_SUM_SCALE).min(1.0)
        }
    }
}

/// Roll one episode to termination, storing the online reward components.
pub fn run_episode(
    controller: &mut dyn Controller,
    scenario: &Scenario,
    mode: RewardMode,
    svo_error_both: bool,
) -> Result<EpisodeRecord, AgentError> {
    let env = Env::new(scenario)?;
    let mut state = env.reset();
    let mut transitions = Vec::new();
    let mut rows = Vec::new();

    loop {
        let obs = env.observe(&state);
        let action = controller.act(&obs, state.t);
        let out = env.step(&state, Action::new(action[0], action[1])?)?;
        let next = &out.next;
        let t_next = next.t;

        let (phi_ego, phi_other) = env.joint_svo(next);
        let r1 = match mode {
            RewardMode::Svo => svo_reward_term(
                scenario,
                t_next,
                phi_ego.radians(),
                phi_other.radians(),
                svo_error_both,
            ),
            RewardMode::Velocity => {
                velocity_deviation_term(scenario, t_next, next.ego.velocity, next.other.velocity)
            }
        };
        let r4 = safety_reward(out.collided);
        let done = out.done();

        transitions.push(Transition {
            state: obs,
            action,
            r1,
            r4,
            total: 0.0,
            next_state: env.observe(next),
            done,
            truncated: out.truncated,
            step: state.t,
            v_next: next.ego.velocity,
            v_other_next: next.other.velocity,
        });
        rows.push(TrajectoryRow {
            t: state.t,
            s_ego: state.ego.arclength,
            v_ego: state.ego.velocity,
            a_ego: action[0],
            s_other: state.other.arclength,
            v_other: state.other.velocity,
            a_other: action[1],
            phi_ego: phi_ego.radians(),
            r1,
            r2: f64::NAN,
            r3: f64::NAN,
            r4,
            reward: f64::NAN,
        });

        if done {
            // Closing row carrying the terminal state only.
            rows.push(TrajectoryRow {
                t: t_next,
                s_ego: next.ego.arclength,
                v_ego: next.ego.velocity,
                a_ego: f64::NAN,
                s_other: next.other.arclength,
                v_other: next.other.velocity,
                a_other: f64::NAN,
                phi_ego: f64::NAN,
                r1: f64::NAN,
                r2: f64::NAN,
                r3: f64::NAN,
                r4: f64::NAN,
                reward: f64::NAN,
            });
            return Ok(EpisodeRecord {
                l_episode: transitions.len(),
                l_gt: scenario.l_gt,
                transitions,
                rows,
                cause: out.cause().expect("done implies a cause"),
                final_velocities: (next.ego.velocity, next.other.velocity),
                final_arclengths: (next.ego.arclength, next.other.arclength),
            });
        }
        state = out.next;
    }
}

/// Episode-replay finalization: recompute the episode-level terms for every
/// stored step with the now-known episode length and write the recombined
/// totals back into the transitions and log rows.
pub fn finalize_episode(
    record: &mut EpisodeRecord,
    weights: &RewardWeights,
) -> Result<Vec<RewardBreakdown>, AgentError> {
    let pending: Vec<PendingStep> = record
        .transitions
        .iter()
        .map(|t| PendingStep {
            r1: t.r1,
            r4: t.r4,
            v_next: t.v_next,
            v_other_next: t.v_other_next,
        })
        .collect();
    let breakdowns = replay_recompute(&pending, record.l_episode, record.l_gt, weights)?;
    for (t, b) in record.transitions.iter_mut().zip(&breakdowns) {
        t.total = b.total;
    }
    for (row, b) in record.rows.iter_mut().zip(&breakdowns) {
        row.r2 = b.r2;
        row.r3 = b.r3;
        row.reward = b.total;
    }
    Ok(breakdowns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ensemble::Ensemble;
    use crate::geometry::{desk_scenario_specs, synth_scenario, Vehicle};
    use crate::rng::derive_rng;

    fn desk(i: usize) -> Scenario {
        synth_scenario(&desk_scenario_specs()[i], 0).unwrap()
    }

    #[test]
    fn deterministic_rollouts_are_identical() {
        let scenario = desk(0);
        let mut rng = derive_rng(3, "rollout-det");
        let ens = Ensemble::new(16, -2.0, &mut rng);
        let run = |rng: &mut ChaCha20Rng| {
            let mut ctrl =
                PolicyController { policy: &ens.policy, mode: PolicyMode::Deterministic, rng };
            run_episode(&mut ctrl, &scenario, RewardMode::Svo, false).unwrap()
        };
        let mut r1 = derive_rng(10, "a");
        let mut r2 = derive_rng(99, "b");
        let (a, b) = (run(&mut r1), run(&mut r2));
        assert_eq!(a.transitions, b.transitions);
        assert_eq!(a.l_episode, b.l_episode);
        assert_eq!(a.cause, b.cause);
    }

    #[test]
    fn episode_respects_the_step_cap() {
        let scenario = desk(0);
        // Full braking everywhere: both vehicles stop, the episode truncates.
        let mut ctrl = ScriptedController { actions: vec![[-3.0, -3.0]; 4 * scenario.l_gt] };
        let rec = run_episode(&mut ctrl, &scenario, RewardMode::Svo, false).unwrap();
        assert_eq!(rec.cause, TerminationCause::Truncated);
        assert_eq!(rec.l_episode, 2 * scenario.l_gt);
        assert!(rec.transitions.last().unwrap().done);
        assert!(rec.transitions.last().unwrap().truncated);
        assert!(rec.transitions[..rec.l_episode - 1].iter().all(|t| !t.done));
    }

    #[test]
    fn gt_replay_is_a_zero_reward_fixpoint() {
        let scenario = desk(0);
        let ego = scenario.gt_accels(Vehicle::Ego);
        let other = scenario.gt_accels(Vehicle::Other);
        let actions: Vec<[f64; 2]> = ego.iter().zip(&other).map(|(&a, &b)| [a, b]).collect();
        let mut ctrl = ScriptedController { actions };
        let mut rec = run_episode(&mut ctrl, &scenario, RewardMode::Svo, false).unwrap();
        assert_eq!(rec.l_episode, scenario.l_gt);
        assert!(matches!(
            rec.cause,
            TerminationCause::ReachedEgo | TerminationCause::ReachedOther | TerminationCause::ReachedBoth
        ));
        finalize_episode(&mut rec, &RewardWeights::default()).unwrap();
        for t in &rec.transitions {
            assert_eq!(t.r1, 0.0);
            assert_eq!(t.r4, 0.0);
            assert_eq!(t.total, 0.0);
        }
        assert_eq!(rec.avg_step_reward(), 0.0);
    }

    #[test]
    fn velocity_mode_scores_gt_replay_zero_too() {
        let scenario = desk(1);
        let ego = scenario.gt_accels(Vehicle::Ego);
        let other = scenario.gt_accels(Vehicle::Other);
        let actions: Vec<[f64; 2]> = ego.iter().zip(&other).map(|(&a, &b)| [a, b]).collect();
        let mut ctrl = ScriptedController { actions };
        let mut rec = run_episode(&mut ctrl, &scenario, RewardMode::Velocity, false).unwrap();
        finalize_episode(&mut rec, &RewardWeights::default()).unwrap();
        // Constant-speed GT: velocity deviations are pure float noise.
        for t in &rec.transitions {
            assert!(t.r1.abs() < 1e-9);
        }
    }

    #[test]
    fn svo_error_both_matches_ego_only_for_complementary_optima() {
        // The two vehicles' optimal orientations are complements, so the
        // averaged error equals the ego error and the flag cannot change r1.
        let scenario = desk(2);
        let run = |both: bool| {
            let mut ctrl = ScriptedController { actions: vec![[0.4, -0.2]; 200] };
            run_episode(&mut ctrl, &scenario, RewardMode::Svo, both).unwrap()
        };
        let (a, b) = (run(false), run(true));
        for (ta, tb) in a.transitions.iter().zip(&b.transitions) {
            approx::assert_relative_eq!(ta.r1, tb.r1, epsilon = 1e-12);
        }
    }

    #[test]
    fn collision_step_carries_the_penalty_and_done() {
        // Shallow-angle crossing with both vehicles racing: a collision is
        // reachable before either conflict point.
        let scenario = desk(4);
        let mut ctrl = ScriptedController { actions: vec![[3.0, 3.0]; 400] };
        let rec = run_episode(&mut ctrl, &scenario, RewardMode::Svo, false).unwrap();
        if rec.cause == TerminationCause::Collision {
            let last = rec.transitions.last().unwrap();
            assert_eq!(last.r4, -10.0);
            assert!(last.done);
            assert!(!last.truncated);
        } else {
            // Full-throttle must at least end by reaching, never truncate.
            assert_ne!(rec.cause, TerminationCause::Truncated);
        }
    }
}
