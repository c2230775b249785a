//! Two-vehicle longitudinal environment: both vehicles follow fixed routes
//! at 10 Hz under acceleration control, with oriented-rectangle collision
//! detection and the conflict-point termination rule.

use crate::geometry::{GeometryError, Point, Route, Scenario};
use crate::kinematics::{advance, ACCEL_LIMIT};
use crate::svo::{joint_optimal_svo, SvoAngle};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use thiserror::Error;

/// Vehicle contour, m.
pub const VEHICLE_LENGTH_M: f64 = 5.0;
pub const VEHICLE_WIDTH_M: f64 = 2.0;

/// Observation normalization scales: positions are offset by the
/// intersection point and divided by this, velocities and headings by theirs.
pub const POSITION_SCALE_M: f64 = 50.0;
pub const VELOCITY_SCALE_MPS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("acceleration {0} m/s^2 outside [-{ACCEL_LIMIT}, {ACCEL_LIMIT}]")]
    ActionOutOfBounds(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Kinematic state of one vehicle, pinned to its route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Point,
    pub arclength: f64,
    pub velocity: f64,
    pub heading: f64,
}

/// Joint state of the interaction pair at timestep `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub ego: VehicleState,
    pub other: VehicleState,
    pub t: usize,
}

/// Accelerations applied to both vehicles, m/s², each within the action range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub ego_accel: f64,
    pub other_accel: f64,
}

impl Action {
    pub fn new(ego_accel: f64, other_accel: f64) -> Result<Self, EnvError> {
        for a in [ego_accel, other_accel] {
            if !a.is_finite() || a.abs() > ACCEL_LIMIT + 1e-9 {
                return Err(EnvError::ActionOutOfBounds(a));
            }
        }
        Ok(Self { ego_accel, other_accel })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reached {
    None,
    Ego,
    Other,
    Both,
}

/// Result of one environment step. At most one terminal cause is flagged:
/// collision beats reaching beats truncation.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: JointState,
    pub collided: bool,
    pub reached: Reached,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationCause {
    Collision,
    ReachedEgo,
    ReachedOther,
    ReachedBoth,
    Truncated,
}

impl fmt::Display for TerminationCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TerminationCause::Collision => "collision",
            TerminationCause::ReachedEgo => "reached_ego",
            TerminationCause::ReachedOther => "reached_other",
            TerminationCause::ReachedBoth => "reached_both",
            TerminationCause::Truncated => "truncated",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TerminationCause {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "collision" => Ok(Self::Collision),
            "reached_ego" => Ok(Self::ReachedEgo),
            "reached_other" => Ok(Self::ReachedOther),
            "reached_both" => Ok(Self::ReachedBoth),
            "truncated" => Ok(Self::Truncated),
            other => Err(format!("unknown termination cause {other:?}")),
        }
    }
}

impl StepOutcome {
    pub fn cause(&self) -> Option<TerminationCause> {
        if self.collided {
            return Some(TerminationCause::Collision);
        }
        match self.reached {
            Reached::Ego => return Some(TerminationCause::ReachedEgo),
            Reached::Other => return Some(TerminationCause::ReachedOther),
            Reached::Both => return Some(TerminationCause::ReachedBoth),
            Reached::None => {}
        }
        if self.truncated {
            return Some(TerminationCause::Truncated);
        }
        None
    }

    pub fn done(&self) -> bool {
        self.cause().is_some()
    }
}

/// The environment for one scenario. Stepping is pure in the passed state, so
/// one instance may serve concurrent read-only rollouts of the same scenario.
pub struct Env<'s> {
    pub scenario: &'s Scenario,
    intersection: Point,
    conflict_ego: f64,
    conflict_other: f64,
    max_steps: usize,
}

impl<'s> Env<'s> {
    pub fn new(scenario: &'s Scenario) -> Result<Self, EnvError> {
        scenario
            .validate()
            .map_err(|e| EnvError::InvalidScenario(e.to_string()))?;
        Ok(Self {
            scenario,
            intersection: scenario.intersection_point()?,
            conflict_ego: scenario.ego_route.conflict()?,
            conflict_other: scenario.other_route.conflict()?,
            max_steps: 2 * scenario.l_gt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.scenario.dt
    }

    /// Episode step limit: twice the GT interaction duration.
    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn intersection(&self) -> Point {
        self.intersection
    }

    fn vehicle_at(route: &Route, arclength: f64, velocity: f64) -> VehicleState {
        VehicleState {
            position: route.position_at(arclength),
            arclength,
            velocity,
            heading: route.heading_at(arclength),
        }
    }

    /// Initial joint state straight from the scenario.
    pub fn reset(&self) -> JointState {
        let (se, ve) = self.scenario.initial_ego;
        let (so, vo) = self.scenario.initial_other;
        JointState {
            ego: Self::vehicle_at(&self.scenario.ego_route, se, ve),
            other: Self::vehicle_at(&self.scenario.other_route, so, vo),
            t: 0,
        }
    }

    /// Advance both vehicles one step under `action`.
    pub fn step(&self, state: &JointState, action: Action) -> Result<StepOutcome, EnvError> {
        // Constructed Actions are already validated; re-check for callers
        // that built the struct directly.
        let action = Action::new(action.ego_accel, action.other_accel)?;

        let dt = self.scenario.dt;
        let (ve, dse) = advance(state.ego.velocity, action.ego_accel, dt);
        let (vo, dso) = advance(state.other.velocity, action.other_accel, dt);
        let se = (state.ego.arclength + dse).min(self.scenario.ego_route.total_length);
        let so = (state.other.arclength + dso).min(self.scenario.other_route.total_length);

        let next = JointState {
            ego: Self::vehicle_at(&self.scenario.ego_route, se, ve),
            other: Self::vehicle_at(&self.scenario.other_route, so, vo),
            t: state.t + 1,
        };

        let collided = check_collision(&next);
        let reached = if collided {
            Reached::None
        } else {
            match (se >= self.conflict_ego, so >= self.conflict_other) {
                (true, true) => Reached::Both,
                (true, false) => Reached::Ego,
                (false, true) => Reached::Other,
                (false, false) => Reached::None,
            }
        };
        let truncated = !collided && reached == Reached::None && next.t >= self.max_steps;

        Ok(StepOutcome { next, collided, reached, truncated })
    }

    /// Normalized observation vector
    /// `[x, y, v, heading, x_other, y_other, v_other, heading_other]`.
    pub fn observe(&self, state: &JointState) -> [f64; 8] {
        let f = |v: &VehicleState| {
            [
                (v.position.x - self.intersection.x) / POSITION_SCALE_M,
                (v.position.y - self.intersection.y) / POSITION_SCALE_M,
                v.velocity / VELOCITY_SCALE_MPS,
                v.heading / std::f64::consts::PI,
            ]
        };
        let e = f(&state.ego);
        let o = f(&state.other);
        [e[0], e[1], e[2], e[3], o[0], o[1], o[2], o[3]]
    }

    /// Optimal orientations of both vehicles at `state`, from velocities and
    /// remaining distances to their own conflict points.
    pub fn joint_svo(&self, state: &JointState) -> (SvoAngle, SvoAngle) {
        joint_optimal_svo(
            state.ego.velocity,
            self.conflict_ego - state.ego.arclength,
            state.other.velocity,
            self.conflict_other - state.other.arclength,
        )
        .expect("environment velocities are non-negative")
    }
}

// ---------------------------------------------------------------------------
// Oriented-rectangle collision (separating axis test)
// ---------------------------------------------------------------------------

/// Margin of the separating-axis test over the four candidate axes:
/// the minimum over axes of (projected extent sum − projected center
/// distance). Non-negative means the rectangles overlap; the magnitude is a
/// proximity-to-tangency measure either way.
pub fn sat_margin(
    ca: Point,
    heading_a: f64,
    cb: Point,
    heading_b: f64,
    half_length: f64,
    half_width: f64,
) -> f64 {
    let (sa, ca_) = heading_a.sin_cos();
    let (sb, cb_) = heading_b.sin_cos();
    let axes = [(ca_, sa), (-sa, ca_), (cb_, sb), (-sb, cb_)];
    let (dx, dy) = (cb.x - ca.x, cb.y - ca.y);
    let mut margin = f64::INFINITY;
    for (ux, uy) in axes {
        let ra = half_length * (ux * ca_ + uy * sa).abs() + half_width * (-ux * sa + uy * ca_).abs();
        let rb = half_length * (ux * cb_ + uy * sb).abs() + half_width * (-ux * sb + uy * cb_).abs();
        let dist = (dx * ux + dy * uy).abs();
        margin = margin.min(ra + rb - dist);
    }
    margin
}

/// True iff the two vehicles' oriented rectangles
/// ([`VEHICLE_LENGTH_M`] × [`VEHICLE_WIDTH_M`]) overlap.
pub fn check_collision(state: &JointState) -> bool {
    sat_margin(
        state.ego.position,
        state.ego.heading,
        state.other.position,
        state.other.heading,
        VEHICLE_LENGTH_M / 2.0,
        VEHICLE_WIDTH_M / 2.0,
    ) >= 0.0
}

// ---------------------------------------------------------------------------
// Trajectory log
// ---------------------------------------------------------------------------

/// One per-step record of a rollout, as emitted to trajectory logs: raw
/// states, the applied action, the ego orientation at the next state, and the
/// reward breakdown of the transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub s_ego: f64,
    pub v_ego: f64,
    pub a_ego: f64,
    pub s_other: f64,
    pub v_other: f64,
    pub a_other: f64,
    pub phi_ego: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub reward: f64,
}

pub const TRAJECTORY_HEADER: &str =
    "t,s_ego,v_ego,a_ego,s_other,v_other,a_other,phi_ego,r1,r2,r3,r4,reward";

/// Write rows as delimiter-separated text. The final row of a finished
/// rollout carries the terminal state with NaN action/reward fields, written
/// as empty cells.
pub fn write_trajectory_log<W: Write>(mut w: W, rows: &[TrajectoryRow]) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    let cell = |v: f64| {
        if v.is_nan() {
            String::new()
        } else {
            format!("{v}")
        }
    };
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            cell(r.s_ego),
            cell(r.v_ego),
            cell(r.a_ego),
            cell(r.s_other),
            cell(r.v_other),
            cell(r.a_other),
            cell(r.phi_ego),
            cell(r.r1),
            cell(r.r2),
            cell(r.r3),
            cell(r.r4),
            cell(r.reward),
        )?;
    }
    Ok(())
}

/// Parse a trajectory log written by [`write_trajectory_log`]; empty cells
/// come back as NaN.
pub fn read_trajectory_log(path: &std::path::Path) -> std::io::Result<Vec<TrajectoryRow>> {
    let text = std::fs::read_to_string(path)?;
    let bad = |m: String| std::io::Error::new(std::io::ErrorKind::InvalidData, m);
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != TRAJECTORY_HEADER {
                return Err(bad(format!("unexpected trajectory header {line:?}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(bad(format!("line {}: expected 13 fields", i + 1)));
        }
        let f = |s: &str| -> Result<f64, std::io::Error> {
            if s.is_empty() {
                Ok(f64::NAN)
            } else {
                s.parse().map_err(|e| bad(format!("line {}: {e}", i + 1)))
            }
        };
        rows.push(TrajectoryRow {
            t: fields[0].parse().map_err(|e| bad(format!("line {}: {e}", i + 1)))?,
            s_ego: f(fields[1])?,
            v_ego: f(fields[2])?,
            a_ego: f(fields[3])?,
            s_other: f(fields[4])?,
            v_other: f(fields[5])?,
            a_other: f(fields[6])?,
            phi_ego: f(fields[7])?,
            r1: f(fields[8])?,
            r2: f(fields[9])?,
            r3: f(fields[10])?,
            r4: f(fields[11])?,
            reward: f(fields[12])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{synth_scenario, ScenarioId, SynthSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario() -> Scenario {
        let spec = SynthSpec::perpendicular_crossing(ScenarioId::new(0, 1, 2), 20.0, 5.0, 26.0, 5.0);
        synth_scenario(&spec, 0).unwrap()
    }

    #[test]
    fn reset_copies_initial_state() {
        let s = scenario();
        let env = Env::new(&s).unwrap();
        let st = env.reset();
        assert_eq!(st.t, 0);
        assert_eq!(st.ego.arclength, 0.0);
        assert_eq!(st.ego.velocity, 5.0);
        assert_eq!(st.other.velocity, 5.0);
        assert_eq!(env.reset(), st);
    }

    #[test]
    fn reset_rejects_state_beyond_conflict() {
        let mut s = scenario();
        s.initial_ego.0 = s.ego_route.conflict().unwrap() + 1.0;
        assert!(matches!(Env::new(&s), Err(EnvError::InvalidScenario(_))));
    }

    #[test]
    fn step_kinematics_match_closed_form() {
        let s = scenario();
        let env = Env::new(&s).unwrap();
        let st = env.reset();
        let out = env
            .step(&st, Action::new(1.0, 0.0).unwrap())
            .unwrap();
        assert_relative_eq!(out.next.ego.velocity, 5.1, epsilon = 1e-12);
        assert_relative_eq!(out.next.ego.arclength, 0.505, epsilon = 1e-12);
        assert_relative_eq!(out.next.other.arclength, 0.5, epsilon = 1e-12);
        assert_eq!(out.next.t, 1);
        assert!(!out.done());
    }

    #[test]
    fn reaching_the_conflict_point_terminates() {
        let s = scenario();
        let env = Env::new(&s).unwrap();
        let conflict = s.ego_route.conflict().unwrap();
        // Place the ego 0.4 m short of its conflict point at 5 m/s.
        let st = JointState {
            ego: Env::vehicle_at(&s.ego_route, conflict - 0.4, 5.0),
            other: Env::vehicle_at(&s.other_route, 0.0, 5.0),
            t: 3,
        };
        let out = env.step(&st, Action::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(out.reached, Reached::Ego);
        assert_eq!(out.cause(), Some(TerminationCause::ReachedEgo));
    }

    #[test]
    fn action_bounds_enforced() {
        assert!(Action::new(3.2, 0.0).is_err());
        assert!(Action::new(0.0, -3.2).is_err());
        assert!(Action::new(f64::NAN, 0.0).is_err());
        assert!(Action::new(3.0, -3.0).is_ok());
    }

    #[test]
    fn truncation_at_twice_gt_length() {
        let s = scenario();
        let env = Env::new(&s).unwrap();
        let mut st = env.reset();
        // Hold both vehicles still: the episode must truncate at 2 * l_gt.
        st.ego.velocity = 0.0;
        st.other.velocity = 0.0;
        let mut steps = 0;
        loop {
            let out = env.step(&st, Action::new(0.0, 0.0).unwrap()).unwrap();
            steps += 1;
            if out.done() {
                assert_eq!(out.cause(), Some(TerminationCause::Truncated));
                break;
            }
            st = out.next;
        }
        assert_eq!(steps, 2 * s.l_gt);
    }

    #[test]
    fn collision_examples() {
        let mk = |x: f64, heading: f64| VehicleState {
            position: Point::new(x, 0.0),
            arclength: 0.0,
            velocity: 0.0,
            heading,
        };
        // Identical poses fully overlap.
        let st = JointState { ego: mk(0.0, 0.3), other: mk(0.0, 0.3), t: 0 };
        assert!(check_collision(&st));
        // 10 m apart exceeds the rectangle diagonal for any headings.
        let st = JointState { ego: mk(0.0, 1.1), other: mk(10.0, 2.2), t: 0 };
        assert!(!check_collision(&st));
        // Perpendicular rectangles separate on the x axis at 2.5 + 1.0 = 3.5.
        let perp = |x: f64| JointState {
            ego: mk(0.0, 0.0),
            other: VehicleState {
                position: Point::new(x, 0.0),
                arclength: 0.0,
                velocity: 0.0,
                heading: std::f64::consts::FRAC_PI_2,
            },
            t: 0,
        };
        assert!(check_collision(&perp(3.4)));
        assert!(!check_collision(&perp(3.6)));
    }

    #[test]
    fn observation_matches_hand_computation() {
        let s = scenario();
        let env = Env::new(&s).unwrap();
        let st = env.reset();
        let obs = env.observe(&st);
        let ip = env.intersection();
        assert_relative_eq!(ip.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(ip.y, 0.0, epsilon = 1e-9);
        // Ego starts at (-20, 0) heading east at 5 m/s.
        assert_relative_eq!(obs[0], -20.0 / 50.0, epsilon = 1e-9);
        assert_relative_eq!(obs[1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(obs[2], 0.5, epsilon = 1e-12);
        assert_relative_eq!(obs[3], 0.0, epsilon = 1e-12);
        // Other starts at (0, -26) heading north at 5 m/s.
        assert_relative_eq!(obs[4], 0.0, epsilon = 1e-9);
        assert_relative_eq!(obs[5], -26.0 / 50.0, epsilon = 1e-9);
        assert_relative_eq!(obs[6], 0.5, epsilon = 1e-12);
        assert_relative_eq!(obs[7], 0.5, epsilon = 1e-9);
        // Purity.
        assert_eq!(env.observe(&st), obs);
    }

    proptest! {
        /// Velocities stay non-negative and arc-lengths non-decreasing under
        /// arbitrary in-range action sequences.
        #[test]
        fn velocity_nonnegative_arclength_monotone(
            accels in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..60)
        ) {
            let s = scenario();
            let env = Env::new(&s).unwrap();
            let mut st = env.reset();
            for (ae, ao) in accels {
                let out = env.step(&st, Action::new(ae, ao).unwrap()).unwrap();
                prop_assert!(out.next.ego.velocity >= 0.0);
                prop_assert!(out.next.other.velocity >= 0.0);
                prop_assert!(out.next.ego.arclength >= st.ego.arclength);
                prop_assert!(out.next.other.arclength >= st.other.arclength);
                if out.done() {
                    break;
                }
                st = out.next;
            }
        }

        /// The collision test is symmetric in the two vehicles.
        #[test]
        fn collision_symmetry(
            x in -8.0..8.0f64, y in -8.0..8.0f64,
            ha in 0.0..std::f64::consts::TAU, hb in 0.0..std::f64::consts::TAU,
        ) {
            let a = VehicleState { position: Point::new(0.0, 0.0), arclength: 0.0, velocity: 0.0, heading: ha };
            let b = VehicleState { position: Point::new(x, y), arclength: 0.0, velocity: 0.0, heading: hb };
            let ab = JointState { ego: a, other: b, t: 0 };
            let ba = JointState { ego: b, other: a, t: 0 };
            prop_assert_eq!(check_collision(&ab), check_collision(&ba));
        }
    }
}
