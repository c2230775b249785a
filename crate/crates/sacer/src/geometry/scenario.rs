//! Interaction scenarios: a pair of conflicting routes, initial states, and
//! the ground-truth (GT) trajectory data the reward terms compare against.

use super::route::{
    assign_conflict_points_with, symmetric_intersection, Point, Route, DEFAULT_MERGE_THRESHOLD_M,
};
use super::track::TrackRecord;
use super::GeometryError;
use crate::kinematics::advance;
use crate::svo;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// Ternary scenario identifier `(file_id, ego_id, other_id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScenarioId {
    pub file_id: i64,
    pub ego_id: i64,
    pub other_id: i64,
}

impl ScenarioId {
    pub fn new(file_id: i64, ego_id: i64, other_id: i64) -> Self {
        Self { file_id, ego_id, other_id }
    }

    /// Filename-safe form, e.g. `7_25_26`.
    pub fn slug(&self) -> String {
        format!("{}_{}_{}", self.file_id, self.ego_id, self.other_id)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.file_id, self.ego_id, self.other_id)
    }
}

/// Which vehicle reaches its conflict point first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrival {
    Ego,
    Other,
    Both,
    Neither,
}

impl fmt::Display for Arrival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Arrival::Ego => "ego",
            Arrival::Other => "other",
            Arrival::Both => "both",
            Arrival::Neither => "neither",
        };
        f.write_str(s)
    }
}

/// One of the two vehicles of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vehicle {
    Ego,
    Other,
}

/// A paired interaction case.
///
/// Ground-truth velocities cover timesteps `1..=l_gt`; the step-0 values live
/// in `initial_ego` / `initial_other` as `(arclength, velocity)`.
/// `gt_svo_sequence[k]` is the ego vehicle's optimal orientation at timestep
/// `k + 1`, computed on the reconstructed GT states (see [`Scenario::gt_states`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub id: ScenarioId,
    pub ego_route: Route,
    pub other_route: Route,
    pub initial_ego: (f64, f64),
    pub initial_other: (f64, f64),
    pub gt_ego_velocities: Vec<f64>,
    pub gt_other_velocities: Vec<f64>,
    pub gt_svo_sequence: Vec<f64>,
    pub l_gt: usize,
    pub dt: f64,
}

/// Reconstructed GT states of one vehicle: arc-lengths and velocities at
/// timesteps `0..=l_gt`.
#[derive(Debug, Clone)]
pub struct GtStates {
    pub arclengths: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let fail = |m: String| Err(GeometryError::InvalidScenario(m));
        if self.l_gt < 1 {
            return fail("l_gt must be at least 1".into());
        }
        if (self.dt - 0.1).abs() > 1e-12 {
            return fail(format!("dt must be 0.1 s, got {}", self.dt));
        }
        if self.gt_ego_velocities.len() != self.l_gt
            || self.gt_other_velocities.len() != self.l_gt
            || self.gt_svo_sequence.len() != self.l_gt
        {
            return fail("GT sequences must have length l_gt".into());
        }
        if self
            .gt_ego_velocities
            .iter()
            .chain(self.gt_other_velocities.iter())
            .any(|&v| v < 0.0)
            || self.initial_ego.1 < 0.0
            || self.initial_other.1 < 0.0
        {
            return fail("GT velocities must be non-negative".into());
        }
        if self
            .gt_svo_sequence
            .iter()
            .any(|&p| !(0.0..=std::f64::consts::FRAC_PI_2).contains(&p))
        {
            return fail("GT orientation outside [0, pi/2]".into());
        }
        let ce = self.ego_route.conflict()?;
        let co = self.other_route.conflict()?;
        if self.initial_ego.0 >= ce || self.initial_other.0 >= co {
            return fail("initial position already at or beyond the conflict point".into());
        }
        Ok(())
    }

    fn route(&self, v: Vehicle) -> &Route {
        match v {
            Vehicle::Ego => &self.ego_route,
            Vehicle::Other => &self.other_route,
        }
    }

    fn initial(&self, v: Vehicle) -> (f64, f64) {
        match v {
            Vehicle::Ego => self.initial_ego,
            Vehicle::Other => self.initial_other,
        }
    }

    /// Stored GT velocity at timestep `t` (0 = initial).
    pub fn gt_velocity(&self, v: Vehicle, t: usize) -> f64 {
        if t == 0 {
            return self.initial(v).1;
        }
        match v {
            Vehicle::Ego => self.gt_ego_velocities[t - 1],
            Vehicle::Other => self.gt_other_velocities[t - 1],
        }
    }

    /// Finite-difference GT accelerations for timesteps `0..l_gt`, from the
    /// stored velocities. Not clamped; see [`Scenario::bc_labels`] for the
    /// clamped supervision labels.
    pub fn gt_accels(&self, v: Vehicle) -> Vec<f64> {
        (0..self.l_gt)
            .map(|t| (self.gt_velocity(v, t + 1) - self.gt_velocity(v, t)) / self.dt)
            .collect()
    }

    /// Behavior-cloning acceleration labels, clamped to the action range.
    pub fn bc_labels(&self, v: Vehicle) -> Vec<f64> {
        self.gt_accels(v)
            .into_iter()
            .map(|a| a.clamp(-crate::kinematics::ACCEL_LIMIT, crate::kinematics::ACCEL_LIMIT))
            .collect()
    }

    /// Reconstruct the GT states by integrating the finite-difference
    /// accelerations with the environment kinematics. Every consumer of GT
    /// trajectories goes through this one reconstruction so they all see
    /// bit-identical states.
    pub fn gt_states(&self, v: Vehicle) -> GtStates {
        let route = self.route(v);
        let (s0, v0) = self.initial(v);
        let accels = self.gt_accels(v);
        let mut arclengths = vec![s0];
        let mut velocities = vec![v0];
        for &a in &accels {
            let (vn, ds) = advance(*velocities.last().unwrap(), a, self.dt);
            velocities.push(vn);
            arclengths.push((arclengths.last().unwrap() + ds).min(route.total_length));
        }
        GtStates { arclengths, velocities }
    }

    /// GT ego orientation at timestep `t_next` (1-based); `None` once the GT
    /// trajectory has run out.
    pub fn gt_svo_at(&self, t_next: usize) -> Option<f64> {
        if t_next >= 1 && t_next <= self.l_gt {
            Some(self.gt_svo_sequence[t_next - 1])
        } else {
            None
        }
    }

    /// Stored GT velocities at timestep `t_next` for both vehicles, `None`
    /// once the GT trajectory has run out.
    pub fn gt_velocities_at(&self, t_next: usize) -> Option<(f64, f64)> {
        if t_next >= 1 && t_next <= self.l_gt {
            Some((
                self.gt_ego_velocities[t_next - 1],
                self.gt_other_velocities[t_next - 1],
            ))
        } else {
            None
        }
    }

    /// First timestep at which a vehicle's GT arc-length reaches its conflict
    /// point, if any within the GT horizon.
    fn gt_crossing_step(&self, v: Vehicle) -> Option<usize> {
        let conflict = self.route(v).conflict().ok()?;
        self.gt_states(v)
            .arclengths
            .iter()
            .position(|&s| s >= conflict)
    }

    /// Which vehicle the dataset shows arriving at its conflict point first.
    pub fn gt_first_arriver(&self) -> Arrival {
        match (self.gt_crossing_step(Vehicle::Ego), self.gt_crossing_step(Vehicle::Other)) {
            (Some(a), Some(b)) if a == b => Arrival::Both,
            (Some(a), Some(b)) => {
                if a < b {
                    Arrival::Ego
                } else {
                    Arrival::Other
                }
            }
            (Some(_), None) => Arrival::Ego,
            (None, Some(_)) => Arrival::Other,
            (None, None) => Arrival::Neither,
        }
    }

    /// Shared intersection point of the two routes; the environment uses it
    /// as the origin for observation normalization.
    pub fn intersection_point(&self) -> Result<Point, GeometryError> {
        symmetric_intersection(&self.ego_route, &self.other_route, DEFAULT_MERGE_THRESHOLD_M)
    }
}

/// Build a scenario from routes with assigned conflict points, initial
/// states, and candidate GT velocity sequences (timesteps `1..`). The GT
/// horizon `l_gt` is the first reconstructed step at which either vehicle
/// reaches its conflict point; sequences are truncated there and the ego SVO
/// sequence is derived from the reconstructed states.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_scenario(
    id: ScenarioId,
    ego_route: Route,
    other_route: Route,
    initial_ego: (f64, f64),
    initial_other: (f64, f64),
    ego_velocities: &[f64],
    other_velocities: &[f64],
    dt: f64,
) -> Result<Scenario, GeometryError> {
    let n = ego_velocities.len().min(other_velocities.len());
    let mut scenario = Scenario {
        id,
        ego_route,
        other_route,
        initial_ego,
        initial_other,
        gt_ego_velocities: ego_velocities[..n].to_vec(),
        gt_other_velocities: other_velocities[..n].to_vec(),
        gt_svo_sequence: vec![0.0; n],
        l_gt: n,
        dt,
    };
    let ce = scenario.ego_route.conflict()?;
    let co = scenario.other_route.conflict()?;
    if initial_ego.0 >= ce || initial_other.0 >= co {
        return Err(GeometryError::InvalidScenario(
            "initial position already at or beyond the conflict point".into(),
        ));
    }

    let ego = scenario.gt_states(Vehicle::Ego);
    let other = scenario.gt_states(Vehicle::Other);
    let l_gt = (1..=n)
        .find(|&t| ego.arclengths[t] >= ce || other.arclengths[t] >= co)
        .ok_or_else(|| {
            GeometryError::InvalidSpec(
                "neither vehicle reaches its conflict point within the GT horizon".into(),
            )
        })?;

    scenario.gt_ego_velocities.truncate(l_gt);
    scenario.gt_other_velocities.truncate(l_gt);
    scenario.l_gt = l_gt;
    scenario.gt_svo_sequence = (1..=l_gt)
        .map(|t| {
            let (phi, _) = svo::joint_optimal_svo(
                ego.velocities[t],
                ce - ego.arclengths[t],
                other.velocities[t],
                co - other.arclengths[t],
            )
            .expect("GT velocities are non-negative");
            phi.radians()
        })
        .collect();
    scenario.validate()?;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// Extraction from track records
// ---------------------------------------------------------------------------

/// Which maneuver pairs qualify as an interaction and how to sample GT data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingRules {
    /// Require the pair to contain exactly one left-turning vehicle (which
    /// then becomes the ego).
    pub require_left_turn_ego: bool,
    /// Minimum overlapping observation window, in timesteps.
    pub min_overlap_steps: usize,
    pub resample_step: f64,
    pub conflict_threshold: f64,
    pub merge_threshold: f64,
    pub dt: f64,
}

impl Default for PairingRules {
    fn default() -> Self {
        Self {
            require_left_turn_ego: false,
            min_overlap_steps: 10,
            resample_step: super::route::DEFAULT_RESAMPLE_STEP_M,
            conflict_threshold: super::route::DEFAULT_CONFLICT_THRESHOLD_M,
            merge_threshold: DEFAULT_MERGE_THRESHOLD_M,
            dt: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Maneuver {
    Left,
    Right,
    Straight,
}

struct TrackData {
    id: i64,
    route: Route,
    maneuver: Maneuver,
    times: Vec<i64>,
    speeds: Vec<f64>,
    positions: Vec<Point>,
}

fn linear_sample(times: &[i64], values: &[f64], t: f64) -> f64 {
    match times.binary_search_by(|probe| (*probe as f64).partial_cmp(&t).unwrap()) {
        Ok(i) => values[i],
        Err(0) => values[0],
        Err(i) if i >= times.len() => *values.last().unwrap(),
        Err(i) => {
            let (t0, t1) = (times[i - 1] as f64, times[i] as f64);
            let w = (t - t0) / (t1 - t0);
            values[i - 1] * (1.0 - w) + values[i] * w
        }
    }
}

/// Pair up interacting tracks and build one scenario per qualifying pair.
pub fn extract_scenarios(
    tracks: &[TrackRecord],
    file_id: i64,
    rules: &PairingRules,
) -> Result<Vec<Scenario>, GeometryError> {
    let mut grouped: BTreeMap<i64, Vec<&TrackRecord>> = BTreeMap::new();
    for r in tracks {
        grouped.entry(r.track_id).or_default().push(r);
    }

    let turn_threshold = 25f64.to_radians();
    let mut data: Vec<TrackData> = Vec::new();
    for (id, recs) in &grouped {
        let positions: Vec<Point> = recs.iter().map(|r| Point::new(r.x, r.y)).collect();
        let route = match super::route::build_route(&positions, rules.resample_step) {
            Ok(r) => r,
            Err(GeometryError::DegeneratePath) => continue,
            Err(e) => return Err(e),
        };
        let net = route.net_heading_change();
        let maneuver = if net > turn_threshold {
            Maneuver::Left
        } else if net < -turn_threshold {
            Maneuver::Right
        } else {
            Maneuver::Straight
        };
        data.push(TrackData {
            id: *id,
            route,
            maneuver,
            times: recs.iter().map(|r| r.timestamp_ms).collect(),
            speeds: recs.iter().map(|r| r.speed()).collect(),
            positions,
        });
    }

    let dt_ms = (rules.dt * 1000.0).round();
    let mut scenarios = Vec::new();
    for i in 0..data.len() {
        for j in (i + 1)..data.len() {
            if let Some(s) = try_pair(&data[i], &data[j], file_id, rules, dt_ms)? {
                scenarios.push(s);
            }
        }
    }
    if scenarios.is_empty() {
        return Err(GeometryError::NoPairsFound);
    }
    Ok(scenarios)
}

fn try_pair(
    a: &TrackData,
    b: &TrackData,
    file_id: i64,
    rules: &PairingRules,
    dt_ms: f64,
) -> Result<Option<Scenario>, GeometryError> {
    // Maneuver rule: with the flag on, exactly one left-turner is required.
    let (ego, other) = match (a.maneuver, b.maneuver) {
        (Maneuver::Left, Maneuver::Left) if rules.require_left_turn_ego => return Ok(None),
        (Maneuver::Left, _) => (a, b),
        (_, Maneuver::Left) => (b, a),
        _ if rules.require_left_turn_ego => return Ok(None),
        _ => (a, b),
    };

    // Overlapping observation window.
    let t0 = (*ego.times.first().unwrap()).max(*other.times.first().unwrap()) as f64;
    let te = (*ego.times.last().unwrap()).min(*other.times.last().unwrap()) as f64;
    let max_steps = ((te - t0) / dt_ms).floor() as usize;
    if max_steps < rules.min_overlap_steps {
        return Ok(None);
    }

    let (ego_route, other_route) = match assign_conflict_points_with(
        &ego.route,
        &other.route,
        rules.conflict_threshold,
        rules.merge_threshold,
    ) {
        Ok(pair) => pair,
        Err(GeometryError::NoInteraction { .. }) | Err(GeometryError::NoConflictPoint { .. }) => {
            return Ok(None)
        }
        Err(e) => return Err(e),
    };

    let sample_pos = |td: &TrackData, t: f64| -> Point {
        let xs: Vec<f64> = td.positions.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = td.positions.iter().map(|p| p.y).collect();
        Point::new(linear_sample(&td.times, &xs, t), linear_sample(&td.times, &ys, t))
    };
    let s0_ego = ego_route.project(sample_pos(ego, t0));
    let s0_other = other_route.project(sample_pos(other, t0));
    if s0_ego >= ego_route.conflict()? || s0_other >= other_route.conflict()? {
        return Ok(None); // interaction already under way at the common start
    }

    let v_at = |td: &TrackData, k: usize| linear_sample(&td.times, &td.speeds, t0 + k as f64 * dt_ms);
    let ego_v: Vec<f64> = (1..=max_steps).map(|k| v_at(ego, k).max(0.0)).collect();
    let other_v: Vec<f64> = (1..=max_steps).map(|k| v_at(other, k).max(0.0)).collect();

    match assemble_scenario(
        ScenarioId::new(file_id, ego.id, other.id),
        ego_route,
        other_route,
        (s0_ego, v_at(ego, 0).max(0.0)),
        (s0_other, v_at(other, 0).max(0.0)),
        &ego_v,
        &other_v,
        rules.dt,
    ) {
        Ok(s) => Ok(Some(s)),
        // The pair never completes the interaction inside the data window.
        Err(GeometryError::InvalidSpec(_)) | Err(GeometryError::InvalidScenario(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    format_version: u32,
    #[serde(flatten)]
    scenario: Scenario,
}

pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<(), GeometryError> {
    scenario.validate()?;
    let doc = ScenarioFile {
        format_version: SCENARIO_FORMAT_VERSION,
        scenario: scenario.clone(),
    };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, GeometryError> {
    let text = std::fs::read_to_string(path)?;
    let doc: ScenarioFile = serde_json::from_str(&text)?;
    if doc.format_version != SCENARIO_FORMAT_VERSION {
        return Err(GeometryError::UnsupportedFormatVersion(doc.format_version));
    }
    doc.scenario.validate()?;
    Ok(doc.scenario)
}

/// Load every `scenario_*.json` in a directory, sorted by filename.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>, GeometryError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("scenario_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| load_scenario(p)).collect()
}
