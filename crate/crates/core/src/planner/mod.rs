//! Layer-constrained planning in actuation space.
//!
//! A plan is a piecewise-linear tendon path. Every step moves only tendons
//! of a single layer, as many at once as there are working servos, and no
//! tendon by more than `step_max`. [`beamstep_plan`] searches over such steps
//! for a low travel / bending / switching cost; [`baseline_plan`] provides
//! the one-tendon-at-a-time reference policies.

mod baseline;
mod beam;
mod validate;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::actuation::{tendons_to_config_relaxed, LayerPartition, TendonVector};
use crate::error::{Error, Result};
use crate::kinematics::ArmGeometry;

pub use baseline::baseline_plan;
pub use beam::beamstep_plan;
pub use validate::{validate_trajectory, JointLimitExcursion, ValidationOptions, ValidationReport, Violation};

/// Residuals and increments at or below this magnitude count as zero.
pub const NEGLIGIBLE: f64 = 1e-12;

/// Subset of the three radial servos that are in working order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ServoSet(u8);

impl ServoSet {
    pub fn new(servos: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &s in servos {
            if !(1..=3).contains(&s) {
                return Err(Error::invalid(format!("servo {s} outside 1..=3")));
            }
            bits |= 1 << (s - 1);
        }
        if bits == 0 {
            return Err(Error::invalid("at least one servo must be available"));
        }
        Ok(ServoSet(bits))
    }

    /// Servos `1..=count`.
    pub fn first(count: usize) -> Result<Self> {
        if !(1..=3).contains(&count) {
            return Err(Error::invalid(format!("servo count {count} outside 1..=3")));
        }
        Ok(ServoSet((1u8 << count) - 1))
    }

    pub fn all() -> Self {
        ServoSet(0b111)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, servo: usize) -> bool {
        (1..=3).contains(&servo) && self.0 & (1 << (servo - 1)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=3).filter(move |s| self.contains(*s))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl Serialize for ServoSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ServoSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        ServoSet::new(&v).map_err(serde::de::Error::custom)
    }
}

impl FromStr for ServoSet {
    type Err = Error;

    /// Accepts `"1,3"`, `"13"` or `"1 3"`.
    fn from_str(s: &str) -> Result<Self> {
        let ids: Vec<usize> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '{' | '}'))
            .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| Error::invalid(format!("bad servo list {s:?}"))))
            .collect::<Result<_>>()?;
        ServoSet::new(&ids)
    }
}

/// Set of tendon indices `1..=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TendonSet(u16);

impl TendonSet {
    pub fn new(tendons: &[usize]) -> Result<Self> {
        let mut bits = 0u16;
        for &c in tendons {
            if !(1..=9).contains(&c) {
                return Err(Error::invalid(format!("tendon {c} outside 1..=9")));
            }
            bits |= 1 << (c - 1);
        }
        Ok(TendonSet(bits))
    }

    pub fn empty() -> Self {
        TendonSet(0)
    }

    pub fn insert(&mut self, c: usize) {
        self.0 |= 1 << (c - 1);
    }

    pub fn contains(&self, c: usize) -> bool {
        (1..=9).contains(&c) && self.0 & (1 << (c - 1)) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Tendons in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=9).filter(move |c| self.contains(*c))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// The single layer containing every member, if there is one.
    pub fn layer(&self) -> Option<usize> {
        let mut layers = self.iter().map(LayerPartition::layer_of);
        let first = layers.next()?;
        layers.all(|l| l == first).then_some(first)
    }
}

impl PartialOrd for TendonSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TendonSet {
    /// Lexicographic on the ascending member lists.
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl Serialize for TendonSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TendonSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        TendonSet::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Active tendon sets allowed in `layer` when `servos` are available: one
/// tendon per working servo, all inside the layer.
pub fn feasible_tendon_sets(servos: &ServoSet, layer: usize) -> Result<Vec<TendonSet>> {
    if !(1..=3).contains(&layer) {
        return Err(Error::invalid(format!("layer {layer} outside 1..=3")));
    }
    let [a, b, c] = LayerPartition::layer(layer);
    let sets: Vec<Vec<usize>> = match servos.len() {
        1 => vec![vec![a], vec![b], vec![c]],
        2 => vec![vec![a, b], vec![a, c], vec![b, c]],
        3 => vec![vec![a, b, c]],
        _ => return Err(Error::invalid("servo set must be nonempty")),
    };
    sets.iter().map(|s| TendonSet::new(s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Weight on the summed squared bend angles of every intermediate state.
    pub lambda_b: f64,
    /// Weight per active-set switch (including the first engagement).
    pub lambda_sw: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            lambda_b: 0.001,
            lambda_sw: 0.002,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanProblem {
    pub start: TendonVector,
    pub target: TendonVector,
    pub servos: ServoSet,
    /// Largest per-tendon change in one step, meters.
    pub step_max: f64,
    pub weights: CostWeights,
    pub beam_width: usize,
    /// Terminal tolerance on the infinity-norm residual, meters.
    pub tol: f64,
    /// Expansion budget (BeamStep) or step budget (baselines).
    pub max_steps: usize,
    pub geom: ArmGeometry,
}

impl PlanProblem {
    pub const DEFAULT_STEP_MAX: f64 = 0.005;
    pub const DEFAULT_TOL: f64 = 1e-4;
    pub const DEFAULT_BEAM_WIDTH: usize = 8;
    pub const DEFAULT_MAX_STEPS: usize = 10_000;

    /// Problem with the default step size, tolerance, weights and budgets.
    pub fn new(geom: ArmGeometry, start: TendonVector, target: TendonVector, servos: ServoSet) -> Self {
        PlanProblem {
            start,
            target,
            servos,
            step_max: Self::DEFAULT_STEP_MAX,
            weights: CostWeights::default(),
            beam_width: Self::DEFAULT_BEAM_WIDTH,
            tol: Self::DEFAULT_TOL,
            max_steps: Self::DEFAULT_MAX_STEPS,
            geom,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        if !self.start.is_finite() || !self.target.is_finite() {
            return Err(Error::invalid("start and target tendon vectors must be finite"));
        }
        if !(self.step_max > 0.0 && self.step_max.is_finite()) {
            return Err(Error::invalid(format!("step_max must be > 0, got {}", self.step_max)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.beam_width == 0 {
            return Err(Error::invalid("beam width must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be >= 1"));
        }
        if self.servos.is_empty() {
            return Err(Error::invalid("at least one servo must be available"));
        }
        let w = &self.weights;
        if !(w.lambda_b >= 0.0 && w.lambda_sw >= 0.0) {
            return Err(Error::invalid("cost weights must be >= 0"));
        }
        Ok(())
    }

    pub(crate) fn residual(&self, state: &TendonVector) -> TendonVector {
        self.target - *state
    }

    pub(crate) fn reached(&self, state: &TendonVector) -> bool {
        state.linf_distance(&self.target) <= self.tol
    }

    /// Squared norm of the bend angles implied by `state`.
    pub(crate) fn bending(&self, state: &TendonVector) -> Result<f64> {
        let q = tendons_to_config_relaxed(&self.geom, state)?;
        Ok(q.theta.iter().map(|t| t * t).sum())
    }
}

/// Planner settings shared by every problem in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub step_max: f64,
    pub tol: f64,
    pub beam_width: usize,
    pub lambda_b: f64,
    pub lambda_sw: f64,
    pub max_steps: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        let w = CostWeights::default();
        PlannerParams {
            step_max: PlanProblem::DEFAULT_STEP_MAX,
            tol: PlanProblem::DEFAULT_TOL,
            beam_width: PlanProblem::DEFAULT_BEAM_WIDTH,
            lambda_b: w.lambda_b,
            lambda_sw: w.lambda_sw,
            max_steps: PlanProblem::DEFAULT_MAX_STEPS,
        }
    }
}

impl PlannerParams {
    pub fn problem(&self, geom: &ArmGeometry, start: TendonVector, target: TendonVector, servos: ServoSet) -> PlanProblem {
        PlanProblem {
            start,
            target,
            servos,
            step_max: self.step_max,
            weights: CostWeights {
                lambda_b: self.lambda_b,
                lambda_sw: self.lambda_sw,
            },
            beam_width: self.beam_width,
            tol: self.tol,
            max_steps: self.max_steps,
            geom: geom.clone(),
        }
    }
}

pub(crate) fn clip(value: f64, limit: f64) -> f64 {
    value.clamp(-limit, limit)
}

/// Planning policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    BeamStep,
    Sequential,
    Reversed,
    Greedy,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::BeamStep, Method::Reversed, Method::Sequential, Method::Greedy];

    pub fn name(&self) -> &'static str {
        match self {
            Method::BeamStep => "beamstep",
            Method::Sequential => "sequential",
            Method::Reversed => "reversed",
            Method::Greedy => "greedy",
        }
    }

    pub fn is_baseline(&self) -> bool {
        !matches!(self, Method::BeamStep)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "beamstep" | "beam" => Ok(Method::BeamStep),
            "sequential" | "seq" => Ok(Method::Sequential),
            "reversed" | "rev" => Ok(Method::Reversed),
            "greedy" => Ok(Method::Greedy),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// Runs the planner selected by `method`.
pub fn plan(method: Method, problem: &PlanProblem) -> Result<ActuationTrajectory> {
    match method {
        Method::BeamStep => beamstep_plan(problem),
        m => baseline_plan(m, problem),
    }
}

/// One planning step: increments on the active set only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanStep {
    pub active_set: TendonSet,
    /// Dense increments, zero outside `active_set`.
    pub increments: TendonVector,
}

impl PlanStep {
    pub fn layer(&self) -> Option<usize> {
        self.active_set.layer()
    }

    /// Sum of absolute increments.
    pub fn travel(&self) -> f64 {
        self.active_set.iter().map(|c| self.increments.tendon(c).abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuationTrajectory {
    pub method: Method,
    pub start: TendonVector,
    pub steps: Vec<PlanStep>,
}

impl ActuationTrajectory {
    pub fn empty(method: Method, start: TendonVector) -> Self {
        ActuationTrajectory {
            method,
            start,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `l^0 .. l^K`.
    pub fn states(&self) -> Vec<TendonVector> {
        let mut states = Vec::with_capacity(self.steps.len() + 1);
        let mut state = self.start;
        states.push(state);
        for step in &self.steps {
            state = state + step.increments;
            states.push(state);
        }
        states
    }

    pub fn terminal(&self) -> TendonVector {
        self.steps.iter().fold(self.start, |s, step| s + step.increments)
    }

    /// Summed increments per tendon.
    pub fn net_displacement(&self) -> TendonVector {
        self.steps
            .iter()
            .fold(TendonVector::zeros(), |acc, step| acc + step.increments)
    }

    /// Active-set changes counted as switches, plus one for the first engagement.
    pub fn switch_count(&self) -> usize {
        count_changes(self.steps.iter().map(|s| s.active_set))
    }

    /// Layer changes, plus one for the first engagement.
    pub fn layer_switch_count(&self) -> usize {
        count_changes(self.steps.iter().map(|s| s.layer()))
    }
}

fn count_changes<T: PartialEq>(items: impl Iterator<Item = T>) -> usize {
    let mut prev: Option<T> = None;
    let mut count = 0;
    for item in items {
        if prev.as_ref() != Some(&item) {
            count += 1;
        }
        prev = Some(item);
    }
    count
}

pub const TRAJECTORY_SCHEMA: &str = "tdma-trajectory/1";

#[derive(Serialize, Deserialize)]
struct StepRecord {
    active_set: TendonSet,
    /// Sparse, keyed by 1-based tendon index.
    increments: BTreeMap<usize, f64>,
    state_after: TendonVector,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRecord {
    schema: String,
    method: Method,
    start: TendonVector,
    steps: Vec<StepRecord>,
}

impl Serialize for ActuationTrajectory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let states = self.states();
        TrajectoryRecord {
            schema: TRAJECTORY_SCHEMA.to_string(),
            method: self.method,
            start: self.start,
            steps: self
                .steps
                .iter()
                .zip(&states[1..])
                .map(|(step, state)| StepRecord {
                    active_set: step.active_set,
                    increments: step.active_set.iter().map(|c| (c, step.increments.tendon(c))).collect(),
                    state_after: *state,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ActuationTrajectory {
    /// Rejects increments outside the active set and `state_after` values
    /// that disagree with the accumulated increments.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = TrajectoryRecord::deserialize(deserializer)?;
        let mut traj = ActuationTrajectory::empty(rec.method, rec.start);
        let mut state = rec.start;
        for (k, step) in rec.steps.into_iter().enumerate() {
            let mut increments = TendonVector::zeros();
            for (&c, &v) in &step.increments {
                if !step.active_set.contains(c) {
                    return Err(D::Error::custom(format!("step {}: increment on tendon {c} outside active set", k + 1)));
                }
                increments.set_tendon(c, v);
            }
            state = state + increments;
            if state.linf_distance(&step.state_after) > 1e-12 {
                return Err(D::Error::custom(format!("step {}: state_after disagrees with increments", k + 1)));
            }
            traj.steps.push(PlanStep {
                active_set: step.active_set,
                increments,
            });
        }
        Ok(traj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub travel: f64,
    /// Summed squared bend norm over `l^1 .. l^K` (unweighted).
    pub bending: f64,
    pub switches: usize,
    pub layer_switches: usize,
    pub total: f64,
}

/// Travel + weighted bending energy + weighted switch count of a trajectory.
pub fn trajectory_cost(problem: &PlanProblem, traj: &ActuationTrajectory) -> Result<CostBreakdown> {
    let mut travel = 0.0;
    let mut bending = 0.0;
    let mut total = 0.0;
    let mut state = traj.start;
    let mut prev: Option<TendonSet> = None;
    for (k, step) in traj.steps.iter().enumerate() {
        for c in 1..=9 {
            if !step.active_set.contains(c) && step.increments.tendon(c) != 0.0 {
                return Err(Error::invalid(format!("step {} moves tendon {c} outside its active set", k + 1)));
            }
        }
        if !step.increments.is_finite() {
            return Err(Error::invalid(format!("step {} has non-finite increments", k + 1)));
        }
        state = state + step.increments;
        let step_travel = step.travel();
        let energy = problem
            .bending(&state)
            .map_err(|e| Error::invalid(format!("state after step {}: {e}", k + 1)))?;
        let switched = prev != Some(step.active_set);
        travel += step_travel;
        bending += energy;
        total += step_cost(step_travel, energy, switched, &problem.weights);
        prev = Some(step.active_set);
    }
    Ok(CostBreakdown {
        travel,
        bending,
        switches: traj.switch_count(),
        layer_switches: traj.layer_switch_count(),
        total,
    })
}

/// Incremental cost of one step; shared by the search and the evaluator so
/// both accumulate in the same order.
pub(crate) fn step_cost(travel: f64, bending: f64, switched: bool, weights: &CostWeights) -> f64 {
    let switch = if switched { weights.lambda_sw } else { 0.0 };
    travel + weights.lambda_b * bending + switch
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> TendonSet {
        TendonSet::new(v).unwrap()
    }

    #[test]
    fn feasible_sets_by_servo_count() {
        assert_eq!(feasible_tendon_sets(&ServoSet::all(), 2).unwrap(), vec![set(&[4, 5, 6])]);
        assert_eq!(
            feasible_tendon_sets(&ServoSet::first(1).unwrap(), 1).unwrap(),
            vec![set(&[1]), set(&[2]), set(&[3])]
        );
        assert_eq!(
            feasible_tendon_sets(&ServoSet::new(&[1, 3]).unwrap(), 3).unwrap(),
            vec![set(&[7, 8]), set(&[7, 9]), set(&[8, 9])]
        );
        assert!(feasible_tendon_sets(&ServoSet::all(), 4).is_err());
    }

    #[test]
    fn servo_set_parsing() {
        assert_eq!("1,3".parse::<ServoSet>().unwrap().to_vec(), vec![1, 3]);
        assert_eq!("123".parse::<ServoSet>().unwrap().len(), 3);
        assert!("4".parse::<ServoSet>().is_err());
        assert!("".parse::<ServoSet>().is_err());
    }

    #[test]
    fn tendon_set_order_and_layer() {
        assert!(set(&[1, 2]) < set(&[1, 3]));
        assert!(set(&[1, 3]) < set(&[2, 3]));
        assert_eq!(set(&[4, 6]).layer(), Some(2));
        assert_eq!(set(&[1, 4]).layer(), None);
        assert_eq!(TendonSet::empty().layer(), None);
    }

    fn problem() -> PlanProblem {
        PlanProblem::new(ArmGeometry::default(), TendonVector::zeros(), TendonVector::zeros(), ServoSet::all())
    }

    fn step(tendons: &[usize], incs: &[(usize, f64)]) -> PlanStep {
        let mut increments = TendonVector::zeros();
        for &(c, v) in incs {
            increments.set_tendon(c, v);
        }
        PlanStep {
            active_set: set(tendons),
            increments,
        }
    }

    #[test]
    fn empty_trajectory_costs_nothing() {
        let p = problem();
        let cost = trajectory_cost(&p, &ActuationTrajectory::empty(Method::BeamStep, p.start)).unwrap();
        assert_eq!(cost.total, 0.0);
        assert_eq!(cost.switches, 0);
    }

    #[test]
    fn pure_travel_cost() {
        let mut p = problem();
        p.weights = CostWeights {
            lambda_b: 0.0,
            lambda_sw: 0.0,
        };
        let traj = ActuationTrajectory {
            method: Method::BeamStep,
            start: p.start,
            steps: vec![step(&[1, 2, 3], &[(1, 0.001), (2, 0.001), (3, 0.001)])],
        };
        let cost = trajectory_cost(&p, &traj).unwrap();
        assert!((cost.total - 0.003).abs() < 1e-18);
    }

    #[test]
    fn switch_cost_counts_each_engagement() {
        let mut p = problem();
        p.weights = CostWeights {
            lambda_b: 0.0,
            lambda_sw: 0.01,
        };
        let traj = ActuationTrajectory {
            method: Method::BeamStep,
            start: p.start,
            steps: vec![
                step(&[1, 2, 3], &[(1, 0.001), (2, -0.002), (3, 0.001)]),
                step(&[4, 5, 6], &[(4, 0.003), (5, 0.0), (6, -0.001)]),
            ],
        };
        let cost = trajectory_cost(&p, &traj).unwrap();
        assert_eq!(cost.switches, 2);
        assert!((cost.total - (0.008 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn repeated_set_is_not_a_switch() {
        let traj = ActuationTrajectory {
            method: Method::BeamStep,
            start: TendonVector::zeros(),
            steps: vec![
                step(&[1], &[(1, 0.001)]),
                step(&[1], &[(1, 0.001)]),
                step(&[2], &[(2, 0.001)]),
                step(&[4], &[(4, 0.001)]),
            ],
        };
        assert_eq!(traj.switch_count(), 3);
        assert_eq!(traj.layer_switch_count(), 2);
    }

    #[test]
    fn cost_rejects_increment_outside_set() {
        let p = problem();
        let traj = ActuationTrajectory {
            method: Method::BeamStep,
            start: p.start,
            steps: vec![step(&[1], &[(2, 0.001)])],
        };
        assert!(matches!(trajectory_cost(&p, &traj), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("dijkstra".parse::<Method>().is_err());
    }

    #[test]
    fn trajectory_json_round_trip() {
        let mut target = TendonVector::zeros();
        target.set_tendon(2, 0.007);
        target.set_tendon(8, -0.003);
        let p = PlanProblem::new(ArmGeometry::default(), TendonVector::zeros(), target, ServoSet::first(2).unwrap());
        let traj = beamstep_plan(&p).unwrap();
        let text = serde_json::to_string(&traj).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], TRAJECTORY_SCHEMA);
        assert!(v["steps"][0]["state_after"].is_array());
        let back: ActuationTrajectory = serde_json::from_str(&text).unwrap();
        assert_eq!(back, traj);

        let mut v = v;
        v["steps"][0]["state_after"][0] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<ActuationTrajectory>(v).is_err());
    }
}
