//! Turns actuation trajectories into instructions for the time-division drive.
//!
//! The drive has nine axial positions. At each position the three radial
//! servos sit on three of the nine tendon plugs; [`AxialServoMap`] records
//! which tendon each (position, servo) pair reaches. Planning steps are
//! assigned to positions, consecutive steps at the same position are fused
//! into one hardware stage, and stage displacements become servo angles.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuation::{tendons_to_config_relaxed, LayerPartition, TendonVector};
use crate::error::{Error, Result};
use crate::kinematics::{ArmGeometry, JointConfig};
use crate::planner::{ActuationTrajectory, ServoSet, TendonSet};

pub const AXIAL_POSITIONS: usize = 9;

/// Table `F(a, s) = c` from axial position and servo to tendon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxialServoMap {
    /// `table[a - 1][s - 1]` is the tendon reached by servo `s` at position `a`.
    table: [[usize; 3]; AXIAL_POSITIONS],
}

impl Default for AxialServoMap {
    fn default() -> Self {
        AxialServoMap::canonical()
    }
}

impl AxialServoMap {
    /// Servos 120 degrees apart over nine 40-degree plugs, so simultaneous
    /// plugs differ by three; plugs are labelled into layers by `p mod 3`.
    pub fn canonical() -> Self {
        let mut table = [[0usize; 3]; AXIAL_POSITIONS];
        for a in 1..=AXIAL_POSITIONS {
            for s in 1..=3 {
                let plug = (a - 1 + 3 * (s - 1)) % 9 + 1;
                let layer = (plug - 1) % 3 + 1;
                let within = (plug - 1) / 3 + 1;
                table[a - 1][s - 1] = 3 * (layer - 1) + within;
            }
        }
        AxialServoMap { table }
    }

    pub fn from_table(table: [[usize; 3]; AXIAL_POSITIONS]) -> Result<Self> {
        let map = AxialServoMap { table };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let mut reached = TendonSet::empty();
        for (a, row) in self.table.iter().enumerate() {
            for &c in row {
                if !(1..=9).contains(&c) {
                    return Err(Error::invalid(format!("position {} maps to tendon {c}", a + 1)));
                }
                reached.insert(c);
            }
            if row[0] == row[1] || row[0] == row[2] || row[1] == row[2] {
                return Err(Error::invalid(format!("position {} reaches a tendon twice", a + 1)));
            }
        }
        if reached.len() != 9 {
            return Err(Error::invalid("map does not reach every tendon"));
        }
        Ok(())
    }

    pub fn tendon(&self, axial: usize, servo: usize) -> usize {
        self.table[axial - 1][servo - 1]
    }

    /// All `(a, s)` with `F(a, s) = c`.
    pub fn preimage(&self, tendon: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 1..=AXIAL_POSITIONS {
            for s in 1..=3 {
                if self.tendon(a, s) == tendon {
                    out.push((a, s));
                }
            }
        }
        out
    }

    /// Servo assignment realising `tendons` at position `axial`, if the
    /// available servos cover them.
    fn cover(&self, axial: usize, tendons: &TendonSet, servos: &ServoSet) -> Option<Vec<(usize, usize)>> {
        tendons
            .iter()
            .map(|c| servos.iter().find(|&s| self.tendon(axial, s) == c).map(|s| (c, s)))
            .collect()
    }
}

fn cyclic_distance(a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(AXIAL_POSITIONS - d)
}

/// Axial position and `(tendon, servo)` pairs chosen for one planning step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxialAssignment {
    pub axial: usize,
    pub pairs: Vec<(usize, usize)>,
}

/// Picks the position for `active_set`: the previous one if it still
/// covers the set, else the covering position nearest to it around the
/// ring (ties to the lower index).
pub fn assign_axial(
    map: &AxialServoMap,
    active_set: &TendonSet,
    previous: Option<usize>,
    servos: &ServoSet,
) -> Result<AxialAssignment> {
    if active_set.layer().is_none() || active_set.len() > servos.len() {
        return Err(Error::InfeasibleAssignment {
            tendons: active_set.to_vec(),
            servos: servos.to_vec(),
        });
    }
    if let Some(prev) = previous {
        if let Some(pairs) = map.cover(prev, active_set, servos) {
            return Ok(AxialAssignment { axial: prev, pairs });
        }
    }
    let mut best: Option<(usize, AxialAssignment)> = None;
    for a in 1..=AXIAL_POSITIONS {
        let Some(pairs) = map.cover(a, active_set, servos) else {
            continue;
        };
        let distance = previous.map_or(0, |p| cyclic_distance(a, p));
        if best.as_ref().is_none_or(|(d, _)| distance < *d) {
            best = Some((distance, AxialAssignment { axial: a, pairs }));
        }
    }
    best.map(|(_, assignment)| assignment).ok_or_else(|| Error::InfeasibleAssignment {
        tendons: active_set.to_vec(),
        servos: servos.to_vec(),
    })
}

/// A planning step bound to an axial position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledStep {
    pub axial: usize,
    pub pairs: Vec<(usize, usize)>,
    pub increments: TendonVector,
}

/// Assigns every step of `traj` in order, threading the previous position.
pub fn schedule_steps(map: &AxialServoMap, traj: &ActuationTrajectory, servos: &ServoSet) -> Result<Vec<ScheduledStep>> {
    let mut previous = None;
    let mut out = Vec::with_capacity(traj.steps.len());
    for step in &traj.steps {
        let assignment = assign_axial(map, &step.active_set, previous, servos)?;
        previous = Some(assignment.axial);
        out.push(ScheduledStep {
            axial: assignment.axial,
            pairs: assignment.pairs,
            increments: step.increments,
        });
    }
    Ok(out)
}

/// Net displacement commanded through one servo during a fused stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServoDisplacement {
    pub servo: usize,
    pub tendon: usize,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusedStage {
    pub axial: usize,
    /// Ordered by servo.
    pub displacements: Vec<ServoDisplacement>,
}

impl FusedStage {
    pub fn tendon_displacement(&self) -> TendonVector {
        let mut v = TendonVector::zeros();
        for d in &self.displacements {
            v.set_tendon(d.tendon, v.tendon(d.tendon) + d.displacement);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fusion {
    pub stages: Vec<FusedStage>,
    /// Stages whose every displacement fell below the tolerance.
    pub discarded: Vec<FusedStage>,
}

/// Merges maximal runs of consecutive steps at the same axial position.
///
/// Displacements are summed per servo; servos whose sum is exactly zero
/// drop out, and a stage is discarded when all its sums are below `tol`.
pub fn fuse_plan(stepwise: &[ScheduledStep], tol: f64) -> Fusion {
    let mut fusion = Fusion::default();
    let mut i = 0;
    while i < stepwise.len() {
        let axial = stepwise[i].axial;
        let mut sums: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        while i < stepwise.len() && stepwise[i].axial == axial {
            let step = &stepwise[i];
            for &(tendon, servo) in &step.pairs {
                let entry = sums.entry(servo).or_insert((tendon, 0.0));
                entry.1 += step.increments.tendon(tendon);
            }
            i += 1;
        }
        let displacements: Vec<ServoDisplacement> = sums
            .into_iter()
            .filter(|(_, (_, d))| *d != 0.0)
            .map(|(servo, (tendon, displacement))| ServoDisplacement {
                servo,
                tendon,
                displacement,
            })
            .collect();
        let stage = FusedStage { axial, displacements };
        if stage.displacements.iter().all(|d| d.displacement.abs() < tol) {
            fusion.discarded.push(stage);
        } else {
            fusion.stages.push(stage);
        }
    }
    fusion
}

/// Servo speed, switching overhead, transmission and switch slip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingModel {
    /// Servo speed limit, rad/s.
    pub omega: f64,
    /// Repositioning and clutch engagement time per stage, s.
    pub t_switch: f64,
    /// Servo radians per meter of tendon.
    pub gear_factor: f64,
    /// Tendon length disturbance per axial switch, m.
    pub slip: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            omega: 2.0,
            t_switch: 3.0,
            gear_factor: 1250.0,
            slip: 0.0,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid("servo speed must be > 0"));
        }
        if !(self.t_switch >= 0.0 && self.t_switch.is_finite()) {
            return Err(Error::invalid("switch time must be >= 0"));
        }
        if !(self.gear_factor > 0.0 && self.gear_factor.is_finite()) {
            return Err(Error::invalid("gear factor must be > 0"));
        }
        if !(self.slip >= 0.0 && self.slip.is_finite()) {
            return Err(Error::invalid("slip must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoCommand {
    pub servo: usize,
    pub tendon: usize,
    pub delta_beta_rad: f64,
}

/// One fused stage as sent to the drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareInstruction {
    pub axial_position: usize,
    /// Engaged clutches, one per actuated tendon.
    pub clutches: Vec<usize>,
    pub commands: Vec<ServoCommand>,
}

impl HardwareInstruction {
    /// Longest servo rotation in this stage, rad.
    pub fn max_rotation(&self) -> f64 {
        self.commands.iter().fold(0.0_f64, |m, c| m.max(c.delta_beta_rad.abs()))
    }

    pub fn move_time(&self, timing: &TimingModel) -> f64 {
        self.max_rotation() / timing.omega
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HardwarePlan {
    pub instructions: Vec<HardwareInstruction>,
}

impl HardwarePlan {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Sum over stages of switch time plus the slowest servo's move time.
    pub fn total_time(&self, timing: &TimingModel) -> f64 {
        self.instructions.iter().map(|ins| timing.t_switch + ins.move_time(timing)).sum()
    }

    /// Instructions whose servos are all available and consistent with `map`.
    pub fn check(&self, map: &AxialServoMap, servos: &ServoSet) -> Result<()> {
        for (k, ins) in self.instructions.iter().enumerate() {
            for cmd in &ins.commands {
                if !servos.contains(cmd.servo) {
                    return Err(Error::invalid(format!("instruction {} uses unavailable servo {}", k + 1, cmd.servo)));
                }
                if map.tendon(ins.axial_position, cmd.servo) != cmd.tendon || !ins.clutches.contains(&cmd.tendon) {
                    return Err(Error::invalid(format!("instruction {} command inconsistent with map", k + 1)));
                }
            }
        }
        Ok(())
    }
}

pub fn emit_hardware_plan(stages: &[FusedStage], timing: &TimingModel) -> HardwarePlan {
    let instructions = stages
        .iter()
        .map(|stage| {
            let mut clutches: Vec<usize> = stage.displacements.iter().map(|d| d.tendon).collect();
            clutches.sort_unstable();
            HardwareInstruction {
                axial_position: stage.axial,
                clutches,
                commands: stage
                    .displacements
                    .iter()
                    .map(|d| ServoCommand {
                        servo: d.servo,
                        tendon: d.tendon,
                        delta_beta_rad: timing.gear_factor * d.displacement,
                    })
                    .collect(),
            }
        })
        .collect();
    HardwarePlan { instructions }
}

/// Everything the scheduler produced for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub stepwise: Vec<ScheduledStep>,
    pub fusion: Fusion,
    pub plan: HardwarePlan,
}

/// Mapping, fusion and emission in one call.
pub fn schedule_trajectory(
    map: &AxialServoMap,
    traj: &ActuationTrajectory,
    servos: &ServoSet,
    tol: f64,
    timing: &TimingModel,
) -> Result<Schedule> {
    timing.validate()?;
    let stepwise = schedule_steps(map, traj, servos)?;
    let fusion = fuse_plan(&stepwise, tol);
    let plan = emit_hardware_plan(&fusion.stages, timing);
    Ok(Schedule { stepwise, fusion, plan })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub tendons: TendonVector,
    pub config: JointConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub samples: Vec<TraceSample>,
    pub total_time: f64,
}

impl ExecutionTrace {
    pub fn terminal(&self) -> &TraceSample {
        self.samples.last().expect("trace always holds the initial sample")
    }

    /// Bend angle of segment `i` (1-based) at every sample.
    pub fn theta_series(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.config.theta[i - 1]).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t_s".to_string()];
        header.extend((1..=9).map(|c| format!("t{c}")));
        header.extend((1..=3).map(|i| format!("theta{i}")));
        header.extend((1..=3).map(|i| format!("phi{i}")));
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.t.to_string()];
            row.extend(s.tendons.0.iter().map(|v| v.to_string()));
            row.extend(s.config.theta.iter().map(|v| v.to_string()));
            row.extend(s.config.phi.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct StageTimeline {
    start: f64,
    move_start: f64,
    end: f64,
    base: TendonVector,
    displacement: TendonVector,
}

/// Plays a hardware plan against the time model.
///
/// Each stage spends `t_switch` repositioning, then moves every engaged
/// tendon linearly so all servos finish together. With `slip > 0`, every
/// change of axial position (including the first engagement) jolts each
/// tendon engaged in the new stage by `+slip` or `-slip`, signs drawn from
/// a ChaCha stream seeded by `seed`. The trace is sampled every
/// `sample_dt` seconds and always ends with a sample at the total time.
pub fn simulate_execution(
    geom: &ArmGeometry,
    plan: &HardwarePlan,
    timing: &TimingModel,
    start: &TendonVector,
    sample_dt: f64,
    seed: u64,
) -> Result<ExecutionTrace> {
    timing.validate()?;
    if !(sample_dt > 0.0 && sample_dt.is_finite()) {
        return Err(Error::invalid("sample interval must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut timeline = Vec::with_capacity(plan.len());
    let mut t = 0.0;
    let mut state = *start;
    let mut previous_axial = None;
    for ins in &plan.instructions {
        if timing.slip > 0.0 && previous_axial != Some(ins.axial_position) {
            for cmd in &ins.commands {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let c = cmd.tendon;
                state.set_tendon(c, state.tendon(c) + sign * timing.slip);
            }
        }
        previous_axial = Some(ins.axial_position);
        let mut displacement = TendonVector::zeros();
        for cmd in &ins.commands {
            let c = cmd.tendon;
            displacement.set_tendon(c, displacement.tendon(c) + cmd.delta_beta_rad / timing.gear_factor);
        }
        let move_start = t + timing.t_switch;
        let end = move_start + ins.move_time(timing);
        timeline.push(StageTimeline {
            start: t,
            move_start,
            end,
            base: state,
            displacement,
        });
        state = state + displacement;
        t = end;
    }
    let total_time = t;
    let terminal = state;

    let state_at = |t: f64, cursor: &mut usize| -> TendonVector {
        while *cursor < timeline.len() && t >= timeline[*cursor].end {
            *cursor += 1;
        }
        match timeline.get(*cursor) {
            None => terminal,
            Some(stage) if t < stage.start => stage.base,
            Some(stage) => {
                let span = stage.end - stage.move_start;
                let frac = if t <= stage.move_start || span <= 0.0 {
                    0.0
                } else {
                    ((t - stage.move_start) / span).min(1.0)
                };
                let mut v = stage.base;
                for k in 0..9 {
                    v[k] += frac * stage.displacement[k];
                }
                v
            }
        }
    };

    let mut samples = Vec::new();
    let mut cursor = 0;
    let mut k = 0u64;
    loop {
        let ts = k as f64 * sample_dt;
        if ts >= total_time {
            break;
        }
        let tendons = state_at(ts, &mut cursor);
        samples.push(TraceSample {
            t: ts,
            tendons,
            config: tendons_to_config_relaxed(geom, &tendons)?,
        });
        k += 1;
    }
    samples.push(TraceSample {
        t: total_time,
        tendons: terminal,
        config: tendons_to_config_relaxed(geom, &terminal)?,
    });
    Ok(ExecutionTrace { samples, total_time })
}

/// Tendons of layer `i` reached by position `a` using every servo.
pub fn full_layer_position(map: &AxialServoMap, layer: usize) -> Option<usize> {
    let want = TendonSet::new(&LayerPartition::layer(layer)).ok()?;
    (1..=AXIAL_POSITIONS).find(|&a| map.cover(a, &want, &ServoSet::all()).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn set(v: &[usize]) -> TendonSet {
        TendonSet::new(v).unwrap()
    }

    #[test]
    fn canonical_map_structure() {
        let map = AxialServoMap::canonical();
        map.validate().unwrap();
        let mut seen: Vec<usize> = (1..=9).map(|a| map.tendon(a, 1)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (1..=9).collect::<Vec<_>>());
        for a in 1..=9 {
            let row: Vec<usize> = (1..=3).map(|s| map.tendon(a, s)).collect();
            let layer = LayerPartition::layer_of(row[0]);
            assert!(row.iter().all(|&c| LayerPartition::layer_of(c) == layer));
        }
        for layer in 1..=3 {
            assert!(full_layer_position(&map, layer).is_some());
        }
        for c in 1..=9 {
            assert_eq!(map.preimage(c).len(), 3);
        }
    }

    #[test]
    fn map_validation_rejects_duplicates() {
        let mut table = [[1, 2, 3]; 9];
        assert!(AxialServoMap::from_table(table).is_err());
        table[0] = [1, 1, 2];
        assert!(AxialServoMap::from_table(table).is_err());
    }

    #[test]
    fn full_layer_at_position_one() {
        let map = AxialServoMap::canonical();
        let a = assign_axial(&map, &set(&[1, 2, 3]), None, &ServoSet::all()).unwrap();
        assert_eq!(a.axial, 1);
        assert_eq!(a.pairs, vec![(1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn single_servo_reaches_tendon_six_at_position_eight() {
        let map = AxialServoMap::canonical();
        let a = assign_axial(&map, &set(&[6]), None, &ServoSet::first(1).unwrap()).unwrap();
        assert_eq!(a.axial, 8);
        assert_eq!(a.pairs, vec![(6, 1)]);
    }

    #[test]
    fn previous_position_is_reused() {
        let map = AxialServoMap::canonical();
        let servos = ServoSet::all();
        // position 4 reaches tendons via plugs 4, 7, 1
        let prev = 4;
        let tendon = map.tendon(prev, 2);
        let a = assign_axial(&map, &set(&[tendon]), Some(prev), &servos).unwrap();
        assert_eq!(a.axial, prev);
        assert_eq!(a.pairs, vec![(tendon, 2)]);
    }

    #[test]
    fn nearest_covering_position_wins() {
        let map = AxialServoMap::canonical();
        let servos = ServoSet::first(1).unwrap();
        // servo 1 reaches tendon 4 only at position 2
        let a = assign_axial(&map, &set(&[4]), Some(9), &servos).unwrap();
        assert_eq!(a.axial, 2);
    }

    #[test]
    fn uncoverable_set_is_infeasible() {
        let map = AxialServoMap::canonical();
        let r = assign_axial(&map, &set(&[1, 2]), None, &ServoSet::first(1).unwrap());
        assert!(matches!(r, Err(Error::InfeasibleAssignment { .. })));
        let r = assign_axial(&map, &set(&[1, 4]), None, &ServoSet::all());
        assert!(matches!(r, Err(Error::InfeasibleAssignment { .. })));
    }

    fn sstep(axial: usize, pairs: &[(usize, usize)], incs: &[(usize, f64)]) -> ScheduledStep {
        let mut increments = TendonVector::zeros();
        for &(c, v) in incs {
            increments.set_tendon(c, v);
        }
        ScheduledStep {
            axial,
            pairs: pairs.to_vec(),
            increments,
        }
    }

    #[test]
    fn consecutive_steps_fuse() {
        let steps = vec![
            sstep(1, &[(1, 1)], &[(1, 0.002)]),
            sstep(1, &[(1, 1)], &[(1, 0.002)]),
            sstep(1, &[(1, 1)], &[(1, 0.001)]),
        ];
        let fusion = fuse_plan(&steps, 1e-4);
        assert_eq!(fusion.stages.len(), 1);
        assert!((fusion.stages[0].displacements[0].displacement - 0.005).abs() < 1e-15);
    }

    #[test]
    fn non_consecutive_positions_stay_apart() {
        let steps = vec![
            sstep(1, &[(1, 1)], &[(1, 0.002)]),
            sstep(2, &[(4, 1)], &[(4, 0.002)]),
            sstep(1, &[(1, 1)], &[(1, 0.002)]),
        ];
        let fusion = fuse_plan(&steps, 1e-4);
        assert_eq!(fusion.stages.iter().map(|s| s.axial).collect::<Vec<_>>(), vec![1, 2, 1]);
    }

    #[test]
    fn tiny_stage_is_discarded() {
        let tol = 1e-4;
        let steps = vec![
            sstep(1, &[(1, 1)], &[(1, 0.003)]),
            sstep(2, &[(4, 1)], &[(4, 0.05 * tol)]),
        ];
        let fusion = fuse_plan(&steps, tol);
        assert_eq!(fusion.stages.len(), 1);
        assert_eq!(fusion.discarded.len(), 1);
    }

    #[test]
    fn emission_scales_and_pairs_clutches() {
        let timing = TimingModel {
            gear_factor: 1000.0,
            ..TimingModel::default()
        };
        let stage = FusedStage {
            axial: 1,
            displacements: vec![ServoDisplacement {
                servo: 1,
                tendon: 1,
                displacement: 0.006,
            }],
        };
        let plan = emit_hardware_plan(&[stage], &timing);
        assert!((plan.instructions[0].commands[0].delta_beta_rad - 6.0).abs() < 1e-12);
        assert!(emit_hardware_plan(&[], &timing).is_empty());

        let map = AxialServoMap::canonical();
        let a = assign_axial(&map, &set(&[4, 5, 6]), None, &ServoSet::all()).unwrap();
        let step = ScheduledStep {
            axial: a.axial,
            pairs: a.pairs,
            increments: TendonVector([0.0, 0.0, 0.0, 0.001, 0.002, -0.001, 0.0, 0.0, 0.0]),
        };
        let fusion = fuse_plan(&[step], 1e-4);
        let plan = emit_hardware_plan(&fusion.stages, &timing);
        assert_eq!(plan.instructions[0].clutches, vec![4, 5, 6]);
        assert_eq!(plan.instructions[0].commands.len(), 3);
        plan.check(&map, &ServoSet::all()).unwrap();
    }

    fn instruction(axial: usize, betas: &[(usize, usize, f64)]) -> HardwareInstruction {
        HardwareInstruction {
            axial_position: axial,
            clutches: betas.iter().map(|b| b.1).collect(),
            commands: betas
                .iter()
                .map(|&(servo, tendon, delta_beta_rad)| ServoCommand {
                    servo,
                    tendon,
                    delta_beta_rad,
                })
                .collect(),
        }
    }

    #[test]
    fn two_stage_timing_example() {
        let deg = PI / 180.0;
        let timing = TimingModel {
            omega: 30.0 * deg,
            t_switch: 2.0,
            gear_factor: 1000.0,
            slip: 0.0,
        };
        let plan = HardwarePlan {
            instructions: vec![
                instruction(1, &[(1, 1, 30.0 * deg)]),
                instruction(1, &[(1, 1, 60.0 * deg), (2, 2, 20.0 * deg)]),
            ],
        };
        assert_eq!(plan.total_time(&timing), 7.0);
        let trace = simulate_execution(&ArmGeometry::default(), &plan, &timing, &TendonVector::zeros(), 0.5, 0).unwrap();
        assert_eq!(trace.total_time, 7.0);
        assert_eq!(trace.samples.len(), 15);
    }

    #[test]
    fn empty_plan_has_one_sample() {
        let trace = simulate_execution(
            &ArmGeometry::default(),
            &HardwarePlan::default(),
            &TimingModel::default(),
            &TendonVector::zeros(),
            0.1,
            0,
        )
        .unwrap();
        assert_eq!(trace.total_time, 0.0);
        assert_eq!(trace.samples.len(), 1);
    }

    #[test]
    fn interpolation_finishes_servos_together() {
        let timing = TimingModel {
            omega: 1.0,
            t_switch: 1.0,
            gear_factor: 1000.0,
            slip: 0.0,
        };
        let plan = HardwarePlan {
            instructions: vec![instruction(1, &[(1, 1, 4.0), (2, 2, -2.0)])],
        };
        let trace = simulate_execution(&ArmGeometry::default(), &plan, &timing, &TendonVector::zeros(), 0.5, 0).unwrap();
        // halfway through the move both tendons are halfway
        let mid = trace.samples.iter().find(|s| s.t == 3.0).unwrap();
        assert!((mid.tendons.tendon(1) - 0.002).abs() < 1e-15);
        assert!((mid.tendons.tendon(2) + 0.001).abs() < 1e-15);
        // nothing moves during the switch
        let early = trace.samples.iter().find(|s| s.t == 0.5).unwrap();
        assert_eq!(early.tendons, TendonVector::zeros());
        assert!((trace.terminal().tendons.tendon(1) - 0.004).abs() < 1e-15);
    }

    #[test]
    fn slip_perturbs_engaged_tendons_per_switch() {
        let timing = TimingModel {
            slip: 0.0005,
            ..TimingModel::default()
        };
        let plan = HardwarePlan {
            instructions: vec![
                instruction(1, &[(1, 1, 1.0)]),
                instruction(2, &[(1, 4, 1.0)]),
                instruction(2, &[(1, 4, 1.0)]),
            ],
        };
        let geom = ArmGeometry::default();
        let clean = simulate_execution(&geom, &plan, &TimingModel { slip: 0.0, ..timing }, &TendonVector::zeros(), 1.0, 3).unwrap();
        let slipped = simulate_execution(&geom, &plan, &timing, &TendonVector::zeros(), 1.0, 3).unwrap();
        let diff = slipped.terminal().tendons - clean.terminal().tendons;
        assert!((diff.tendon(1).abs() - 0.0005).abs() < 1e-15);
        // two stages at position 2 count as one switch
        assert!((diff.tendon(4).abs() - 0.0005).abs() < 1e-15);
        for c in [2, 3, 5, 6, 7, 8, 9] {
            assert_eq!(diff.tendon(c), 0.0);
        }
        let again = simulate_execution(&geom, &plan, &timing, &TendonVector::zeros(), 1.0, 3).unwrap();
        assert_eq!(again, slipped);
    }

    #[test]
    fn rejects_bad_sample_interval() {
        let r = simulate_execution(
            &ArmGeometry::default(),
            &HardwarePlan::default(),
            &TimingModel::default(),
            &TendonVector::zeros(),
            0.0,
            0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn plan_json_shape() {
        let plan = HardwarePlan {
            instructions: vec![instruction(3, &[(2, 9, 1.5)])],
        };
        let v: serde_json::Value = serde_json::to_value(&plan).unwrap();
        let ins = &v["instructions"][0];
        assert_eq!(ins["axial_position"], 3);
        assert_eq!(ins["clutches"][0], 9);
        assert_eq!(ins["commands"][0]["servo"], 2);
        assert_eq!(ins["commands"][0]["delta_beta_rad"], 1.5);
    }
}
