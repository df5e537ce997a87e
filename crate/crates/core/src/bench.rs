//! Method comparison over a seeded suite of random feasible targets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::actuation::{config_to_tendons, TendonVector};
use crate::error::{Error, Result};
use crate::kinematics::{ArmGeometry, JointConfig};
use crate::metrics::{overshoot_ratios, OvershootReport, Summary};
use crate::planner::{plan, trajectory_cost, Method, PlannerParams, ServoSet};
use crate::scheduler::{schedule_trajectory, simulate_execution, AxialServoMap, TimingModel};

pub const SCHEMA: &str = "tdma-bench/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub geom: ArmGeometry,
    pub methods: Vec<Method>,
    pub servo_counts: Vec<usize>,
    pub n_targets: usize,
    pub seed: u64,
    pub planner: PlannerParams,
    pub timing: TimingModel,
    /// Trace sampling interval for the overshoot integrals, s.
    pub sample_dt: f64,
}

impl BenchConfig {
    /// Suite step size. Large enough that a scan baseline drives each tendon
    /// in a single pass, as in the reference one-servo stage counts.
    pub const DEFAULT_STEP_MAX: f64 = 0.05;
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            geom: ArmGeometry::default(),
            methods: Method::ALL.to_vec(),
            servo_counts: vec![1, 2, 3],
            n_targets: 15,
            seed: 0,
            planner: PlannerParams {
                step_max: Self::DEFAULT_STEP_MAX,
                ..PlannerParams::default()
            },
            timing: TimingModel::default(),
            sample_dt: 0.05,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        self.timing.validate()?;
        if self.n_targets == 0 {
            return Err(Error::invalid("need at least one target"));
        }
        if self.methods.is_empty() || self.servo_counts.is_empty() {
            return Err(Error::invalid("need at least one method and one servo count"));
        }
        if let Some(&n) = self.servo_counts.iter().find(|n| !(1..=3).contains(*n)) {
            return Err(Error::invalid(format!("servo count {n} outside 1..=3")));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(Error::invalid("sample interval must be > 0"));
        }
        Ok(())
    }
}

/// Random in-limit configurations and their tendon displacements from the
/// straight pose.
pub fn sample_targets(geom: &ArmGeometry, n: usize, seed: u64) -> Result<Vec<(JointConfig, TendonVector)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut q = JointConfig::straight();
            for i in 0..3 {
                q.theta[i] = rng.gen::<f64>() * geom.theta_max[i];
                q.phi[i] = -PI + 2.0 * PI * rng.gen::<f64>();
            }
            Ok((q, config_to_tendons(geom, &q)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub plan_steps: usize,
    pub stages: usize,
    pub total_time: f64,
    pub cost: f64,
    pub overshoot: OvershootReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub method: Method,
    pub servos: usize,
    pub target: usize,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Ok(TrialMetrics),
    Failed { reason: String },
}

/// Plans, schedules and executes one target from the straight pose.
pub fn run_trial(config: &BenchConfig, method: Method, servos: usize, target: &TendonVector) -> Result<TrialMetrics> {
    let servo_set = ServoSet::first(servos)?;
    let problem = config.planner.problem(&config.geom, TendonVector::zeros(), *target, servo_set);
    let traj = plan(method, &problem)?;
    let cost = trajectory_cost(&problem, &traj)?.total;
    let schedule = schedule_trajectory(&AxialServoMap::canonical(), &traj, &servo_set, problem.tol, &config.timing)?;
    let trace = simulate_execution(
        &config.geom,
        &schedule.plan,
        &config.timing,
        &problem.start,
        config.sample_dt,
        config.seed,
    )?;
    let overshoot = if trace.total_time > 0.0 {
        let times: Vec<f64> = trace.samples.iter().map(|s| s.t).collect();
        let thetas: Vec<[f64; 3]> = trace.samples.iter().map(|s| s.config.theta).collect();
        overshoot_ratios(&times, &thetas, trace.terminal().config.theta, trace.total_time)?
    } else {
        overshoot_ratios(&[0.0], &[[0.0; 3]], [0.0; 3], 1.0)?
    };
    Ok(TrialMetrics {
        plan_steps: traj.len(),
        stages: schedule.plan.len(),
        total_time: trace.total_time,
        cost,
        overshoot,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub method: Method,
    pub servos: usize,
    pub succeeded: usize,
    pub failed: usize,
    /// Seconds.
    pub total_time: Option<Summary>,
    pub stages: Option<Summary>,
    /// Percent, per segment.
    pub duration_overshoot: [Option<Summary>; 3],
    /// Percent, per segment, over trials where the peak ratio is defined.
    pub peak_overshoot: [Option<Summary>; 3],
    /// Trials whose peak ratio was undefined (zero steady bend, nonzero trace).
    pub peak_undefined: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub schema: &'static str,
    pub config: BenchConfig,
    pub rows: Vec<BenchmarkRow>,
    pub trials: Vec<Trial>,
}

impl BenchmarkTable {
    pub fn row(&self, method: Method, servos: usize) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.method == method && r.servos == servos)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Trial> {
        self.trials.iter().filter(|t| matches!(t.outcome, TrialOutcome::Failed { .. }))
    }

    pub fn all_failed(&self) -> bool {
        self.trials.iter().all(|t| matches!(t.outcome, TrialOutcome::Failed { .. }))
    }

    /// One row per method and servo count; summaries as median and IQR.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = [
            "method",
            "servos",
            "succeeded",
            "failed",
            "time_median_s",
            "time_iqr_s",
            "stages_median",
            "stages_iqr",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for i in 1..=3 {
            for metric in ["duration", "peak"] {
                header.push(format!("seg{i}_{metric}_median_pct"));
                header.push(format!("seg{i}_{metric}_iqr_pct"));
            }
        }
        w.write_record(&header)?;
        let pair = |s: &Option<Summary>| match s {
            Some(s) => [s.median.to_string(), s.iqr.to_string()],
            None => [String::new(), String::new()],
        };
        for r in &self.rows {
            let mut rec = vec![
                r.method.to_string(),
                r.servos.to_string(),
                r.succeeded.to_string(),
                r.failed.to_string(),
            ];
            rec.extend(pair(&r.total_time));
            rec.extend(pair(&r.stages));
            for i in 0..3 {
                rec.extend(pair(&r.duration_overshoot[i]));
                rec.extend(pair(&r.peak_overshoot[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn aggregate(method: Method, servos: usize, trials: &[&Trial]) -> BenchmarkRow {
    let ok: Vec<&TrialMetrics> = trials
        .iter()
        .filter_map(|t| match &t.outcome {
            TrialOutcome::Ok(m) => Some(m),
            TrialOutcome::Failed { .. } => None,
        })
        .collect();
    let times: Vec<f64> = ok.iter().map(|m| m.total_time).collect();
    let stages: Vec<f64> = ok.iter().map(|m| m.stages as f64).collect();
    let mut duration_overshoot = [None; 3];
    let mut peak_overshoot = [None; 3];
    let mut peak_undefined = [0; 3];
    for i in 0..3 {
        let d: Vec<f64> = ok.iter().map(|m| 100.0 * m.overshoot.segments[i].duration_ratio).collect();
        let p: Vec<f64> = ok
            .iter()
            .filter_map(|m| m.overshoot.segments[i].peak_ratio)
            .map(|r| 100.0 * r)
            .collect();
        peak_undefined[i] = ok.len() - p.len();
        duration_overshoot[i] = Summary::of(&d);
        peak_overshoot[i] = Summary::of(&p);
    }
    BenchmarkRow {
        method,
        servos,
        succeeded: ok.len(),
        failed: trials.len() - ok.len(),
        total_time: Summary::of(&times),
        stages: Summary::of(&stages),
        duration_overshoot,
        peak_overshoot,
        peak_undefined,
    }
}

/// Runs every method at every servo count on `n_targets` seeded targets.
///
/// Trials run in parallel but are collected in a fixed order, so the table
/// is identical for identical configurations. Failed trials are kept in
/// `trials` and left out of the summaries.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchmarkTable> {
    config.validate()?;
    let targets = sample_targets(&config.geom, config.n_targets, config.seed)?;
    let mut jobs = Vec::new();
    for &method in &config.methods {
        for &servos in &config.servo_counts {
            for target in 0..targets.len() {
                jobs.push((method, servos, target));
            }
        }
    }
    let trials: Vec<Trial> = jobs
        .par_iter()
        .map(|&(method, servos, target)| Trial {
            method,
            servos,
            target,
            outcome: match run_trial(config, method, servos, &targets[target].1) {
                Ok(m) => TrialOutcome::Ok(m),
                Err(e) => TrialOutcome::Failed { reason: e.to_string() },
            },
        })
        .collect();
    let mut rows = Vec::new();
    for &method in &config.methods {
        for &servos in &config.servo_counts {
            let group: Vec<&Trial> = trials.iter().filter(|t| t.method == method && t.servos == servos).collect();
            rows.push(aggregate(method, servos, &group));
        }
    }
    Ok(BenchmarkTable {
        schema: SCHEMA,
        config: config.clone(),
        rows,
        trials,
    })
}
