use serde::Serialize;

use crate::actuation::tendons_to_config_relaxed;

use super::{ActuationTrajectory, PlanProblem};

/// Relative slack on the step-size bound, for increments computed by clipping.
const STEP_SLACK: f64 = 1e-12;

/// A hard constraint broken by a trajectory. Steps are numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonFinite { step: usize },
    IncrementOutsideSet { step: usize, tendon: usize },
    StepSize { step: usize, tendon: usize, magnitude: f64 },
    CrossLayer { step: usize, tendons: Vec<usize> },
    SetSize { step: usize, expected: usize, actual: usize },
    InconsistentState { step: usize, reason: String },
    Terminal { error: f64, tol: f64 },
    JointLimit(JointLimitExcursion),
}

/// An intermediate state whose recovered bend exceeds a segment limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointLimitExcursion {
    pub step: usize,
    pub segment: usize,
    pub theta: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidationOptions {
    /// Treat joint-limit excursions of intermediate states as failures.
    pub strict_joint_limits: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    /// First hard violation, if any.
    pub violation: Option<Violation>,
    /// First intermediate joint-limit excursion, if any.
    pub joint_limit_excursion: Option<JointLimitExcursion>,
}

/// Checks the step bound, single-layer rule, active-set size and terminal
/// tolerance, and scans intermediate states for joint-limit excursions.
///
/// BeamStep plans must engage one tendon per available servo; baselines one
/// tendon per step. Excursions are transient states of the tendon path and
/// only fail the report under [`ValidationOptions::strict_joint_limits`].
pub fn validate_trajectory(
    problem: &PlanProblem,
    traj: &ActuationTrajectory,
    opts: ValidationOptions,
) -> ValidationReport {
    let (violation, joint_limit_excursion) = match first_violation(problem, traj) {
        Some(v) => (Some(v), None),
        None => match first_excursion(problem, traj) {
            Ok(exc) => (None, exc),
            Err(v) => (Some(v), None),
        },
    };
    let violation = match (violation, &joint_limit_excursion) {
        (None, Some(exc)) if opts.strict_joint_limits => Some(Violation::JointLimit(exc.clone())),
        (v, _) => v,
    };
    ValidationReport {
        passed: violation.is_none(),
        violation,
        joint_limit_excursion,
    }
}

fn first_violation(problem: &PlanProblem, traj: &ActuationTrajectory) -> Option<Violation> {
    let expected_size = if traj.method.is_baseline() { 1 } else { problem.servos.len() };
    let bound = problem.step_max * (1.0 + STEP_SLACK);
    for (k, step) in traj.steps.iter().enumerate() {
        let n = k + 1;
        if !step.increments.is_finite() {
            return Some(Violation::NonFinite { step: n });
        }
        for c in 1..=9 {
            let inc = step.increments.tendon(c);
            if !step.active_set.contains(c) && inc != 0.0 {
                return Some(Violation::IncrementOutsideSet { step: n, tendon: c });
            }
            if inc.abs() > bound {
                return Some(Violation::StepSize {
                    step: n,
                    tendon: c,
                    magnitude: inc.abs(),
                });
            }
        }
        if step.active_set.layer().is_none() {
            return Some(Violation::CrossLayer {
                step: n,
                tendons: step.active_set.to_vec(),
            });
        }
        if step.active_set.len() != expected_size {
            return Some(Violation::SetSize {
                step: n,
                expected: expected_size,
                actual: step.active_set.len(),
            });
        }
    }
    let error = traj.terminal().linf_distance(&problem.target);
    if !(error <= problem.tol) {
        return Some(Violation::Terminal { error, tol: problem.tol });
    }
    None
}

fn first_excursion(
    problem: &PlanProblem,
    traj: &ActuationTrajectory,
) -> Result<Option<JointLimitExcursion>, Violation> {
    for (k, state) in traj.states().iter().enumerate().skip(1) {
        let q = tendons_to_config_relaxed(&problem.geom, state).map_err(|e| Violation::InconsistentState {
            step: k,
            reason: e.to_string(),
        })?;
        for i in 0..3 {
            if q.theta[i] > problem.geom.theta_max[i] {
                return Ok(Some(JointLimitExcursion {
                    step: k,
                    segment: i + 1,
                    theta: q.theta[i],
                    limit: problem.geom.theta_max[i],
                }));
            }
        }
    }
    Ok(None)
}
