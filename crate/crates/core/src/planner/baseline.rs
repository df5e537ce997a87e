use crate::actuation::TendonVector;
use crate::error::{Error, Result};

use super::{clip, ActuationTrajectory, Method, PlanProblem, PlanStep, TendonSet, NEGLIGIBLE};

/// Tendon chosen at cycle position `k` (0-based) by the scanning policies.
fn scan_tendon(method: Method, k: usize) -> usize {
    match method {
        Method::Sequential => 1 + k % 9,
        Method::Reversed => 9 - k % 9,
        _ => unreachable!("only scanning policies cycle"),
    }
}

/// Tendon with the largest absolute residual; ties go to the lower index.
fn greedy_tendon(residual: &TendonVector) -> usize {
    let mut best = 1;
    for c in 2..=9 {
        if residual.tendon(c).abs() > residual.tendon(best).abs() {
            best = c;
        }
    }
    best
}

/// Single-tendon reference policies: sequential scan `1..9`, reversed scan
/// `9..1`, and greedy largest-residual.
///
/// Each step moves the chosen tendon toward its target by at most
/// `step_max`. Scans skip tendons that are already at target without
/// spending a step.
pub fn baseline_plan(method: Method, problem: &PlanProblem) -> Result<ActuationTrajectory> {
    if !method.is_baseline() {
        return Err(Error::invalid("baseline_plan needs a baseline policy"));
    }
    problem.validate()?;
    let mut traj = ActuationTrajectory::empty(method, problem.start);
    let mut state = problem.start;
    let mut cursor = 0usize;
    while !problem.reached(&state) {
        if traj.steps.len() >= problem.max_steps {
            return Err(Error::NoPlan {
                expansions: traj.steps.len(),
            });
        }
        let residual = problem.residual(&state);
        let tendon = match method {
            Method::Greedy => {
                let c = greedy_tendon(&residual);
                if residual.tendon(c).abs() <= NEGLIGIBLE {
                    break;
                }
                c
            }
            _ => {
                let mut chosen = None;
                for _ in 0..9 {
                    let c = scan_tendon(method, cursor);
                    cursor += 1;
                    if residual.tendon(c).abs() > NEGLIGIBLE {
                        chosen = Some(c);
                        break;
                    }
                }
                match chosen {
                    Some(c) => c,
                    None => break,
                }
            }
        };
        let mut increments = TendonVector::zeros();
        increments.set_tendon(tendon, clip(residual.tendon(tendon), problem.step_max));
        state = state + increments;
        traj.steps.push(PlanStep {
            active_set: TendonSet::new(&[tendon])?,
            increments,
        });
    }
    Ok(traj)
}
