use std::cmp::Ordering;
use std::collections::HashMap;

use crate::actuation::TendonVector;
use crate::error::{Error, Result};

use super::{clip, feasible_tendon_sets, step_cost, trajectory_cost, ActuationTrajectory, Method, PlanProblem, PlanStep, TendonSet, NEGLIGIBLE};

struct Node {
    state: TendonVector,
    /// Accumulated cost.
    g: f64,
    /// `g` plus the remaining-travel lower bound.
    f: f64,
    depth: usize,
    parent: Option<usize>,
    step: Option<PlanStep>,
}

impl Node {
    fn layer(&self) -> usize {
        self.step.and_then(|s| s.layer()).unwrap_or(0)
    }

    fn set(&self) -> TendonSet {
        self.step.map(|s| s.active_set).unwrap_or_default()
    }
}

/// Heap order: cost, then fewer steps, lower layer, lexicographic active set.
fn rank(a: &Node, b: &Node) -> Ordering {
    a.f.total_cmp(&b.f)
        .then(a.depth.cmp(&b.depth))
        .then(a.layer().cmp(&b.layer()))
        .then(a.set().cmp(&b.set()))
}

fn remaining_travel(problem: &PlanProblem, state: &TendonVector) -> f64 {
    problem.residual(state).0.iter().map(|r| r.abs()).sum()
}

type DedupKey = ([i64; 9], TendonSet);

fn dedup_key(state: &TendonVector, grid: f64, last: TendonSet) -> DedupKey {
    let mut cells = [0i64; 9];
    for (cell, v) in cells.iter_mut().zip(state.0.iter()) {
        *cell = (v / grid).round() as i64;
    }
    (cells, last)
}

/// Beam search over layer-constrained tendon increments.
///
/// The frontier is cut to the `beam_width` best partial plans before every
/// pop. Each expansion tries every feasible active set and moves its
/// tendons as far toward the target as `step_max` allows. States are
/// deduplicated on a `tol / 10` grid together with the last active set,
/// since the switch penalty of the next step depends on it.
///
/// A width-one dive is kept as an incumbent, so widening the beam never
/// returns a costlier plan.
pub fn beamstep_plan(problem: &PlanProblem) -> Result<ActuationTrajectory> {
    problem.validate()?;
    let wide = search(problem, problem.beam_width);
    if problem.beam_width == 1 {
        return wide;
    }
    let narrow = search(problem, 1);
    match (wide, narrow) {
        (Ok(w), Ok(n)) => {
            let cw = trajectory_cost(problem, &w)?.total;
            let cn = trajectory_cost(problem, &n)?.total;
            Ok(if cn < cw { n } else { w })
        }
        (Ok(w), Err(_)) => Ok(w),
        (Err(_), Ok(n)) => Ok(n),
        (Err(e), Err(_)) => Err(e),
    }
}

fn search(problem: &PlanProblem, beam_width: usize) -> Result<ActuationTrajectory> {
    let mut candidates = Vec::new();
    for layer in 1..=3 {
        candidates.extend(feasible_tendon_sets(&problem.servos, layer)?);
    }
    let grid = problem.tol / 10.0;

    let mut arena = vec![Node {
        state: problem.start,
        g: 0.0,
        f: remaining_travel(problem, &problem.start),
        depth: 0,
        parent: None,
        step: None,
    }];
    let mut seen: HashMap<DedupKey, f64> = HashMap::new();
    seen.insert(dedup_key(&problem.start, grid, TendonSet::empty()), 0.0);
    let mut frontier = vec![0usize];
    let mut expansions = 0;

    loop {
        frontier.sort_by(|&a, &b| rank(&arena[a], &arena[b]));
        // Dropped partials must not keep blocking their states.
        for &dropped in frontier.iter().skip(beam_width) {
            let n = &arena[dropped];
            let key = dedup_key(&n.state, grid, n.set());
            if seen.get(&key) == Some(&n.g) {
                seen.remove(&key);
            }
        }
        frontier.truncate(beam_width);
        if frontier.is_empty() {
            return Err(Error::NoPlan { expansions });
        }
        if problem.reached(&arena[frontier[0]].state) {
            return Ok(reconstruct(&arena, frontier[0], problem));
        }

        // Goals wait in the beam until they rank first; everything else is expanded.
        let (goals, open): (Vec<usize>, Vec<usize>) =
            frontier.iter().partition(|&&id| problem.reached(&arena[id].state));
        frontier = goals;
        for id in open {
            if expansions >= problem.max_steps {
                return Err(Error::NoPlan { expansions });
            }
            expansions += 1;
            expand(problem, &candidates, grid, id, &mut arena, &mut seen, &mut frontier);
        }
    }
}

fn expand(
    problem: &PlanProblem,
    candidates: &[TendonSet],
    grid: f64,
    id: usize,
    arena: &mut Vec<Node>,
    seen: &mut HashMap<DedupKey, f64>,
    frontier: &mut Vec<usize>,
) {
    let (state, g, depth, last) = {
        let n = &arena[id];
        (n.state, n.g, n.depth, n.step.map(|s| s.active_set))
    };
    let residual = problem.residual(&state);
    for &set in candidates {
        let mut increments = TendonVector::zeros();
        let mut moved = false;
        for c in set.iter() {
            let inc = clip(residual.tendon(c), problem.step_max);
            if inc.abs() > NEGLIGIBLE {
                moved = true;
            }
            increments.set_tendon(c, inc);
        }
        if !moved {
            continue;
        }
        let child = state + increments;
        let Ok(energy) = problem.bending(&child) else {
            continue;
        };
        let step = PlanStep {
            active_set: set,
            increments,
        };
        let child_g = g + step_cost(step.travel(), energy, last != Some(set), &problem.weights);
        let key = dedup_key(&child, grid, set);
        if let Some(&best) = seen.get(&key) {
            if best <= child_g {
                continue;
            }
        }
        seen.insert(key, child_g);
        arena.push(Node {
            state: child,
            g: child_g,
            f: child_g + remaining_travel(problem, &child),
            depth: depth + 1,
            parent: Some(id),
            step: Some(step),
        });
        frontier.push(arena.len() - 1);
    }
}

fn reconstruct(arena: &[Node], mut id: usize, problem: &PlanProblem) -> ActuationTrajectory {
    let mut steps = Vec::new();
    while let Some(step) = arena[id].step {
        steps.push(step);
        id = arena[id].parent.expect("non-root nodes have a parent");
    }
    steps.reverse();
    ActuationTrajectory {
        method: Method::BeamStep,
        start: problem.start,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::ArmGeometry;
    use crate::planner::{trajectory_cost, ServoSet};

    fn problem(target: TendonVector, servos: usize) -> PlanProblem {
        PlanProblem::new(
            ArmGeometry::default(),
            TendonVector::zeros(),
            target,
            ServoSet::first(servos).unwrap(),
        )
    }

    #[test]
    fn already_at_target() {
        let p = problem(TendonVector::zeros(), 3);
        let traj = beamstep_plan(&p).unwrap();
        assert!(traj.is_empty());
        assert_eq!(trajectory_cost(&p, &traj).unwrap().total, 0.0);
    }

    #[test]
    fn whole_layer_in_one_step() {
        let d = 0.004;
        let mut target = TendonVector::zeros();
        for c in 1..=3 {
            target.set_tendon(c, d);
        }
        let traj = beamstep_plan(&problem(target, 3)).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.steps[0].active_set.to_vec(), vec![1, 2, 3]);
    }

    #[test]
    fn single_servo_visits_both_layers() {
        let mut target = TendonVector::zeros();
        target.set_tendon(1, 0.012);
        target.set_tendon(4, -0.007);
        let p = problem(target, 1);
        let traj = beamstep_plan(&p).unwrap();
        let layers: Vec<_> = traj.steps.iter().filter_map(|s| s.layer()).collect();
        assert!(layers.contains(&1) && layers.contains(&2));
        assert!(traj.switch_count() >= 2);
        assert!(traj.terminal().linf_distance(&target) <= p.tol);
        assert!(traj.steps.iter().all(|s| s.active_set.len() == 1));
    }

    #[test]
    fn exhausted_budget_is_no_plan() {
        let mut target = TendonVector::zeros();
        target.set_tendon(9, 0.05);
        let mut p = problem(target, 1);
        p.max_steps = 3;
        assert!(matches!(beamstep_plan(&p), Err(Error::NoPlan { .. })));
    }

    #[test]
    fn rejects_invalid_problem() {
        let mut p = problem(TendonVector::zeros(), 1);
        p.beam_width = 0;
        assert!(matches!(beamstep_plan(&p), Err(Error::InvalidArgument(_))));
        p.beam_width = 1;
        p.step_max = 0.0;
        assert!(matches!(beamstep_plan(&p), Err(Error::InvalidArgument(_))));
    }
}
