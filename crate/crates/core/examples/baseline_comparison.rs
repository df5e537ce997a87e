//! Same target planned by BeamStep and the three one-tendon baselines.

use tdma_continuum::actuation::{config_to_tendons, TendonVector};
use tdma_continuum::kinematics::{ArmGeometry, JointConfig};
use tdma_continuum::planner::{plan, trajectory_cost, Method, PlanProblem, ServoSet};

fn main() -> Result<(), tdma_continuum::Error> {
    let geom = ArmGeometry::default();
    let target = config_to_tendons(&geom, &JointConfig::new([0.9, 0.6, 1.4], [1.0, -1.0, 0.3]))?;
    let problem = PlanProblem::new(geom, TendonVector::zeros(), target, ServoSet::first(1)?);

    println!("{:<11} {:>5} {:>8} {:>8} {:>9}", "method", "steps", "travel", "switches", "cost");
    for method in Method::ALL {
        let traj = plan(method, &problem)?;
        let cost = trajectory_cost(&problem, &traj)?;
        println!("{:<11} {:>5} {:>8.4} {:>8} {:>9.4}", method.name(), traj.len(), cost.travel, cost.switches, cost.total);
    }
    Ok(())
}
