//! BeamStep plan from the straight pose to a bent target with each servo count.

use tdma_continuum::actuation::{config_to_tendons, TendonVector};
use tdma_continuum::kinematics::{ArmGeometry, JointConfig};
use tdma_continuum::planner::{beamstep_plan, trajectory_cost, validate_trajectory, PlanProblem, ServoSet, ValidationOptions};

fn main() -> Result<(), tdma_continuum::Error> {
    let geom = ArmGeometry::default();
    let target = config_to_tendons(&geom, &JointConfig::new([0.5, 0.9, 1.1], [0.0, 1.5, -2.5]))?;

    for servos in 1..=3 {
        let problem = PlanProblem::new(geom.clone(), TendonVector::zeros(), target, ServoSet::first(servos)?);
        let traj = beamstep_plan(&problem)?;
        let cost = trajectory_cost(&problem, &traj)?;
        let report = validate_trajectory(&problem, &traj, ValidationOptions::default());
        let layers: String = traj.steps.iter().filter_map(|s| s.layer()).map(|l| char::from(b'0' + l as u8)).collect();
        println!(
            "{servos} servo(s): {:2} steps, cost {:.4}, switches {:2}, valid {}  layers {layers}",
            traj.len(),
            cost.total,
            cost.switches,
            report.passed
        );
    }
    Ok(())
}
