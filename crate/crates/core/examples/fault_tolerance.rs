//! Keeps working as servos fail: any nonempty subset still reaches the target,
//! and switch slip shows how the tip drifts per reposition.

use tdma_continuum::actuation::{config_to_tendons, TendonVector};
use tdma_continuum::kinematics::{forward_kinematics, ArmGeometry, JointConfig};
use tdma_continuum::planner::{beamstep_plan, PlanProblem, ServoSet};
use tdma_continuum::scheduler::{schedule_trajectory, simulate_execution, AxialServoMap, TimingModel};

fn main() -> Result<(), tdma_continuum::Error> {
    let geom = ArmGeometry::default();
    let goal = JointConfig::new([0.7, 0.5, 0.9], [-0.3, 1.2, 2.4]);
    let target = config_to_tendons(&geom, &goal)?;
    let goal_tip = forward_kinematics(&geom, &goal)?.end_effector.position;

    for working in ["123", "13", "2", "3"] {
        let servos: ServoSet = working.parse()?;
        let problem = PlanProblem::new(geom.clone(), TendonVector::zeros(), target, servos);
        let traj = beamstep_plan(&problem)?;
        for slip in [0.0, 0.0005] {
            let timing = TimingModel { slip, ..TimingModel::default() };
            let schedule = schedule_trajectory(&AxialServoMap::canonical(), &traj, &servos, problem.tol, &timing)?;
            let trace = simulate_execution(&geom, &schedule.plan, &timing, &problem.start, 0.5, 11)?;
            let tip = forward_kinematics(&geom, &trace.terminal().config.clamped(&geom))?.end_effector.position;
            println!(
                "servos {:<4} slip {:.1} mm: {:2} stages, T {:6.1} s, tip error {:5.2} mm",
                working,
                slip * 1e3,
                schedule.plan.len(),
                trace.total_time,
                (tip - goal_tip).norm() * 1e3
            );
        }
    }
    Ok(())
}
