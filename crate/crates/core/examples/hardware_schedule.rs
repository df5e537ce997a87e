//! Plan, fuse into hardware stages and play back on the timing model.

use tdma_continuum::actuation::{config_to_tendons, TendonVector};
use tdma_continuum::kinematics::{ArmGeometry, JointConfig};
use tdma_continuum::planner::{beamstep_plan, PlanProblem, ServoSet};
use tdma_continuum::scheduler::{schedule_trajectory, simulate_execution, AxialServoMap, TimingModel};

fn main() -> Result<(), tdma_continuum::Error> {
    let geom = ArmGeometry::default();
    let servos = ServoSet::first(2)?;
    let target = config_to_tendons(&geom, &JointConfig::new([0.3, 1.0, 0.8], [0.4, 2.2, -0.6]))?;
    let problem = PlanProblem::new(geom.clone(), TendonVector::zeros(), target, servos);
    let traj = beamstep_plan(&problem)?;

    let timing = TimingModel::default();
    let schedule = schedule_trajectory(&AxialServoMap::canonical(), &traj, &servos, problem.tol, &timing)?;
    println!("{} planning steps fused into {} stages", traj.len(), schedule.plan.len());
    for ins in &schedule.plan.instructions {
        let cmds: Vec<String> = ins
            .commands
            .iter()
            .map(|c| format!("s{}->t{} {:+.3} rad", c.servo, c.tendon, c.delta_beta_rad))
            .collect();
        println!("  position {}  {}", ins.axial_position, cmds.join(", "));
    }

    let trace = simulate_execution(&geom, &schedule.plan, &timing, &problem.start, 0.1, 0)?;
    let end = trace.terminal();
    println!("T = {:.2} s, {} samples", trace.total_time, trace.samples.len());
    println!("final theta = {:.4?}", end.config.theta);
    Ok(())
}
