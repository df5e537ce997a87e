//! Recovers a configuration from a tip pose, then shows an unreachable request.

use nalgebra::Vector3;
use tdma_continuum::kinematics::{forward_kinematics, inverse_kinematics, ArmGeometry, IkOptions, JointConfig, Pose};

fn main() -> Result<(), tdma_continuum::Error> {
    let geom = ArmGeometry::default();
    let truth = JointConfig::new([0.7, 1.1, 0.4], [0.5, -2.0, 1.3]);
    let target = forward_kinematics(&geom, &truth)?.end_effector;

    let sol = inverse_kinematics(&geom, &JointConfig::straight(), &target, &IkOptions::default())?;
    let check = forward_kinematics(&geom, &sol.q)?.end_effector;
    println!("converged {} after {} iterations (start {})", sol.converged, sol.iterations, sol.start_index);
    println!("theta = {:?}", sol.q.theta);
    println!("phi   = {:?}", sol.q.phi);
    println!("tip error {:.2e} m", (check.position - target.position).norm());

    let far = Pose::new(target.rotation, Vector3::new(0.0, 0.0, 1.0));
    let miss = inverse_kinematics(&geom, &JointConfig::straight(), &far, &IkOptions { restarts: 4, ..IkOptions::default() })?;
    println!("1 m above the base: converged {}, residual {:.3} m", miss.converged, miss.residual.linear_norm());
    Ok(())
}
