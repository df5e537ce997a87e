//! Tip pose and segment frames of a bent three-segment arm.

use tdma_continuum::kinematics::{forward_kinematics, ArmGeometry, JointConfig};

fn main() -> Result<(), tdma_continuum::Error> {
    let geom = ArmGeometry::default();
    let q = JointConfig::new([0.6, 0.9, 1.2], [0.0, 2.1, -1.0]);
    let fk = forward_kinematics(&geom, &q)?;

    for (i, frame) in fk.frames.iter().enumerate() {
        let p = frame.position;
        println!("segment {} end  p = ({:+.4}, {:+.4}, {:+.4}) m", i + 1, p.x, p.y, p.z);
    }
    let z = fk.end_effector.approach();
    println!("tool axis       z = ({:+.4}, {:+.4}, {:+.4})", z.x, z.y, z.z);

    let straight = forward_kinematics(&geom, &JointConfig::straight())?;
    println!("straight tip    z = {:.4} m (total length {:.4} m)", straight.end_effector.position.z, geom.total_length());
    Ok(())
}
