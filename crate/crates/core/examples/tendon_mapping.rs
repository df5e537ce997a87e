//! Configuration to tendon displacement and back, including proximal coupling.

use tdma_continuum::actuation::{config_to_tendons, tendons_to_config};
use tdma_continuum::kinematics::{ArmGeometry, JointConfig};

fn main() -> Result<(), tdma_continuum::Error> {
    let geom = ArmGeometry::default();

    // bending only the base segment still shortens or lengthens the
    // tendons of the outer layers that pass through it
    let base_only = JointConfig::new([0.8, 0.0, 0.0], [0.0; 3]);
    let dl = config_to_tendons(&geom, &base_only)?;
    for layer in 1..=3 {
        let [a, b, c] = dl.layer(layer);
        println!("layer {layer}: {:+.5} {:+.5} {:+.5} m", a, b, c);
    }

    let q = JointConfig::new([0.4, 1.3, 0.9], [2.0, -0.7, 0.1]);
    let back = tendons_to_config(&geom, &config_to_tendons(&geom, &q)?)?;
    let err = (0..3)
        .map(|i| (back.theta[i] - q.theta[i]).abs().max((back.phi[i] - q.phi[i]).abs()))
        .fold(0.0, f64::max);
    println!("round trip error {err:.1e} rad");
    Ok(())
}
