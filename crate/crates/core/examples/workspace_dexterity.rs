//! Monte Carlo workspace, azimuth symmetry check and dexterity grid.
//!
//! Usage: `cargo run --release --example workspace_dexterity -- [samples]`

use tdma_continuum::kinematics::ArmGeometry;
use tdma_continuum::workspace::{azimuth_uniformity, dexterity_map, monte_carlo_workspace, GridSpec, DEFAULT_ANGLE_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200_000);
    let geom = ArmGeometry::default();
    let samples = monte_carlo_workspace(&geom, n, 0)?;
    let reach = samples.iter().map(|s| s.position.norm()).fold(0.0, f64::max);
    println!("{n} samples, farthest {:.4} m of {:.4} m", reach, geom.total_length());

    let chi = azimuth_uniformity(&samples, 36)?;
    println!("azimuth chi2 {:.1} on {} dof, p = {:.3}", chi.statistic, chi.dof, chi.p_value);

    let map = dexterity_map(&samples, &GridSpec::for_geometry(&geom, 12), DEFAULT_ANGLE_TOL)?;
    // rows: height from top to bottom; columns: radial distance
    for j in (0..map.grid.n_z).rev() {
        let row: String = (0..map.grid.n_rho)
            .map(|i| match map.cell(i, j).dexterity {
                None => ' ',
                Some(d) if d >= 0.5 => '#',
                Some(d) if d >= 0.25 => '+',
                Some(_) => '.',
            })
            .collect();
        println!("|{row}|");
    }
    Ok(())
}
