//! Monte Carlo reachable workspace and orientation dexterity.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::kinematics::{chain_raw, ArmGeometry, JointConfig};

/// Samples drawn per RNG stream. Fixes the stream layout independently of
/// the thread count.
const CHUNK: usize = 4096;

/// Samples this close to the base axis have no defined azimuth.
const AXIS_RADIUS: f64 = 1e-9;

pub const DEFAULT_ANGLE_TOL: f64 = 10.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceSample {
    pub position: Vector3<f64>,
    /// Tool z-axis.
    pub approach: Vector3<f64>,
}

impl WorkspaceSample {
    pub fn radial(&self) -> f64 {
        self.position.x.hypot(self.position.y)
    }
}

/// Uniform draws over the joint box, `theta_i` in `[0, theta_max_i]` and
/// `phi_i` in `[-pi, pi)`, pushed through forward kinematics.
///
/// Chunk `k` of the output uses stream `k` of a ChaCha generator seeded by
/// `seed`, so the result does not depend on how chunks are scheduled.
pub fn monte_carlo_workspace(geom: &ArmGeometry, n_samples: usize, seed: u64) -> Result<Vec<WorkspaceSample>> {
    geom.validate()?;
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let out = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = CHUNK.min(n_samples - k * CHUNK);
            (0..len)
                .map(|_| {
                    let mut q = JointConfig::straight();
                    for i in 0..3 {
                        q.theta[i] = rng.gen::<f64>() * geom.theta_max[i];
                        q.phi[i] = -PI + 2.0 * PI * rng.gen::<f64>();
                    }
                    let ee = chain_raw(geom, &q).end_effector;
                    WorkspaceSample {
                        position: ee.position,
                        approach: ee.approach(),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Samples off the base axis that entered the histogram.
    pub used: usize,
}

/// Pearson test of the sample azimuths `atan2(y, x)` against a uniform
/// distribution over `bins` equal sectors.
pub fn azimuth_uniformity(samples: &[WorkspaceSample], bins: usize) -> Result<ChiSquareTest> {
    if bins < 2 {
        return Err(Error::invalid("need at least two azimuth bins"));
    }
    let mut counts = vec![0usize; bins];
    let mut used = 0;
    for s in samples {
        if s.radial() < AXIS_RADIUS {
            continue;
        }
        let u = (s.position.y.atan2(s.position.x) + PI) / (2.0 * PI);
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid("no samples off the base axis"));
    }
    let expected = used as f64 / bins as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        used,
    })
}

/// Unit vertices of a once-subdivided icosahedron, one of them at `+z`.
pub fn reference_directions() -> Vec<Vector3<f64>> {
    let ring_z = 1.0 / 5f64.sqrt();
    let ring_r = 2.0 / 5f64.sqrt();
    let mut base = vec![Vector3::z(), -Vector3::z()];
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0;
        base.push(Vector3::new(ring_r * a.cos(), ring_r * a.sin(), ring_z));
        let b = a + PI / 5.0;
        base.push(Vector3::new(ring_r * b.cos(), ring_r * b.sin(), -ring_z));
    }
    let edge = (base[0] - base[2]).norm();
    let mut out = base.clone();
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            if ((base[i] - base[j]).norm() - edge).abs() < 1e-9 {
                out.push((base[i] + base[j]).normalize());
            }
        }
    }
    out
}

/// Bins over radial distance from the base axis and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub rho_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_rho: usize,
    pub n_z: usize,
}

impl GridSpec {
    /// Square cells covering the ball of radius `total_length`.
    pub fn for_geometry(geom: &ArmGeometry, n_rho: usize) -> GridSpec {
        let r = geom.total_length();
        GridSpec {
            rho_max: r,
            z_min: -r,
            z_max: r,
            n_rho,
            n_z: 2 * n_rho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.rho_max.is_finite() && self.z_min.is_finite() && self.z_max.is_finite();
        if !finite || self.rho_max <= 0.0 || self.z_max <= self.z_min || self.n_rho == 0 || self.n_z == 0 {
            return Err(Error::invalid("grid needs positive extents and resolution"));
        }
        Ok(())
    }

    fn cell(&self, rho: f64, z: f64) -> Option<(usize, usize)> {
        let u = rho / self.rho_max;
        let v = (z - self.z_min) / (self.z_max - self.z_min);
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return None;
        }
        let i = ((u * self.n_rho as f64) as usize).min(self.n_rho - 1);
        let j = ((v * self.n_z as f64) as usize).min(self.n_z - 1);
        Some((i, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DexterityCell {
    pub rho_bin: usize,
    pub z_bin: usize,
    pub rho_center: f64,
    pub z_center: f64,
    pub samples: usize,
    /// `None` for unreachable cells.
    pub dexterity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DexterityMap {
    pub grid: GridSpec,
    pub angle_tol: f64,
    pub directions: usize,
    /// Row-major over `(rho_bin, z_bin)`.
    pub cells: Vec<DexterityCell>,
}

impl DexterityMap {
    pub fn cell(&self, rho_bin: usize, z_bin: usize) -> &DexterityCell {
        &self.cells[rho_bin * self.grid.n_z + z_bin]
    }

    pub fn reachable(&self) -> impl Iterator<Item = &DexterityCell> {
        self.cells.iter().filter(|c| c.dexterity.is_some())
    }

    /// Columns `x_bin, z_bin, x_center, z_center, samples, reachable, dexterity`,
    /// where `x` is the radial distance in the plane of the arm.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x_bin", "z_bin", "x_center", "z_center", "samples", "reachable", "dexterity"])?;
        for c in &self.cells {
            w.write_record([
                c.rho_bin.to_string(),
                c.z_bin.to_string(),
                c.rho_center.to_string(),
                c.z_center.to_string(),
                c.samples.to_string(),
                u8::from(c.dexterity.is_some()).to_string(),
                c.dexterity.unwrap_or(0.0).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone)]
struct Tally {
    counts: Vec<usize>,
    covered: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Tally {
        Tally {
            counts: vec![0; n],
            covered: vec![0; n],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for k in 0..self.counts.len() {
            self.counts[k] += other.counts[k];
            self.covered[k] |= other.covered[k];
        }
        self
    }
}

/// Fraction of reference directions met by some tool axis within
/// `angle_tol`, per `(rho, z)` cell.
///
/// Tool axes are rotated about the base axis by minus the sample's azimuth
/// first, so samples from every azimuth share one meridian plane.
pub fn dexterity_map(samples: &[WorkspaceSample], grid: &GridSpec, angle_tol: f64) -> Result<DexterityMap> {
    grid.validate()?;
    if !(angle_tol > 0.0 && angle_tol.is_finite()) {
        return Err(Error::invalid("angle tolerance must be > 0"));
    }
    let directions = reference_directions();
    let cos_tol = angle_tol.cos();
    let n_cells = grid.n_rho * grid.n_z;
    let tally = samples
        .par_chunks(CHUNK)
        .fold(
            || Tally::new(n_cells),
            |mut t, chunk| {
                for s in chunk {
                    let rho = s.radial();
                    let Some((i, j)) = grid.cell(rho, s.position.z) else {
                        continue;
                    };
                    let axis = if rho < AXIS_RADIUS {
                        s.approach
                    } else {
                        let azimuth = s.position.y.atan2(s.position.x);
                        Rotation3::from_axis_angle(&Vector3::z_axis(), -azimuth) * s.approach
                    };
                    let k = i * grid.n_z + j;
                    t.counts[k] += 1;
                    for (d, dir) in directions.iter().enumerate() {
                        if axis.dot(dir) >= cos_tol {
                            t.covered[k] |= 1 << d;
                        }
                    }
                }
                t
            },
        )
        .reduce(|| Tally::new(n_cells), Tally::merge);

    let drho = grid.rho_max / grid.n_rho as f64;
    let dz = (grid.z_max - grid.z_min) / grid.n_z as f64;
    let mut cells = Vec::with_capacity(n_cells);
    for i in 0..grid.n_rho {
        for j in 0..grid.n_z {
            let k = i * grid.n_z + j;
            cells.push(DexterityCell {
                rho_bin: i,
                z_bin: j,
                rho_center: (i as f64 + 0.5) * drho,
                z_center: grid.z_min + (j as f64 + 0.5) * dz,
                samples: tally.counts[k],
                dexterity: (tally.counts[k] > 0)
                    .then(|| tally.covered[k].count_ones() as f64 / directions.len() as f64),
            });
        }
    }
    Ok(DexterityMap {
        grid: *grid,
        angle_tol,
        directions: directions.len(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_has_42_unit_vertices() {
        let dirs = reference_directions();
        assert_eq!(dirs.len(), 42);
        assert!(dirs.iter().all(|d| (d.norm() - 1.0).abs() < 1e-12));
        for a in 0..42 {
            for b in a + 1..42 {
                assert!((dirs[a] - dirs[b]).norm() > 0.1);
            }
        }
        assert_eq!(dirs[0], Vector3::z());
    }

    #[test]
    fn samples_lie_in_the_ball_and_are_reproducible() {
        let geom = ArmGeometry::default();
        let a = monte_carlo_workspace(&geom, 10_000, 7).unwrap();
        let b = monte_carlo_workspace(&geom, 10_000, 7).unwrap();
        assert_eq!(a.len(), 10_000);
        assert_eq!(a, b);
        let r = geom.total_length();
        assert!(a.iter().all(|s| s.position.norm() <= r * (1.0 + 1e-12)));
        assert_ne!(a, monte_carlo_workspace(&geom, 10_000, 8).unwrap());
    }

    #[test]
    fn degenerate_box_is_one_point() {
        let mut geom = ArmGeometry::default();
        geom.theta_max = [0.0; 3];
        let samples = monte_carlo_workspace(&geom, 100, 1).unwrap();
        let tip = Vector3::new(0.0, 0.0, geom.total_length());
        assert!(samples.iter().all(|s| (s.position - tip).norm() < 1e-15));
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(monte_carlo_workspace(&ArmGeometry::default(), 0, 0).is_err());
    }

    #[test]
    fn straight_arm_cell_counts_cone_vertices() {
        let geom = ArmGeometry::default();
        let s = WorkspaceSample {
            position: Vector3::new(0.0, 0.0, geom.total_length()),
            approach: Vector3::z(),
        };
        let grid = GridSpec::for_geometry(&geom, 10);
        let map = dexterity_map(&[s; 5], &grid, DEFAULT_ANGLE_TOL).unwrap();
        // oracle: count vertices within 10 degrees of +z by angle
        let within = reference_directions()
            .iter()
            .filter(|d| d.z.clamp(-1.0, 1.0).acos() <= DEFAULT_ANGLE_TOL)
            .count();
        let reached: Vec<_> = map.reachable().collect();
        assert_eq!(reached.len(), 1);
        assert_eq!(reached[0].dexterity, Some(within as f64 / 42.0));
        assert_eq!(reached[0].samples, 5);
        assert!(map.cells.iter().filter(|c| c.samples == 0).all(|c| c.dexterity.is_none()));
    }

    #[test]
    fn full_coverage_is_one() {
        let samples: Vec<WorkspaceSample> = reference_directions()
            .into_iter()
            .map(|d| WorkspaceSample {
                position: Vector3::new(0.0, 0.0, 0.1),
                approach: d,
            })
            .collect();
        let grid = GridSpec::for_geometry(&ArmGeometry::default(), 4);
        let map = dexterity_map(&samples, &grid, DEFAULT_ANGLE_TOL).unwrap();
        assert_eq!(map.reachable().next().unwrap().dexterity, Some(1.0));
    }

    #[test]
    fn azimuth_rotation_aligns_samples() {
        // same bend seen at two azimuths lands on the same reference vertex
        let tilt = Vector3::new(0.6, 0.0, 0.8);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0);
        let a = WorkspaceSample {
            position: Vector3::new(0.2, 0.0, 0.3),
            approach: tilt,
        };
        let b = WorkspaceSample {
            position: rot * a.position,
            approach: rot * tilt,
        };
        let grid = GridSpec::for_geometry(&ArmGeometry::default(), 10);
        let one = dexterity_map(&[a], &grid, DEFAULT_ANGLE_TOL).unwrap();
        let both = dexterity_map(&[a, b], &grid, DEFAULT_ANGLE_TOL).unwrap();
        let d1 = one.reachable().next().unwrap().dexterity;
        let d2 = both.reachable().next().unwrap().dexterity;
        assert_eq!(d1, d2);
    }

    #[test]
    fn bad_grid_rejected() {
        let mut grid = GridSpec::for_geometry(&ArmGeometry::default(), 0);
        assert!(dexterity_map(&[], &grid, DEFAULT_ANGLE_TOL).is_err());
        grid.n_rho = 3;
        assert!(dexterity_map(&[], &grid, 0.0).is_err());
    }

    #[test]
    fn chi_square_detects_skew() {
        let geom = ArmGeometry::default();
        let samples = monte_carlo_workspace(&geom, 50_000, 3).unwrap();
        let test = azimuth_uniformity(&samples, 36).unwrap();
        assert!(test.p_value > 1e-4, "{test:?}");
        let skewed: Vec<_> = samples.iter().copied().filter(|s| s.position.y > -0.01).collect();
        assert!(azimuth_uniformity(&skewed, 36).unwrap().p_value < 1e-6);
    }
}
