//! Mapping between configuration space and the nine tendon length changes.
//!
//! Tendon `c = 3(i-1) + j` is tendon `j` of layer `i`; layer `i` terminates
//! on segment `i`, so its length change accumulates the contributions of
//! segments `1..=i`. The inverse map peels those contributions off one
//! segment at a time.

use std::f64::consts::PI;
use std::ops::{Add, Index, IndexMut, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{normalize_angle, ArmGeometry, AzimuthConvention, JointConfig};

/// Per-segment deltas smaller than this are treated as a straight segment.
pub const ZERO_DELTA: f64 = 1e-12;

/// Slack allowed above `theta_max` before an actuation vector is rejected.
const LIMIT_SLACK: f64 = 1e-9;

/// Nine tendon length changes in meters, 0-based storage of tendons `t1..t9`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TendonVector(pub [f64; 9]);

impl TendonVector {
    pub fn zeros() -> Self {
        TendonVector([0.0; 9])
    }

    /// Value of tendon `c` (1-based).
    pub fn tendon(&self, c: usize) -> f64 {
        self.0[c - 1]
    }

    pub fn set_tendon(&mut self, c: usize, value: f64) {
        self.0[c - 1] = value;
    }

    /// The three deltas of layer `i` (1-based).
    pub fn layer(&self, i: usize) -> [f64; 3] {
        let base = 3 * (i - 1);
        [self.0[base], self.0[base + 1], self.0[base + 2]]
    }

    pub fn linf_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn linf_distance(&self, other: &TendonVector) -> f64 {
        (*self - *other).linf_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn validate(&self, geom: &ArmGeometry) -> Result<()> {
        let bound = geom.total_length();
        for (k, v) in self.0.iter().enumerate() {
            if !v.is_finite() || v.abs() >= bound {
                return Err(Error::invalid(format!("tendon t{} delta {v} is not a plausible length change", k + 1)));
            }
        }
        Ok(())
    }
}

impl Index<usize> for TendonVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl IndexMut<usize> for TendonVector {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.0[k]
    }
}

impl Add for TendonVector {
    type Output = TendonVector;
    fn add(mut self, rhs: TendonVector) -> TendonVector {
        for k in 0..9 {
            self.0[k] += rhs.0[k];
        }
        self
    }
}

impl Sub for TendonVector {
    type Output = TendonVector;
    fn sub(mut self, rhs: TendonVector) -> TendonVector {
        for k in 0..9 {
            self.0[k] -= rhs.0[k];
        }
        self
    }
}

/// Grouping of tendons into the three per-segment layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerPartition;

impl LayerPartition {
    pub const LAYERS: [[usize; 3]; 3] = [[1, 2, 3], [4, 5, 6], [7, 8, 9]];

    /// Tendons of layer `i` (1-based).
    pub fn layer(i: usize) -> [usize; 3] {
        Self::LAYERS[i - 1]
    }

    /// Layer (1-based) that tendon `c` belongs to.
    pub fn layer_of(c: usize) -> usize {
        (c - 1) / 3 + 1
    }
}

fn check_segment_index(v: usize, what: &str) -> Result<()> {
    if (1..=3).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} index {v} outside 1..=3")))
    }
}

/// Azimuth of tendon `j` in segment `i`, in `[0, 2pi)`.
pub fn tendon_azimuth(geom: &ArmGeometry, i: usize, j: usize) -> Result<f64> {
    check_segment_index(i, "segment")?;
    check_segment_index(j, "tendon")?;
    Ok(azimuth_raw(geom, i, j))
}

fn azimuth_raw(geom: &ArmGeometry, i: usize, j: usize) -> f64 {
    let psi = geom.azimuth_offsets[i - 1] + 2.0 * PI / 3.0 * (j as f64 - 1.0);
    psi.rem_euclid(2.0 * PI)
}

/// Azimuth used for tendon `j` of layer `owner` while crossing segment `n`.
fn contribution_azimuth(geom: &ArmGeometry, n: usize, owner: usize, j: usize) -> f64 {
    match geom.azimuth_convention {
        AzimuthConvention::Traversed => azimuth_raw(geom, n, j),
        AzimuthConvention::Owning => azimuth_raw(geom, owner, j),
    }
}

/// `sin(x)/x - 1` without cancellation near zero.
fn sinc_minus_one(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        -x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x - 1.0
    }
}

/// Length change of a tendon at azimuth `psi` crossing segment `n` (1-based)
/// bent by `(theta, phi)`: chord chain of `xi` links minus the arc length.
fn segment_contribution(geom: &ArmGeometry, n: usize, theta: f64, phi: f64, psi: f64) -> f64 {
    let length = geom.lengths[n - 1];
    let xi = geom.disc_counts[n - 1] as f64;
    let x = theta / (2.0 * xi);
    let chord = 2.0 * xi * x.sin();
    length * sinc_minus_one(x) - chord * geom.anchor_radius * (psi - phi).cos()
}

pub(crate) fn config_to_tendons_raw(geom: &ArmGeometry, q: &JointConfig) -> TendonVector {
    let mut out = TendonVector::zeros();
    for i in 1..=3 {
        for j in 1..=3 {
            let mut sum = 0.0;
            for n in 1..=i {
                let psi = contribution_azimuth(geom, n, i, j);
                sum += segment_contribution(geom, n, q.theta[n - 1], q.phi[n - 1], psi);
            }
            out[3 * (i - 1) + (j - 1)] = sum;
        }
    }
    out
}

pub fn config_to_tendons(geom: &ArmGeometry, q: &JointConfig) -> Result<TendonVector> {
    geom.validate()?;
    q.validate(geom)?;
    Ok(config_to_tendons_raw(geom, q))
}

fn recover(geom: &ArmGeometry, dl: &TendonVector, enforce_limits: bool) -> Result<JointConfig> {
    if !dl.is_finite() {
        return Err(Error::invalid("tendon deltas must be finite"));
    }
    let mut q = JointConfig::default();
    let r = geom.anchor_radius;
    let sqrt3 = 3.0_f64.sqrt();
    for i in 1..=3 {
        let mut d = dl.layer(i);
        for (j, dj) in d.iter_mut().enumerate() {
            for n in 1..i {
                let psi = contribution_azimuth(geom, n, i, j + 1);
                *dj -= segment_contribution(geom, n, q.theta[n - 1], q.phi[n - 1], psi);
            }
        }
        let [d1, d2, d3] = d;
        if d.iter().all(|v| v.abs() < ZERO_DELTA) {
            continue;
        }
        let length = geom.lengths[i - 1];
        let local_phi = (-sqrt3 * (d2 - d3)).atan2(-(2.0 * d1 - d2 - d3));
        let numerator = (3.0 * (d2 - d3).powi(2) + 3.0 * (d2 + d3 - 2.0 * d1).powi(2)).sqrt() * length;
        let c = local_phi.cos();
        let denominator = r * (1.0 + 2.0 * c * c).sqrt() * (3.0 * length + d1 + d2 + d3);
        if !(denominator > 0.0) {
            return Err(Error::InconsistentActuation(format!(
                "segment {i}: layer deltas imply non-positive arc length"
            )));
        }
        let theta = numerator / denominator;
        if enforce_limits && theta > geom.theta_max[i - 1] + LIMIT_SLACK {
            return Err(Error::InconsistentActuation(format!(
                "segment {i}: recovered bend {theta} exceeds limit {}",
                geom.theta_max[i - 1]
            )));
        }
        q.theta[i - 1] = theta;
        q.phi[i - 1] = normalize_angle(local_phi + geom.azimuth_offsets[i - 1]);
    }
    Ok(q)
}

/// Recovers `(theta_i, phi_i)` from tendon deltas, rejecting vectors that
/// imply a bend beyond the joint limits.
pub fn tendons_to_config(geom: &ArmGeometry, dl: &TendonVector) -> Result<JointConfig> {
    geom.validate()?;
    recover(geom, dl, true)
}

/// Same recovery as [`tendons_to_config`] without the joint-limit check.
///
/// Intermediate planner and execution states are not generally produced by
/// a consistent configuration; their apparent bend can exceed the limits
/// and that excursion is exactly what the overshoot metrics measure.
pub fn tendons_to_config_relaxed(geom: &ArmGeometry, dl: &TendonVector) -> Result<JointConfig> {
    recover(geom, dl, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn geom() -> ArmGeometry {
        ArmGeometry::default()
    }

    #[test]
    fn azimuth_values() {
        let g = geom();
        assert_eq!(tendon_azimuth(&g, 1, 1).unwrap(), 0.0);
        assert_abs_diff_eq!(tendon_azimuth(&g, 2, 3).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-15);
        let g2 = ArmGeometry {
            azimuth_offsets: [PI / 9.0, 0.3, 0.1],
            ..geom()
        };
        assert_abs_diff_eq!(tendon_azimuth(&g2, 1, 2).unwrap(), PI / 9.0 + 2.0 * PI / 3.0, epsilon = 1e-15);
        assert!(tendon_azimuth(&g, 0, 1).is_err());
        assert!(tendon_azimuth(&g, 1, 4).is_err());
    }

    #[test]
    fn straight_arm_has_zero_deltas() {
        let dl = config_to_tendons(&geom(), &JointConfig::straight()).unwrap();
        assert_eq!(dl, TendonVector::zeros());
        assert_eq!(tendons_to_config(&geom(), &dl).unwrap(), JointConfig::straight());
    }

    #[test]
    fn inner_tendon_shortens() {
        let g = geom();
        let q = JointConfig::new([0.9, 0.0, 0.0], [tendon_azimuth(&g, 1, 1).unwrap(), 0.0, 0.0]);
        let dl = config_to_tendons(&g, &q).unwrap();
        assert!(dl.tendon(1) < 0.0);
        assert_abs_diff_eq!(dl.tendon(2), dl.tendon(3), epsilon = 1e-15);
        assert!(dl.tendon(2) > dl.tendon(1));
    }

    #[test]
    fn azimuth_rotation_permutes_layer() {
        let g = geom();
        let a = config_to_tendons(&g, &JointConfig::new([0.7, 0.0, 0.0], [0.4, 0.0, 0.0])).unwrap();
        let b = config_to_tendons(&g, &JointConfig::new([0.7, 0.0, 0.0], [0.4 + 2.0 * PI / 3.0, 0.0, 0.0])).unwrap();
        // rotating the bend by one tendon spacing shifts tendon j's value to j+1
        assert_abs_diff_eq!(b.tendon(2), a.tendon(1), epsilon = 1e-15);
        assert_abs_diff_eq!(b.tendon(3), a.tendon(2), epsilon = 1e-15);
        assert_abs_diff_eq!(b.tendon(1), a.tendon(3), epsilon = 1e-15);
    }

    #[test]
    fn distal_segment_never_moves_proximal_layers() {
        let g = geom();
        let a = config_to_tendons(&g, &JointConfig::new([0.5, 0.9, 0.2], [0.1, 2.0, -1.0])).unwrap();
        let b = config_to_tendons(&g, &JointConfig::new([0.5, 0.9, 1.7], [0.1, 2.0, 2.5])).unwrap();
        assert_eq!(&a.0[..6], &b.0[..6]);
    }

    #[test]
    fn layer_sum_is_independent_of_azimuth() {
        let g = geom();
        let theta: f64 = 1.1;
        let xi = g.disc_counts[0] as f64;
        let l = g.lengths[0];
        let expected = 3.0 * l * (2.0 * xi * (theta / (2.0 * xi)).sin() / theta - 1.0);
        for &phi in &[0.0, 0.5, 2.9, -1.3] {
            let dl = config_to_tendons(&g, &JointConfig::new([theta, 0.0, 0.0], [phi, 0.0, 0.0])).unwrap();
            let sum: f64 = dl.layer(1).iter().sum();
            assert_abs_diff_eq!(sum, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn continuous_at_zero_bend() {
        let g = geom();
        let theta = 1e-7;
        let phi = 0.8;
        let dl = config_to_tendons(&g, &JointConfig::new([theta, 0.0, 0.0], [phi, 0.0, 0.0])).unwrap();
        for j in 1..=3 {
            let psi = tendon_azimuth(&g, 1, j).unwrap();
            let series = -theta * g.anchor_radius * (psi - phi).cos();
            assert!((dl.tendon(j) - series).abs() < 1e-10);
        }
    }

    #[test]
    fn scaling_deltas_keeps_azimuth() {
        let g = geom();
        let q = JointConfig::new([0.8, 0.0, 0.0], [1.2, 0.0, 0.0]);
        let dl = config_to_tendons(&g, &q).unwrap();
        let [d1, d2, d3] = dl.layer(1);
        let sqrt3 = 3.0_f64.sqrt();
        let phi_of = |a: f64, b: f64, c: f64| (-sqrt3 * (b - c)).atan2(-(2.0 * a - b - c));
        let base = phi_of(d1, d2, d3);
        for &k in &[0.5, 2.0, 7.5] {
            assert_abs_diff_eq!(phi_of(k * d1, k * d2, k * d3), base, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(base, 1.2, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bend_beyond_limit() {
        let g = geom();
        let wide = ArmGeometry {
            theta_max: [PI; 3],
            ..geom()
        };
        let dl = config_to_tendons(&wide, &JointConfig::new([2.8, 0.0, 0.0], [0.3, 0.0, 0.0])).unwrap();
        assert!(matches!(tendons_to_config(&g, &dl), Err(Error::InconsistentActuation(_))));
        let q = tendons_to_config_relaxed(&g, &dl).unwrap();
        assert_abs_diff_eq!(q.theta[0], 2.8, epsilon = 1e-12);
    }

    #[test]
    fn rejects_collapsed_segment() {
        let g = geom();
        let dl = TendonVector([-0.2, -0.2, -0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(tendons_to_config_relaxed(&g, &dl), Err(Error::InconsistentActuation(_))));
    }

    #[test]
    fn owning_convention_round_trips() {
        let g = ArmGeometry {
            azimuth_offsets: [0.1, 0.5, -0.7],
            azimuth_convention: AzimuthConvention::Owning,
            ..geom()
        };
        let q = JointConfig::new([0.6, 1.4, 0.9], [0.2, -2.2, 1.9]);
        let back = tendons_to_config(&g, &config_to_tendons(&g, &q).unwrap()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(back.theta[i], q.theta[i], epsilon = 1e-10);
            assert_abs_diff_eq!(back.phi[i], q.phi[i], epsilon = 1e-10);
        }
    }

    fn angle_gap(a: f64, b: f64) -> f64 {
        normalize_angle(a - b).abs()
    }

    proptest! {
        #[test]
        fn round_trip(
            t in proptest::array::uniform3(1e-4..(2.0 * PI / 3.0)),
            p in proptest::array::uniform3(-PI..PI),
            offsets in proptest::array::uniform3(-1.0..1.0f64),
        ) {
            let g = ArmGeometry { azimuth_offsets: offsets, ..geom() };
            let q = JointConfig::new(t, p);
            let back = tendons_to_config(&g, &config_to_tendons(&g, &q).unwrap()).unwrap();
            for i in 0..3 {
                prop_assert!((back.theta[i] - q.theta[i]).abs() < 1e-9);
                prop_assert!(angle_gap(back.phi[i], q.phi[i]) < 1e-9);
            }
        }
    }
}
