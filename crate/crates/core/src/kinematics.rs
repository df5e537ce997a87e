//! Constant-curvature kinematics of the three-segment arm.
//!
//! Each segment is a circular arc of fixed length parameterised by its
//! bending angle `theta` and bending-plane azimuth `phi`. The arm pose is the
//! product of the three segment transforms. Inverse kinematics runs a damped
//! pseudoinverse iteration on a finite-difference Jacobian, with a null-space
//! bias toward low curvature and seeded multi-start restarts.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this bend angle the arc functions switch to their series expansions.
pub const SMALL_ANGLE: f64 = 1e-7;

/// Central-difference step used by [`jacobian`].
pub const JACOBIAN_STEP: f64 = 1e-6;

/// How the tendon azimuth is chosen inside the cumulative tendon-length sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AzimuthConvention {
    /// Use the offset of the segment being traversed (`psi_{n,j}`).
    #[default]
    Traversed,
    /// Use the offset of the segment that owns the tendon (`psi_{i,j}`).
    Owning,
}

impl AzimuthConvention {
    fn is_default(&self) -> bool {
        *self == AzimuthConvention::Traversed
    }
}

/// Fixed plant description of the arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    /// Backbone arc length of each segment, meters.
    pub lengths: [f64; 3],
    /// Radius at which tendons are anchored on the discs, meters.
    pub anchor_radius: f64,
    /// Angular offset of each segment's tendon triad, radians.
    pub azimuth_offsets: [f64; 3],
    /// Number of backbone discs per segment.
    pub disc_counts: [u32; 3],
    /// Per-segment bending limit, radians.
    pub theta_max: [f64; 3],
    #[serde(default, skip_serializing_if = "AzimuthConvention::is_default")]
    pub azimuth_convention: AzimuthConvention,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        // 0.47 m of backbone split over 25 discs as 9/9/7.
        ArmGeometry {
            lengths: [0.1692, 0.1692, 0.1316],
            anchor_radius: 0.015,
            azimuth_offsets: [0.0; 3],
            disc_counts: [9, 9, 7],
            theta_max: [2.0 * PI / 3.0; 3],
            azimuth_convention: AzimuthConvention::Traversed,
        }
    }
}

impl ArmGeometry {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            let l = self.lengths[i];
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid(format!("segment {} length must be > 0, got {l}", i + 1)));
            }
            if self.disc_counts[i] < 1 {
                return Err(Error::invalid(format!("segment {} needs at least one disc", i + 1)));
            }
            let t = self.theta_max[i];
            if !(0.0..=PI).contains(&t) {
                return Err(Error::invalid(format!(
                    "segment {} theta_max must lie in [0, pi], got {t}",
                    i + 1
                )));
            }
            if !self.azimuth_offsets[i].is_finite() {
                return Err(Error::invalid("azimuth offsets must be finite"));
            }
        }
        if !(self.anchor_radius.is_finite() && self.anchor_radius > 0.0) {
            return Err(Error::invalid(format!(
                "anchor radius must be > 0, got {}",
                self.anchor_radius
            )));
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let geom: ArmGeometry = serde_json::from_str(text)?;
        geom.validate()?;
        Ok(geom)
    }
}

/// Configuration-space vector `(theta_i, phi_i)` for the three segments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointConfig {
    pub theta: [f64; 3],
    pub phi: [f64; 3],
}

impl JointConfig {
    pub fn new(theta: [f64; 3], phi: [f64; 3]) -> Self {
        JointConfig { theta, phi }
    }

    pub fn straight() -> Self {
        JointConfig::default()
    }

    /// Interleaved `(theta1, phi1, theta2, phi2, theta3, phi3)`.
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.theta[0],
            self.phi[0],
            self.theta[1],
            self.phi[1],
            self.theta[2],
            self.phi[2],
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        JointConfig {
            theta: [v[0], v[2], v[4]],
            phi: [v[1], v[3], v[5]],
        }
    }

    /// Wraps every azimuth into `[-pi, pi)`.
    pub fn normalized(mut self) -> Self {
        for phi in &mut self.phi {
            *phi = normalize_angle(*phi);
        }
        self
    }

    pub fn validate(&self, geom: &ArmGeometry) -> Result<()> {
        for i in 0..3 {
            let (t, p) = (self.theta[i], self.phi[i]);
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::invalid(format!("segment {} angles must be finite", i + 1)));
            }
            if t < 0.0 || t > geom.theta_max[i] {
                return Err(Error::invalid(format!(
                    "segment {} theta = {t} outside [0, {}]",
                    i + 1,
                    geom.theta_max[i]
                )));
            }
        }
        Ok(())
    }

    /// Folds negative bends onto the opposite azimuth, clamps to the
    /// bending limits and wraps azimuths.
    pub fn clamped(mut self, geom: &ArmGeometry) -> Self {
        for i in 0..3 {
            if self.theta[i] < 0.0 {
                self.theta[i] = -self.theta[i];
                self.phi[i] += PI;
            }
            self.theta[i] = self.theta[i].min(geom.theta_max[i]);
        }
        self.normalized()
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = angle - two_pi * ((angle + PI) / two_pi).floor();
    if a >= PI {
        a -= two_pi;
    }
    if a < -PI {
        a += two_pi;
    }
    a
}

/// Rigid transform in SE(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, position: Vector3<f64>) -> Self {
        Pose { rotation, position }
    }

    /// `self * other`: express `other` (given in this frame) in the parent frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            position: self.rotation * other.position + self.position,
        }
    }

    /// Largest deviation of `R^T R` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let det = (self.rotation.determinant() - 1.0).abs();
        gram.amax().max(det)
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.iter().chain(self.position.iter()).all(|v| v.is_finite())
    }

    /// Tool axis (third rotation column) in the base frame.
    pub fn approach(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
        ]
    }

    pub fn from_row_major(rotation: [f64; 9], position: [f64; 3]) -> Self {
        Pose {
            rotation: Matrix3::from_row_slice(&rotation),
            position: Vector3::from(position),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    rotation: [f64; 9],
    position: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PoseRecord {
            rotation: self.rotation_row_major(),
            position: [self.position.x, self.position.y, self.position.z],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = PoseRecord::deserialize(deserializer)?;
        Ok(Pose::from_row_major(rec.rotation, rec.position))
    }
}

/// Six-component pose error: world-frame position difference and the
/// rotation error taken from the skew part of `R_u^T R_d`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseError {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl PoseError {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.linear.x,
            self.linear.y,
            self.linear.z,
            self.angular.x,
            self.angular.y,
            self.angular.z,
        )
    }

    pub fn linear_norm(&self) -> f64 {
        self.linear.norm()
    }

    pub fn angular_norm(&self) -> f64 {
        self.angular.norm()
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

impl Serialize for PoseError {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Rec {
            linear: [f64; 3],
            angular: [f64; 3],
        }
        Rec {
            linear: self.linear.into(),
            angular: self.angular.into(),
        }
        .serialize(serializer)
    }
}

/// `sin(t)/t` and `(1 - cos t)/t`, continuous through zero.
fn arc_factors(theta: f64) -> (f64, f64) {
    if theta.abs() < SMALL_ANGLE {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, theta / 2.0 - theta * t2 / 24.0)
    } else {
        let half = (theta / 2.0).sin();
        (theta.sin() / theta, 2.0 * half * half / theta)
    }
}

/// Segment transform valid for any real `theta`; a negative bend is the
/// same arc as a positive one at the opposite azimuth.
pub(crate) fn segment_transform_raw(theta: f64, phi: f64, length: f64) -> Pose {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let half = (theta / 2.0).sin();
    let ct_m1 = -2.0 * half * half;
    let rotation = Matrix3::new(
        cp * cp * ct + sp * sp,
        sp * cp * ct_m1,
        cp * st,
        sp * cp * ct_m1,
        cp * cp + sp * sp * ct,
        sp * st,
        -cp * st,
        -sp * st,
        ct,
    );
    let (sinc, versc) = arc_factors(theta);
    let position = Vector3::new(length * cp * versc, length * sp * versc, length * sinc);
    Pose { rotation, position }
}

/// Homogeneous transform from a segment's proximal disc to its distal disc.
pub fn segment_transform(theta: f64, phi: f64, length: f64) -> Result<Pose> {
    if !theta.is_finite() || !phi.is_finite() || !length.is_finite() {
        return Err(Error::invalid("segment parameters must be finite"));
    }
    if length <= 0.0 {
        return Err(Error::invalid(format!("segment length must be > 0, got {length}")));
    }
    if theta < 0.0 {
        return Err(Error::invalid(format!("bend angle must be >= 0, got {theta}")));
    }
    Ok(segment_transform_raw(theta, phi, length))
}

/// End-effector pose together with the cumulative frame of every segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardKinematics {
    pub end_effector: Pose,
    /// `T1`, `T1 T2`, `T1 T2 T3`.
    pub frames: [Pose; 3],
}

pub(crate) fn chain_raw(geom: &ArmGeometry, q: &JointConfig) -> ForwardKinematics {
    let mut frames = [Pose::identity(); 3];
    let mut acc = Pose::identity();
    for i in 0..3 {
        acc = acc.compose(&segment_transform_raw(q.theta[i], q.phi[i], geom.lengths[i]));
        frames[i] = acc;
    }
    ForwardKinematics {
        end_effector: acc,
        frames,
    }
}

pub fn forward_kinematics(geom: &ArmGeometry, q: &JointConfig) -> Result<ForwardKinematics> {
    geom.validate()?;
    q.validate(geom)?;
    Ok(chain_raw(geom, q))
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

pub fn pose_error(current: &Pose, desired: &Pose) -> PoseError {
    let linear = desired.position - current.position;
    let rel = current.rotation.transpose() * desired.rotation;
    let angular = 0.5 * vee(&(rel - rel.transpose()));
    PoseError { linear, angular }
}

pub(crate) fn jacobian_raw(geom: &ArmGeometry, q: &JointConfig, step: f64) -> Matrix6<f64> {
    let base = chain_raw(geom, q).end_effector;
    let v = q.to_vector();
    let mut jac = Matrix6::zeros();
    for k in 0..6 {
        let mut plus = v;
        let mut minus = v;
        plus[k] += step;
        minus[k] -= step;
        let e_plus = pose_error(&base, &chain_raw(geom, &JointConfig::from_vector(&plus)).end_effector);
        let e_minus = pose_error(&base, &chain_raw(geom, &JointConfig::from_vector(&minus)).end_effector);
        let col = (e_plus.to_vector() - e_minus.to_vector()) / (2.0 * step);
        jac.set_column(k, &col);
    }
    jac
}

/// Maps joint rates `(theta1, phi1, ..., phi3)` to the pose-error twist
/// (world linear velocity; body angular velocity).
pub fn jacobian(geom: &ArmGeometry, q: &JointConfig) -> Result<Matrix6<f64>> {
    geom.validate()?;
    q.validate(geom)?;
    Ok(jacobian_raw(geom, q, JACOBIAN_STEP))
}

/// `J^T (J J^T)^-1`, regularised when `J J^T` is ill-conditioned.
pub fn damped_pseudoinverse(jac: &Matrix6<f64>) -> Matrix6<f64> {
    const MAX_CONDITION: f64 = 1e8;
    let jjt = jac * jac.transpose();
    let eig = jjt.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let ill = !(min > 0.0) || max / min > MAX_CONDITION;
    let system = if ill {
        let eps = 1e-10 * jjt.trace() / 6.0;
        jjt + Matrix6::identity() * eps.max(f64::MIN_POSITIVE)
    } else {
        jjt
    };
    match system.cholesky() {
        Some(chol) => jac.transpose() * chol.inverse(),
        None => jac.transpose() * system.try_inverse().unwrap_or_else(Matrix6::zeros),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkOptions {
    pub max_iterations: usize,
    /// Convergence threshold on both the position (m) and the angular (rad) error norm.
    pub tol: f64,
    /// Extra randomly seeded local solves attempted after the first one fails.
    pub restarts: usize,
    pub seed: u64,
    /// Scale of the low-curvature bias projected into the Jacobian null space.
    pub null_space_gain: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            max_iterations: 200,
            tol: 1e-10,
            restarts: 16,
            seed: 0,
            null_space_gain: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub q: JointConfig,
    pub converged: bool,
    pub residual: PoseError,
    /// Accepted iterations summed over every local solve.
    pub iterations: usize,
    /// 0 for the caller's seed configuration, `r` for the r-th random restart.
    pub start_index: usize,
}

struct LocalSolve {
    q: JointConfig,
    residual: PoseError,
    distance: f64,
    converged: bool,
    iterations: usize,
}

fn is_converged(err: &PoseError, tol: f64) -> bool {
    err.linear_norm() < tol && err.angular_norm() < tol
}

/// Squared position error plus squared rotation angle. Unlike the sine-based
/// angular error this keeps growing up to a half-turn, so it serves as the
/// descent measure.
fn geodesic_error(current: &Pose, desired: &Pose) -> f64 {
    let rel = current.rotation.transpose() * desired.rotation;
    let angle = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
    (desired.position - current.position).norm_squared() + angle * angle
}

fn solve_local(geom: &ArmGeometry, q0: JointConfig, desired: &Pose, opts: &IkOptions) -> LocalSolve {
    let mut q = q0;
    let pose = chain_raw(geom, &q).end_effector;
    let mut err = pose_error(&pose, desired);
    let mut distance = geodesic_error(&pose, desired);
    let mut iterations = 0;
    if is_converged(&err, opts.tol) {
        return LocalSolve {
            q,
            residual: err,
            distance,
            converged: true,
            iterations,
        };
    }
    let mut gain = 1.0;
    for _ in 0..opts.max_iterations {
        let jac = jacobian_raw(geom, &q, JACOBIAN_STEP);
        let pinv = damped_pseudoinverse(&jac);
        let v = q.to_vector();
        // gradient of -sum(theta^2)
        let bias = Vector6::new(-2.0 * v[0], 0.0, -2.0 * v[2], 0.0, -2.0 * v[4], 0.0) * opts.null_space_gain;
        let null = (Matrix6::identity() - pinv * jac) * bias;
        let task = pinv * err.to_vector();
        // the bias is dropped when it alone spoils descent, which happens
        // where damping leaves the projector inexact
        let accepted = [task + null, task].into_iter().find_map(|step| {
            let candidate = JointConfig::from_vector(&(v + step * gain)).clamped(geom);
            let cand_pose = chain_raw(geom, &candidate).end_effector;
            let cand_err = pose_error(&cand_pose, desired);
            let cand_distance = geodesic_error(&cand_pose, desired);
            let descent = cand_distance < distance || (cand_distance == distance && cand_err.norm() < err.norm());
            descent.then_some((candidate, cand_err, cand_distance))
        });
        if let Some((candidate, cand_err, cand_distance)) = accepted {
            q = candidate;
            err = cand_err;
            distance = cand_distance;
            iterations += 1;
            gain = (gain * 2.0).min(1.0);
            if is_converged(&err, opts.tol) {
                return LocalSolve {
                    q,
                    residual: err,
                    distance,
                    converged: true,
                    iterations,
                };
            }
        } else {
            gain *= 0.5;
            if gain < 1e-12 {
                break;
            }
        }
    }
    LocalSolve {
        q,
        residual: err,
        distance,
        converged: false,
        iterations,
    }
}

/// Random in-limit configuration for restart `index`; each restart draws
/// from its own ChaCha stream so results do not depend on evaluation order.
pub(crate) fn restart_config(geom: &ArmGeometry, seed: u64, index: u64) -> JointConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut q = JointConfig::default();
    for i in 0..3 {
        q.theta[i] = rng.gen_range(0.0..=geom.theta_max[i]);
        q.phi[i] = rng.gen_range(-PI..PI);
    }
    q
}

/// Damped pseudoinverse IK with null-space bias and seeded multi-start.
///
/// Never fails on an unreachable target: the best candidate is returned
/// with `converged = false`.
pub fn inverse_kinematics(
    geom: &ArmGeometry,
    q_init: &JointConfig,
    desired: &Pose,
    opts: &IkOptions,
) -> Result<IkSolution> {
    geom.validate()?;
    if !desired.is_finite() {
        return Err(Error::invalid("desired pose must be finite"));
    }
    if !q_init.theta.iter().chain(q_init.phi.iter()).all(|v| v.is_finite()) {
        return Err(Error::invalid("initial configuration must be finite"));
    }
    let start = if q_init.validate(geom).is_ok() {
        *q_init
    } else {
        q_init.clamped(geom)
    };

    let mut best: Option<(f64, IkSolution)> = None;
    let mut total_iterations = 0;
    for index in 0..=opts.restarts {
        let q0 = if index == 0 {
            start
        } else {
            restart_config(geom, opts.seed, index as u64)
        };
        let local = solve_local(geom, q0, desired, opts);
        total_iterations += local.iterations;
        let better = match &best {
            None => true,
            Some((d, _)) => local.distance < *d,
        };
        if better {
            best = Some((
                local.distance,
                IkSolution {
                    q: local.q,
                    converged: local.converged,
                    residual: local.residual,
                    iterations: 0,
                    start_index: index,
                },
            ));
        }
        if local.converged {
            break;
        }
    }
    let (_, mut best) = best.expect("at least one local solve runs");
    best.iterations = total_iterations;
    Ok(best)
}
