//! Execution quality metrics and summary statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{pose_error, Pose};

/// Absolute slack, rad, before a sample counts as exceeding the steady value.
/// Linear interpolation toward the final state can land a few ulps past it.
pub const OVERSHOOT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentOvershoot {
    /// Fraction of the execution time spent above the steady bend magnitude.
    pub duration_ratio: f64,
    /// Largest excess over the steady bend, relative to it. `None` when the
    /// steady bend is zero but the trace is not.
    pub peak_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OvershootReport {
    pub segments: [SegmentOvershoot; 3],
}

/// Duration and peak overshoot of each segment's bend angle.
///
/// `times` are the sample instants and `thetas` the bend angles at them.
/// The duration integral uses the left rectangle rule over the sample
/// intervals, truncated at `total_time`.
pub fn overshoot_ratios(times: &[f64], thetas: &[[f64; 3]], theta_final: [f64; 3], total_time: f64) -> Result<OvershootReport> {
    if times.is_empty() || times.len() != thetas.len() {
        return Err(Error::invalid("overshoot needs a nonempty trace with one angle triple per sample"));
    }
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::invalid("overshoot needs a positive duration"));
    }
    let mut segments = [SegmentOvershoot {
        duration_ratio: 0.0,
        peak_ratio: Some(0.0),
    }; 3];
    for (i, seg) in segments.iter_mut().enumerate() {
        let steady = theta_final[i].abs();
        let mut above = 0.0;
        let mut peak = 0.0_f64;
        for k in 0..times.len() {
            let excess = thetas[k][i].abs() - steady;
            if excess > OVERSHOOT_EPS {
                let t0 = times[k].min(total_time);
                let t1 = times.get(k + 1).copied().unwrap_or(total_time).min(total_time);
                above += (t1 - t0).max(0.0);
                peak = peak.max(excess);
            }
        }
        seg.duration_ratio = (above / total_time).clamp(0.0, 1.0);
        seg.peak_ratio = if peak == 0.0 {
            Some(0.0)
        } else if steady > OVERSHOOT_EPS {
            Some(peak / steady)
        } else {
            None
        };
    }
    Ok(OvershootReport { segments })
}

/// Position and orientation RMS error of `poses` against `target`.
pub fn pose_rmse(poses: &[Pose], target: &Pose) -> Result<(f64, f64)> {
    if poses.is_empty() {
        return Err(Error::invalid("pose RMSE needs at least one pose"));
    }
    let n = poses.len() as f64;
    let (mut sp, mut so) = (0.0, 0.0);
    for pose in poses {
        let e = pose_error(pose, target);
        sp += e.linear.norm_squared();
        so += e.angular.norm_squared();
    }
    Ok(((sp / n).sqrt(), (so / n).sqrt()))
}

/// Quantile with linear interpolation between order statistics (type 7).
/// `sorted` must be ascending and nonempty; `p` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub count: usize,
}

impl Summary {
    /// `None` for an empty sample. NaNs sort last.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let q3 = quantile_sorted(&v, 0.75);
        Some(Summary {
            median: quantile_sorted(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
            count: v.len(),
        })
    }
}
