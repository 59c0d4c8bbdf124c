use viinit::{Pose, Sample};

use crate::error::{IngestError, Result};

/// Slack for `(t1 - t0)·rate` landing just below an integer.
const TICK_EPS: f64 = 1e-9;

/// Picks the pose nearest to each tick `t0 + k/rate` in `[t0, t1]`.
///
/// Yields `floor((t1 - t0)·rate) + 1` keyframes. A tick with no pose within
/// `0.5/rate`, or two ticks resolving to the same pose, is a missing keyframe.
/// `poses` must be sorted by time.
pub fn select_keyframes(poses: &[Pose], rate: f64, t0: f64, t1: f64) -> Result<Vec<Pose>> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(IngestError::InvalidArgument(format!("keyframe rate must be positive, got {rate}")));
    }
    if !(t1 >= t0) {
        return Err(IngestError::InvalidArgument(format!("empty window [{t0}, {t1}]")));
    }
    let count = ((t1 - t0) * rate + TICK_EPS).floor() as usize + 1;
    let max_gap = 0.5 / rate;
    let mut out: Vec<Pose> = Vec::with_capacity(count);
    for k in 0..count {
        let tick = t0 + k as f64 / rate;
        let i = poses.partition_point(|p| p.t < tick);
        let nearest = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| poses.get(j))
            .min_by(|a, b| (a.t - tick).abs().total_cmp(&(b.t - tick).abs()))
            .filter(|p| (p.t - tick).abs() <= max_gap)
            .filter(|p| out.last().is_none_or(|prev| p.t > prev.t));
        out.push(*nearest.ok_or(IngestError::MissingKeyframe { tick, max_gap })?);
    }
    Ok(out)
}

/// Samples with `t_start ≤ t < t_end`.
///
/// Adjacent slices `[a, b)` and `[b, c)` partition the stream.
pub fn slice_imu(samples: &[Sample], t_start: f64, t_end: f64) -> Result<&[Sample]> {
    if !(t_start < t_end) {
        return Err(IngestError::InvalidArgument(format!("empty range [{t_start}, {t_end})")));
    }
    let lo = samples.partition_point(|s| s.t < t_start);
    let hi = samples.partition_point(|s| s.t < t_end);
    if lo >= hi {
        return Err(IngestError::EmptySlice { start: t_start, end: t_end });
    }
    Ok(&samples[lo..hi])
}
