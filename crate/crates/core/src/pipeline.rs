//! Glue for one initialization window: preintegration per keyframe interval,
//! gyroscope bias with one re-linearization pass, then the accelerometer
//! subproblem.

use nalgebra::Vector3;

use crate::accel::{self, InitSolution, ResidualBlock};
use crate::error::{Error, Result};
use crate::gyro::{self, GyroPair, GyroProblem, LmConfig};
use crate::keyframe::{Extrinsics, KeyframePose};
use crate::preintegration::{preintegrate_between, ImuSample, NoiseSpec, PreintegratedDelta};
use crate::scalar::Real;

/// Keyframes plus the IMU samples of each interval between them.
#[derive(Clone, Debug)]
pub struct Window<'a, T: Real> {
    pub keyframes: &'a [KeyframePose<T>],
    /// `intervals[k]` holds the samples in `[keyframes[k].t, keyframes[k+1].t)`,
    /// preceded by the last sample before `keyframes[k].t` when one exists.
    pub intervals: Vec<&'a [ImuSample<T>]>,
}

impl<'a, T: Real> Window<'a, T> {
    /// Splits a time-ordered sample stream at the keyframe timestamps.
    ///
    /// Keyframes need not fall on IMU ticks: the sample active at a keyframe
    /// time is held from that time on.
    pub fn from_stream(keyframes: &'a [KeyframePose<T>], samples: &'a [ImuSample<T>]) -> Result<Self> {
        let intervals = keyframes
            .windows(2)
            .map(|pair| {
                let lo = samples.partition_point(|s| s.t <= pair[0].t).saturating_sub(1);
                let hi = samples.partition_point(|s| s.t < pair[1].t);
                if lo >= hi {
                    return Err(Error::EmptySamples);
                }
                Ok(&samples[lo..hi])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { keyframes, intervals })
    }

    pub fn preintegrate(
        &self,
        bias_g: &Vector3<T>,
        bias_a: &Vector3<T>,
        noise: &NoiseSpec<T>,
    ) -> Result<Vec<PreintegratedDelta<T>>> {
        if self.intervals.len() + 1 != self.keyframes.len() {
            return Err(Error::InvalidConfig("interval count must be keyframes - 1".into()));
        }
        self.intervals
            .iter()
            .zip(self.keyframes.windows(2))
            .map(|(samples, kf)| preintegrate_between(samples, kf[0].t, kf[1].t, bias_g, bias_a, noise))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct GyroEstimate<T: Real> {
    pub bias_g: Vector3<T>,
    pub cost: T,
    pub iterations: usize,
    pub converged: bool,
    /// Deltas re-integrated at `bias_g` (zero accelerometer bias).
    pub deltas: Vec<PreintegratedDelta<T>>,
}

fn gyro_problem<T: Real>(
    keyframes: &[KeyframePose<T>],
    deltas: &[PreintegratedDelta<T>],
    extrinsics: &Extrinsics<T>,
) -> Result<GyroProblem<T>> {
    let pairs = deltas
        .iter()
        .zip(keyframes.windows(2))
        .map(|(delta, kf)| GyroPair {
            delta: delta.clone(),
            rot_i: extrinsics.body_rotation(&kf[0]),
            rot_j: extrinsics.body_rotation(&kf[1]),
        })
        .collect();
    GyroProblem::new(pairs)
}

/// Solves for the gyroscope bias from zero, re-integrates at the estimate
/// (refreshing Jacobians and weights), solves once more, and returns deltas
/// integrated at the final bias.
pub fn estimate_gyro_bias<T: Real>(
    window: &Window<'_, T>,
    initial_deltas: &[PreintegratedDelta<T>],
    extrinsics: &Extrinsics<T>,
    noise: &NoiseSpec<T>,
    config: &LmConfig,
) -> Result<GyroEstimate<T>> {
    let zero = Vector3::zeros();
    let first = gyro::solve_gyro_bias(&gyro_problem(window.keyframes, initial_deltas, extrinsics)?, config)?;
    let relinearized = window.preintegrate(&first.bias_g, &zero, noise)?;
    let second = gyro::solve_gyro_bias_from(
        &gyro_problem(window.keyframes, &relinearized, extrinsics)?,
        &first.bias_g,
        config,
    )?;
    let deltas = window.preintegrate(&second.bias_g, &zero, noise)?;
    Ok(GyroEstimate {
        bias_g: second.bias_g,
        cost: second.final_cost,
        iterations: first.iterations + second.iterations,
        converged: second.converged,
        deltas,
    })
}

/// Intermediate products of [`initialize`].
#[derive(Clone, Debug)]
pub struct Prepared<T: Real> {
    pub excitation_ok: bool,
    pub gyro: GyroEstimate<T>,
    pub blocks: Vec<ResidualBlock<T>>,
}

/// Runs everything up to (not including) the accelerometer solve.
pub fn prepare<T: Real>(
    window: &Window<'_, T>,
    extrinsics: &Extrinsics<T>,
    noise: &NoiseSpec<T>,
    config: &LmConfig,
) -> Result<Prepared<T>> {
    if window.keyframes.len() < 5 {
        return Err(Error::Underdetermined { needed: 5, got: window.keyframes.len() });
    }
    let zero = Vector3::zeros();
    let initial = window.preintegrate(&zero, &zero, noise)?;
    let excitation_ok = accel::check_excitation(&initial);
    let gyro = estimate_gyro_bias(window, &initial, extrinsics, noise, config)?;
    let blocks = accel::build_residual_blocks(window.keyframes, &gyro.deltas, extrinsics)?;
    Ok(Prepared { excitation_ok, gyro, blocks })
}

/// Full analytic initialization of one window. The excitation check is
/// recorded in the diagnostics but does not stop the solve.
pub fn initialize<T: Real>(
    window: &Window<'_, T>,
    extrinsics: &Extrinsics<T>,
    noise: &NoiseSpec<T>,
    config: &LmConfig,
) -> Result<InitSolution<T>> {
    let prepared = prepare(window, extrinsics, noise, config)?;
    let mut sol = accel::solve_analytic(&prepared.blocks)?;
    sol.diagnostics.excitation_ok = Some(prepared.excitation_ok);
    Ok(sol)
}
