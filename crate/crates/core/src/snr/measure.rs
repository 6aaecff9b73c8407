//! Measured SNR of a reconstructed image.

use serde::{Deserialize, Serialize};

use super::masks::{RegionMasks, MIN_REGION};
use crate::error::{Error, Result};
use crate::jpd::{Jpd, ProjectionImage, Snapshot};
use crate::scalar::Real;

/// SNR with its one-sigma uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Snr {
    Finite { value: f64, error: f64 },
    /// Noise region has zero spread.
    Infinite,
}

impl Snr {
    pub fn value(&self) -> f64 {
        match *self {
            Snr::Finite { value, .. } => value,
            Snr::Infinite => f64::INFINITY,
        }
    }

    pub fn error(&self) -> f64 {
        match *self {
            Snr::Finite { error, .. } => error,
            Snr::Infinite => f64::NAN,
        }
    }
}

/// Region statistics behind an SNR value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub signal_mean: f64,
    pub signal_pixels: usize,
    pub noise_mean: f64,
    pub noise_std: f64,
    pub noise_pixels: usize,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt(), n)
}

fn check_masks(width: usize, height: usize, masks: &RegionMasks) -> Result<()> {
    if (masks.width, masks.height) != (width, height) {
        return Err(Error::Config(format!(
            "masks are {}x{}, image is {width}x{height}",
            masks.width, masks.height
        )));
    }
    if masks.signal.len() < MIN_REGION || masks.noise.len() < MIN_REGION {
        return Err(Error::DegenerateMask(format!(
            "regions need at least {MIN_REGION} pixels (signal {}, noise {})",
            masks.signal.len(),
            masks.noise.len()
        )));
    }
    Ok(())
}

/// Signal and noise statistics of `values` (row-major, `width x height`).
pub fn region_stats(values: &[f64], width: usize, height: usize, masks: &RegionMasks) -> Result<RegionStats> {
    check_masks(width, height, masks)?;
    let (signal_mean, _, signal_pixels) = mean_std(masks.signal.iter().map(|&k| values[k]));
    let (noise_mean, noise_std, noise_pixels) = mean_std(masks.noise.iter().map(|&k| values[k]));
    Ok(RegionStats {
        signal_mean,
        signal_pixels,
        noise_mean,
        noise_std,
        noise_pixels,
    })
}

/// `mean(signal) / std(noise)`.
///
/// The error propagates the standard error of the signal mean and the sampling
/// error of the noise std: `sqrt((sem / std)^2 + SNR^2 / (2 (n - 1)))`.
pub fn measure_snr<T: Real>(image: &ProjectionImage<T>, masks: &RegionMasks) -> Result<(Snr, RegionStats)> {
    let values: Vec<f64> = image.values().iter().map(|v| v.as_f64()).collect();
    let stats = region_stats(&values, image.width(), image.height(), masks)?;
    if stats.noise_std == 0.0 {
        return Ok((Snr::Infinite, stats));
    }
    let (_, signal_std, ns) = mean_std(masks.signal.iter().map(|&k| values[k]));
    let snr = stats.signal_mean / stats.noise_std;
    let sem = signal_std / (ns as f64).sqrt();
    let error = ((sem / stats.noise_std).powi(2)
        + snr * snr / (2.0 * (stats.noise_pixels as f64 - 1.0)))
        .sqrt();
    Ok((Snr::Finite { value: snr, error }, stats))
}

/// Jackknife standard error of a statistic over leave-one-block-out estimates.
pub fn jackknife_error(estimates: &[f64]) -> f64 {
    let n = estimates.len() as f64;
    if estimates.len() < 2 {
        return f64::NAN;
    }
    let mean = estimates.iter().sum::<f64>() / n;
    ((n - 1.0) / n * estimates.iter().map(|t| (t - mean).powi(2)).sum::<f64>()).sqrt()
}

/// SNR of the image produced by `image_of` from all blocks, with the error
/// replaced by the block jackknife estimate.
pub fn measure_snr_jackknife<F>(snapshot: &Snapshot, masks: &RegionMasks, image_of: F) -> Result<(Snr, RegionStats)>
where
    F: Fn(&Jpd) -> Result<ProjectionImage<f64>>,
{
    let (full, stats) = measure_snr(&image_of(&snapshot.jpd()?)?, masks)?;
    if full == Snr::Infinite || snapshot.blocks().len() < 2 {
        return Ok((full, stats));
    }
    let mut estimates = Vec::with_capacity(snapshot.blocks().len());
    for jpd in snapshot.leave_one_out()? {
        let (snr, _) = measure_snr(&image_of(&jpd)?, masks)?;
        estimates.push(snr.value());
    }
    if estimates.iter().any(|v| !v.is_finite()) {
        return Ok((full, stats));
    }
    Ok((
        Snr::Finite {
            value: full.value(),
            error: jackknife_error(&estimates),
        },
        stats,
    ))
}
