//! SNR prediction, measurement and scaling analysis.

pub mod fit;
pub mod masks;
pub mod measure;
pub mod predict;
pub mod width;

use serde::{Deserialize, Serialize};

pub use fit::{fit_free_exponent, fit_sqrt_scaling, PowerFit, SnrPoint, SqrtFit};
pub use masks::{MaskSpec, NoiseRegion, RegionMasks, MIN_REGION};
pub use measure::{jackknife_error, measure_snr, measure_snr_jackknife, region_stats, RegionStats, Snr};
pub use predict::{ideal_coefficient, ideal_snr, predict_coefficient, predict_snr, SnrParams};
pub use width::{fit_correlation_width, WidthFit, DEFAULT_WINDOW};

/// One row of an SNR analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrEntry {
    pub frames: u64,
    pub snr: Snr,
    pub stats: RegionStats,
    pub predicted: Option<f64>,
    pub ideal: Option<f64>,
}

/// Output of `snr` runs: per-checkpoint values plus the scaling fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub masks: String,
    pub signal_pixels: usize,
    pub noise_pixels: usize,
    pub entries: Vec<SnrEntry>,
    pub sqrt_fit: Option<SqrtFit>,
    pub power_fit: Option<PowerFit>,
    pub predicted_coefficient: Option<f64>,
    pub ideal_coefficient: Option<f64>,
}

impl SnrReport {
    /// Fills in both scaling fits when there are enough finite points.
    pub fn fit(&mut self) {
        let points: Vec<SnrPoint> = self
            .entries
            .iter()
            .filter_map(|e| match e.snr {
                Snr::Finite { value, error } => Some(SnrPoint {
                    frames: e.frames as f64,
                    snr: value,
                    error,
                }),
                Snr::Infinite => None,
            })
            .collect();
        self.sqrt_fit = fit_sqrt_scaling(&points).ok();
        self.power_fit = fit_free_exponent(&points).ok();
    }
}
