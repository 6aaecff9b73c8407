//! Closed-form SNR model of the anti-diagonal coincidence image.
//!
//! Per frame, `<N_g> = 2 eta^2 <m>` genuine coincidences and
//! `<N_a> = (2 eta^2 <m> + 2 eta <m> + <n>)^2` accidental ones, spread over `s`
//! illuminated pixels:
//!
//! `SNR(M) = sqrt(<N_g> / s) / sqrt(1 + 2 <N_a> / (s <N_g>)) * sqrt(M)`.
//!
//! The equivalent main-text form `(2 eta (1 + eta) <m> + <n>)^2` of `<N_a>` is
//! the same polynomial. Without accidentals the model reduces to the ideal
//! triggered scheme, `a_t sqrt(M)` with `a_t = eta sqrt(2 <m> / s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrParams {
    /// `eta`
    pub detection_efficiency: f64,
    /// `<m>`, pairs per frame
    pub mean_pairs: f64,
    /// `<n>`, noise events (dark + stray) per frame over the illuminated area
    pub noise_events: f64,
    /// `s`
    pub illuminated_pixels: f64,
}

impl SnrParams {
    pub fn validate(&self) -> Result<()> {
        let eta = self.detection_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Config(format!("eta = {eta} must be in (0, 1]")));
        }
        if !(self.mean_pairs > 0.0) {
            return Err(Error::Config(format!("<m> = {} must be positive", self.mean_pairs)));
        }
        if !(self.noise_events >= 0.0) {
            return Err(Error::Config(format!("<n> = {} must be >= 0", self.noise_events)));
        }
        if !(self.illuminated_pixels >= 1.0) {
            return Err(Error::Config(format!(
                "s = {} must be at least one pixel",
                self.illuminated_pixels
            )));
        }
        Ok(())
    }

    /// `<N_g>`, genuine coincidences per frame.
    pub fn genuine(&self) -> f64 {
        2.0 * self.detection_efficiency.powi(2) * self.mean_pairs
    }

    /// `<N_a>`, accidental coincidences per frame.
    pub fn accidental(&self) -> f64 {
        let eta = self.detection_efficiency;
        let m = self.mean_pairs;
        (2.0 * eta * eta * m + 2.0 * eta * m + self.noise_events).powi(2)
    }

    /// SNR per sqrt(M) for a given accidental rate.
    fn coefficient_with(&self, n_a: f64) -> f64 {
        let n_g = self.genuine();
        if n_g == 0.0 {
            return 0.0;
        }
        let s = self.illuminated_pixels;
        (n_g / s).sqrt() / (1.0 + 2.0 * n_a / (s * n_g)).sqrt()
    }
}

/// Predicted SNR per `sqrt(M)`.
pub fn predict_coefficient(p: &SnrParams) -> Result<f64> {
    p.validate()?;
    Ok(p.coefficient_with(p.accidental()))
}

/// Predicted SNR after `frames` frames.
pub fn predict_snr(p: &SnrParams, frames: f64) -> Result<f64> {
    Ok(predict_coefficient(p)? * frames.sqrt())
}

/// SNR of the ideal scheme (no accidentals) after `frames` frames.
pub fn ideal_snr(p: &SnrParams, frames: f64) -> Result<f64> {
    p.validate()?;
    Ok(p.coefficient_with(0.0) * frames.sqrt())
}

/// `a_t = eta sqrt(2 <m> / s)`.
pub fn ideal_coefficient(detection_efficiency: f64, mean_pairs: f64, illuminated_pixels: f64) -> f64 {
    detection_efficiency * (2.0 * mean_pairs / illuminated_pixels).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn main_text_and_methods_forms_agree() {
        let p = SnrParams {
            detection_efficiency: 0.3,
            mean_pairs: 2.0,
            noise_events: 0.7,
            illuminated_pixels: 100.0,
        };
        let alt = (2.0 * 0.3 * 1.3 * 2.0 + 0.7f64).powi(2);
        assert!((p.accidental() - alt).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = SnrParams {
            detection_efficiency: 0.0,
            mean_pairs: 1.0,
            noise_events: 0.0,
            illuminated_pixels: 10.0,
        };
        assert!(predict_snr(&p, 1.0).is_err());
        p.detection_efficiency = 0.5;
        p.illuminated_pixels = 0.5;
        assert!(predict_snr(&p, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn ideal_dominates(eta in 0.001f64..1.0, m in 1e-5f64..50.0, n in 0.0f64..100.0, s in 1.0f64..1e5) {
            let p = SnrParams { detection_efficiency: eta, mean_pairs: m, noise_events: n, illuminated_pixels: s };
            let real = predict_snr(&p, 1e6).unwrap();
            let ideal = ideal_snr(&p, 1e6).unwrap();
            prop_assert!(real < ideal);
            prop_assert!((ideal - ideal_coefficient(eta, m, s) * 1e3).abs() <= 1e-9 * ideal);
        }

        #[test]
        fn more_noise_lowers_prediction(eta in 0.01f64..1.0, m in 1e-3f64..10.0, n in 0.0f64..10.0, dn in 1e-3f64..10.0) {
            let p = SnrParams { detection_efficiency: eta, mean_pairs: m, noise_events: n, illuminated_pixels: 2000.0 };
            let q = SnrParams { noise_events: n + dn, ..p };
            prop_assert!(predict_snr(&q, 1e5).unwrap() < predict_snr(&p, 1e5).unwrap());
        }
    }
}
