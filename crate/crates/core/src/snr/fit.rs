//! Fits of SNR against frame count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measurement: `frames`, SNR and its one-sigma error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub frames: f64,
    pub snr: f64,
    pub error: f64,
}

/// Weighted least-squares fit of `SNR = a sqrt(M)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtFit {
    pub coefficient: f64,
    pub coefficient_error: f64,
    /// Weighted coefficient of determination.
    pub r_squared: f64,
}

/// Weighted fit of `log SNR = log c + p log M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub exponent_error: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

fn check(points: &[SnrPoint]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Config(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for p in points {
        if !(p.error > 0.0 && p.error.is_finite()) {
            return Err(Error::Domain(format!("non-positive SNR error {} at M = {}", p.error, p.frames)));
        }
        if !(p.frames > 0.0) {
            return Err(Error::Domain(format!("non-positive frame count {}", p.frames)));
        }
    }
    if points.iter().all(|p| p.frames == points[0].frames) {
        return Err(Error::Singular("all points share the same frame count".into()));
    }
    Ok(())
}

/// Weighted r^2 of predictions `f` against `y`.
fn weighted_r2(y: &[f64], f: &[f64], w: &[f64]) -> f64 {
    let sw: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let ss_res: f64 = y.iter().zip(f).zip(w).map(|((y, f), w)| w * (y - f).powi(2)).sum();
    let ss_tot: f64 = y.iter().zip(w).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// `a = sum(w x y) / sum(w x^2)` with `x = sqrt(M)`, `w = 1 / error^2`.
pub fn fit_sqrt_scaling(points: &[SnrPoint]) -> Result<SqrtFit> {
    check(points)?;
    let x: Vec<f64> = points.iter().map(|p| p.frames.sqrt()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.snr).collect();
    let w: Vec<f64> = points.iter().map(|p| p.error.powi(-2)).collect();
    let sxx: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = x.iter().zip(&y).zip(&w).map(|((x, y), w)| w * x * y).sum();
    let a = sxy / sxx;
    let pred: Vec<f64> = x.iter().map(|x| a * x).collect();
    Ok(SqrtFit {
        coefficient: a,
        coefficient_error: sxx.sqrt().recip(),
        r_squared: weighted_r2(&y, &pred, &w),
    })
}

/// Straight line through `(log M, log SNR)` with weights `(SNR / error)^2`.
pub fn fit_free_exponent(points: &[SnrPoint]) -> Result<PowerFit> {
    check(points)?;
    if let Some(p) = points.iter().find(|p| !(p.snr > 0.0)) {
        return Err(Error::Domain(format!("log fit needs positive SNR, got {} at M = {}", p.snr, p.frames)));
    }
    let x: Vec<f64> = points.iter().map(|p| p.frames.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.snr.ln()).collect();
    let w: Vec<f64> = points.iter().map(|p| (p.snr / p.error).powi(2)).collect();
    let sw: f64 = w.iter().sum();
    let xbar = x.iter().zip(&w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ybar = y.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(&y)
        .zip(&w)
        .map(|((x, y), w)| w * (x - xbar) * (y - ybar))
        .sum();
    let p = sxy / sxx;
    let c = ybar - p * xbar;
    let pred: Vec<f64> = x.iter().map(|x| c + p * x).collect();
    Ok(PowerFit {
        exponent: p,
        exponent_error: sxx.sqrt().recip(),
        prefactor: c.exp(),
        r_squared: weighted_r2(&y, &pred, &w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(a: f64, p: f64) -> Vec<SnrPoint> {
        [1e3, 1e4, 1e5, 1e6]
            .iter()
            .map(|&m: &f64| SnrPoint {
                frames: m,
                snr: a * m.powf(p),
                error: 0.05 * a * m.powf(p),
            })
            .collect()
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_sqrt_scaling(&pts(1.0, 0.5)[..2]), Err(Error::Config(_))));
        let mut same = pts(1.0, 0.5);
        same.iter_mut().for_each(|p| p.frames = 10.0);
        assert!(matches!(fit_sqrt_scaling(&same), Err(Error::Singular(_))));
        let mut bad = pts(1.0, 0.5);
        bad[1].error = 0.0;
        assert!(matches!(fit_free_exponent(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn coefficient_error_matches_closed_form() {
        let p = pts(0.02, 0.5);
        let fit = fit_sqrt_scaling(&p).unwrap();
        let sxx: f64 = p.iter().map(|p| p.frames / p.error.powi(2)).sum();
        assert!((fit.coefficient_error - 1.0 / sxx.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn exact_power_laws_are_recovered(a in 1e-4f64..10.0, p in 0.2f64..0.8) {
            let fit = fit_free_exponent(&pts(a, p)).unwrap();
            prop_assert!((fit.exponent - p).abs() < 1e-9);
            prop_assert!((fit.prefactor / a - 1.0).abs() < 1e-7);
            prop_assert!(fit.r_squared > 1.0 - 1e-9);
        }

        #[test]
        fn exact_sqrt_is_recovered(a in 1e-6f64..10.0) {
            let fit = fit_sqrt_scaling(&pts(a, 0.5)).unwrap();
            prop_assert!((fit.coefficient / a - 1.0).abs() < 1e-12);
            prop_assert!(fit.r_squared > 1.0 - 1e-9);
        }
    }
}
