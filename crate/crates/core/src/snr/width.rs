//! Gaussian width of a correlation peak (e.g. in the sum projection).

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jpd::ProjectionImage;
use crate::scalar::Real;

/// Half-size of the fit window around the maximum.
pub const DEFAULT_WINDOW: i32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthFit {
    pub amplitude: f64,
    pub center: (f64, f64),
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Single width from the isotropic model.
    pub sigma: f64,
    pub background: f64,
    /// Mean and std of the image outside the window.
    pub background_mean: f64,
    pub background_std: f64,
    pub evaluations: usize,
}

/// `B + A exp(-(x-x0)^2 / 2sx^2 - (y-y0)^2 / 2sy^2)`; with `isotropic` the
/// parameters are `[A, x0, y0, s, B]`, otherwise `[A, x0, y0, sx, sy, B]`.
struct Gaussian2d {
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
    p: DVector<f64>,
    isotropic: bool,
}

impl Gaussian2d {
    fn unpack(&self) -> (f64, f64, f64, f64, f64, f64) {
        let p = &self.p;
        if self.isotropic {
            (p[0], p[1], p[2], p[3], p[3], p[4])
        } else {
            (p[0], p[1], p[2], p[3], p[4], p[5])
        }
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Gaussian2d {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let (a, x0, y0, sx, sy, b) = self.unpack();
        Some(DVector::from_iterator(
            self.zs.len(),
            (0..self.zs.len()).map(|k| {
                let (dx, dy) = (self.xs[k] - x0, self.ys[k] - y0);
                b + a * (-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy))).exp() - self.zs[k]
            }),
        ))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let (a, x0, y0, sx, sy, _) = self.unpack();
        let mut j = DMatrix::zeros(self.zs.len(), self.p.len());
        for k in 0..self.zs.len() {
            let (dx, dy) = (self.xs[k] - x0, self.ys[k] - y0);
            let e = (-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy))).exp();
            j[(k, 0)] = e;
            j[(k, 1)] = a * e * dx / (sx * sx);
            j[(k, 2)] = a * e * dy / (sy * sy);
            let dsx = a * e * dx * dx / sx.powi(3);
            let dsy = a * e * dy * dy / sy.powi(3);
            if self.isotropic {
                j[(k, 3)] = dsx + dsy;
                j[(k, 4)] = 1.0;
            } else {
                j[(k, 3)] = dsx;
                j[(k, 4)] = dsy;
                j[(k, 5)] = 1.0;
            }
        }
        Some(j)
    }
}

fn minimize(problem: Gaussian2d) -> Result<(DVector<f64>, usize)> {
    let (fitted, report) = LevenbergMarquardt::new().minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::Domain(format!(
            "Gaussian fit did not converge ({:?}); the peak may be narrower than a pixel or not Gaussian",
            report.termination
        )));
    }
    if fitted.p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("Gaussian fit produced non-finite parameters".into()));
    }
    Ok((fitted.p, report.number_of_evaluations))
}

/// Fits a 2D Gaussian to the `±window` neighbourhood of the image maximum.
/// Coordinates are image labels.
pub fn fit_correlation_width<T: Real>(image: &ProjectionImage<T>, window: i32) -> Result<WidthFit> {
    let ((px, py), peak) = image.argmax();
    let peak = peak.as_f64();
    let inside = |x: i32, y: i32| (x - px).abs() <= window && (y - py).abs() <= window;

    let (mut xs, mut ys, mut zs, mut outside) = (vec![], vec![], vec![], vec![]);
    for (k, v) in image.values().iter().enumerate() {
        let (x, y) = image.label_of(k);
        if inside(x, y) {
            xs.push(x as f64);
            ys.push(y as f64);
            zs.push(v.as_f64());
        } else {
            outside.push(v.as_f64());
        }
    }
    if outside.len() < 2 || zs.len() < 7 {
        return Err(Error::Config(format!(
            "image {}x{} too small for a ±{window} fit window",
            image.width(),
            image.height()
        )));
    }
    let n = outside.len() as f64;
    let bg = outside.iter().sum::<f64>() / n;
    let bg_std = (outside.iter().map(|v| (v - bg).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let excess = peak - bg;
    if !(excess > 5.0 * bg_std) {
        return Err(Error::NoPeak { excess, std: bg_std });
    }

    // Start from second moments of the positive excess in the window.
    let (mut w, mut mxx, mut myy) = (0.0, 0.0, 0.0);
    for k in 0..zs.len() {
        let e = (zs[k] - bg).max(0.0);
        w += e;
        mxx += e * (xs[k] - px as f64).powi(2);
        myy += e * (ys[k] - py as f64).powi(2);
    }
    let s0x = (mxx / w).sqrt().clamp(0.3, window as f64);
    let s0y = (myy / w).sqrt().clamp(0.3, window as f64);

    let full = Gaussian2d {
        xs: xs.clone(),
        ys: ys.clone(),
        zs: zs.clone(),
        p: DVector::from_vec(vec![excess, px as f64, py as f64, s0x, s0y, bg]),
        isotropic: false,
    };
    let (p, evals) = minimize(full)?;
    let iso = Gaussian2d {
        xs,
        ys,
        zs,
        p: DVector::from_vec(vec![excess, px as f64, py as f64, (s0x * s0y).sqrt(), bg]),
        isotropic: true,
    };
    let (q, evals_iso) = minimize(iso)?;

    Ok(WidthFit {
        amplitude: p[0],
        center: (p[1], p[2]),
        sigma_x: p[3].abs(),
        sigma_y: p[4].abs(),
        sigma: q[3].abs(),
        background: p[5],
        background_mean: bg,
        background_std: bg_std,
        evaluations: evals + evals_iso,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpd::ProjectionKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian_image(sx: f64, sy: f64, c: (f64, f64), noise: f64) -> ProjectionImage<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 31;
        let values = (0..n * n)
            .map(|k| {
                let (x, y) = ((k % n) as f64 - 15.0, (k / n) as f64 - 15.0);
                let g = (-0.5 * ((x - c.0).powi(2) / (sx * sx) + (y - c.1).powi(2) / (sy * sy))).exp();
                0.01 + g + noise * (rng.random::<f64>() - 0.5)
            })
            .collect();
        ProjectionImage::new(ProjectionKind::Sum, n, n, (-15, -15), values)
    }

    #[test]
    fn recovers_anisotropic_widths() {
        let img = gaussian_image(1.3, 2.1, (0.4, -1.2), 0.0);
        let fit = fit_correlation_width(&img, DEFAULT_WINDOW).unwrap();
        assert!((fit.sigma_x - 1.3).abs() < 1e-6, "{fit:?}");
        assert!((fit.sigma_y - 2.1).abs() < 1e-6);
        assert!((fit.center.0 - 0.4).abs() < 1e-6 && (fit.center.1 + 1.2).abs() < 1e-6);
        assert!((fit.background - 0.01).abs() < 1e-6);
        assert!(fit.sigma > 1.3 && fit.sigma < 2.1);
    }

    #[test]
    fn noisy_isotropic() {
        let img = gaussian_image(1.1, 1.1, (0.0, 0.0), 0.02);
        let fit = fit_correlation_width(&img, DEFAULT_WINDOW).unwrap();
        assert!((fit.sigma - 1.1).abs() < 0.03, "{fit:?}");
    }

    #[test]
    fn flat_noise_has_no_peak() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values = (0..31 * 31).map(|_| rng.random::<f64>()).collect();
        let img = ProjectionImage::new(ProjectionKind::Sum, 31, 31, (-15, -15), values);
        assert!(matches!(
            fit_correlation_width(&img, DEFAULT_WINDOW),
            Err(Error::NoPeak { .. })
        ));
    }
}
