//! Generative scene model and its validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorGeometry;
use crate::io::pgm;
use crate::snr::SnrParams;

/// Pair-illumination footprint on the detection plane, centred on the symmetry centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Illumination {
    /// Uniform disk of the given radius (pixels).
    Disk { radius: f64 },
    /// Uniform annulus `radius - thickness/2 ..= radius + thickness/2`.
    Ring { radius: f64, thickness: f64 },
}

impl Illumination {
    pub fn area(&self) -> f64 {
        match *self {
            Illumination::Disk { radius } => PI * radius * radius,
            Illumination::Ring { radius, thickness } => {
                let (a, b) = self.radial_bounds();
                debug_assert!(thickness > 0.0 && radius > 0.0);
                PI * (b * b - a * a)
            }
        }
    }

    /// Inner and outer radius of the illuminated region.
    pub fn radial_bounds(&self) -> (f64, f64) {
        match *self {
            Illumination::Disk { radius } => (0.0, radius),
            Illumination::Ring { radius, thickness } => {
                ((radius - thickness / 2.0).max(0.0), radius + thickness / 2.0)
            }
        }
    }

    /// Whether a point at distance `rho` from the centre is lit, keeping `margin`
    /// pixels away from both edges.
    pub fn contains(&self, rho: f64, margin: f64) -> bool {
        let (a, b) = self.radial_bounds();
        let inner = if a > 0.0 { a + margin } else { 0.0 };
        rho >= inner && rho <= b - margin
    }
}

/// Object transmission `T(r)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectMask {
    #[default]
    Transparent,
    /// Opaque where `normal . r > offset`, `r` measured from the symmetry centre.
    HalfPlane { normal: [f64; 2], offset: f64 },
    /// 8-bit grayscale image, sensor-sized; `value / 255` is the transmission.
    Image { path: PathBuf },
}

/// Classical, frame-independent light reaching the sensor.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrayLight {
    #[default]
    None,
    /// Same detection probability per frame on every pixel.
    Uniform { prob: f64 },
    /// Filled disk (centre relative to the symmetry centre, pixels).
    Disk {
        center: [f64; 2],
        radius: f64,
        prob: f64,
    },
    /// Grayscale "lure" image, rescaled to `[0, 1]` then multiplied by `peak_prob`.
    Image { path: PathBuf, peak_prob: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Expected photon pairs per exposure, `<m>`.
    pub mean_pairs_per_frame: f64,
    /// Per-photon detection probability `eta`.
    pub detection_efficiency: f64,
    /// Std of each component of `r1 + r2` (pixels). Zero gives perfect anti-correlation.
    pub correlation_width: f64,
    /// Optional off-axis broadening: `sigma(r1) = sigma + slope * |r1|`.
    #[serde(default)]
    pub aberration_slope: f64,
    pub illumination: Illumination,
    #[serde(default)]
    pub object: ObjectMask,
    /// Per-pixel, per-frame dark count probability.
    #[serde(default)]
    pub dark_count_prob: f64,
    #[serde(default)]
    pub stray_light: StrayLight,
    /// Probability a fired pixel triggers each of its 8 neighbours.
    #[serde(default)]
    pub crosstalk_prob: f64,
    /// Fraction of pixels that fire at full scale in every frame.
    #[serde(default)]
    pub hot_pixel_fraction: f64,
}

impl SceneConfig {
    /// Transparent uniform disk, no noise.
    pub fn disk(radius: f64, mean_pairs_per_frame: f64, detection_efficiency: f64) -> Self {
        SceneConfig {
            mean_pairs_per_frame,
            detection_efficiency,
            correlation_width: 0.0,
            aberration_slope: 0.0,
            illumination: Illumination::Disk { radius },
            object: ObjectMask::Transparent,
            dark_count_prob: 0.0,
            stray_light: StrayLight::None,
            crosstalk_prob: 0.0,
            hot_pixel_fraction: 0.0,
        }
    }

    /// Checks parameter ranges; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        fn prob(name: &str, p: f64) -> Result<()> {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        }
        if !(self.mean_pairs_per_frame > 0.0 && self.mean_pairs_per_frame.is_finite()) {
            return Err(Error::Config(format!(
                "mean_pairs_per_frame = {} must be positive",
                self.mean_pairs_per_frame
            )));
        }
        prob("detection_efficiency", self.detection_efficiency)?;
        prob("dark_count_prob", self.dark_count_prob)?;
        prob("crosstalk_prob", self.crosstalk_prob)?;
        prob("hot_pixel_fraction", self.hot_pixel_fraction)?;
        if !(self.correlation_width >= 0.0 && self.correlation_width.is_finite()) {
            return Err(Error::Config(format!(
                "correlation_width = {} must be >= 0",
                self.correlation_width
            )));
        }
        if !(self.aberration_slope >= 0.0) {
            return Err(Error::Config("aberration_slope must be >= 0".into()));
        }
        match self.illumination {
            Illumination::Disk { radius } if radius > 0.0 => {}
            Illumination::Ring { radius, thickness } if radius > 0.0 && thickness > 0.0 => {}
            ref other => {
                return Err(Error::Config(format!("bad illumination {other:?}")));
            }
        }
        if let ObjectMask::HalfPlane { normal, .. } = self.object {
            if normal[0] == 0.0 && normal[1] == 0.0 {
                return Err(Error::Config("half-plane normal must be non-zero".into()));
            }
        }
        match self.stray_light {
            StrayLight::None => {}
            StrayLight::Uniform { prob: p } => prob("stray_light.prob", p)?,
            StrayLight::Disk { prob: p, radius, .. } => {
                prob("stray_light.prob", p)?;
                if !(radius > 0.0) {
                    return Err(Error::Config("stray_light.radius must be positive".into()));
                }
            }
            StrayLight::Image { peak_prob, .. } => prob("stray_light.peak_prob", peak_prob)?,
        }

        let mut warnings = Vec::new();
        let occupancy = self.expected_peak_occupancy();
        if occupancy > 0.1 {
            let msg = format!(
                "expected per-pixel occupancy up to {occupancy:.3} exceeds 0.1; the linearised JPD estimator assumes occupancy << 1"
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Ok(warnings)
    }

    /// Upper estimate of the per-pixel firing probability inside the beam.
    pub fn expected_peak_occupancy(&self) -> f64 {
        let photons = 2.0 * self.detection_efficiency * self.mean_pairs_per_frame
            / self.illumination.area().max(1.0);
        let stray = match self.stray_light {
            StrayLight::None => 0.0,
            StrayLight::Uniform { prob } | StrayLight::Disk { prob, .. } => prob,
            StrayLight::Image { peak_prob, .. } => peak_prob,
        };
        photons + self.dark_count_prob + stray
    }

    /// Rebases relative image paths onto `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let ObjectMask::Image { path } = &mut self.object {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let StrayLight::Image { path, .. } = &mut self.stray_light {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    /// Per-sensor-pixel transmission map, `None` when transparent.
    pub fn transmission_map(&self, geometry: &SensorGeometry) -> Result<Option<Vec<f64>>> {
        match &self.object {
            ObjectMask::Transparent => Ok(None),
            ObjectMask::HalfPlane { normal, offset } => {
                let map = pixel_map(geometry, |x, y| {
                    if normal[0] * x + normal[1] * y > *offset {
                        0.0
                    } else {
                        1.0
                    }
                });
                Ok(Some(map))
            }
            ObjectMask::Image { path } => {
                let map = pgm::read_unit_map(path, geometry.width(), geometry.height())?;
                Ok(Some(map))
            }
        }
    }

    /// Per-sensor-pixel stray detection probability, `None` when absent.
    pub fn stray_map(&self, geometry: &SensorGeometry) -> Result<Option<Vec<f64>>> {
        match &self.stray_light {
            StrayLight::None => Ok(None),
            StrayLight::Uniform { prob } => Ok(Some(vec![*prob; geometry.sensor_len()])),
            StrayLight::Disk {
                center,
                radius,
                prob,
            } => Ok(Some(pixel_map(geometry, |x, y| {
                let (dx, dy) = (x - center[0], y - center[1]);
                if dx * dx + dy * dy <= radius * radius {
                    *prob
                } else {
                    0.0
                }
            }))),
            StrayLight::Image { path, peak_prob } => {
                let mut map = pgm::read_unit_map(path, geometry.width(), geometry.height())?;
                map.iter_mut().for_each(|v| *v *= peak_prob);
                Ok(Some(map))
            }
        }
    }

    /// Parameters of the SNR model for this scene: `s` is the illuminated area,
    /// `<n>` sums dark counts and stray light over it.
    pub fn snr_parameters(&self, geometry: &SensorGeometry) -> Result<SnrParams> {
        let s = self.illumination.area();
        let stray = self.stray_map(geometry)?;
        let mut stray_sum = 0.0;
        if let Some(stray) = &stray {
            for row in 0..geometry.height() {
                for col in 0..geometry.width() {
                    let (dx, dy) = geometry.doubled(col as i64, row as i64);
                    let rho = 0.5 * ((dx * dx + dy * dy) as f64).sqrt();
                    if self.illumination.contains(rho, 0.0) {
                        stray_sum += stray[geometry.sensor_offset(col, row)];
                    }
                }
            }
        }
        Ok(SnrParams {
            detection_efficiency: self.detection_efficiency,
            mean_pairs: self.mean_pairs_per_frame,
            noise_events: self.dark_count_prob * s + stray_sum,
            illuminated_pixels: s,
        })
    }
}

/// Evaluates `f(x, y)` at every pixel centre, coordinates relative to the symmetry centre.
fn pixel_map(geometry: &SensorGeometry, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(geometry.sensor_len());
    for row in 0..geometry.height() {
        for col in 0..geometry.width() {
            let (dx, dy) = geometry.doubled(col as i64, row as i64);
            out.push(f(dx as f64 / 2.0, dy as f64 / 2.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_with_tagged_variants() {
        let mut cfg = SceneConfig::disk(28.0, 5.0, 0.1);
        cfg.object = ObjectMask::HalfPlane {
            normal: [1.0, 0.0],
            offset: 8.0,
        };
        cfg.stray_light = StrayLight::Disk {
            center: [14.0, 0.0],
            radius: 10.0,
            prob: 0.02,
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: SceneConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_rejects_bad_probabilities() {
        let mut cfg = SceneConfig::disk(10.0, 1.0, 1.5);
        assert!(cfg.validate().is_err());
        cfg.detection_efficiency = 0.5;
        assert!(cfg.validate().unwrap().is_empty());
        cfg.mean_pairs_per_frame = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn high_occupancy_warns() {
        let mut cfg = SceneConfig::disk(3.0, 50.0, 1.0);
        cfg.dark_count_prob = 0.2;
        let warnings = cfg.validate().unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn half_plane_transmission() {
        let g = SensorGeometry::centered(64, 64).unwrap();
        let mut cfg = SceneConfig::disk(20.0, 1.0, 0.5);
        cfg.object = ObjectMask::HalfPlane {
            normal: [1.0, 0.0],
            offset: 0.0,
        };
        let t = cfg.transmission_map(&g).unwrap().unwrap();
        let (c, r) = g.absolute(crate::geometry::Pixel::new(30, 15));
        assert_eq!(t[g.sensor_offset(c as u32, r as u32)], 0.0);
        let (c, r) = g.absolute(crate::geometry::Pixel::new(-30, 15));
        assert_eq!(t[g.sensor_offset(c as u32, r as u32)], 1.0);
    }

    #[test]
    fn ring_area() {
        let ring = Illumination::Ring {
            radius: 10.0,
            thickness: 4.0,
        };
        assert!((ring.area() - PI * (144.0 - 64.0)).abs() < 1e-9);
        assert!(ring.contains(10.0, 1.0));
        assert!(!ring.contains(8.5, 1.0));
    }
}
