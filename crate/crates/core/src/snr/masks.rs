//! Signal and noise regions of ROI-shaped images.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pixel, SensorGeometry};
use crate::io::pgm;
use crate::sim::SceneConfig;

/// Where the noise standard deviation is taken in automatic masks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRegion {
    /// The half (doubled x > 0) of the region where the image is expected to be
    /// constant and bright; the signal takes the other half.
    #[default]
    ConstantHalf,
    /// Pixels outside the illumination footprint.
    Dark,
    /// Illuminated pixels whose pair is blocked by the object (expected zero).
    Blocked,
}

/// Disjoint pixel sets, as row-major indices into a ROI-shaped image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMasks {
    pub width: usize,
    pub height: usize,
    pub signal: Vec<usize>,
    pub noise: Vec<usize>,
    /// Human-readable origin of the masks.
    pub description: String,
}

/// Inclusive rectangle `[x0, y0, x1, y1]` in pixel coordinates.
pub type Rect = [i32; 4];

/// Masks file (TOML): rectangles and/or a grayscale image.
///
/// In the image, gray levels `>= 192` mark signal, `64..=191` noise, lower
/// values are unused. The image must be ROI-sized.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    #[serde(default)]
    pub signal: Vec<Rect>,
    #[serde(default)]
    pub noise: Vec<Rect>,
    #[serde(default)]
    pub image: Option<PathBuf>,
}

/// Minimum pixels per region for a meaningful estimate.
pub const MIN_REGION: usize = 16;

impl RegionMasks {
    pub fn new(
        width: usize,
        height: usize,
        mut signal: Vec<usize>,
        mut noise: Vec<usize>,
        description: impl Into<String>,
    ) -> Result<Self> {
        let n = width * height;
        signal.sort_unstable();
        signal.dedup();
        noise.sort_unstable();
        noise.dedup();
        if signal.iter().chain(&noise).any(|&i| i >= n) {
            return Err(Error::DegenerateMask("mask index outside the image".into()));
        }
        if signal.iter().any(|i| noise.binary_search(i).is_ok()) {
            return Err(Error::DegenerateMask("signal and noise masks overlap".into()));
        }
        if signal.is_empty() || noise.is_empty() {
            return Err(Error::DegenerateMask(format!(
                "empty region (signal {}, noise {})",
                signal.len(),
                noise.len()
            )));
        }
        Ok(RegionMasks {
            width,
            height,
            signal,
            noise,
            description: description.into(),
        })
    }

    /// Masks derived from the known scene: signal where the anti-diagonal image
    /// is expected constant and non-zero, with a `margin` (pixels) kept from
    /// the illumination edge.
    pub fn auto(
        geometry: &SensorGeometry,
        scene: &SceneConfig,
        noise: NoiseRegion,
        margin: f64,
    ) -> Result<Self> {
        let t = scene.transmission_map(geometry)?;
        let trans = |col: i64, row: i64| -> f64 {
            t.as_ref()
                .map_or(1.0, |t| t[geometry.sensor_offset(col as u32, row as u32)])
        };
        let roi = geometry.roi();
        let (w, h) = (roi.width as usize, roi.height as usize);
        let mut signal = Vec::new();
        let mut noise_px = Vec::new();
        for v in 0..h {
            for u in 0..w {
                let (col, row) = ((roi.x0 as usize + u) as i64, (roi.y0 as usize + v) as i64);
                let (dx, dy) = geometry.doubled(col, row);
                let rho = 0.5 * ((dx * dx + dy * dy) as f64).sqrt();
                let (mc, mr) = geometry.mirror_index(col, row)?;
                let pair_t = trans(col, row) * trans(mc, mr);
                let lit = scene.illumination.contains(rho, margin);
                let constant = lit && pair_t >= 1.0;
                let k = v * w + u;
                if constant && dx < 0 {
                    signal.push(k);
                }
                let is_noise = match noise {
                    NoiseRegion::ConstantHalf => constant && dx > 0,
                    NoiseRegion::Dark => {
                        let (lo, hi) = scene.illumination.radial_bounds();
                        rho > hi + margin || (lo > 0.0 && rho < lo - margin)
                    }
                    NoiseRegion::Blocked => lit && pair_t <= 0.0,
                };
                if is_noise {
                    noise_px.push(k);
                }
            }
        }
        Self::new(w, h, signal, noise_px, format!("auto ({noise:?} noise, margin {margin} px)"))
    }

    /// Masks from a TOML [`MaskSpec`] file; relative image paths resolve
    /// against the file's directory.
    pub fn load(path: &Path, geometry: &SensorGeometry) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: MaskSpec =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(img) = &mut spec.image {
            if img.is_relative() {
                if let Some(dir) = path.parent() {
                    *img = dir.join(&*img);
                }
            }
        }
        let mut m = Self::from_spec(&spec, geometry)?;
        m.description = path.display().to_string();
        Ok(m)
    }

    pub fn from_spec(spec: &MaskSpec, geometry: &SensorGeometry) -> Result<Self> {
        let roi = geometry.roi();
        let (w, h) = (roi.width as usize, roi.height as usize);
        let origin = geometry.pixel(roi.x0 as i64, roi.y0 as i64);
        let mut signal = Vec::new();
        let mut noise = Vec::new();
        let add_rects = |rects: &[Rect], out: &mut Vec<usize>| {
            for &[x0, y0, x1, y1] in rects {
                for y in y0.min(y1)..=y0.max(y1) {
                    for x in x0.min(x1)..=x0.max(x1) {
                        let p = Pixel::new(x - origin.x, y - origin.y);
                        if p.x >= 0 && p.y >= 0 && (p.x as usize) < w && (p.y as usize) < h {
                            out.push(p.y as usize * w + p.x as usize);
                        }
                    }
                }
            }
        };
        add_rects(&spec.signal, &mut signal);
        add_rects(&spec.noise, &mut noise);
        if let Some(img) = &spec.image {
            let (iw, ih, px) = pgm::read_gray(img)?;
            if (iw as usize, ih as usize) != (w, h) {
                return Err(Error::Config(format!(
                    "{}: mask image is {iw}x{ih}, roi is {w}x{h}",
                    img.display()
                )));
            }
            for (k, &g) in px.iter().enumerate() {
                if g >= 192 {
                    signal.push(k);
                } else if g >= 64 {
                    noise.push(k);
                }
            }
        }
        Self::new(w, h, signal, noise, "mask spec")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ObjectMask;

    #[test]
    fn auto_masks_split_the_constant_region() {
        let g = SensorGeometry::centered_corner(64, 64).unwrap();
        let mut scene = SceneConfig::disk(28.0, 5.0, 0.1);
        scene.object = ObjectMask::HalfPlane {
            normal: [1.0, 0.0],
            offset: 8.0,
        };
        let m = RegionMasks::auto(&g, &scene, NoiseRegion::ConstantHalf, 2.0).unwrap();
        assert_eq!(m.signal.len(), m.noise.len());
        assert!(m.signal.len() > 300);
        for &k in &m.signal {
            let x = (k % 64) as i32 - 32;
            assert!((-8..0).contains(&x), "x = {x}");
        }
        let dark = RegionMasks::auto(&g, &scene, NoiseRegion::Dark, 2.0).unwrap();
        assert!(dark.noise.len() > 100);
        let blocked = RegionMasks::auto(&g, &scene, NoiseRegion::Blocked, 2.0).unwrap();
        assert!(blocked.noise.len() > 1000);
    }

    #[test]
    fn spec_rects_and_overlap() {
        let g = SensorGeometry::centered(21, 21).unwrap();
        let spec = MaskSpec {
            signal: vec![[-5, -5, -1, -1]],
            noise: vec![[1, 1, 5, 5]],
            image: None,
        };
        let m = RegionMasks::from_spec(&spec, &g).unwrap();
        assert_eq!((m.signal.len(), m.noise.len()), (25, 25));
        let bad = MaskSpec {
            signal: vec![[-5, -5, 0, 0]],
            noise: vec![[0, 0, 5, 5]],
            image: None,
        };
        assert!(matches!(
            RegionMasks::from_spec(&bad, &g),
            Err(Error::DegenerateMask(_))
        ));
    }
}
