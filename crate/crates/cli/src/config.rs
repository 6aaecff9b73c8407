//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [sensor]
//! width = 64
//! height = 64
//! origin = [32, 32]          # default: (width/2, height/2)
//! symmetry = "pixel_corner"  # or "pixel_center" (default)
//! bit_depth = 1              # 1 or 8
//! roi = [64, 64]             # default: largest symmetric roi
//!
//! [scene]
//! mean_pairs_per_frame = 5.0
//! detection_efficiency = 0.1
//! correlation_width = 1.1
//! illumination = { kind = "disk", radius = 28.0 }
//! object = { kind = "half_plane", normal = [1.0, 0.0], offset = 8.0 }
//! dark_count_prob = 1e-4
//!
//! [reconstruct]              # optional defaults for reconstruct/snr
//! mode = "projection_only"
//! blocks = 10
//! projections = { sum = true, minus = true }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spad_jpd::jpd::{Mode, ProjectionSpec};
use spad_jpd::{BitDepth, Error, Result, Roi, SceneConfig, SensorGeometry, SymmetryCenter};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub origin: Option<(u32, u32)>,
    #[serde(default)]
    pub symmetry: SymmetryCenter,
    #[serde(default = "default_bit_depth")]
    pub bit_depth: BitDepth,
    #[serde(default)]
    pub roi: Option<(u32, u32)>,
}

fn default_bit_depth() -> BitDepth {
    BitDepth::One
}

impl SensorConfig {
    pub fn new(width: u32, height: u32) -> Self {
        SensorConfig {
            width,
            height,
            origin: None,
            symmetry: SymmetryCenter::PixelCenter,
            bit_depth: BitDepth::One,
            roi: None,
        }
    }

    pub fn geometry(&self) -> Result<SensorGeometry> {
        let (w, h) = (self.width, self.height);
        let origin = self.origin.unwrap_or((w / 2, h / 2));
        if origin.0 >= w || origin.1 >= h {
            return Err(Error::Geometry(format!("origin {origin:?} outside {w}x{h} sensor")));
        }
        // Largest ROI that is its own mirror image.
        let roi = match self.symmetry {
            SymmetryCenter::PixelCenter => {
                let kx = origin.0.min(w - 1 - origin.0);
                let ky = origin.1.min(h - 1 - origin.1);
                Roi::new(origin.0 - kx, origin.1 - ky, 2 * kx + 1, 2 * ky + 1)
            }
            SymmetryCenter::PixelCorner => {
                let kx = origin.0.min(w - origin.0);
                let ky = origin.1.min(h - origin.1);
                Roi::new(origin.0 - kx, origin.1 - ky, 2 * kx, 2 * ky)
            }
        };
        let g = SensorGeometry::new(w, h, origin, self.symmetry, roi)?;
        match self.roi {
            Some((rw, rh)) => g.with_roi_extent(rw, rh),
            None => Ok(g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default)]
    pub projections: ProjectionSpec,
}

fn default_mode() -> Mode {
    Mode::ProjectionOnly
}

fn default_blocks() -> usize {
    10
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            mode: default_mode(),
            blocks: default_blocks(),
            projections: ProjectionSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub sensor: SensorConfig,
    #[serde(default)]
    pub scene: Option<SceneConfig>,
    #[serde(default)]
    pub reconstruct: Option<ReconstructConfig>,
}

impl RunConfig {
    /// Parses `path`; relative file references in the scene resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(scene) = &mut cfg.scene {
            scene.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        }
        Ok(cfg)
    }

    pub fn scene(&self) -> Result<&SceneConfig> {
        self.scene
            .as_ref()
            .ok_or_else(|| Error::Config("config has no [scene] section".into()))
    }
}

pub fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_owned())
}
