//! Sensor geometry, the region of interest and the point-reflection `r -> -r`.
//!
//! Two coordinate systems are used throughout the crate:
//!
//! * absolute sensor indices `(col, row)`, `0 <= col < width`;
//! * [`Pixel`] coordinates, signed offsets from the configured origin pixel.
//!
//! The symmetry centre sits either on the origin pixel's centre or on its
//! upper-left corner ([`SymmetryCenter`]). Internally everything goes through
//! `center2 = 2 * centre`, an integer in both conventions, so that the mirror of
//! an absolute index `i` is simply `center2 - i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed pixel offset from the origin pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Pixel { x, y }
    }
}

impl std::fmt::Display for Pixel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Where the point-reflection centre sits relative to the origin pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryCenter {
    /// Centre of the origin pixel; the origin is its own mirror.
    #[default]
    PixelCenter,
    /// Upper-left corner of the origin pixel; allows even-sized symmetric ROIs.
    PixelCorner,
}

/// Rectangular region of interest in absolute sensor indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
}

impl Roi {
    pub const fn new(x0: u32, y0: u32, width: u32, height: u32) -> Self {
        Roi {
            x0,
            y0,
            width,
            height,
        }
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry")]
pub struct SensorGeometry {
    width: u32,
    height: u32,
    origin: (u32, u32),
    center: SymmetryCenter,
    roi: Roi,
}

/// Unvalidated serialized form; deserialization goes through [`SensorGeometry::new`].
#[derive(Deserialize)]
struct RawGeometry {
    width: u32,
    height: u32,
    origin: (u32, u32),
    #[serde(default)]
    center: SymmetryCenter,
    roi: Roi,
}

impl TryFrom<RawGeometry> for SensorGeometry {
    type Error = Error;

    fn try_from(r: RawGeometry) -> Result<Self> {
        SensorGeometry::new(r.width, r.height, r.origin, r.center, r.roi)
    }
}

impl SensorGeometry {
    /// Validated geometry. The ROI must lie inside the sensor and be its own
    /// mirror image about the symmetry centre.
    pub fn new(
        width: u32,
        height: u32,
        origin: (u32, u32),
        center: SymmetryCenter,
        roi: Roi,
    ) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Geometry(format!(
                "sensor must be at least 2x2, got {width}x{height}"
            )));
        }
        if width > u16::MAX as u32 || height > u16::MAX as u32 {
            return Err(Error::Geometry(format!(
                "sensor {width}x{height} exceeds the 65535-pixel frame format limit"
            )));
        }
        if origin.0 >= width || origin.1 >= height {
            return Err(Error::Geometry(format!(
                "origin {origin:?} outside {width}x{height} sensor"
            )));
        }
        if roi.is_empty() {
            return Err(Error::Geometry("empty region of interest".into()));
        }
        if roi.x0 + roi.width > width || roi.y0 + roi.height > height {
            return Err(Error::Geometry(format!(
                "roi {roi:?} exceeds {width}x{height} sensor"
            )));
        }
        let geometry = SensorGeometry {
            width,
            height,
            origin,
            center,
            roi,
        };
        let (cx, cy) = geometry.center2();
        let symmetric_x = 2 * roi.x0 as i64 + roi.width as i64 - 1 == cx;
        let symmetric_y = 2 * roi.y0 as i64 + roi.height as i64 - 1 == cy;
        if !(symmetric_x && symmetric_y) {
            return Err(Error::Geometry(format!(
                "roi {roi:?} is not point-symmetric about origin {origin:?} ({center:?})"
            )));
        }
        Ok(geometry)
    }

    /// Pixel-centred origin at `(width/2, height/2)` with the largest symmetric ROI.
    pub fn centered(width: u32, height: u32) -> Result<Self> {
        let origin = (width / 2, height / 2);
        let kx = origin.0.min(width.saturating_sub(1) - origin.0);
        let ky = origin.1.min(height.saturating_sub(1) - origin.1);
        let roi = Roi::new(origin.0 - kx, origin.1 - ky, 2 * kx + 1, 2 * ky + 1);
        Self::new(width, height, origin, SymmetryCenter::PixelCenter, roi)
    }

    /// Corner-centred origin at `(width/2, height/2)`; for even dimensions the
    /// whole sensor is the ROI.
    pub fn centered_corner(width: u32, height: u32) -> Result<Self> {
        let origin = (width / 2, height / 2);
        let kx = origin.0.min(width - origin.0);
        let ky = origin.1.min(height - origin.1);
        let roi = Roi::new(origin.0 - kx, origin.1 - ky, 2 * kx, 2 * ky);
        Self::new(width, height, origin, SymmetryCenter::PixelCorner, roi)
    }

    /// Same sensor and centre, with a centred ROI of the given extent.
    pub fn with_roi_extent(&self, roi_width: u32, roi_height: u32) -> Result<Self> {
        let (cx, cy) = self.center2();
        let x0 = (cx + 1 - roi_width as i64) / 2;
        let y0 = (cy + 1 - roi_height as i64) / 2;
        if x0 < 0 || y0 < 0 {
            return Err(Error::Geometry(format!(
                "{roi_width}x{roi_height} roi does not fit around the origin"
            )));
        }
        Self::new(
            self.width,
            self.height,
            self.origin,
            self.center,
            Roi::new(x0 as u32, y0 as u32, roi_width, roi_height),
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn origin(&self) -> (u32, u32) {
        self.origin
    }

    pub fn center(&self) -> SymmetryCenter {
        self.center
    }

    pub fn roi(&self) -> Roi {
        self.roi
    }

    pub fn sensor_len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Number of ROI pixels (`s` in the SNR model when the ROI is the illuminated area).
    pub fn roi_len(&self) -> usize {
        self.roi.len()
    }

    /// Twice the symmetry centre in absolute indices.
    pub fn center2(&self) -> (i64, i64) {
        let shift = match self.center {
            SymmetryCenter::PixelCenter => 0,
            SymmetryCenter::PixelCorner => 1,
        };
        (
            2 * self.origin.0 as i64 - shift,
            2 * self.origin.1 as i64 - shift,
        )
    }

    /// Absolute index of a [`Pixel`] (may lie off-sensor).
    pub fn absolute(&self, p: Pixel) -> (i64, i64) {
        (
            self.origin.0 as i64 + p.x as i64,
            self.origin.1 as i64 + p.y as i64,
        )
    }

    pub fn pixel(&self, col: i64, row: i64) -> Pixel {
        Pixel::new(
            (col - self.origin.0 as i64) as i32,
            (row - self.origin.1 as i64) as i32,
        )
    }

    /// Position relative to the symmetry centre, doubled so it stays integral.
    /// Mirror pixels have opposite doubled coordinates.
    pub fn doubled(&self, col: i64, row: i64) -> (i64, i64) {
        let (cx, cy) = self.center2();
        (2 * col - cx, 2 * row - cy)
    }

    pub fn in_sensor(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && col < self.width as i64 && row < self.height as i64
    }

    pub fn in_roi(&self, col: i64, row: i64) -> bool {
        let r = &self.roi;
        col >= r.x0 as i64
            && row >= r.y0 as i64
            && col < (r.x0 + r.width) as i64
            && row < (r.y0 + r.height) as i64
    }

    /// Row-major sensor offset of an in-sensor index.
    #[inline]
    pub fn sensor_offset(&self, col: u32, row: u32) -> usize {
        row as usize * self.width as usize + col as usize
    }

    /// Row-major ROI-local offset, if the index is inside the ROI.
    #[inline]
    pub fn roi_offset(&self, col: i64, row: i64) -> Option<usize> {
        if !self.in_roi(col, row) {
            return None;
        }
        let u = (col - self.roi.x0 as i64) as usize;
        let v = (row - self.roi.y0 as i64) as usize;
        Some(v * self.roi.width as usize + u)
    }

    /// Absolute index of a ROI-local offset.
    #[inline]
    pub fn roi_index(&self, offset: usize) -> (u32, u32) {
        let w = self.roi.width as usize;
        (self.roi.x0 + (offset % w) as u32, self.roi.y0 + (offset / w) as u32)
    }

    /// Point reflection of an absolute index: `center2 - i`.
    pub fn mirror_index(&self, col: i64, row: i64) -> Result<(i64, i64)> {
        let (cx, cy) = self.center2();
        let (mc, mr) = (cx - col, cy - row);
        if !self.in_sensor(mc, mr) {
            return Err(Error::OutOfRange {
                x: mc,
                y: mr,
                what: "sensor",
            });
        }
        Ok((mc, mr))
    }

    /// `-r` about the configured origin.
    pub fn mirror_pixel(&self, r: Pixel) -> Result<Pixel> {
        let (col, row) = self.absolute(r);
        let (mc, mr) = self.mirror_index(col, row)?;
        Ok(self.pixel(mc, mr))
    }

    /// ROI-local offset of the mirror of every ROI pixel.
    pub fn mirror_table(&self) -> Vec<u32> {
        (0..self.roi_len())
            .map(|k| {
                let (c, r) = self.roi_index(k);
                let (cx, cy) = self.center2();
                self.roi_offset(cx - c as i64, cy - r as i64)
                    .expect("roi is point-symmetric") as u32
            })
            .collect()
    }
}
