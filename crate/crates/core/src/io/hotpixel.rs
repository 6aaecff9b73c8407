//! Hot-pixel calibration and frame binarization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{BitDepth, FrameBuffer};

/// Default 8-bit threshold; a pixel is hot when its value is strictly above it.
pub const DEFAULT_THRESHOLD: u8 = 200;

/// Pixels flagged hot during calibration, applied to every frame of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotPixelMap {
    pub width: u16,
    pub height: u16,
    pub threshold: u8,
    pub calibration_frames: u64,
    /// Flagged `(col, row)` pairs, sorted.
    pub pixels: Vec<(u32, u32)>,
}

impl HotPixelMap {
    pub fn empty(width: u16, height: u16) -> Self {
        HotPixelMap {
            width,
            height,
            threshold: DEFAULT_THRESHOLD,
            calibration_frames: 0,
            pixels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Flagged fraction of the sensor.
    pub fn fraction(&self) -> f64 {
        self.pixels.len() as f64 / (self.width as f64 * self.height as f64)
    }

    pub fn contains(&self, col: u32, row: u32) -> bool {
        self.pixels.binary_search(&(col, row)).is_ok()
    }

    fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.pixels
            .iter()
            .map(|&(c, r)| r as usize * self.width as usize + c as usize)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("hot pixel map: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map: HotPixelMap = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if map
            .pixels
            .iter()
            .any(|&(c, r)| c >= map.width as u32 || r >= map.height as u32)
        {
            return Err(Error::Config(format!(
                "{}: hot pixel outside the {}x{} sensor",
                path.display(),
                map.width,
                map.height
            )));
        }
        map.pixels.sort_unstable();
        map.pixels.dedup();
        Ok(map)
    }
}

/// Streaming calibration over dark 8-bit frames.
pub struct HotPixelCalibrator {
    width: u16,
    height: u16,
    threshold: u8,
    frames: u64,
    hot: Vec<bool>,
}

impl HotPixelCalibrator {
    pub fn new(width: u16, height: u16, threshold: u8) -> Self {
        HotPixelCalibrator {
            width,
            height,
            threshold,
            frames: 0,
            hot: vec![false; width as usize * height as usize],
        }
    }

    pub fn add(&mut self, frame: &FrameBuffer) -> Result<()> {
        if frame.bit_depth() != BitDepth::Eight {
            return Err(Error::BitDepth {
                expected: 8,
                found: frame.bit_depth().bits(),
            });
        }
        let expected = (self.width, self.height);
        if frame.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: frame.shape(),
            });
        }
        for (flag, &v) in self.hot.iter_mut().zip(frame.values()) {
            *flag |= v > self.threshold;
        }
        self.frames += 1;
        Ok(())
    }

    pub fn finish(self) -> HotPixelMap {
        let w = self.width as usize;
        let mut pixels: Vec<(u32, u32)> = self
            .hot
            .iter()
            .enumerate()
            .filter(|(_, &h)| h)
            .map(|(i, _)| ((i % w) as u32, (i / w) as u32))
            .collect();
        pixels.sort_unstable();
        HotPixelMap {
            width: self.width,
            height: self.height,
            threshold: self.threshold,
            calibration_frames: self.frames,
            pixels,
        }
    }
}

/// Flags every pixel whose value exceeds `threshold` in any calibration frame.
pub fn calibrate_hot_pixels<'a, I>(frames: I, threshold: u8) -> Result<HotPixelMap>
where
    I: IntoIterator<Item = &'a FrameBuffer>,
{
    let mut frames = frames.into_iter().peekable();
    let Some(first) = frames.peek() else {
        return Err(Error::Config("no calibration frames".into()));
    };
    let mut cal = HotPixelCalibrator::new(first.width(), first.height(), threshold);
    for f in frames {
        cal.add(f)?;
    }
    Ok(cal.finish())
}

/// Zeroes flagged pixels and any value above the map's threshold, then clamps
/// the remaining counts to `{0, 1}`. The result is a 1-bit frame.
pub fn preprocess(frame: &FrameBuffer, map: &HotPixelMap) -> Result<FrameBuffer> {
    let expected = (map.width, map.height);
    if frame.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: frame.shape(),
        });
    }
    let mut out = FrameBuffer::zeroed(frame.width(), frame.height(), BitDepth::One, frame.index());
    let thr = map.threshold;
    let values = out.values_mut();
    for (o, &v) in values.iter_mut().zip(frame.values()) {
        *o = (v != 0 && v <= thr) as u8;
    }
    for i in map.offsets() {
        values[i] = 0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eight(w: u16, h: u16, set: &[((u32, u32), u8)]) -> FrameBuffer {
        let mut f = FrameBuffer::zeroed(w, h, BitDepth::Eight, 0);
        for &((c, r), v) in set {
            f.set(c, r, v);
        }
        f
    }

    #[test]
    fn zero_frames_give_empty_map() {
        let frames = vec![eight(8, 8, &[]); 3];
        let map = calibrate_hot_pixels(&frames, DEFAULT_THRESHOLD).unwrap();
        assert!(map.is_empty());
        assert_eq!(map.calibration_frames, 3);
    }

    #[test]
    fn threshold_is_strict() {
        let f = eight(8, 8, &[((2, 5), 201), ((4, 4), 200)]);
        let map = calibrate_hot_pixels([&f], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(map.pixels, vec![(2, 5)]);
    }

    #[test]
    fn binary_input_is_rejected() {
        let f = FrameBuffer::zeroed(4, 4, BitDepth::One, 0);
        assert!(matches!(
            calibrate_hot_pixels([&f], 200),
            Err(Error::BitDepth { expected: 8, found: 1 })
        ));
    }

    #[test]
    fn preprocess_rules() {
        let mut map = HotPixelMap::empty(8, 8);
        map.pixels = vec![(3, 3)];
        let f = eight(8, 8, &[((3, 3), 255), ((1, 0), 2), ((6, 6), 230)]);
        let p = preprocess(&f, &map).unwrap();
        assert_eq!(p.bit_depth(), BitDepth::One);
        assert_eq!(p.get(3, 3), 0);
        assert_eq!(p.get(1, 0), 1);
        assert_eq!(p.get(6, 6), 0);
        assert_eq!(preprocess(&p, &map).unwrap().values(), p.values());

        let b = FrameBuffer::binary(8, 8, 0, &[(0, 0), (7, 7)]);
        let q = preprocess(&b, &HotPixelMap::empty(8, 8)).unwrap();
        assert_eq!(q, b);

        let wrong = FrameBuffer::zeroed(4, 8, BitDepth::One, 0);
        assert!(preprocess(&wrong, &map).is_err());
    }

    #[test]
    fn save_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("hot.json");
        let f = eight(8, 8, &[((2, 5), 250), ((7, 1), 255)]);
        let map = calibrate_hot_pixels([&f], 200).unwrap();
        map.save(&p).unwrap();
        assert_eq!(HotPixelMap::load(&p).unwrap(), map);
        assert!(map.contains(7, 1));
    }
}
