//! One camera exposure: a grid of small non-negative counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BitDepth {
    One,
    Eight,
}

impl BitDepth {
    pub const fn bits(self) -> u8 {
        match self {
            BitDepth::One => 1,
            BitDepth::Eight => 8,
        }
    }

    pub const fn max_value(self) -> u8 {
        match self {
            BitDepth::One => 1,
            BitDepth::Eight => u8::MAX,
        }
    }

    /// Bytes per frame in the container payload.
    pub fn frame_stride(self, width: u16, height: u16) -> usize {
        match self {
            BitDepth::One => (width as usize).div_ceil(8) * height as usize,
            BitDepth::Eight => width as usize * height as usize,
        }
    }
}

impl TryFrom<u8> for BitDepth {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(BitDepth::One),
            8 => Ok(BitDepth::Eight),
            other => Err(Error::Format(format!("unsupported bit depth {other}"))),
        }
    }
}

impl From<BitDepth> for u8 {
    fn from(d: BitDepth) -> u8 {
        d.bits()
    }
}

/// Row-major pixel counts `I_l(r)` of frame `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameBuffer {
    width: u16,
    height: u16,
    bit_depth: BitDepth,
    index: u64,
    values: Vec<u8>,
}

impl FrameBuffer {
    pub fn zeroed(width: u16, height: u16, bit_depth: BitDepth, index: u64) -> Self {
        FrameBuffer {
            width,
            height,
            bit_depth,
            index,
            values: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_values(
        width: u16,
        height: u16,
        bit_depth: BitDepth,
        index: u64,
        values: Vec<u8>,
    ) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::Format(format!(
                "{} values for a {width}x{height} frame",
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| v > bit_depth.max_value()) {
            return Err(Error::Format(format!(
                "value {v} exceeds {}-bit range",
                bit_depth.bits()
            )));
        }
        Ok(FrameBuffer {
            width,
            height,
            bit_depth,
            index,
            values,
        })
    }

    /// Binary frame with the listed `(col, row)` pixels set.
    pub fn binary(width: u16, height: u16, index: u64, lit: &[(u32, u32)]) -> Self {
        let mut f = Self::zeroed(width, height, BitDepth::One, index);
        for &(c, r) in lit {
            f.set(c, r, 1);
        }
        f
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn shape(&self) -> (u16, u16) {
        (self.width, self.height)
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn set_index(&mut self, index: u64) {
        self.index = index;
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, col: u32, row: u32) -> u8 {
        self.values[row as usize * self.width as usize + col as usize]
    }

    /// Sets a pixel, clamped to the bit depth.
    #[inline]
    pub fn set(&mut self, col: u32, row: u32, value: u8) {
        let i = row as usize * self.width as usize + col as usize;
        self.values[i] = value.min(self.bit_depth.max_value());
    }

    /// Adds one count, saturating at the bit depth (logical OR at 1 bit).
    #[inline]
    pub fn bump(&mut self, offset: usize) {
        let v = &mut self.values[offset];
        if *v < self.bit_depth.max_value() {
            *v += 1;
        }
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [u8] {
        &mut self.values
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v <= 1)
    }

    /// Number of non-zero pixels.
    pub fn lit_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn total_counts(&self) -> u64 {
        self.values.iter().map(|&v| v as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_matches_packing_rule() {
        assert_eq!(BitDepth::One.frame_stride(64, 64), 512);
        assert_eq!(BitDepth::One.frame_stride(4, 4), 4);
        assert_eq!(BitDepth::One.frame_stride(9, 2), 4);
        assert_eq!(BitDepth::Eight.frame_stride(9, 2), 18);
    }

    #[test]
    fn values_are_range_checked() {
        assert!(FrameBuffer::from_values(2, 1, BitDepth::One, 0, vec![0, 2]).is_err());
        assert!(FrameBuffer::from_values(2, 1, BitDepth::Eight, 0, vec![0, 2]).is_ok());
        assert!(FrameBuffer::from_values(2, 2, BitDepth::Eight, 0, vec![0, 2]).is_err());
    }

    #[test]
    fn bump_saturates() {
        let mut f = FrameBuffer::zeroed(2, 2, BitDepth::One, 0);
        f.bump(1);
        f.bump(1);
        assert_eq!(f.get(1, 0), 1);
        let mut g = FrameBuffer::zeroed(2, 2, BitDepth::Eight, 0);
        g.set(0, 0, 255);
        g.bump(0);
        assert_eq!(g.get(0, 0), 255);
    }
}
