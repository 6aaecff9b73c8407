//! Binary (P5) grayscale images: masks in, intensity and projection images out.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};

/// 8-bit grayscale pixels of an image file, row-major.
pub fn read_gray(path: &Path) -> Result<(u32, u32, Vec<u8>)> {
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()?
        .to_luma8();
    Ok((img.width(), img.height(), img.into_raw()))
}

/// Reads a grayscale image of exactly `width x height` as values `v / 255`.
pub fn read_unit_map(path: &Path, width: u32, height: u32) -> Result<Vec<f64>> {
    let (w, h, raw) = read_gray(path)?;
    if (w, h) != (width, height) {
        return Err(Error::Config(format!(
            "{}: image is {w}x{h}, expected {width}x{height}",
            path.display()
        )));
    }
    Ok(raw.into_iter().map(|v| v as f64 / 255.0).collect())
}

pub fn write_gray(path: &Path, width: u32, height: u32, pixels: &[u8]) -> Result<()> {
    assert_eq!(pixels.len(), width as usize * height as usize);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(pixels, width, height, ExtendedColorType::L8)?;
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Linear map from gray level to value: `value = offset + scale * gray`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrayScale {
    pub offset: f64,
    pub scale: f64,
}

impl GrayScale {
    pub fn value(&self, gray: u8) -> f64 {
        self.offset + self.scale * gray as f64
    }
}

/// Sidecar path holding the scale of an exported image: `<image>.scale.txt`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale.txt");
    PathBuf::from(s)
}

/// Rescales `values` linearly onto 0..=255 (min to 0, max to 255), writes the
/// image and a sidecar text file recording the mapping.
pub fn write_scaled(path: &Path, width: u32, height: u32, values: &[f64]) -> Result<GrayScale> {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let scale = if hi > lo { (hi - lo) / 255.0 } else { 0.0 };
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| {
            if scale == 0.0 || !v.is_finite() {
                0
            } else {
                ((v - lo) / scale).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    write_gray(path, width, height, &pixels)?;
    let map = GrayScale { offset: lo, scale };
    let side = sidecar_path(path);
    std::fs::write(
        &side,
        format!(
            "# value = offset + scale * gray\noffset = {:e}\nscale = {:e}\nmin = {lo:e}\nmax = {hi:e}\n",
            map.offset, map.scale
        ),
    )
    .map_err(|e| Error::io(&side, e))?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        let px: Vec<u8> = (0..12).map(|v| v * 20).collect();
        write_gray(&p, 4, 3, &px).unwrap();
        assert!(std::fs::read(&p).unwrap().starts_with(b"P5"));
        let (w, h, back) = read_gray(&p).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(back, px);
        let unit = read_unit_map(&p, 4, 3).unwrap();
        assert!((unit[11] - 220.0 / 255.0).abs() < 1e-12);
        assert!(read_unit_map(&p, 3, 4).is_err());
    }

    #[test]
    fn scaled_export_records_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.pgm");
        let vals = [-1.0, 0.0, 1.0, 3.0];
        let s = write_scaled(&p, 2, 2, &vals).unwrap();
        let (_, _, px) = read_gray(&p).unwrap();
        assert_eq!(px[0], 0);
        assert_eq!(px[3], 255);
        assert!((s.value(255) - 3.0).abs() < 1e-12);
        let side = std::fs::read_to_string(sidecar_path(&p)).unwrap();
        assert!(side.contains("offset = -1e0"));
    }
}
