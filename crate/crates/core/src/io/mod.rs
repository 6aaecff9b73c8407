//! Frame container, image files, CSV tables and hot-pixel preprocessing.

pub mod hotpixel;
pub mod pgm;
pub mod spdf;

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::FrameStats;

pub use hotpixel::{calibrate_hot_pixels, preprocess, HotPixelCalibrator, HotPixelMap};
pub use spdf::{FrameHeader, FrameReader, FrameWriter};

/// Writes a CSV table whose cells need no quoting (numbers, identifiers).
pub fn write_csv<R, C>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = C>,
    C: IntoIterator,
    C::Item: Display,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let emit = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{}", header.join(","))?;
        for row in rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.write_all(b",")?;
                }
                write!(out, "{cell}")?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    emit(&mut out).map_err(|e| Error::io(path, e))
}

/// Per-frame event counts, one row per frame.
pub fn write_frame_stats_csv(path: &Path, stats: &[(u64, FrameStats)]) -> Result<()> {
    write_csv(
        path,
        &[
            "frame",
            "pairs",
            "photons_off_sensor",
            "photons_absorbed",
            "photons_detected",
            "pairs_detected",
            "dark_events",
            "stray_events",
            "crosstalk_events",
        ],
        stats.iter().map(|(i, s)| {
            [
                *i,
                s.pairs,
                s.photons_off_sensor,
                s.photons_absorbed,
                s.photons_detected,
                s.pairs_detected,
                s.dark_events,
                s.stray_events,
                s.crosstalk_events,
            ]
        }),
    )
}
