//! Chunk-parallel accumulation over indexed frame sources.
//!
//! A range is cut into contiguous chunks; each chunk gets its own accumulator
//! seeded with the frame just before it, and the chunks are merged in order.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::accumulator::{JpdAccumulator, Layout};
use super::snapshot::Snapshot;
use crate::error::{Error, Result};
use crate::frame::FrameBuffer;
use crate::io::hotpixel::{preprocess, HotPixelMap};
use crate::io::spdf::FrameReader;
use crate::sim::Simulator;

/// Random access to frames by index.
pub trait FrameSource: Sync {
    /// Number of frames available, `None` if unbounded.
    fn frame_count(&self) -> Option<u64>;

    /// Calls `f` on frames `range` in index order.
    fn for_each_frame(
        &self,
        range: Range<u64>,
        f: &mut dyn FnMut(&FrameBuffer) -> Result<()>,
    ) -> Result<()>;
}

impl FrameSource for Simulator {
    fn frame_count(&self) -> Option<u64> {
        None
    }

    fn for_each_frame(
        &self,
        range: Range<u64>,
        f: &mut dyn FnMut(&FrameBuffer) -> Result<()>,
    ) -> Result<()> {
        for l in range {
            f(&self.frame(l))?;
        }
        Ok(())
    }
}

impl FrameSource for [FrameBuffer] {
    fn frame_count(&self) -> Option<u64> {
        Some(self.len() as u64)
    }

    fn for_each_frame(
        &self,
        range: Range<u64>,
        f: &mut dyn FnMut(&FrameBuffer) -> Result<()>,
    ) -> Result<()> {
        let slice = self
            .get(range.start as usize..range.end as usize)
            .ok_or_else(|| Error::Config(format!("frames {range:?} out of range")))?;
        slice.iter().try_for_each(f)
    }
}

/// An SPDF file; every call opens its own reader.
pub struct SpdfSource {
    path: PathBuf,
    frames: u64,
}

impl SpdfSource {
    pub fn open(path: &Path) -> Result<Self> {
        let reader = FrameReader::open(path)?;
        Ok(SpdfSource {
            path: path.to_owned(),
            frames: reader.header().frame_count,
        })
    }

    pub fn header(&self) -> Result<crate::io::FrameHeader> {
        Ok(*FrameReader::open(&self.path)?.header())
    }
}

impl FrameSource for SpdfSource {
    fn frame_count(&self) -> Option<u64> {
        Some(self.frames)
    }

    fn for_each_frame(
        &self,
        range: Range<u64>,
        f: &mut dyn FnMut(&FrameBuffer) -> Result<()>,
    ) -> Result<()> {
        let mut reader = FrameReader::open(&self.path)?;
        reader.seek_frame(range.start)?;
        for _ in range {
            match reader.read_frame()? {
                Some(frame) => f(&frame)?,
                None => return Err(Error::Format("stream ended early".into())),
            }
        }
        Ok(())
    }
}

/// Applies hot-pixel removal and binarization on the fly.
pub struct Preprocessed<'a, S: ?Sized> {
    pub inner: &'a S,
    pub map: HotPixelMap,
}

impl<S: FrameSource + ?Sized> FrameSource for Preprocessed<'_, S> {
    fn frame_count(&self) -> Option<u64> {
        self.inner.frame_count()
    }

    fn for_each_frame(
        &self,
        range: Range<u64>,
        f: &mut dyn FnMut(&FrameBuffer) -> Result<()>,
    ) -> Result<()> {
        self.inner
            .for_each_frame(range, &mut |frame| f(&preprocess(frame, &self.map)?))
    }
}

fn check_range<S: FrameSource + ?Sized>(source: &S, range: &Range<u64>) -> Result<()> {
    if let Some(n) = source.frame_count() {
        if range.end > n {
            return Err(Error::Config(format!(
                "requested frames up to {} but the source has {n}",
                range.end
            )));
        }
    }
    Ok(())
}

/// Sequential accumulation of `range`, seeded with frame `range.start - 1`.
pub fn accumulate_range<S: FrameSource + ?Sized>(
    layout: &Arc<Layout>,
    source: &S,
    range: Range<u64>,
) -> Result<JpdAccumulator> {
    check_range(source, &range)?;
    let mut acc = if range.start == 0 {
        JpdAccumulator::new(layout.clone())
    } else {
        let mut seeded = None;
        source.for_each_frame(range.start - 1..range.start, &mut |f| {
            seeded = Some(JpdAccumulator::with_lead(layout.clone(), f)?);
            Ok(())
        })?;
        seeded.expect("source yields the requested frame")
    };
    source.for_each_frame(range, &mut |f| acc.push(f))?;
    Ok(acc)
}

/// Chunk-parallel accumulation of `range` on the current rayon pool.
pub fn accumulate<S: FrameSource + ?Sized>(
    layout: &Arc<Layout>,
    source: &S,
    range: Range<u64>,
) -> Result<JpdAccumulator> {
    let n = range.end.saturating_sub(range.start);
    let chunks = (rayon::current_num_threads() as u64).min(n.div_ceil(4096)).max(1);
    if chunks == 1 {
        return accumulate_range(layout, source, range);
    }
    let bounds: Vec<u64> = (0..=chunks).map(|k| range.start + n * k / chunks).collect();
    let parts: Vec<JpdAccumulator> = bounds
        .par_windows(2)
        .map(|w| accumulate_range(layout, source, w[0]..w[1]))
        .collect::<Result<_>>()?;
    let mut total = JpdAccumulator::new(layout.clone());
    for p in &parts {
        total.merge_from(p)?;
    }
    Ok(total)
}

/// Accumulators for consecutive segments `[b0, b1), [b1, b2), ...`.
pub fn accumulate_segments<S: FrameSource + ?Sized>(
    layout: &Arc<Layout>,
    source: &S,
    boundaries: &[u64],
) -> Result<Vec<JpdAccumulator>> {
    if !boundaries.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::Config("segment boundaries must be non-decreasing".into()));
    }
    boundaries
        .windows(2)
        .map(|w| accumulate(layout, source, w[0]..w[1]))
        .collect()
}

/// Start of block `k` when `frames` are split into `blocks` blocks.
fn block_bound(frames: u64, blocks: usize, k: usize) -> u64 {
    ((frames as u128 * k as u128) / blocks as u128) as u64
}

/// Snapshot of frames `0..frames` in `blocks` equal blocks.
pub fn snapshot<S: FrameSource + ?Sized>(
    layout: &Arc<Layout>,
    source: &S,
    frames: u64,
    blocks: usize,
) -> Result<Snapshot> {
    let blocks = blocks.max(1);
    let bounds: Vec<u64> = (0..=blocks).map(|k| block_bound(frames, blocks, k)).collect();
    Snapshot::new(layout.clone(), accumulate_segments(layout, source, &bounds)?)
}

/// One snapshot per checkpoint `M`, each covering frames `0..M` in `blocks`
/// blocks. The stream is read once; blocks are assembled by merging.
pub fn sweep<S: FrameSource + ?Sized>(
    layout: &Arc<Layout>,
    source: &S,
    checkpoints: &[u64],
    blocks: usize,
) -> Result<Vec<Snapshot>> {
    let blocks = blocks.max(1);
    let mut bounds: Vec<u64> = checkpoints
        .iter()
        .flat_map(|&m| (0..=blocks).map(move |k| block_bound(m, blocks, k)))
        .collect();
    bounds.push(0);
    bounds.sort_unstable();
    bounds.dedup();
    let segments = accumulate_segments(layout, source, &bounds)?;

    checkpoints
        .iter()
        .map(|&m| {
            let mut out = Vec::with_capacity(blocks);
            for k in 0..blocks {
                let (lo, hi) = (block_bound(m, blocks, k), block_bound(m, blocks, k + 1));
                let first = bounds.binary_search(&lo).expect("boundary present");
                let last = bounds.binary_search(&hi).expect("boundary present");
                let mut acc = segments[first].clone();
                for seg in &segments[first + 1..last] {
                    acc.merge_from(seg)?;
                }
                out.push(acc);
            }
            Snapshot::new(layout.clone(), out)
        })
        .collect()
}
