//! On-disk accumulator snapshots and dense tensor export.
//!
//! Snapshot layout (`.jpds`), little-endian:
//!
//! | field        | size            |
//! |--------------|-----------------|
//! | magic `JPDS` | 4               |
//! | version      | 2 (currently 1) |
//! | meta length  | 4               |
//! | metadata     | JSON, UTF-8     |
//! | counters     | u64 each        |
//!
//! The metadata carries the layout and, per block, the term counts and the
//! cached boundary frames. Counters follow block by block in a fixed order:
//! singles, then C and A of the dense array (FULL) or of the anti-diagonal,
//! sum, minus, column-pair, row-pair and conditional planes (PROJECTION_ONLY).
//! Vector lengths follow from the layout. Serialization is deterministic.
//!
//! Dense tensor layout (`.jpdt`): magic `JPDT`, version u16, ROI width u32,
//! ROI height u32, frame count u64, then `s * s` f64 values, row `i` holding
//! `Gamma(ri, .)` with ROI pixels in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::accumulator::{CachedFrame, JpdAccumulator, Layout, LayoutSpec};
use super::projection::{DenseJpd, Jpd};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"JPDS";
pub const TENSOR_MAGIC: [u8; 4] = *b"JPDT";
const VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct BlockMeta {
    frames: u64,
    cross_terms: u64,
    first_index: Option<u64>,
    lead: Option<CachedFrame>,
    last: Option<CachedFrame>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    layout: LayoutSpec,
    blocks: Vec<BlockMeta>,
}

/// Accumulators over consecutive frame blocks of one stream.
#[derive(Clone, Debug)]
pub struct Snapshot {
    layout: Arc<Layout>,
    blocks: Vec<JpdAccumulator>,
}

impl Snapshot {
    /// Checks that the blocks share a layout and are consecutive.
    pub fn new(layout: Arc<Layout>, blocks: Vec<JpdAccumulator>) -> Result<Self> {
        for b in &blocks {
            if b.layout().spec() != layout.spec() {
                return Err(Error::Merge("blocks have different layouts".into()));
            }
        }
        let mut check = JpdAccumulator::new(layout.clone());
        for b in &blocks {
            check.merge_from(b)?;
        }
        Ok(Snapshot { layout, blocks })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn blocks(&self) -> &[JpdAccumulator] {
        &self.blocks
    }

    pub fn frames(&self) -> u64 {
        self.blocks.iter().map(|b| b.frames()).sum()
    }

    /// All blocks merged.
    pub fn total(&self) -> Result<JpdAccumulator> {
        let mut acc = JpdAccumulator::new(self.layout.clone());
        for b in &self.blocks {
            acc.merge_from(b)?;
        }
        Ok(acc)
    }

    pub fn jpd(&self) -> Result<Jpd> {
        Ok(self.total()?.jpd())
    }

    /// Total counts with each block removed in turn.
    pub fn leave_one_out(&self) -> Result<Vec<Jpd>> {
        let total = self.jpd()?;
        self.blocks.iter().map(|b| total.without(&b.jpd())).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| match e {
            Error::Stream(io) => Error::io(path, io),
            other => other,
        })?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let meta = Meta {
            layout: self.layout.spec().clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockMeta {
                    frames: b.counts().frames,
                    cross_terms: b.counts().cross_terms,
                    first_index: b.first_index(),
                    lead: b.lead().cloned(),
                    last: b.last().cloned(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&meta).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(&SNAPSHOT_MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        let mut buf = Vec::new();
        for b in &self.blocks {
            for v in b.counts().vectors() {
                buf.clear();
                buf.reserve(v.len() * 8);
                for x in v {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let truncated = |e: std::io::Error| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated snapshot".into()),
            _ => Error::Stream(e),
        };
        let mut head = [0u8; 10];
        r.read_exact(&mut head).map_err(truncated)?;
        if head[0..4] != SNAPSHOT_MAGIC {
            return Err(Error::Format("not a JPD snapshot (bad magic)".into()));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let len = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
        let mut json = vec![0u8; len];
        r.read_exact(&mut json).map_err(truncated)?;
        let meta: Meta = serde_json::from_slice(&json)
            .map_err(|e| Error::Format(format!("snapshot metadata: {e}")))?;
        let layout = Layout::with_budget(meta.layout, u64::MAX)?;

        let mut blocks = Vec::with_capacity(meta.blocks.len());
        let mut word = [0u8; 8];
        for bm in meta.blocks {
            let mut counts = JpdAccumulator::new(layout.clone()).counts().clone();
            counts.frames = bm.frames;
            counts.cross_terms = bm.cross_terms;
            for v in counts.vectors_mut() {
                for x in v.iter_mut() {
                    r.read_exact(&mut word).map_err(truncated)?;
                    *x = u64::from_le_bytes(word);
                }
            }
            blocks.push(JpdAccumulator::from_parts(
                layout.clone(),
                counts,
                bm.lead,
                bm.first_index,
                bm.last,
            )?);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after snapshot counters".into()));
        }
        Snapshot::new(layout, blocks)
    }
}

/// Writes a dense estimate in the `JPDT` tensor format.
pub fn write_dense_tensor(path: &Path, jpd: &Jpd, dense: &DenseJpd<f64>) -> Result<()> {
    let (rw, rh) = jpd.layout().roi_shape();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        w.write_all(&TENSOR_MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(rw as u32).to_le_bytes())?;
        w.write_all(&(rh as u32).to_le_bytes())?;
        w.write_all(&jpd.frames().to_le_bytes())?;
        for v in &dense.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

/// Reads a `JPDT` tensor: `(roi_width, roi_height, frames, values)`.
pub fn read_dense_tensor(path: &Path) -> Result<(u32, u32, u64, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 22 || bytes[0..4] != TENSOR_MAGIC {
        return Err(Error::Format("not a dense JPD tensor".into()));
    }
    let rw = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let rh = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
    let frames = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let s = rw as usize * rh as usize;
    let body = &bytes[22..];
    if body.len() != s * s * 8 {
        return Err(Error::Format(format!(
            "tensor body is {} bytes, expected {}",
            body.len(),
            s * s * 8
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rw, rh, frames, values))
}
