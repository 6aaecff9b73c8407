//! Streaming integer counters for same-frame and successive-frame products.
//!
//! For ROI pixels `ri`, `rj` the accumulator keeps
//!
//! * `C(ri, rj) = sum_l I_l(ri) I_l(rj)` over every frame, and
//! * `A(ri, rj) = sum_l I_l(ri) I_{l-1}(rj)` over every frame that has a
//!   predecessor,
//!
//! together with their term counts (`frames` and `cross_terms`). The
//! estimate is `C / frames - A / cross_terms`, formed only at query time.
//! A chunk that starts mid-stream is seeded with the frame before it (the
//! *lead* frame), so its first frame contributes its cross term and chunks
//! merge exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FrameBuffer;
use crate::geometry::{Pixel, SensorGeometry};

/// Default cap on the dense counter memory of FULL mode (1 GiB).
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Dense `s x s` counters for C and A; every projection is derived from them.
    Full,
    /// Anti-diagonal and the requested projections only, accumulated directly.
    ProjectionOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => Ok(Mode::Full),
            "projection_only" | "projection" => Ok(Mode::ProjectionOnly),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Projections accumulated in PROJECTION_ONLY mode (the anti-diagonal is always kept).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    #[serde(default)]
    pub sum: bool,
    #[serde(default)]
    pub minus: bool,
    /// Column pairs `(x1, x2)` in pixel coordinates.
    #[serde(default)]
    pub column_pairs: Vec<(i32, i32)>,
    /// Row pairs `(y1, y2)` in pixel coordinates.
    #[serde(default)]
    pub row_pairs: Vec<(i32, i32)>,
    /// Reference pixels of conditional images.
    #[serde(default)]
    pub conditionals: Vec<Pixel>,
}

impl ProjectionSpec {
    pub fn sum_and_minus() -> Self {
        ProjectionSpec {
            sum: true,
            minus: true,
            ..Default::default()
        }
    }
}

/// Serialized description of a [`Layout`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub geometry: SensorGeometry,
    pub mode: Mode,
    #[serde(default)]
    pub projections: ProjectionSpec,
}

/// What an accumulator counts, with precomputed ROI-local lookups.
#[derive(Debug, PartialEq, Eq)]
pub struct Layout {
    spec: LayoutSpec,
    rw: usize,
    rh: usize,
    mirror: Vec<u32>,
    columns: Vec<(usize, usize)>,
    rows: Vec<(usize, usize)>,
    refs: Vec<usize>,
}

impl Layout {
    pub fn new(geometry: SensorGeometry, mode: Mode, projections: ProjectionSpec) -> Result<Arc<Self>> {
        Self::with_budget(
            LayoutSpec {
                geometry,
                mode,
                projections,
            },
            DEFAULT_MEMORY_BUDGET,
        )
    }

    pub fn full(geometry: SensorGeometry) -> Result<Arc<Self>> {
        Self::new(geometry, Mode::Full, ProjectionSpec::default())
    }

    pub fn with_budget(spec: LayoutSpec, budget: u64) -> Result<Arc<Self>> {
        let g = &spec.geometry;
        let roi = g.roi();
        let (rw, rh) = (roi.width as usize, roi.height as usize);
        if spec.mode == Mode::Full {
            let needed = Self::dense_bytes(g.roi_len());
            if needed > budget {
                return Err(Error::MemoryBudget { needed, budget });
            }
        }
        let p = &spec.projections;
        let columns = p
            .column_pairs
            .iter()
            .map(|&(a, b)| Ok((local_column(g, a)?, local_column(g, b)?)))
            .collect::<Result<_>>()?;
        let rows = p
            .row_pairs
            .iter()
            .map(|&(a, b)| Ok((local_row(g, a)?, local_row(g, b)?)))
            .collect::<Result<_>>()?;
        let refs = p
            .conditionals
            .iter()
            .map(|&r| {
                let (c, w) = g.absolute(r);
                g.roi_offset(c, w).ok_or(Error::OutOfRange {
                    x: r.x as i64,
                    y: r.y as i64,
                    what: "roi",
                })
            })
            .collect::<Result<_>>()?;
        Ok(Arc::new(Layout {
            mirror: g.mirror_table(),
            rw,
            rh,
            columns,
            rows,
            refs,
            spec,
        }))
    }

    /// ROI-local column of pixel column `x`.
    pub fn local_column(&self, x: i32) -> Result<usize> {
        local_column(self.geometry(), x)
    }

    /// ROI-local row of pixel row `y`.
    pub fn local_row(&self, y: i32) -> Result<usize> {
        local_row(self.geometry(), y)
    }

    /// Bytes needed by the dense C and A counters of an `s`-pixel ROI.
    pub fn dense_bytes(s: usize) -> u64 {
        2 * 8 * (s as u64) * (s as u64)
    }

    pub fn spec(&self) -> &LayoutSpec {
        &self.spec
    }

    pub fn geometry(&self) -> &SensorGeometry {
        &self.spec.geometry
    }

    pub fn mode(&self) -> Mode {
        self.spec.mode
    }

    pub fn projections(&self) -> &ProjectionSpec {
        &self.spec.projections
    }

    /// ROI extent `(width, height)`.
    pub fn roi_shape(&self) -> (usize, usize) {
        (self.rw, self.rh)
    }

    /// Number of ROI pixels `s`.
    pub fn s(&self) -> usize {
        self.rw * self.rh
    }

    /// ROI-local offset of each pixel's mirror.
    pub fn mirror(&self) -> &[u32] {
        &self.mirror
    }

    pub(crate) fn sum_shape(&self) -> (usize, usize) {
        (2 * self.rw - 1, 2 * self.rh - 1)
    }

    pub(crate) fn conditional_slot(&self, local: usize) -> Option<usize> {
        self.refs.iter().position(|&r| r == local)
    }

    pub(crate) fn column_slot(&self, pair: (usize, usize)) -> Option<usize> {
        self.columns.iter().position(|&p| p == pair)
    }

    pub(crate) fn row_slot(&self, pair: (usize, usize)) -> Option<usize> {
        self.rows.iter().position(|&p| p == pair)
    }

    fn empty_counts(&self) -> Counts {
        let s = self.s();
        let (sw, sh) = self.sum_shape();
        let proj = self.spec.mode == Mode::ProjectionOnly;
        let p = &self.spec.projections;
        Counts {
            frames: 0,
            cross_terms: 0,
            singles: vec![0; s],
            dense: (!proj).then(|| CountPair::zeros(s * s)),
            antidiag: proj.then(|| CountPair::zeros(s)),
            sum: (proj && p.sum).then(|| CountPair::zeros(sw * sh)),
            minus: (proj && p.minus).then(|| CountPair::zeros(sw * sh)),
            column_pairs: if proj {
                vec![CountPair::zeros(self.rh * self.rh); self.columns.len()]
            } else {
                Vec::new()
            },
            row_pairs: if proj {
                vec![CountPair::zeros(self.rw * self.rw); self.rows.len()]
            } else {
                Vec::new()
            },
            conditionals: if proj {
                vec![CountPair::zeros(s); self.refs.len()]
            } else {
                Vec::new()
            },
        }
    }
}

fn local_column(g: &SensorGeometry, x: i32) -> Result<usize> {
    let roi = g.roi();
    let u = g.absolute(Pixel::new(x, 0)).0 - roi.x0 as i64;
    if u < 0 || u >= roi.width as i64 {
        return Err(Error::OutOfRange {
            x: x as i64,
            y: 0,
            what: "roi columns",
        });
    }
    Ok(u as usize)
}

fn local_row(g: &SensorGeometry, y: i32) -> Result<usize> {
    let roi = g.roi();
    let v = g.absolute(Pixel::new(0, y)).1 - roi.y0 as i64;
    if v < 0 || v >= roi.height as i64 {
        return Err(Error::OutOfRange {
            x: 0,
            y: y as i64,
            what: "roi rows",
        });
    }
    Ok(v as usize)
}

/// Same-frame (`c`) and successive-frame (`a`) counters over one index space.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountPair {
    pub c: Vec<u64>,
    pub a: Vec<u64>,
}

impl CountPair {
    fn zeros(n: usize) -> Self {
        CountPair {
            c: vec![0; n],
            a: vec![0; n],
        }
    }
}

/// All raw counters of an accumulator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts {
    /// Terms in C: frames accumulated.
    pub frames: u64,
    /// Terms in A: frames accumulated that had a predecessor.
    pub cross_terms: u64,
    /// Per-pixel `sum_l I_l(r)`.
    pub singles: Vec<u64>,
    pub dense: Option<CountPair>,
    pub antidiag: Option<CountPair>,
    pub sum: Option<CountPair>,
    pub minus: Option<CountPair>,
    pub column_pairs: Vec<CountPair>,
    pub row_pairs: Vec<CountPair>,
    pub conditionals: Vec<CountPair>,
}

impl Counts {
    /// Every counter vector in a fixed order.
    pub(crate) fn vectors(&self) -> Vec<&Vec<u64>> {
        let mut v = vec![&self.singles];
        let pairs = self
            .dense
            .iter()
            .chain(&self.antidiag)
            .chain(&self.sum)
            .chain(&self.minus)
            .chain(&self.column_pairs)
            .chain(&self.row_pairs)
            .chain(&self.conditionals);
        for p in pairs {
            v.push(&p.c);
            v.push(&p.a);
        }
        v
    }

    pub(crate) fn vectors_mut(&mut self) -> Vec<&mut Vec<u64>> {
        let mut v = vec![&mut self.singles];
        let pairs = self
            .dense
            .iter_mut()
            .chain(&mut self.antidiag)
            .chain(&mut self.sum)
            .chain(&mut self.minus)
            .chain(&mut self.column_pairs)
            .chain(&mut self.row_pairs)
            .chain(&mut self.conditionals);
        for p in pairs {
            v.push(&mut p.c);
            v.push(&mut p.a);
        }
        v
    }

    fn same_shape(&self, o: &Counts) -> bool {
        let (a, b) = (self.vectors(), o.vectors());
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
    }

    pub fn add_assign(&mut self, o: &Counts) -> Result<()> {
        if !self.same_shape(o) {
            return Err(Error::Merge("counter layouts differ".into()));
        }
        self.frames += o.frames;
        self.cross_terms += o.cross_terms;
        for (x, y) in self.vectors_mut().into_iter().zip(o.vectors()) {
            x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
        }
        Ok(())
    }

    /// Removes a sub-range's counts, e.g. for leave-one-block-out estimates.
    pub fn sub_assign(&mut self, o: &Counts) -> Result<()> {
        if !self.same_shape(o) {
            return Err(Error::Merge("counter layouts differ".into()));
        }
        let underflow = || Error::Merge("subtracted counts exceed the total".into());
        self.frames = self.frames.checked_sub(o.frames).ok_or_else(underflow)?;
        self.cross_terms = self.cross_terms.checked_sub(o.cross_terms).ok_or_else(underflow)?;
        for (x, y) in self.vectors_mut().into_iter().zip(o.vectors()) {
            for (p, q) in x.iter_mut().zip(y) {
                *p = p.checked_sub(*q).ok_or_else(underflow)?;
            }
        }
        Ok(())
    }
}

/// A frame retained for cross terms: its index and lit ROI-local offsets (sorted).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedFrame {
    pub index: u64,
    pub hits: Vec<u32>,
}

/// Single-writer streaming accumulator.
#[derive(Clone, Debug)]
pub struct JpdAccumulator {
    layout: Arc<Layout>,
    counts: Counts,
    lead: Option<CachedFrame>,
    first_index: Option<u64>,
    last: Option<CachedFrame>,
    prev_map: Vec<bool>,
    cur_map: Vec<bool>,
    hits: Vec<u32>,
}

impl JpdAccumulator {
    /// Accumulator for a stream (or chunk) with no preceding frame.
    pub fn new(layout: Arc<Layout>) -> Self {
        let s = layout.s();
        JpdAccumulator {
            counts: layout.empty_counts(),
            layout,
            lead: None,
            first_index: None,
            last: None,
            prev_map: vec![false; s],
            cur_map: vec![false; s],
            hits: Vec::new(),
        }
    }

    /// Accumulator for a chunk that starts right after `lead`.
    pub fn with_lead(layout: Arc<Layout>, lead: &FrameBuffer) -> Result<Self> {
        let mut acc = Self::new(layout);
        let hits = acc.extract_hits(lead)?;
        acc.set_lead(CachedFrame {
            index: lead.index(),
            hits,
        });
        Ok(acc)
    }

    pub(crate) fn from_parts(
        layout: Arc<Layout>,
        counts: Counts,
        lead: Option<CachedFrame>,
        first_index: Option<u64>,
        last: Option<CachedFrame>,
    ) -> Result<Self> {
        let mut acc = Self::new(layout);
        if !acc.counts.same_shape(&counts) {
            return Err(Error::Format("counter sizes do not match the layout".into()));
        }
        let s = acc.layout.s() as u32;
        for f in lead.iter().chain(&last) {
            if f.hits.iter().any(|&h| h >= s) || !f.hits.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Format("cached frame hits are invalid".into()));
            }
        }
        acc.counts = counts;
        acc.lead = lead;
        acc.first_index = first_index;
        acc.last = last;
        acc.refresh_prev_map();
        Ok(acc)
    }

    fn set_lead(&mut self, lead: CachedFrame) {
        self.lead = Some(lead);
        self.refresh_prev_map();
    }

    fn refresh_prev_map(&mut self) {
        self.prev_map.iter_mut().for_each(|b| *b = false);
        if let Some(prev) = self.last.as_ref().or(self.lead.as_ref()) {
            for &h in &prev.hits {
                self.prev_map[h as usize] = true;
            }
        }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn counts(&self) -> &Counts {
        &self.counts
    }

    /// Frames accumulated (`M`).
    pub fn frames(&self) -> u64 {
        self.counts.frames
    }

    pub fn is_empty(&self) -> bool {
        self.counts.frames == 0
    }

    pub fn lead(&self) -> Option<&CachedFrame> {
        self.lead.as_ref()
    }

    pub fn first_index(&self) -> Option<u64> {
        self.first_index
    }

    pub fn last(&self) -> Option<&CachedFrame> {
        self.last.as_ref()
    }

    /// Index the next frame must carry, if constrained.
    pub fn next_index(&self) -> Option<u64> {
        self.last
            .as_ref()
            .or(self.lead.as_ref())
            .map(|f| f.index + 1)
    }

    /// Lit ROI pixels of a binary frame, in row-major order.
    fn extract_hits(&self, frame: &FrameBuffer) -> Result<Vec<u32>> {
        let mut hits = Vec::new();
        self.extract_hits_into(frame, &mut hits)?;
        Ok(hits)
    }

    fn extract_hits_into(&self, frame: &FrameBuffer, hits: &mut Vec<u32>) -> Result<()> {
        let g = self.layout.geometry();
        let expected = (g.width() as u16, g.height() as u16);
        if frame.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: frame.shape(),
            });
        }
        hits.clear();
        let roi = g.roi();
        let (rw, w) = (self.layout.rw, g.width() as usize);
        let values = frame.values();
        for v in 0..self.layout.rh {
            let start = (roi.y0 as usize + v) * w + roi.x0 as usize;
            let row = &values[start..start + rw];
            let base = (v * rw) as u32;
            let mut u = 0;
            for chunk in row.chunks(8) {
                let word = if chunk.len() == 8 {
                    u64::from_ne_bytes(chunk.try_into().unwrap())
                } else {
                    chunk.iter().fold(0u64, |acc, &b| acc | b as u64)
                };
                if word != 0 {
                    for (k, &val) in chunk.iter().enumerate() {
                        if val != 0 {
                            if val > 1 {
                                return Err(Error::NonBinary {
                                    index: frame.index(),
                                    value: val,
                                });
                            }
                            hits.push(base + (u + k) as u32);
                        }
                    }
                }
                u += chunk.len();
            }
        }
        Ok(())
    }

    /// Adds one preprocessed (binary) frame.
    pub fn push(&mut self, frame: &FrameBuffer) -> Result<()> {
        if let Some(expected) = self.next_index() {
            if frame.index() != expected {
                return Err(Error::OutOfOrder {
                    expected,
                    found: frame.index(),
                });
            }
        }
        let mut hits = std::mem::take(&mut self.hits);
        let res = self.extract_hits_into(frame, &mut hits);
        if res.is_ok() {
            self.accumulate_hits(frame.index(), &hits);
        }
        self.hits = hits;
        res
    }

    /// Core update from the sorted lit offsets of frame `index`.
    pub(crate) fn accumulate_hits(&mut self, index: u64, hits: &[u32]) {
        let prev_frame = self.last.take().or_else(|| self.lead.clone());
        let prev: &[u32] = prev_frame.as_ref().map_or(&[], |f| &f.hits);
        let has_prev = prev_frame.is_some();

        let c = &mut self.counts;
        c.frames += 1;
        if has_prev {
            c.cross_terms += 1;
        }
        for &h in hits {
            c.singles[h as usize] += 1;
            self.cur_map[h as usize] = true;
        }

        let layout = &*self.layout;
        let (rw, rh) = (layout.rw, layout.rh);
        if let Some(d) = c.dense.as_mut() {
            let s = layout.s();
            for &i in hits {
                let row = i as usize * s;
                for &j in hits {
                    d.c[row + j as usize] += 1;
                }
                for &j in prev {
                    d.a[row + j as usize] += 1;
                }
            }
        }
        if let Some(ad) = c.antidiag.as_mut() {
            for &i in hits {
                let m = layout.mirror[i as usize] as usize;
                ad.c[i as usize] += self.cur_map[m] as u64;
                ad.a[i as usize] += self.prev_map[m] as u64;
            }
        }
        let uv = |k: u32| ((k as usize) % rw, (k as usize) / rw);
        let sw = 2 * rw - 1;
        if let Some(p) = c.sum.as_mut() {
            for &i in hits {
                let (ui, vi) = uv(i);
                for &j in hits {
                    let (uj, vj) = uv(j);
                    p.c[(vi + vj) * sw + ui + uj] += 1;
                }
                for &j in prev {
                    let (uj, vj) = uv(j);
                    p.a[(vi + vj) * sw + ui + uj] += 1;
                }
            }
        }
        if let Some(p) = c.minus.as_mut() {
            for &i in hits {
                let (ui, vi) = uv(i);
                let (bu, bv) = (ui + rw - 1, vi + rh - 1);
                for &j in hits {
                    let (uj, vj) = uv(j);
                    p.c[(bv - vj) * sw + bu - uj] += 1;
                }
                for &j in prev {
                    let (uj, vj) = uv(j);
                    p.a[(bv - vj) * sw + bu - uj] += 1;
                }
            }
        }
        for (p, &(u1, u2)) in c.column_pairs.iter_mut().zip(&layout.columns) {
            for &i in hits {
                let (ui, vi) = uv(i);
                if ui != u1 {
                    continue;
                }
                for &j in hits {
                    let (uj, vj) = uv(j);
                    if uj == u2 {
                        p.c[vj * rh + vi] += 1;
                    }
                }
                for &j in prev {
                    let (uj, vj) = uv(j);
                    if uj == u2 {
                        p.a[vj * rh + vi] += 1;
                    }
                }
            }
        }
        for (p, &(v1, v2)) in c.row_pairs.iter_mut().zip(&layout.rows) {
            for &i in hits {
                let (ui, vi) = uv(i);
                if vi != v1 {
                    continue;
                }
                for &j in hits {
                    let (uj, vj) = uv(j);
                    if vj == v2 {
                        p.c[uj * rw + ui] += 1;
                    }
                }
                for &j in prev {
                    let (uj, vj) = uv(j);
                    if vj == v2 {
                        p.a[uj * rw + ui] += 1;
                    }
                }
            }
        }
        for (p, &r) in c.conditionals.iter_mut().zip(&layout.refs) {
            let (in_cur, in_prev) = (self.cur_map[r], self.prev_map[r]);
            if in_cur {
                for &i in hits {
                    p.c[i as usize] += 1;
                }
            }
            if in_prev {
                for &i in hits {
                    p.a[i as usize] += 1;
                }
            }
        }

        for &j in prev {
            self.prev_map[j as usize] = false;
        }
        std::mem::swap(&mut self.prev_map, &mut self.cur_map);
        self.first_index.get_or_insert(index);
        let mut cached = prev_frame.unwrap_or(CachedFrame {
            index,
            hits: Vec::new(),
        });
        cached.index = index;
        cached.hits.clear();
        cached.hits.extend_from_slice(hits);
        self.last = Some(cached);
    }

    /// Appends the accumulator of the immediately following range. `next` must
    /// have been seeded with this accumulator's last frame.
    pub fn merge(mut self, next: JpdAccumulator) -> Result<Self> {
        self.merge_from(&next)?;
        Ok(self)
    }

    pub fn merge_from(&mut self, next: &JpdAccumulator) -> Result<()> {
        if self.layout.spec != next.layout.spec {
            return Err(Error::Merge("accumulators have different layouts".into()));
        }
        if next.is_empty() {
            return Ok(());
        }
        if self.is_empty() {
            if self.lead.is_some() && self.lead != next.lead {
                return Err(Error::Merge(
                    "ranges are not consecutive: lead frames differ".into(),
                ));
            }
            self.counts = next.counts.clone();
            self.lead = next.lead.clone();
            self.first_index = next.first_index;
            self.last = next.last.clone();
            self.refresh_prev_map();
            return Ok(());
        }
        match (&self.last, &next.lead) {
            (Some(last), Some(lead)) if last == lead => {}
            (Some(last), Some(lead)) => {
                return Err(Error::Merge(format!(
                    "ranges are not consecutive: left ends at frame {}, right was seeded with frame {}",
                    last.index, lead.index
                )));
            }
            _ => {
                return Err(Error::Merge(
                    "right range was not seeded with the left range's last frame".into(),
                ));
            }
        }
        self.counts.add_assign(&next.counts)?;
        self.last = next.last.clone();
        self.refresh_prev_map();
        Ok(())
    }
}
