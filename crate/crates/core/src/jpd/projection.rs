//! Normalized estimates and projections of the joint distribution.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::accumulator::{CountPair, Counts, JpdAccumulator, Layout, Mode};
use crate::error::{Error, Result};
use crate::geometry::Pixel;
use crate::io::pgm::{self, GrayScale};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionKind {
    /// Per-pixel detection frequency.
    Intensity,
    /// `r -> Gamma(r, R)`.
    Conditional { reference: Pixel },
    /// `r -> Gamma(r, -r)`.
    AntiDiagonal,
    /// Histogram over `r1 + r2`.
    Sum,
    /// Histogram over `r1 - r2`.
    Minus,
    /// `(y1, y2) -> Gamma(x1, y1, x2, y2)`.
    ColumnPair { x1: i32, x2: i32 },
    /// `(x1, x2) -> Gamma(x1, y1, x2, y2)`.
    RowPair { y1: i32, y2: i32 },
}

/// Row-major real image with integer axis labels: column `k` is labelled
/// `x0 + k`, row `k` is labelled `y0 + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionImage<T> {
    kind: ProjectionKind,
    width: usize,
    height: usize,
    x0: i32,
    y0: i32,
    values: Vec<T>,
}

impl<T: Real> ProjectionImage<T> {
    pub fn new(
        kind: ProjectionKind,
        width: usize,
        height: usize,
        origin: (i32, i32),
        values: Vec<T>,
    ) -> Self {
        assert_eq!(values.len(), width * height, "image size mismatch");
        ProjectionImage {
            kind,
            width,
            height,
            x0: origin.0,
            y0: origin.1,
            values,
        }
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Labels of the first column and row.
    pub fn origin(&self) -> (i32, i32) {
        (self.x0, self.y0)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn index_of(&self, x: i32, y: i32) -> Option<usize> {
        let (u, v) = (x as i64 - self.x0 as i64, y as i64 - self.y0 as i64);
        (u >= 0 && v >= 0 && u < self.width as i64 && v < self.height as i64)
            .then(|| v as usize * self.width + u as usize)
    }

    pub fn label_of(&self, index: usize) -> (i32, i32) {
        (
            self.x0 + (index % self.width) as i32,
            self.y0 + (index / self.width) as i32,
        )
    }

    pub fn get(&self, x: i32, y: i32) -> Option<T> {
        self.index_of(x, y).map(|i| self.values[i])
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// Label and value of the largest entry.
    pub fn argmax(&self) -> ((i32, i32), T) {
        let (i, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        (self.label_of(i), v)
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> ProjectionImage<U> {
        ProjectionImage {
            kind: self.kind,
            width: self.width,
            height: self.height,
            x0: self.x0,
            y0: self.y0,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Zeroes the 3x3 block centred on `reference`, clipped to the image.
    pub fn mask_block(&mut self, reference: Pixel) {
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(i) = self.index_of(reference.x + dx, reference.y + dy) {
                    self.values[i] = T::zero();
                }
            }
        }
    }

    /// Raw signed values as CSV rows `x,y,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_csv(
            path,
            &["x", "y", "value"],
            self.values.iter().enumerate().map(|(i, v)| {
                let (x, y) = self.label_of(i);
                [x.to_string(), y.to_string(), format!("{:e}", v.as_f64())]
            }),
        )
    }

    /// Linearly rescaled 8-bit image plus scale sidecar.
    pub fn write_pgm(&self, path: &Path) -> Result<GrayScale> {
        let v: Vec<f64> = self.values.iter().map(|v| v.as_f64()).collect();
        pgm::write_scaled(path, self.width as u32, self.height as u32, &v)
    }
}

/// Copy of a conditional image with the 3x3 block around its reference zeroed.
pub fn mask_crosstalk<T: Real>(image: &ProjectionImage<T>, reference: Pixel) -> ProjectionImage<T> {
    let mut out = image.clone();
    out.mask_block(reference);
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConditionalOptions {
    /// Zero the reference pixel and its 8 neighbours before normalizing.
    pub mask_crosstalk: bool,
    /// Divide by the (post-mask) marginal `sum_r Gamma(r, R)`.
    pub normalize: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conditional<T> {
    pub image: ProjectionImage<T>,
    /// `sum_r Gamma(r, R)` after masking.
    pub marginal: f64,
    /// False when normalization was requested but the marginal was not positive.
    pub normalized: bool,
}

/// Dense `s x s` estimate, row `i` = first pixel (ROI-local offset).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseJpd<T> {
    pub s: usize,
    pub values: Vec<T>,
}

impl<T: Copy> DenseJpd<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.s + j]
    }
}

/// Frozen counters with every normalized query.
#[derive(Clone, Debug)]
pub struct Jpd {
    layout: Arc<Layout>,
    counts: Counts,
}

impl From<&JpdAccumulator> for Jpd {
    fn from(acc: &JpdAccumulator) -> Self {
        Jpd {
            layout: acc.layout().clone(),
            counts: acc.counts().clone(),
        }
    }
}

impl JpdAccumulator {
    /// Snapshot of the current counts for querying.
    pub fn jpd(&self) -> Jpd {
        Jpd::from(self)
    }
}

impl Jpd {
    pub fn new(layout: Arc<Layout>, counts: Counts) -> Self {
        Jpd { layout, counts }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn counts(&self) -> &Counts {
        &self.counts
    }

    pub fn frames(&self) -> u64 {
        self.counts.frames
    }

    /// Counts of this range minus a sub-range of it.
    pub fn without(&self, part: &Jpd) -> Result<Jpd> {
        if self.layout.spec() != part.layout.spec() {
            return Err(Error::Merge("different layouts".into()));
        }
        let mut counts = self.counts.clone();
        counts.sub_assign(&part.counts)?;
        Ok(Jpd {
            layout: self.layout.clone(),
            counts,
        })
    }

    /// Term counts of C and A.
    fn norms(&self) -> Result<(f64, f64)> {
        if self.counts.cross_terms == 0 {
            return Err(Error::Domain(format!(
                "the estimate needs at least 2 consecutive frames, have {}",
                self.counts.frames
            )));
        }
        Ok((self.counts.frames as f64, self.counts.cross_terms as f64))
    }

    fn dense(&self) -> Result<&CountPair> {
        self.counts
            .dense
            .as_ref()
            .ok_or_else(|| Error::Unsupported("the dense JPD is only kept in FULL mode".into()))
    }

    fn estimate<T: Real>(&self, p: &CountPair) -> Result<Vec<T>> {
        let (nc, na) = self.norms()?;
        Ok(p.c
            .iter()
            .zip(&p.a)
            .map(|(&c, &a)| T::of(c as f64 / nc - a as f64 / na))
            .collect())
    }

    /// `Gamma(ri, rj) = C / frames - A / cross_terms`.
    pub fn gamma<T: Real>(&self) -> Result<DenseJpd<T>> {
        let d = self.dense()?;
        Ok(DenseJpd {
            s: self.layout.s(),
            values: self.estimate(d)?,
        })
    }

    /// Same-frame coincidence frequency `C / frames`.
    pub fn total<T: Real>(&self) -> Result<DenseJpd<T>> {
        let d = self.dense()?;
        let (nc, _) = self.norms()?;
        Ok(DenseJpd {
            s: self.layout.s(),
            values: d.c.iter().map(|&c| T::of(c as f64 / nc)).collect(),
        })
    }

    /// Successive-frame coincidence frequency `A / cross_terms`.
    pub fn accidental<T: Real>(&self) -> Result<DenseJpd<T>> {
        let d = self.dense()?;
        let (_, na) = self.norms()?;
        Ok(DenseJpd {
            s: self.layout.s(),
            values: d.a.iter().map(|&a| T::of(a as f64 / na)).collect(),
        })
    }

    /// Mean occupancy `<I(r)>` of every ROI pixel.
    pub fn occupancy(&self) -> Vec<f64> {
        let m = self.counts.frames.max(1) as f64;
        self.counts.singles.iter().map(|&n| n as f64 / m).collect()
    }

    /// `ln(1 + Gamma(ri, rj) / ((1 - <I_i>)(1 - <I_j>)))`, the log-form estimate
    /// up to its unknown overall constant.
    pub fn gamma_log<T: Real>(&self) -> Result<DenseJpd<T>> {
        let d = self.dense()?;
        let (nc, na) = self.norms()?;
        let occ = self.occupancy();
        if let Some((k, p)) = occ.iter().enumerate().find(|(_, &p)| p >= 1.0) {
            return Err(Error::Domain(format!(
                "pixel {k} fires in every frame (occupancy {p}); log estimate undefined"
            )));
        }
        let s = self.layout.s();
        let mut values = Vec::with_capacity(s * s);
        for i in 0..s {
            for j in 0..s {
                let k = i * s + j;
                let g = d.c[k] as f64 / nc - d.a[k] as f64 / na;
                let x = g / ((1.0 - occ[i]) * (1.0 - occ[j]));
                if x <= -1.0 {
                    return Err(Error::Domain(format!(
                        "log argument {} at ({i}, {j}) is not positive",
                        1.0 + x
                    )));
                }
                values.push(T::of(x.ln_1p()));
            }
        }
        Ok(DenseJpd { s, values })
    }

    fn roi_image<T: Real>(&self, kind: ProjectionKind, values: Vec<T>) -> ProjectionImage<T> {
        let g = self.layout.geometry();
        let roi = g.roi();
        let p = g.pixel(roi.x0 as i64, roi.y0 as i64);
        let (w, h) = self.layout.roi_shape();
        ProjectionImage::new(kind, w, h, (p.x, p.y), values)
    }

    /// Summed detections divided by the frame count.
    pub fn intensity_image<T: Real>(&self) -> ProjectionImage<T> {
        let v = self.occupancy().into_iter().map(T::of).collect();
        self.roi_image(ProjectionKind::Intensity, v)
    }

    /// `r -> Gamma(r, -r)` over the ROI.
    pub fn antidiagonal_image<T: Real>(&self) -> Result<ProjectionImage<T>> {
        let values = match self.layout.mode() {
            Mode::ProjectionOnly => self.estimate(self.counts.antidiag.as_ref().expect("kept in projection mode"))?,
            Mode::Full => {
                let d = self.dense()?;
                let s = self.layout.s();
                let pair = CountPair {
                    c: (0..s).map(|i| d.c[i * s + self.layout.mirror()[i] as usize]).collect(),
                    a: (0..s).map(|i| d.a[i * s + self.layout.mirror()[i] as usize]).collect(),
                };
                self.estimate(&pair)?
            }
        };
        Ok(self.roi_image(ProjectionKind::AntiDiagonal, values))
    }

    fn sum_like<T: Real>(&self, minus: bool) -> Result<ProjectionImage<T>> {
        let (rw, rh) = self.layout.roi_shape();
        let (sw, sh) = self.layout.sum_shape();
        let kind = if minus {
            ProjectionKind::Minus
        } else {
            ProjectionKind::Sum
        };
        let values = match self.layout.mode() {
            Mode::ProjectionOnly => {
                let p = if minus {
                    &self.counts.minus
                } else {
                    &self.counts.sum
                };
                let p = p.as_ref().ok_or_else(|| {
                    Error::Unsupported(format!("{kind:?} projection was not requested at accumulation"))
                })?;
                self.estimate(p)?
            }
            Mode::Full => {
                let d = self.dense()?;
                let s = self.layout.s();
                let mut pair = CountPair {
                    c: vec![0; sw * sh],
                    a: vec![0; sw * sh],
                };
                for i in 0..s {
                    let (ui, vi) = (i % rw, i / rw);
                    for j in 0..s {
                        let (uj, vj) = (j % rw, j / rw);
                        let k = if minus {
                            (vi + rh - 1 - vj) * sw + ui + rw - 1 - uj
                        } else {
                            (vi + vj) * sw + ui + uj
                        };
                        pair.c[k] += d.c[i * s + j];
                        pair.a[k] += d.a[i * s + j];
                    }
                }
                self.estimate(&pair)?
            }
        };
        let origin = (-(rw as i32 - 1), -(rh as i32 - 1));
        Ok(ProjectionImage::new(kind, sw, sh, origin, values))
    }

    /// `Delta -> sum over pairs with r1 + r2 = Delta`; `Delta` in pixel offsets
    /// from twice the symmetry centre.
    pub fn sum_projection<T: Real>(&self) -> Result<ProjectionImage<T>> {
        self.sum_like(false)
    }

    /// `Delta -> sum over pairs with r1 - r2 = Delta`.
    pub fn minus_projection<T: Real>(&self) -> Result<ProjectionImage<T>> {
        self.sum_like(true)
    }

    fn roi_origin(&self) -> Pixel {
        let roi = self.layout.geometry().roi();
        self.layout.geometry().pixel(roi.x0 as i64, roi.y0 as i64)
    }

    /// Plane `(y1, y2) -> Gamma((x1, y1), (x2, y2))`; column axis is `y1`.
    pub fn column_pair_projection<T: Real>(&self, x1: i32, x2: i32) -> Result<ProjectionImage<T>> {
        let pair = (self.layout.local_column(x1)?, self.layout.local_column(x2)?);
        let (rw, rh) = self.layout.roi_shape();
        let values = match self.layout.mode() {
            Mode::ProjectionOnly => {
                let slot = self.layout.column_slot(pair).ok_or_else(|| {
                    Error::Unsupported(format!("column pair ({x1}, {x2}) was not requested at accumulation"))
                })?;
                self.estimate(&self.counts.column_pairs[slot])?
            }
            Mode::Full => {
                let d = self.dense()?;
                let s = self.layout.s();
                let mut p = CountPair {
                    c: vec![0; rh * rh],
                    a: vec![0; rh * rh],
                };
                for v1 in 0..rh {
                    for v2 in 0..rh {
                        let k = (v1 * rw + pair.0) * s + v2 * rw + pair.1;
                        p.c[v2 * rh + v1] = d.c[k];
                        p.a[v2 * rh + v1] = d.a[k];
                    }
                }
                self.estimate(&p)?
            }
        };
        let y0 = self.roi_origin().y;
        Ok(ProjectionImage::new(
            ProjectionKind::ColumnPair { x1, x2 },
            rh,
            rh,
            (y0, y0),
            values,
        ))
    }

    /// Plane `(x1, x2) -> Gamma((x1, y1), (x2, y2))`; column axis is `x1`.
    pub fn row_pair_projection<T: Real>(&self, y1: i32, y2: i32) -> Result<ProjectionImage<T>> {
        let pair = (self.layout.local_row(y1)?, self.layout.local_row(y2)?);
        let (rw, _) = self.layout.roi_shape();
        let values = match self.layout.mode() {
            Mode::ProjectionOnly => {
                let slot = self.layout.row_slot(pair).ok_or_else(|| {
                    Error::Unsupported(format!("row pair ({y1}, {y2}) was not requested at accumulation"))
                })?;
                self.estimate(&self.counts.row_pairs[slot])?
            }
            Mode::Full => {
                let d = self.dense()?;
                let s = self.layout.s();
                let mut p = CountPair {
                    c: vec![0; rw * rw],
                    a: vec![0; rw * rw],
                };
                for u1 in 0..rw {
                    for u2 in 0..rw {
                        let k = (pair.0 * rw + u1) * s + pair.1 * rw + u2;
                        p.c[u2 * rw + u1] = d.c[k];
                        p.a[u2 * rw + u1] = d.a[k];
                    }
                }
                self.estimate(&p)?
            }
        };
        let x0 = self.roi_origin().x;
        Ok(ProjectionImage::new(
            ProjectionKind::RowPair { y1, y2 },
            rw,
            rw,
            (x0, x0),
            values,
        ))
    }

    /// `r -> Gamma(r, R)`, optionally crosstalk-masked and normalized.
    pub fn conditional_image<T: Real>(
        &self,
        reference: Pixel,
        options: ConditionalOptions,
    ) -> Result<Conditional<T>> {
        let g = self.layout.geometry();
        let (c, r) = g.absolute(reference);
        let local = g.roi_offset(c, r).ok_or(Error::OutOfRange {
            x: reference.x as i64,
            y: reference.y as i64,
            what: "roi",
        })?;
        let values: Vec<f64> = match self.layout.mode() {
            Mode::ProjectionOnly => {
                let slot = self.layout.conditional_slot(local).ok_or_else(|| {
                    Error::Unsupported(format!(
                        "conditional at {reference} was not requested at accumulation"
                    ))
                })?;
                self.estimate(&self.counts.conditionals[slot])?
            }
            Mode::Full => {
                let d = self.dense()?;
                let s = self.layout.s();
                let p = CountPair {
                    c: (0..s).map(|i| d.c[i * s + local]).collect(),
                    a: (0..s).map(|i| d.a[i * s + local]).collect(),
                };
                self.estimate(&p)?
            }
        };
        let mut image = self.roi_image(ProjectionKind::Conditional { reference }, values);
        if options.mask_crosstalk {
            image.mask_block(reference);
        }
        let marginal: f64 = image.sum();
        let mut normalized = false;
        if options.normalize {
            if marginal > 0.0 {
                image.values_mut().iter_mut().for_each(|v| *v /= marginal);
                normalized = true;
            } else {
                log::warn!("conditional at {reference} has marginal {marginal:e}; left unnormalized");
            }
        }
        Ok(Conditional {
            image: image.map(T::of),
            marginal,
            normalized,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FrameBuffer;
    use crate::geometry::SensorGeometry;
    use crate::jpd::accumulator::ProjectionSpec;

    fn run(mode: Mode, frames: &[FrameBuffer], spec: ProjectionSpec) -> Jpd {
        let g = SensorGeometry::centered(7, 7).unwrap();
        let layout = Layout::new(g, mode, spec).unwrap();
        let mut acc = JpdAccumulator::new(layout);
        frames.iter().for_each(|f| acc.push(f).unwrap());
        acc.jpd()
    }

    fn frames_with_pair(m: u64, at: u64, a: (u32, u32), b: (u32, u32)) -> Vec<FrameBuffer> {
        (0..m)
            .map(|i| {
                if i == at {
                    FrameBuffer::binary(7, 7, i, &[a, b])
                } else {
                    FrameBuffer::binary(7, 7, i, &[])
                }
            })
            .collect()
    }

    #[test]
    fn single_pair_gives_one_over_m() {
        let frames = frames_with_pair(10, 4, (1, 2), (5, 4));
        let j = run(Mode::Full, &frames, ProjectionSpec::default());
        let img = j.antidiagonal_image::<f64>().unwrap();
        assert_eq!(img.get(-2, -1), Some(0.1));
        assert_eq!(img.get(2, 1), Some(0.1));
        assert_eq!(img.values().iter().filter(|&&v| v != 0.0).count(), 2);
        let p = run(Mode::ProjectionOnly, &frames, ProjectionSpec::default());
        assert_eq!(p.antidiagonal_image::<f64>().unwrap(), img);
    }

    #[test]
    fn static_pixel_cancels() {
        let frames: Vec<_> = (0..20).map(|i| FrameBuffer::binary(7, 7, i, &[(3, 3)])).collect();
        let j = run(Mode::Full, &frames, ProjectionSpec::default());
        let g = j.gamma::<f64>().unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert_eq!(j.total::<f64>().unwrap().get(24, 24), 1.0);
        assert!(matches!(j.gamma_log::<f64>(), Err(Error::Domain(_))));
    }

    #[test]
    fn projection_mode_has_no_dense() {
        let frames = frames_with_pair(3, 1, (0, 0), (6, 6));
        let j = run(Mode::ProjectionOnly, &frames, ProjectionSpec::default());
        assert!(matches!(j.gamma::<f64>(), Err(Error::Unsupported(_))));
        assert!(matches!(j.sum_projection::<f64>(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn one_frame_is_not_enough() {
        let frames = frames_with_pair(1, 0, (0, 0), (6, 6));
        let j = run(Mode::Full, &frames, ProjectionSpec::default());
        assert!(matches!(j.gamma::<f64>(), Err(Error::Domain(_))));
    }

    #[test]
    fn full_and_projection_paths_agree() {
        let spec = ProjectionSpec {
            sum: true,
            minus: true,
            column_pairs: vec![(-2, 2), (1, 1)],
            row_pairs: vec![(0, -3)],
            conditionals: vec![Pixel::new(-1, 2), Pixel::new(3, 3)],
        };
        let frames: Vec<_> = (0..40u64)
            .map(|i| {
                let a = ((i * 7 % 7) as u32, (i * 3 % 7) as u32);
                let b = ((i * 5 % 7) as u32, (i * 11 % 7) as u32);
                let c = (6 - a.0, 6 - a.1);
                FrameBuffer::binary(7, 7, i, &[a, b, c])
            })
            .collect();
        let full = run(Mode::Full, &frames, ProjectionSpec::default());
        let proj = run(Mode::ProjectionOnly, &frames, spec.clone());
        assert_eq!(
            full.sum_projection::<f64>().unwrap(),
            proj.sum_projection::<f64>().unwrap()
        );
        assert_eq!(
            full.minus_projection::<f64>().unwrap(),
            proj.minus_projection::<f64>().unwrap()
        );
        for &(x1, x2) in &spec.column_pairs {
            assert_eq!(
                full.column_pair_projection::<f64>(x1, x2).unwrap(),
                proj.column_pair_projection::<f64>(x1, x2).unwrap()
            );
        }
        assert_eq!(
            full.row_pair_projection::<f64>(0, -3).unwrap(),
            proj.row_pair_projection::<f64>(0, -3).unwrap()
        );
        let opts = ConditionalOptions {
            mask_crosstalk: true,
            normalize: true,
        };
        for &r in &spec.conditionals {
            assert_eq!(
                full.conditional_image::<f64>(r, opts).unwrap(),
                proj.conditional_image::<f64>(r, opts).unwrap()
            );
        }
        assert!(proj.conditional_image::<f64>(Pixel::new(0, 0), opts).is_err());
    }

    #[test]
    fn sum_projection_labels_pair_sum() {
        // Pixel (-2,-1) with its exact mirror: r1 + r2 = 0.
        let frames = frames_with_pair(5, 2, (1, 2), (5, 4));
        let j = run(Mode::Full, &frames, ProjectionSpec::default());
        let s = j.sum_projection::<f64>().unwrap();
        assert_eq!((s.width(), s.height()), (13, 13));
        assert_eq!(s.get(0, 0), Some(2.0 / 5.0));
        assert_eq!(s.get(-4, -2), Some(1.0 / 5.0));
        let m = j.minus_projection::<f64>().unwrap();
        assert_eq!(m.get(-4, -2), Some(1.0 / 5.0));
        assert_eq!(m.get(4, 2), Some(1.0 / 5.0));
        assert_eq!(m.get(0, 0), Some(2.0 / 5.0));
    }

    #[test]
    fn conditional_normalization_and_mask() {
        let frames = frames_with_pair(5, 2, (1, 2), (5, 4));
        let j = run(Mode::Full, &frames, ProjectionSpec::default());
        let r = Pixel::new(2, 1);
        let c = j
            .conditional_image::<f64>(
                r,
                ConditionalOptions {
                    mask_crosstalk: true,
                    normalize: true,
                },
            )
            .unwrap();
        assert!(c.normalized);
        assert_eq!(c.image.get(-2, -1), Some(1.0));
        assert_eq!(c.image.sum(), 1.0);

        let empty = j
            .conditional_image::<f64>(
                Pixel::new(0, 0),
                ConditionalOptions {
                    mask_crosstalk: true,
                    normalize: true,
                },
            )
            .unwrap();
        assert!(!empty.normalized);
    }

    #[test]
    fn mask_clips_at_corner() {
        let mut img = ProjectionImage::new(ProjectionKind::AntiDiagonal, 4, 4, (-2, -2), vec![1.0f64; 16]);
        img.mask_block(Pixel::new(-2, -2));
        assert_eq!(img.values().iter().filter(|&&v| v == 0.0).count(), 4);
        let zero = ProjectionImage::new(ProjectionKind::AntiDiagonal, 4, 4, (-2, -2), vec![0.0f32; 16]);
        assert_eq!(mask_crosstalk(&zero, Pixel::new(0, 0)), zero);
    }
}
