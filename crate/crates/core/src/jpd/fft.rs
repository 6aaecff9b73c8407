//! Frequency-domain evaluation of the sum and minus projections.
//!
//! Over the ROI the sum projection is the linear autoconvolution of each frame
//! and the minus projection its autocorrelation (cross terms use the previous
//! frame). Spectral products are summed over frames and inverted once at the
//! end. This is an independent cross-check of the direct accumulation, not
//! the reference path.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::accumulator::Layout;
use super::projection::{ProjectionImage, ProjectionKind};
use crate::error::{Error, Result};
use crate::frame::FrameBuffer;

pub struct FftProjector {
    layout: Arc<Layout>,
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    sum_c: Vec<Complex64>,
    sum_a: Vec<Complex64>,
    minus_c: Vec<Complex64>,
    minus_a: Vec<Complex64>,
    prev: Option<Vec<Complex64>>,
    frames: u64,
    cross_terms: u64,
}

impl FftProjector {
    pub fn new(layout: Arc<Layout>) -> Self {
        let (rw, rh) = layout.roi_shape();
        let (nx, ny) = (2 * rw - 1, 2 * rh - 1);
        let mut planner = FftPlanner::new();
        let zeros = vec![Complex64::default(); nx * ny];
        FftProjector {
            row_fwd: planner.plan_fft_forward(nx),
            col_fwd: planner.plan_fft_forward(ny),
            row_inv: planner.plan_fft_inverse(nx),
            col_inv: planner.plan_fft_inverse(ny),
            sum_c: zeros.clone(),
            sum_a: zeros.clone(),
            minus_c: zeros.clone(),
            minus_a: zeros,
            prev: None,
            frames: 0,
            cross_terms: 0,
            layout,
            nx,
            ny,
        }
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(data);
        let mut column = vec![Complex64::default(); self.ny];
        for x in 0..self.nx {
            for (y, c) in column.iter_mut().enumerate() {
                *c = data[y * self.nx + x];
            }
            col.process(&mut column);
            for (y, c) in column.iter().enumerate() {
                data[y * self.nx + x] = *c;
            }
        }
    }

    pub fn push(&mut self, frame: &FrameBuffer) -> Result<()> {
        let g = self.layout.geometry();
        if frame.shape() != (g.width() as u16, g.height() as u16) {
            return Err(Error::ShapeMismatch {
                expected: (g.width() as u16, g.height() as u16),
                found: frame.shape(),
            });
        }
        let roi = g.roi();
        let (rw, rh) = self.layout.roi_shape();
        let mut spec = vec![Complex64::default(); self.nx * self.ny];
        for v in 0..rh {
            for u in 0..rw {
                let val = frame.get(roi.x0 + u as u32, roi.y0 + v as u32);
                if val > 1 {
                    return Err(Error::NonBinary {
                        index: frame.index(),
                        value: val,
                    });
                }
                spec[v * self.nx + u].re = val as f64;
            }
        }
        self.fft2(&mut spec, false);
        for k in 0..spec.len() {
            let x = spec[k];
            self.sum_c[k] += x * x;
            self.minus_c[k] += x * x.conj();
        }
        if let Some(prev) = &self.prev {
            for k in 0..spec.len() {
                let (x, y) = (spec[k], prev[k]);
                self.sum_a[k] += x * y;
                self.minus_a[k] += x * y.conj();
            }
            self.cross_terms += 1;
        }
        self.frames += 1;
        self.prev = Some(spec);
        Ok(())
    }

    fn invert(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut data = spec.to_vec();
        self.fft2(&mut data, true);
        let n = (self.nx * self.ny) as f64;
        data.iter().map(|c| c.re / n).collect()
    }

    /// Sum and minus projections, normalized like the direct path.
    pub fn finish(&self) -> Result<(ProjectionImage<f64>, ProjectionImage<f64>)> {
        if self.cross_terms == 0 {
            return Err(Error::Domain("the estimate needs at least 2 consecutive frames".into()));
        }
        let (rw, rh) = self.layout.roi_shape();
        let (m, m1) = (self.frames as f64, self.cross_terms as f64);
        let combine = |c: Vec<f64>, a: Vec<f64>| -> Vec<f64> {
            c.iter().zip(&a).map(|(c, a)| c / m - a / m1).collect()
        };
        let sum = combine(self.invert(&self.sum_c), self.invert(&self.sum_a));
        let circ = combine(self.invert(&self.minus_c), self.invert(&self.minus_a));
        // Circular lag d is stored at d mod n; shift so that lag -(rw-1) comes first.
        let mut minus = vec![0.0; self.nx * self.ny];
        for (k, out) in minus.iter_mut().enumerate() {
            let (px, py) = (k % self.nx, k / self.nx);
            let dx = (px + self.nx - (rw - 1)) % self.nx;
            let dy = (py + self.ny - (rh - 1)) % self.ny;
            *out = circ[dy * self.nx + dx];
        }
        let origin = (-(rw as i32 - 1), -(rh as i32 - 1));
        Ok((
            ProjectionImage::new(ProjectionKind::Sum, self.nx, self.ny, origin, sum),
            ProjectionImage::new(ProjectionKind::Minus, self.nx, self.ny, origin, minus),
        ))
    }
}
