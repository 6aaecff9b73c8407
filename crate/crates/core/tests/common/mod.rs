//! Test-side oracles, written from the definitions and sharing no code paths
//! with the accumulator.
#![allow(dead_code)]

use spad_jpd::frame::FrameBuffer;
use spad_jpd::geometry::{SensorGeometry, SymmetryCenter};

/// Raw double-loop counts over the ROI: `C[i][j] = sum_l I_l(i) I_l(j)`,
/// `A[i][j] = sum_{l>=1} I_l(i) I_{l-1}(j)`, row-major `s x s`.
pub struct BruteCounts {
    pub s: usize,
    pub frames: u64,
    pub c: Vec<u64>,
    pub a: Vec<u64>,
    pub singles: Vec<u64>,
}

/// ROI pixel values of a frame, row-major.
pub fn roi_values(f: &FrameBuffer, g: &SensorGeometry) -> Vec<u64> {
    let r = g.roi();
    let mut out = Vec::with_capacity(r.len());
    for row in r.y0..r.y0 + r.height {
        for col in r.x0..r.x0 + r.width {
            out.push(f.get(col, row) as u64);
        }
    }
    out
}

pub fn brute_counts(frames: &[FrameBuffer], g: &SensorGeometry) -> BruteCounts {
    let s = g.roi().len();
    let mut c = vec![0u64; s * s];
    let mut a = vec![0u64; s * s];
    let mut singles = vec![0u64; s];
    let mut prev: Option<Vec<u64>> = None;
    for f in frames {
        let cur = roi_values(f, g);
        for i in 0..s {
            singles[i] += cur[i];
            // Products with I(i) = 0 vanish; skipping them changes nothing.
            if cur[i] == 0 {
                continue;
            }
            for j in 0..s {
                c[i * s + j] += cur[i] * cur[j];
                if let Some(p) = &prev {
                    a[i * s + j] += cur[i] * p[j];
                }
            }
        }
        prev = Some(cur);
    }
    BruteCounts {
        s,
        frames: frames.len() as u64,
        c,
        a,
        singles,
    }
}

impl BruteCounts {
    pub fn gamma(&self, k: usize) -> f64 {
        self.c[k] as f64 / self.frames as f64 - self.a[k] as f64 / (self.frames - 1) as f64
    }
}

/// Position of an absolute index relative to the symmetry centre, in pixels
/// (half-integers for the corner convention).
pub fn centred(g: &SensorGeometry, col: u32, row: u32) -> (f64, f64) {
    let (ox, oy) = g.origin();
    let shift = match g.center() {
        SymmetryCenter::PixelCenter => 0.0,
        SymmetryCenter::PixelCorner => 0.5,
    };
    (col as f64 - ox as f64 + shift, row as f64 - oy as f64 + shift)
}

/// Absolute index of every ROI offset.
pub fn roi_pixels(g: &SensorGeometry) -> Vec<(u32, u32)> {
    let r = g.roi();
    (r.y0..r.y0 + r.height)
        .flat_map(|row| (r.x0..r.x0 + r.width).map(move |col| (col, row)))
        .collect()
}

/// Uniform random binary frames.
pub fn random_frames(w: u16, h: u16, n: u64, p: f64, seed: u64) -> Vec<FrameBuffer> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let lit: Vec<(u32, u32)> = (0..h as u32)
                .flat_map(|y| (0..w as u32).map(move |x| (x, y)))
                .filter(|_| rng.random::<f64>() < p)
                .collect();
            FrameBuffer::binary(w, h, i, &lit)
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}
