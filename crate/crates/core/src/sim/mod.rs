//! Monte-Carlo SPAD camera observing spatially anti-correlated photon pairs.
//!
//! Per frame, in this order: a Poisson number of pairs is drawn; each pair
//! places photon 1 on the illumination profile and photon 2 at the mirror
//! position plus a rounded Gaussian offset; the object absorbs photons with
//! probability `1 - T(r)`; survivors are detected with probability `eta`;
//! dark counts, stray light, crosstalk and hot pixels are then added.
//! Every draw comes from the frame's own substream ([`RngPolicy::frame_rng`]).

mod config;

pub use config::{Illumination, ObjectMask, SceneConfig, StrayLight};

use std::ops::Range;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{BitDepth, FrameBuffer};
use crate::geometry::{Pixel, SensorGeometry};
use crate::rng::RngPolicy;

/// Both photons of one pair, as absolute sensor indices (possibly off-sensor).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairEvent {
    pub r1: (i64, i64),
    pub r2: (i64, i64),
}

/// Photons of one pair that made it through the object.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Survivors {
    pub photons: [Option<usize>; 2],
}

impl Survivors {
    pub fn count(&self) -> usize {
        self.photons.iter().flatten().count()
    }
}

/// Event bookkeeping for one frame (or summed over many).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameStats {
    pub pairs: u64,
    pub photons_off_sensor: u64,
    pub photons_absorbed: u64,
    pub photons_detected: u64,
    /// Pairs with both photons detected.
    pub pairs_detected: u64,
    pub dark_events: u64,
    pub stray_events: u64,
    pub crosstalk_events: u64,
}

impl std::ops::AddAssign for FrameStats {
    fn add_assign(&mut self, o: Self) {
        self.pairs += o.pairs;
        self.photons_off_sensor += o.photons_off_sensor;
        self.photons_absorbed += o.photons_absorbed;
        self.photons_detected += o.photons_detected;
        self.pairs_detected += o.pairs_detected;
        self.dark_events += o.dark_events;
        self.stray_events += o.stray_events;
        self.crosstalk_events += o.crosstalk_events;
    }
}

struct StrayField {
    prob: Vec<f64>,
    max: f64,
}

pub struct Simulator {
    geometry: SensorGeometry,
    scene: SceneConfig,
    bit_depth: BitDepth,
    policy: RngPolicy,
    transmission: Option<Vec<f64>>,
    stray: Option<StrayField>,
    hot: Vec<usize>,
    pairs: Option<Poisson<f64>>,
    dark: Option<Geometric>,
    /// Continuous symmetry centre in absolute index units.
    centre: (f64, f64),
}

impl Simulator {
    pub fn new(
        geometry: SensorGeometry,
        scene: SceneConfig,
        bit_depth: BitDepth,
        policy: RngPolicy,
    ) -> Result<Self> {
        scene.validate()?;
        let transmission = scene.transmission_map(&geometry)?;
        let stray = scene.stray_map(&geometry)?.and_then(|prob| {
            let max = prob.iter().cloned().fold(0.0, f64::max);
            (max > 0.0).then_some(StrayField { prob, max })
        });
        let hot = {
            let n = geometry.sensor_len();
            let k = (scene.hot_pixel_fraction * n as f64).round() as usize;
            let mut rng = policy.sensor_rng();
            let mut hot = index::sample(&mut rng, n, k.min(n)).into_vec();
            hot.sort_unstable();
            hot
        };
        let pairs = Some(
            Poisson::new(scene.mean_pairs_per_frame)
                .map_err(|e| Error::Config(format!("pair rate: {e}")))?,
        );
        let dark = (scene.dark_count_prob > 0.0)
            .then(|| Geometric::new(scene.dark_count_prob))
            .transpose()
            .map_err(|e| Error::Config(format!("dark count rate: {e}")))?;
        let (cx, cy) = geometry.center2();
        Ok(Simulator {
            centre: (cx as f64 / 2.0, cy as f64 / 2.0),
            geometry,
            scene,
            bit_depth,
            policy,
            transmission,
            stray,
            hot,
            pairs,
            dark,
        })
    }

    pub fn geometry(&self) -> &SensorGeometry {
        &self.geometry
    }

    pub fn scene(&self) -> &SceneConfig {
        &self.scene
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn policy(&self) -> RngPolicy {
        self.policy
    }

    /// Sensor offsets of the hot pixels.
    pub fn hot_pixels(&self) -> &[usize] {
        &self.hot
    }

    /// Draws one pair: photon 1 from the illumination profile, photon 2 at
    /// `-r1 + delta` with `delta` an isotropic Gaussian rounded to whole pixels.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> PairEvent {
        let (lo, hi) = self.scene.illumination.radial_bounds();
        let u: f64 = rng.random();
        let rho = (lo * lo + u * (hi * hi - lo * lo)).sqrt();
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        let (ux, uy) = (rho * theta.cos(), rho * theta.sin());
        let r1 = (
            (self.centre.0 + ux + 0.5).floor() as i64,
            (self.centre.1 + uy + 0.5).floor() as i64,
        );

        let sigma = self.scene.correlation_width + self.scene.aberration_slope * rho;
        let (dx, dy) = if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
            (
                normal.sample(rng).round() as i64,
                normal.sample(rng).round() as i64,
            )
        } else {
            (0, 0)
        };
        let (cx, cy) = self.geometry.center2();
        PairEvent {
            r1,
            r2: (cx - r1.0 + dx, cy - r1.1 + dy),
        }
    }

    /// Transmission at an in-sensor offset.
    #[inline]
    fn transmission_at(&self, offset: usize) -> f64 {
        self.transmission.as_ref().map_or(1.0, |t| t[offset])
    }

    /// Each photon independently survives with probability `T(r)`; photons that
    /// land off-sensor are lost.
    pub fn apply_object<R: Rng + ?Sized>(
        &self,
        event: &PairEvent,
        rng: &mut R,
        stats: &mut FrameStats,
    ) -> Survivors {
        let mut out = Survivors::default();
        for (slot, &(col, row)) in out.photons.iter_mut().zip([event.r1, event.r2].iter()) {
            if !self.geometry.in_sensor(col, row) {
                stats.photons_off_sensor += 1;
                continue;
            }
            let offset = self.geometry.sensor_offset(col as u32, row as u32);
            let t = self.transmission_at(offset);
            let survives = t >= 1.0 || (t > 0.0 && rng.random::<f64>() < t);
            if survives {
                *slot = Some(offset);
            } else {
                stats.photons_absorbed += 1;
            }
        }
        out
    }

    /// Turns the surviving photons of one frame into a sensor readout:
    /// detection with probability `eta`, then dark counts, stray light,
    /// crosstalk and hot pixels.
    pub fn detect_frame<R: Rng + ?Sized>(
        &self,
        index: u64,
        survivors: &[Survivors],
        rng: &mut R,
        stats: &mut FrameStats,
    ) -> FrameBuffer {
        let g = &self.geometry;
        let mut frame =
            FrameBuffer::zeroed(g.width() as u16, g.height() as u16, self.bit_depth, index);
        let mut fired: Vec<usize> = Vec::new();
        let hit = |frame: &mut FrameBuffer, offset: usize, fired: &mut Vec<usize>| {
            if frame.values()[offset] == 0 {
                fired.push(offset);
            }
            frame.bump(offset);
        };

        let eta = self.scene.detection_efficiency;
        for pair in survivors {
            let mut detected = 0;
            for offset in pair.photons.iter().flatten() {
                if eta >= 1.0 || rng.random::<f64>() < eta {
                    hit(&mut frame, *offset, &mut fired);
                    detected += 1;
                }
            }
            stats.photons_detected += detected;
            if detected == 2 {
                stats.pairs_detected += 1;
            }
        }

        let n = g.sensor_len();
        if let Some(geo) = &self.dark {
            let mut pos = geo.sample(rng);
            while pos < n as u64 {
                hit(&mut frame, pos as usize, &mut fired);
                stats.dark_events += 1;
                pos += 1 + geo.sample(rng);
            }
        }

        if let Some(stray) = &self.stray {
            // Thinning: candidate pixels at the peak rate, accepted at p(r)/p_max.
            let geo = Geometric::new(stray.max).expect("peak stray probability in (0, 1]");
            let mut pos = geo.sample(rng);
            while pos < n as u64 {
                let p = stray.prob[pos as usize];
                if p >= stray.max || rng.random::<f64>() * stray.max < p {
                    hit(&mut frame, pos as usize, &mut fired);
                    stats.stray_events += 1;
                }
                pos += 1 + geo.sample(rng);
            }
        }

        let p_ct = self.scene.crosstalk_prob;
        if p_ct > 0.0 {
            let (w, h) = (g.width() as i64, g.height() as i64);
            let primaries = fired.len();
            for k in 0..primaries {
                let offset = fired[k];
                let (col, row) = ((offset as i64) % w, (offset as i64) / w);
                for (dc, dr) in NEIGHBOURS {
                    let (c, r) = (col + dc, row + dr);
                    if c < 0 || r < 0 || c >= w || r >= h {
                        continue;
                    }
                    if rng.random::<f64>() < p_ct {
                        hit(&mut frame, (r * w + c) as usize, &mut fired);
                        stats.crosstalk_events += 1;
                    }
                }
            }
        }

        let full = self.bit_depth.max_value();
        let values = frame.values_mut();
        for &offset in &self.hot {
            values[offset] = full;
        }
        frame
    }

    /// Frame `index` together with its event counts.
    pub fn frame_with_stats(&self, index: u64) -> (FrameBuffer, FrameStats) {
        let mut rng: ChaCha8Rng = self.policy.frame_rng(index);
        let mut stats = FrameStats::default();
        let n_pairs = self.pairs.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
        stats.pairs = n_pairs;
        let mut survivors = Vec::with_capacity(n_pairs as usize);
        for _ in 0..n_pairs {
            let event = self.sample_pair(&mut rng);
            survivors.push(self.apply_object(&event, &mut rng, &mut stats));
        }
        let frame = self.detect_frame(index, &survivors, &mut rng, &mut stats);
        (frame, stats)
    }

    pub fn frame(&self, index: u64) -> FrameBuffer {
        self.frame_with_stats(index).0
    }

    /// Frames `range` in index order, generated lazily on the calling thread.
    pub fn frames(&self, range: Range<u64>) -> impl Iterator<Item = FrameBuffer> + '_ {
        range.map(move |l| self.frame(l))
    }

    /// Frames `range` generated on the rayon pool, returned in index order.
    pub fn generate_chunk(&self, range: Range<u64>) -> Vec<FrameBuffer> {
        range.into_par_iter().map(|l| self.frame(l)).collect()
    }

    /// Centred coordinate of the symmetry centre's nearest pixel for an offset.
    pub fn pixel_of(&self, offset: usize) -> Pixel {
        let w = self.geometry.width() as usize;
        self.geometry
            .pixel((offset % w) as i64, (offset / w) as i64)
    }
}

const NEIGHBOURS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pixel;

    fn sim(scene: SceneConfig) -> Simulator {
        Simulator::new(
            SensorGeometry::centered(64, 64).unwrap(),
            scene,
            BitDepth::One,
            RngPolicy::new(11),
        )
        .unwrap()
    }

    #[test]
    fn zero_width_pairs_are_exact_mirrors() {
        let s = sim(SceneConfig::disk(20.0, 1.0, 1.0));
        let mut rng = s.policy().frame_rng(0);
        let g = s.geometry().clone();
        for _ in 0..10_000 {
            let e = s.sample_pair(&mut rng);
            assert_eq!(g.mirror_index(e.r1.0, e.r1.1).unwrap(), e.r2);
        }
    }

    #[test]
    fn no_detection_means_empty_frames() {
        let s = sim(SceneConfig::disk(20.0, 3.0, 0.0));
        for f in s.frames(0..50) {
            assert_eq!(f.lit_count(), 0);
        }
    }

    #[test]
    fn perfect_detection_of_one_pair_lights_two_pixels() {
        let s = sim(SceneConfig::disk(20.0, 1.0, 1.0));
        let g = s.geometry().clone();
        let (c, r) = g.absolute(Pixel::new(-7, 4));
        let (mc, mr) = g.mirror_index(c, r).unwrap();
        let pair = Survivors {
            photons: [
                Some(g.sensor_offset(c as u32, r as u32)),
                Some(g.sensor_offset(mc as u32, mr as u32)),
            ],
        };
        let mut stats = FrameStats::default();
        let mut rng = s.policy().frame_rng(0);
        let f = s.detect_frame(0, &[pair], &mut rng, &mut stats);
        assert_eq!(f.lit_count(), 2);
        assert_eq!(f.get(c as u32, r as u32), 1);
        assert_eq!(f.get(mc as u32, mr as u32), 1);
        assert_eq!(stats.pairs_detected, 1);
    }

    #[test]
    fn transparent_object_keeps_both_photons() {
        let s = sim(SceneConfig::disk(20.0, 1.0, 1.0));
        let mut rng = s.policy().frame_rng(1);
        let mut stats = FrameStats::default();
        for _ in 0..1000 {
            let e = s.sample_pair(&mut rng);
            assert_eq!(s.apply_object(&e, &mut rng, &mut stats).count(), 2);
        }
        assert_eq!(stats.photons_absorbed, 0);
    }

    #[test]
    fn opaque_half_plane_absorbs() {
        let mut scene = SceneConfig::disk(20.0, 1.0, 1.0);
        scene.object = ObjectMask::HalfPlane {
            normal: [1.0, 0.0],
            offset: 0.0,
        };
        let s = sim(scene);
        let g = s.geometry().clone();
        let mut rng = s.policy().frame_rng(2);
        let mut stats = FrameStats::default();
        let opaque = g.absolute(Pixel::new(30, 15));
        let clear = g.absolute(Pixel::new(-30, -15));
        for _ in 0..100 {
            let e = PairEvent {
                r1: opaque,
                r2: clear,
            };
            let out = s.apply_object(&e, &mut rng, &mut stats);
            assert_eq!(out.photons[0], None);
            assert!(out.photons[1].is_some());
        }
    }

    #[test]
    fn off_sensor_photons_are_counted_as_lost() {
        let s = sim(SceneConfig::disk(20.0, 1.0, 1.0));
        let mut rng = s.policy().frame_rng(3);
        let mut stats = FrameStats::default();
        let e = PairEvent {
            r1: (-3, 10),
            r2: (66, 10),
        };
        assert_eq!(s.apply_object(&e, &mut rng, &mut stats).count(), 0);
        assert_eq!(stats.photons_off_sensor, 2);
    }

    #[test]
    fn hot_pixels_fire_every_frame_at_full_scale() {
        let mut scene = SceneConfig::disk(20.0, 1.0, 0.0);
        scene.hot_pixel_fraction = 0.02;
        let s = Simulator::new(
            SensorGeometry::centered(32, 32).unwrap(),
            scene,
            BitDepth::Eight,
            RngPolicy::new(5),
        )
        .unwrap();
        assert_eq!(s.hot_pixels().len(), 20);
        for f in s.frames(0..5) {
            for &h in s.hot_pixels() {
                assert_eq!(f.values()[h], 255);
            }
            assert_eq!(f.lit_count(), 20);
        }
    }

    #[test]
    fn frames_regenerate_identically() {
        let mut scene = SceneConfig::disk(20.0, 4.0, 0.3);
        scene.dark_count_prob = 0.01;
        scene.crosstalk_prob = 0.05;
        scene.correlation_width = 1.1;
        let s = sim(scene);
        let seq: Vec<_> = s.frames(0..64).collect();
        let par = s.generate_chunk(0..64);
        assert_eq!(seq, par);
        assert_eq!(s.frame(37), seq[37]);
    }
}
