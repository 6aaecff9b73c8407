mod common;

use common::mean_std;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spad_jpd::io::pgm;
use spad_jpd::jpd::{accumulate, Layout, Mode, ProjectionSpec};
use spad_jpd::sim::{FrameStats, ObjectMask, StrayLight};
use spad_jpd::{BitDepth, RngPolicy, SceneConfig, SensorGeometry, Simulator};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

fn sim(g: SensorGeometry, scene: SceneConfig, seed: u64) -> Simulator {
    Simulator::new(g, scene, BitDepth::One, RngPolicy::new(seed)).unwrap()
}

/// Pearson chi-square p-value for observed counts against expected counts.
fn chi2_p(observed: &[f64], expected: &[f64], fitted: usize) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1 - fitted) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

#[test]
fn pairs_per_frame_are_poisson() {
    let m = 2.5;
    let s = sim(SensorGeometry::centered(33, 33).unwrap(), SceneConfig::disk(10.0, m, 0.1), 11);
    let n = 40_000u64;
    let mut hist = [0f64; 9];
    for l in 0..n {
        let (_, st) = s.frame_with_stats(l);
        hist[(st.pairs as usize).min(8)] += 1.0;
    }
    let pois = Poisson::new(m).unwrap();
    let mut expected: Vec<f64> = (0..8).map(|k| pois.pmf(k) * n as f64).collect();
    expected.push(n as f64 - expected.iter().sum::<f64>());
    let p = chi2_p(&hist, &expected, 0);
    assert!(p > 1e-3, "chi-square p = {p}, histogram {hist:?}");
}

#[test]
fn first_photon_is_uniform_over_the_disk() {
    // Large disk so pixel rounding is negligible; four equal-area annuli.
    let r = 800.0;
    let g = SensorGeometry::centered(2001, 2001).unwrap();
    let s = sim(g, SceneConfig::disk(r, 1.0, 1.0), 5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bins = [0f64; 4];
    let n = 40_000;
    for _ in 0..n {
        let e = s.sample_pair(&mut rng);
        let (x, y) = ((e.r1.0 - 1000) as f64, (e.r1.1 - 1000) as f64);
        let f = (x * x + y * y) / (r * r);
        bins[((f * 4.0) as usize).min(3)] += 1.0;
    }
    let p = chi2_p(&bins, &[n as f64 / 4.0; 4], 0);
    assert!(p > 1e-3, "p = {p}, bins {bins:?}");
}

#[test]
fn pair_sum_spread_matches_rounded_gaussian() {
    // Rounding a N(0, s^2) offset to whole pixels adds 1/12 of variance.
    let sigma = 1.1;
    let mut scene = SceneConfig::disk(20.0, 1.0, 1.0);
    scene.correlation_width = sigma;
    let g = SensorGeometry::centered(101, 101).unwrap();
    let (cx, cy) = g.center2();
    let s = sim(g, scene, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut xs, mut ys) = (vec![], vec![]);
    for _ in 0..100_000 {
        let e = s.sample_pair(&mut rng);
        xs.push((e.r1.0 + e.r2.0 - cx) as f64);
        ys.push((e.r1.1 + e.r2.1 - cy) as f64);
    }
    let expected = (sigma * sigma + 1.0 / 12.0).sqrt();
    for v in [&xs, &ys] {
        let (m, sd) = mean_std(v);
        assert!(m.abs() < 0.02, "mean {m}");
        assert!((sd / expected - 1.0).abs() < 0.02, "std {sd} vs {expected}");
    }
}

#[test]
fn half_transmission_object_passes_a_quarter_of_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.pgm");
    let (w, h) = (41u32, 41u32);
    pgm::write_gray(&path, w, h, &vec![128u8; (w * h) as usize]).unwrap();
    let mut scene = SceneConfig::disk(15.0, 1.0, 1.0);
    scene.object = ObjectMask::Image { path };
    let s = sim(SensorGeometry::centered(w, h).unwrap(), scene, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 40_000;
    let mut both = 0usize;
    let mut stats = FrameStats::default();
    for _ in 0..n {
        let e = s.sample_pair(&mut rng);
        if s.apply_object(&e, &mut rng, &mut stats).count() == 2 {
            both += 1;
        }
    }
    let t = 128.0 / 255.0;
    let frac = both as f64 / n as f64;
    assert!((frac - t * t).abs() < 0.01, "joint survival {frac} vs {}", t * t);
}

#[test]
fn genuine_coincidence_rate_and_occupancy() {
    let (eta, m, r, d) = (0.5, 1.0, 8.0, 1e-3);
    let mut scene = SceneConfig::disk(r, m, eta);
    scene.dark_count_prob = d;
    let g = SensorGeometry::centered_corner(24, 24).unwrap();
    let s = sim(g.clone(), scene, 6);
    let layout = Layout::new(g.clone(), Mode::ProjectionOnly, ProjectionSpec::default()).unwrap();
    let jpd = accumulate(&layout, &s, 0..40_000).unwrap().jpd();

    // Each detected pair appears at both r and -r of the anti-diagonal image.
    let total: f64 = jpd.antidiagonal_image::<f64>().unwrap().sum();
    let genuine = 2.0 * eta * eta * m;
    assert!((total / genuine - 1.0).abs() < 0.05, "sum of Gamma(r,-r) {total} vs {genuine}");

    // Interior occupancy: Poisson photon arrivals on unit-area pixels, plus dark counts.
    let lambda = 2.0 * eta * m / (std::f64::consts::PI * r * r);
    let expected = 1.0 - (-lambda).exp() * (1.0 - d);
    let occ = jpd.intensity_image::<f64>();
    let mut inner = vec![];
    for (k, v) in occ.values().iter().enumerate() {
        let (x, y) = occ.label_of(k);
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        if (fx * fx + fy * fy).sqrt() < r - 2.0 {
            inner.push(*v);
        }
    }
    let (mean, _) = mean_std(&inner);
    assert!((mean / expected - 1.0).abs() < 0.1, "occupancy {mean} vs {expected}");
}

#[test]
fn hot_pixels_fire_every_frame_at_full_scale() {
    let mut scene = SceneConfig::disk(20.0, 0.5, 0.1);
    scene.hot_pixel_fraction = 0.02;
    let g = SensorGeometry::centered(128, 128).unwrap();
    let s = Simulator::new(g, scene, BitDepth::Eight, RngPolicy::new(2)).unwrap();
    let frac = s.hot_pixels().len() as f64 / (128.0 * 128.0);
    assert!((frac - 0.02).abs() < 0.002, "hot fraction {frac}");
    for l in [0, 17, 999] {
        let f = s.frame(l);
        for &k in s.hot_pixels() {
            assert_eq!(f.values()[k], 255);
        }
    }
}

#[test]
fn stray_light_is_independent_between_frames() {
    let p = 0.05;
    let mut scene = SceneConfig::disk(10.0, 1.0, 0.0);
    scene.stray_light = StrayLight::Uniform { prob: p };
    let s = sim(SensorGeometry::centered(32, 32).unwrap(), scene, 12);
    let n = 4000u64;
    let (mut lit, mut both) = (0f64, 0f64);
    let mut prev = s.frame(0);
    for l in 1..n {
        let f = s.frame(l);
        for (a, b) in f.values().iter().zip(prev.values()) {
            lit += *a as f64;
            both += (*a & *b) as f64;
        }
        prev = f;
    }
    let cells = (n - 1) as f64 * 1024.0;
    let rate = lit / cells;
    let joint = both / cells;
    let se = (p * p * (1.0 - p * p) / cells).sqrt();
    assert!((rate - p).abs() < 4.0 * (p * (1.0 - p) / cells).sqrt(), "rate {rate}");
    assert!((joint - rate * rate).abs() < 4.0 * se, "joint {joint} vs {}", rate * rate);
}

#[test]
fn crosstalk_fires_neighbours_at_the_configured_rate() {
    let p_ct = 0.05;
    let mut scene = SceneConfig::disk(10.0, 1.0, 0.0);
    scene.dark_count_prob = 0.002;
    scene.crosstalk_prob = p_ct;
    let s = sim(SensorGeometry::centered(64, 64).unwrap(), scene, 13);
    let mut st = FrameStats::default();
    for l in 0..20_000 {
        st += s.frame_with_stats(l).1;
    }
    // Mean neighbour count: interior 8, edges 5, corners 3.
    let per_primary = st.crosstalk_events as f64 / st.dark_events as f64;
    let neighbours = (62.0 * 62.0 * 8.0 + 4.0 * 62.0 * 5.0 + 4.0 * 3.0) / (64.0 * 64.0);
    assert!((per_primary / (neighbours * p_ct) - 1.0).abs() < 0.1, "{per_primary}");
}

#[test]
fn frames_depend_only_on_seed_and_index() {
    let mut scene = SceneConfig::disk(10.0, 3.0, 0.3);
    scene.dark_count_prob = 0.01;
    scene.correlation_width = 1.0;
    let g = SensorGeometry::centered(32, 32).unwrap();
    let a = sim(g.clone(), scene.clone(), 99);
    let b = sim(g.clone(), scene.clone(), 99);
    let c = sim(g, scene, 100);
    let seq: Vec<_> = a.frames(0..200).collect();
    assert_eq!(seq, b.generate_chunk(0..200));
    assert_eq!(seq[150], b.frame(150));
    assert_ne!(seq, c.generate_chunk(0..200));
}
