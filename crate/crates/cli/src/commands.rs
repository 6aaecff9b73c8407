use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;
use spad_jpd::io::hotpixel::HotPixelCalibrator;
use spad_jpd::io::{self, FrameReader, FrameWriter, HotPixelMap};
use spad_jpd::jpd::{
    self, snapshot::write_dense_tensor, ConditionalOptions, FrameSource, Jpd, Layout, LayoutSpec, Mode,
    Preprocessed, ProjectionSpec, Snapshot, SpdfSource,
};
use spad_jpd::sim::FrameStats;
use spad_jpd::snr::{self, RegionMasks, SnrEntry, SnrParams, SnrReport};
use spad_jpd::{BitDepth, Error, Image, Pixel, Result, RngPolicy, SceneConfig, Simulator};

use crate::config::{absolute, ReconstructConfig, RunConfig, SensorConfig};
use crate::manifest::Manifest;
use crate::{CalibrateArgs, KindArg, LayoutArgs, ModeArg, ProjectArgs, ReconstructArgs, SimulateArgs, SnrArgs};

const CHUNK: u64 = 4096;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_owned(),
        source: e,
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config types serialize")
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    let scene = cfg.scene()?.clone();
    let seed = a.seed.unwrap_or(cfg.seed);
    let geometry = cfg.sensor.geometry()?;
    let sim = Simulator::new(geometry.clone(), scene.clone(), cfg.sensor.bit_depth, RngPolicy::new(seed))?;
    create_dir(&a.out)?;

    let mut manifest = Manifest::new(
        "simulate",
        json!({
            "config_file": absolute(&a.config),
            "frames": a.frames,
            "seed": seed,
            "sensor": to_json(&cfg.sensor),
            "geometry": to_json(&geometry),
            "scene": to_json(&scene),
        }),
    );

    let path = a.out.join("frames.spdf");
    let mut writer = FrameWriter::create(
        &path,
        geometry.width() as u16,
        geometry.height() as u16,
        cfg.sensor.bit_depth,
    )?;
    let mut totals = FrameStats::default();
    let mut lit = 0u64;
    let mut per_frame = Vec::new();
    let mut start = 0;
    while start < a.frames {
        let end = (start + CHUNK).min(a.frames);
        let chunk: Vec<_> = (start..end)
            .into_par_iter()
            .map(|i| sim.frame_with_stats(i))
            .collect();
        for (frame, stats) in chunk {
            writer.write_frame(&frame)?;
            lit += frame.lit_count() as u64;
            totals += stats;
            if a.stats {
                per_frame.push((frame.index(), stats));
            }
        }
        start = end;
    }
    writer.finish()?;
    manifest.output("frames.spdf");

    if a.frames > 0 {
        let occupancy = lit as f64 / (a.frames as f64 * geometry.sensor_len() as f64);
        log::info!(
            "{} frames, mean occupancy {occupancy:.3e} (peak estimate inside the beam {:.3e}), {} detected pairs",
            a.frames,
            scene.expected_peak_occupancy(),
            totals.pairs_detected
        );
    }
    if a.stats {
        io::write_frame_stats_csv(&a.out.join("stats.csv"), &per_frame)?;
        manifest.output("stats.csv");
    }
    if !sim.hot_pixels().is_empty() {
        log::info!("{} hot pixels placed", sim.hot_pixels().len());
    }
    manifest.write(&a.out)
}

pub fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let reader = FrameReader::open(&a.input)?;
    reader.expect_bit_depth(BitDepth::Eight)?;
    let h = *reader.header();
    let mut cal = HotPixelCalibrator::new(h.width, h.height, a.threshold);
    for frame in reader {
        cal.add(&frame?)?;
    }
    let map = cal.finish();
    create_dir(&a.out)?;
    map.save(&a.out.join("hotpixels.json"))?;
    log::info!(
        "{} hot pixels ({:.3}% of the sensor) from {} frames",
        map.len(),
        100.0 * map.fraction(),
        map.calibration_frames
    );
    let mut manifest = Manifest::new(
        "calibrate",
        json!({ "input": absolute(&a.input), "threshold": a.threshold }),
    );
    manifest.output("hotpixels.json");
    manifest.write(&a.out)
}

/// Input stream plus the resolved layout.
struct Prepared {
    source: SpdfSource,
    map: Option<HotPixelMap>,
    layout: Arc<Layout>,
    blocks: usize,
    frames: u64,
    config: serde_json::Value,
}

impl Prepared {
    fn source(&self) -> Box<dyn FrameSource + '_> {
        match &self.map {
            Some(map) => Box::new(Preprocessed {
                inner: &self.source,
                map: map.clone(),
            }),
            None => Box::new(Wrapper(&self.source)),
        }
    }
}

struct Wrapper<'a>(&'a SpdfSource);

impl FrameSource for Wrapper<'_> {
    fn frame_count(&self) -> Option<u64> {
        self.0.frame_count()
    }

    fn for_each_frame(
        &self,
        range: std::ops::Range<u64>,
        f: &mut dyn FnMut(&spad_jpd::FrameBuffer) -> Result<()>,
    ) -> Result<()> {
        self.0.for_each_frame(range, f)
    }
}

fn prepare(a: &LayoutArgs) -> Result<Prepared> {
    let input = a
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("no input stream; pass --in".into()))?;
    let source = SpdfSource::open(input)?;
    let header = source.header()?;

    let run = a.config.as_deref().map(RunConfig::load).transpose()?;
    let mut sensor = match &run {
        Some(r) => r.sensor.clone(),
        None => SensorConfig::new(header.width as u32, header.height as u32),
    };
    if (sensor.width, sensor.height) != (header.width as u32, header.height as u32) {
        return Err(Error::Config(format!(
            "config sensor is {}x{}, stream frames are {}x{}",
            sensor.width, sensor.height, header.width, header.height
        )));
    }
    sensor.bit_depth = header.bit_depth;
    if let Some(o) = a.origin {
        sensor.origin = Some(o);
    }
    if let Some(s) = a.symmetry {
        sensor.symmetry = s.into();
    }
    if let Some(r) = a.roi {
        sensor.roi = Some(r);
    }
    let geometry = sensor.geometry()?;

    let defaults = run.and_then(|r| r.reconstruct).unwrap_or_default();
    let mode = match a.mode {
        Some(ModeArg::Full) => Mode::Full,
        Some(ModeArg::ProjectionOnly) => Mode::ProjectionOnly,
        None => defaults.mode,
    };
    let mut projections = defaults.projections.clone();
    projections.sum |= a.sum;
    projections.minus |= a.minus;
    projections.column_pairs.extend(&a.colpair);
    projections.row_pairs.extend(&a.rowpair);
    projections
        .conditionals
        .extend(a.reference.iter().map(|&(x, y)| Pixel::new(x, y)));
    if mode == Mode::Full && projections != ProjectionSpec::default() {
        log::info!("FULL mode derives every projection; projection flags are ignored");
        projections = ProjectionSpec::default();
    }
    let layout = Layout::with_budget(
        LayoutSpec {
            geometry: geometry.clone(),
            mode,
            projections,
        },
        a.memory_budget,
    )?;

    let map = match (&a.hotmap, header.bit_depth) {
        (Some(p), _) => Some(HotPixelMap::load(p)?),
        (None, BitDepth::Eight) => {
            log::warn!("8-bit stream without --hotmap: binarizing without hot-pixel removal");
            Some(HotPixelMap::empty(header.width, header.height))
        }
        (None, BitDepth::One) => None,
    };
    let frames = a.frames.unwrap_or(header.frame_count);
    if frames > header.frame_count {
        return Err(Error::Config(format!(
            "--frames {frames} but the stream has {}",
            header.frame_count
        )));
    }
    let blocks = a.blocks.unwrap_or(defaults.blocks).max(1);
    let config = json!({
        "input": absolute(input),
        "config_file": a.config.as_deref().map(absolute),
        "hotmap": a.hotmap.as_deref().map(absolute),
        "frames": frames,
        "blocks": blocks,
        "memory_budget": a.memory_budget,
        "layout": to_json(layout.spec()),
        "reconstruct": to_json(&ReconstructConfig { mode, blocks, projections: layout.projections().clone() }),
    });
    Ok(Prepared {
        source,
        map,
        layout,
        blocks,
        frames,
        config,
    })
}

fn snapshot_name(m: u64) -> String {
    format!("snapshot_{m}.jpds")
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let p = prepare(&a.layout)?;
    create_dir(&a.out)?;
    let mut config = p.config.clone();
    config["sweep"] = json!(a.sweep);
    let mut manifest = Manifest::new("reconstruct", config);
    let source = p.source();

    let snap = jpd::snapshot(&p.layout, source.as_ref(), p.frames, p.blocks)?;
    snap.save(&a.out.join("snapshot.jpds"))?;
    manifest.output("snapshot.jpds");
    log::info!("accumulated {} frames in {} blocks", snap.frames(), snap.blocks().len());

    if snap.frames() > 0 {
        let intensity: Image = snap.jpd()?.intensity_image();
        intensity.write_pgm(&a.out.join("intensity.pgm"))?;
        intensity.write_csv(&a.out.join("intensity.csv"))?;
        manifest.output("intensity.pgm");
        manifest.output("intensity.csv");
    }

    if !a.sweep.is_empty() {
        for (m, s) in a.sweep.iter().zip(jpd::sweep(&p.layout, source.as_ref(), &a.sweep, p.blocks)?) {
            s.save(&a.out.join(snapshot_name(*m)))?;
            manifest.output(snapshot_name(*m));
        }
    }
    manifest.write(&a.out)
}

fn project_image(a: &ProjectArgs, jpd: &Jpd) -> Result<(String, Image)> {
    let need = |v: Option<i32>, flag: &str| v.ok_or_else(|| Error::Config(format!("--kind needs {flag}")));
    Ok(match a.kind {
        KindArg::Intensity => ("intensity".into(), jpd.intensity_image()),
        KindArg::Antidiag => ("antidiag".into(), jpd.antidiagonal_image()?),
        KindArg::Sum => ("sum".into(), jpd.sum_projection()?),
        KindArg::Minus => ("minus".into(), jpd.minus_projection()?),
        KindArg::Colpair => {
            let (x1, x2) = (need(a.x1, "--x1")?, need(a.x2, "--x2")?);
            (format!("colpair_{x1}_{x2}"), jpd.column_pair_projection(x1, x2)?)
        }
        KindArg::Rowpair => {
            let (y1, y2) = (need(a.y1, "--y1")?, need(a.y2, "--y2")?);
            (format!("rowpair_{y1}_{y2}"), jpd.row_pair_projection(y1, y2)?)
        }
        KindArg::Conditional => {
            let (x, y) = a
                .reference
                .ok_or_else(|| Error::Config("--kind conditional needs --ref X,Y".into()))?;
            let c = jpd.conditional_image(
                Pixel::new(x, y),
                ConditionalOptions {
                    mask_crosstalk: a.mask_crosstalk,
                    normalize: a.normalize,
                },
            )?;
            log::info!("marginal {:.6e}, normalized: {}", c.marginal, c.normalized);
            (format!("conditional_{x}_{y}"), c.image)
        }
        KindArg::Dense => unreachable!("handled by the caller"),
    })
}

pub fn project(a: &ProjectArgs) -> Result<()> {
    let snap = Snapshot::load(&a.snapshot)?;
    let jpd = snap.jpd()?;
    create_dir(&a.out)?;
    let mut manifest = Manifest::new(
        "project",
        json!({
            "snapshot": absolute(&a.snapshot),
            "frames": snap.frames(),
            "kind": format!("{:?}", a.kind).to_lowercase(),
            "ref": a.reference,
            "x1": a.x1, "x2": a.x2, "y1": a.y1, "y2": a.y2,
            "mask_crosstalk": a.mask_crosstalk,
            "normalize": a.normalize,
            "log": a.log,
            "fit_width": a.fit_width,
            "window": a.window,
        }),
    );

    if a.kind == KindArg::Dense {
        let dense = if a.log { jpd.gamma_log::<f64>()? } else { jpd.gamma::<f64>()? };
        let name = if a.log { "gamma_log.jpdt" } else { "gamma.jpdt" };
        write_dense_tensor(&a.out.join(name), &jpd, &dense)?;
        manifest.output(name);
        return manifest.write(&a.out);
    }

    let (name, image) = project_image(a, &jpd)?;
    let scale = image.write_pgm(&a.out.join(format!("{name}.pgm")))?;
    image.write_csv(&a.out.join(format!("{name}.csv")))?;
    manifest.output(format!("{name}.pgm"));
    manifest.output(format!("{name}.scale.txt"));
    manifest.output(format!("{name}.csv"));
    let ((px, py), peak) = image.argmax();
    log::info!(
        "{name}: {}x{}, max {peak:.4e} at ({px}, {py}), gray scale offset {:.4e} step {:.4e}",
        image.width(),
        image.height(),
        scale.offset,
        scale.scale
    );

    if a.fit_width {
        let fit = snr::fit_correlation_width(&image, a.window)?;
        println!(
            "width: sigma_x {:.4} sigma_y {:.4} sigma {:.4} centre ({:.3}, {:.3})",
            fit.sigma_x, fit.sigma_y, fit.sigma, fit.center.0, fit.center.1
        );
        let path = a.out.join(format!("{name}_width.json"));
        let text = serde_json::to_string_pretty(&fit).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
        manifest.output(format!("{name}_width.json"));
    }
    manifest.write(&a.out)
}

fn prediction_scene(path: &Path) -> Result<SceneConfig> {
    Ok(RunConfig::load(path)?.scene()?.clone())
}

pub fn snr(a: &SnrArgs) -> Result<()> {
    let snapshots: Vec<Snapshot> = if !a.sweep.is_empty() {
        if !a.snapshot.is_empty() {
            return Err(Error::Config("pass either --snapshot or --in with --sweep, not both".into()));
        }
        let p = prepare(&a.layout)?;
        let source = p.source();
        jpd::sweep(&p.layout, source.as_ref(), &a.sweep, p.blocks)?
    } else if !a.snapshot.is_empty() {
        a.snapshot.iter().map(|p| Snapshot::load(p)).collect::<Result<_>>()?
    } else {
        return Err(Error::Config("nothing to analyse: pass --snapshot or --in with --sweep".into()));
    };
    let geometry = snapshots[0].layout().geometry().clone();
    if snapshots.iter().any(|s| s.layout().geometry() != &geometry) {
        return Err(Error::Config("snapshots have different geometries".into()));
    }

    let scene = a.predict_from.as_deref().map(prediction_scene).transpose()?;
    let masks = match (&a.masks, &scene) {
        (Some(path), _) => RegionMasks::load(path, &geometry)?,
        (None, Some(scene)) => RegionMasks::auto(&geometry, scene, a.noise.into(), a.margin)?,
        (None, None) => {
            return Err(Error::Config(
                "no masks: pass --masks, or --predict-from for automatic masks".into(),
            ))
        }
    };
    let params: Option<SnrParams> = scene.as_ref().map(|s| s.snr_parameters(&geometry)).transpose()?;
    let coefficient = params.as_ref().map(snr::predict_coefficient).transpose()?;
    let ideal = params
        .as_ref()
        .map(|p| snr::ideal_coefficient(p.detection_efficiency, p.mean_pairs, p.illuminated_pixels));

    let mut entries = Vec::new();
    for s in &snapshots {
        let (value, stats) = snr::measure_snr_jackknife(s, &masks, |j| j.antidiagonal_image())?;
        let m = s.frames();
        entries.push(SnrEntry {
            frames: m,
            snr: value,
            stats,
            predicted: coefficient.map(|c| c * (m as f64).sqrt()),
            ideal: ideal.map(|c| c * (m as f64).sqrt()),
        });
    }
    let mut report = SnrReport {
        masks: masks.description.clone(),
        signal_pixels: masks.signal.len(),
        noise_pixels: masks.noise.len(),
        entries,
        sqrt_fit: None,
        power_fit: None,
        predicted_coefficient: coefficient,
        ideal_coefficient: ideal,
    };
    report.fit();

    for e in &report.entries {
        println!(
            "M {:>10}  SNR {:.4} +- {:.4}{}",
            e.frames,
            e.snr.value(),
            e.snr.error(),
            e.predicted.map(|p| format!("  predicted {p:.4}")).unwrap_or_default()
        );
    }
    if let Some(f) = &report.sqrt_fit {
        println!("fit SNR = a sqrt(M): a = {:.4e} +- {:.2e}, r2 = {:.3}", f.coefficient, f.coefficient_error, f.r_squared);
    }
    if let Some(f) = &report.power_fit {
        println!("free exponent: {:.4} +- {:.4}, r2 = {:.3}", f.exponent, f.exponent_error, f.r_squared);
    }
    if let (Some(c), Some(t)) = (coefficient, ideal) {
        println!("model coefficient {c:.4e}, ideal scheme a_t {t:.4e}");
    }

    create_dir(&a.out)?;
    let path = a.out.join("report.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?;
    io::write_csv(
        &a.out.join("sweep.csv"),
        &["M", "snr", "snr_err", "predicted"],
        report.entries.iter().map(|e| {
            [
                e.frames.to_string(),
                e.snr.value().to_string(),
                e.snr.error().to_string(),
                e.predicted.map(|p| p.to_string()).unwrap_or_default(),
            ]
        }),
    )?;

    let mut manifest = Manifest::new(
        "snr",
        json!({
            "snapshots": a.snapshot.iter().map(|p| absolute(p)).collect::<Vec<_>>(),
            "sweep": a.sweep,
            "masks": a.masks.as_deref().map(absolute),
            "predict_from": a.predict_from.as_deref().map(absolute),
            "noise": to_json(&snr::NoiseRegion::from(a.noise)),
            "margin": a.margin,
            "scene": scene.as_ref().map(to_json),
            "snr_parameters": params.as_ref().map(to_json),
        }),
    );
    manifest.output("report.json");
    manifest.output("sweep.csv");
    manifest.write(&a.out)
}
