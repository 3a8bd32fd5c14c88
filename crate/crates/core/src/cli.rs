//! Batch renderer command line.

use crate::accel::{BuildParams, BuildQuality};
use crate::integrators::{render_frame, FrameOptions, Integrator, IntegratorConfig};
use crate::scene_io::{build_scene, load_scene_file, resolve, write_ppm};
use clap::{Parser, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Eye,
    Ao,
    Pt,
    #[value(name = "pt-nee")]
    PtNee,
}

impl From<IntegratorArg> for Integrator {
    fn from(a: IntegratorArg) -> Self {
        match a {
            IntegratorArg::Eye => Integrator::Eye,
            IntegratorArg::Ao => Integrator::Ao,
            IntegratorArg::Pt => Integrator::Pt,
            IntegratorArg::PtNee => Integrator::PtNee,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QualityArg {
    Fast,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workers {
    Auto,
    Count(usize),
}

fn parse_workers(s: &str) -> Result<Workers, String> {
    if s == "auto" {
        return Ok(Workers::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(Workers::Count(n)),
        _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

/// Renders a scene file to a binary PPM image.
#[derive(Debug, Clone, Parser)]
#[command(name = "rtrender", version)]
pub struct RenderOptions {
    /// Scene description file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Output PPM path, or `-` for standard output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    pub width: u32,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    pub height: u32,
    /// Samples per pixel.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub spp: u32,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Pt)]
    pub integrator: IntegratorArg,
    /// Maximum path vertices for pt and pt-nee.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_depth: u32,
    /// Occlusion ray length for ao.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub ao_length: f64,
    /// Occlusion rays per camera sample for ao.
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u32).range(1..))]
    pub ao_rays: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads: `auto` or a positive count.
    #[arg(long, default_value = "auto", value_parser = parse_workers)]
    pub workers: Workers,
    #[arg(long, value_enum, default_value_t = QualityArg::Balanced)]
    pub build_quality: QualityArg,
    /// Write linear values instead of gamma 2.2 encoded ones.
    #[arg(long)]
    pub no_gamma: bool,
    /// One unjittered sample position per pixel.
    #[arg(long)]
    pub pixel_centers: bool,
}

/// Parses `argv` (program name first), renders and returns the exit code:
/// 0 on success, 1 on runtime errors and 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let opts = match RenderOptions::try_parse_from(argv) {
        Ok(opts) => opts,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match render(&opts) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

/// Runs one render; returns the summary line.
pub fn render(opts: &RenderOptions) -> Result<String, String> {
    let integrator = Integrator::from(opts.integrator);
    let quality = match opts.build_quality {
        QualityArg::Fast => BuildQuality::Fast,
        QualityArg::Balanced => BuildQuality::Balanced,
    };
    let desc = load_scene_file(&opts.scene).map_err(|e| e.to_string())?;
    let build_start = Instant::now();
    let scene = build_scene(&desc, &BuildParams::with_quality(quality)).map_err(|e| e.to_string())?;
    let build_ms = build_start.elapsed().as_secs_f64() * 1e3;
    if integrator == Integrator::PtNee && scene.lights().is_empty() {
        return Err("NEE requested in a scene with no lights".into());
    }
    let cfg = IntegratorConfig {
        max_depth: opts.max_depth,
        ao_ray_count: opts.ao_rays,
        ao_max_length: opts.ao_length,
        ..IntegratorConfig::for_scene(&scene)
    };
    let frame = FrameOptions {
        width: opts.width,
        height: opts.height,
        spp: opts.spp,
        seed: opts.seed,
        workers: match opts.workers {
            Workers::Auto => 0,
            Workers::Count(n) => n,
        },
        pixel_centers: opts.pixel_centers,
    };
    let render_start = Instant::now();
    let (acc, stats) = render_frame(&scene, &cfg, integrator, &frame).map_err(|e| e.to_string())?;
    let render_s = render_start.elapsed().as_secs_f64();
    let gamma = integrator != Integrator::Eye && !opts.no_gamma;
    let image = resolve(&acc, gamma).map_err(|e| e.to_string())?;
    let mut bytes = Vec::with_capacity(image.pixels.len() + 32);
    write_ppm(&image, &mut bytes).map_err(|e| e.to_string())?;
    write_output(&opts.out, &bytes)?;
    Ok(format!(
        "{}x{} {} spp {}: build {:.1} ms, render {:.1} ms, {:.3e} rays/s",
        opts.width,
        opts.height,
        opts.spp,
        integrator.name(),
        build_ms,
        render_s * 1e3,
        stats.rays as f64 / render_s.max(1e-9)
    ))
}

/// Writes through a temporary file renamed into place, so a failure never
/// leaves a partial image at `out`.
fn write_output(out: &Path, bytes: &[u8]) -> Result<(), String> {
    if out == Path::new("-") {
        let mut stdout = std::io::stdout().lock();
        return stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| e.to_string());
    }
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| format!("cannot write `{}`: {e}", out.display()))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| format!("cannot write `{}`: {e}", out.display()))?;
    tmp.persist(out)
        .map_err(|e| format!("cannot write `{}`: {}", out.display(), e.error))?;
    Ok(())
}
