//! `panolight` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, missing input
//! files), 2 for data errors (malformed or inconsistent inputs).
//!
//! `--config FILE` loads a JSON object whose keys are long flag names of the
//! chosen subcommand; values given on the command line win. The
//! `PANOLIGHT_THREADS` environment variable sets the worker count unless
//! `--threads` is passed.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::geom::Vec3;
use crate::glare::{
    default_dates, default_hours, dgp_sweep, evaluate_glare, sweep_to_csv, MonthDay, SourcePolicy, SweepConfig,
    DEFAULT_ABSOLUTE_THRESHOLD, DEFAULT_SOURCE_MULTIPLIER,
};
use crate::hdr_io::{read_hdr_file, write_hdr_file, write_raster_png, HdrImage};
use crate::layout::{
    add_window_reveals, build_scene, export_obj, export_rad, parse_corner_json, project_window, reconstruct_room,
    MaterialSet, RoomLayout, SceneModel, WindowAperture, WindowMaterial, DEFAULT_CAMERA_HEIGHT,
    DEFAULT_CEILING_REFLECTANCE, DEFAULT_FLOOR_REFLECTANCE, DEFAULT_WALL_REFLECTANCE,
};
use crate::photometry::{
    compute_k, error_map, false_color, to_luminance_map, CalibrationFactor, ColorScale, FalseColorScale, LuminanceMap,
    PixelRect, DEFAULT_ERROR_CLIP, DEFAULT_FALSE_COLOR_MAX,
};
use crate::projection::{extract_fisheye, Projection};
use crate::renderer::{RenderParams, Renderer, Viewpoint};
use crate::skymodel::{parse_epw, sky_for_time, EpwFile, SkyChoice};

pub const THREADS_ENV: &str = "PANOLIGHT_THREADS";
const GLAZING_DEFAULT_TEXT: &str = "0.88";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

fn data<E: std::fmt::Display>(ctx: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{ctx}: {e}"))
}

#[derive(Parser, Debug)]
#[command(name = "panolight", version, about = "Panorama-based daylight and glare analysis")]
pub struct Cli {
    /// Worker threads (defaults to PANOLIGHT_THREADS, then the CPU count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print header fields and luminance statistics of an .hdr file.
    HdrInfo(HdrInfoArgs),
    /// Render a false-color PNG with legend.
    Falsecolor(FalsecolorArgs),
    /// Extract horizontal 180° fisheye views from a panorama.
    Fisheye(FisheyeArgs),
    /// Convert an HDR photograph to a calibrated luminance map.
    Luminance(LuminanceArgs),
    /// Signed difference map (first minus second) as PNG plus JSON statistics.
    Errmap(ErrmapArgs),
    /// Reconstruct room geometry and window apertures from corner annotations.
    Layout(LayoutArgs),
    /// Build a material-tagged scene from a layout; writes .json, .rad or .obj.
    Scene(SceneArgs),
    /// Render a panorama or fisheye luminance map for one date and hour.
    Render(RenderArgs),
    /// Daylight Glare Probability of a fisheye luminance map.
    Dgp(DgpArgs),
    /// DGP over dates, hours and 16 view directions as CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct HdrInfoArgs {
    pub input: PathBuf,
    /// Calibration factor applied to luminance statistics.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScaleArg {
    Linear,
    Log,
}

#[derive(Args, Debug)]
pub struct FalsecolorArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min: f64,
    #[arg(long, default_value_t = DEFAULT_FALSE_COLOR_MAX)]
    pub max: f64,
    #[arg(long, value_enum, default_value_t = ScaleArg::Linear)]
    pub scale: ScaleArg,
    /// Omit the legend strip.
    #[arg(long)]
    pub no_legend: bool,
}

#[derive(Args, Debug)]
pub struct FisheyeArgs {
    pub input: PathBuf,
    /// Degrees between successive views.
    #[arg(long, default_value_t = 45.0)]
    pub increment: f64,
    /// Output diameter in pixels.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(short, long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, default_value = "view")]
    pub prefix: String,
}

#[derive(Args, Debug)]
pub struct LuminanceArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Calibration factor; mutually exclusive with --measured.
    #[arg(long, conflicts_with = "measured")]
    pub k: Option<f64>,
    /// Spot-meter reading (cd/m²) for the region given by --region.
    #[arg(long, requires = "region")]
    pub measured: Option<f64>,
    /// Half-open pixel rectangle x0,y0,x1,y1.
    #[arg(long, value_parser = parse_rect)]
    pub region: Option<PixelRect>,
}

#[derive(Args, Debug)]
pub struct ErrmapArgs {
    /// Reference luminance map.
    pub a: PathBuf,
    /// Compared luminance map.
    pub b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ERROR_CLIP)]
    pub clip: f64,
    #[arg(short, long, default_value = "errmap.png")]
    pub output: PathBuf,
    /// Statistics JSON path (defaults to the PNG path with a .json extension).
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LayoutArgs {
    pub corners: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Overrides the camera height stored in the corner file.
    #[arg(long)]
    pub camera_height: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SceneArgs {
    pub layout: PathBuf,
    /// Output path; the format follows the extension (.json, .rad, .obj).
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WALL_REFLECTANCE)]
    pub wall: f64,
    #[arg(long, default_value_t = DEFAULT_CEILING_REFLECTANCE)]
    pub ceiling: f64,
    #[arg(long, default_value_t = DEFAULT_FLOOR_REFLECTANCE)]
    pub floor: f64,
    /// Glaze apertures with this transmittance instead of leaving them open.
    #[arg(long, num_args = 0..=1, default_missing_value = GLAZING_DEFAULT_TEXT)]
    pub glazing: Option<f64>,
    /// Add wall-thickness reveals of this depth (m) around each window.
    #[arg(long)]
    pub reveal: Option<f64>,
    /// Compass bearing (degrees) of the room's forward axis.
    #[arg(long, default_value_t = 0.0)]
    pub heading: f64,
    /// Triangulate faces in .obj output.
    #[arg(long)]
    pub triangulate: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SkyArg {
    Auto,
    Clear,
    Overcast,
}

impl From<SkyArg> for SkyChoice {
    fn from(s: SkyArg) -> Self {
        match s {
            SkyArg::Auto => SkyChoice::Auto,
            SkyArg::Clear => SkyChoice::Clear,
            SkyArg::Overcast => SkyChoice::Overcast,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RenderOpts {
    #[arg(long, default_value_t = 100)]
    pub spp: u32,
    #[arg(long, default_value_t = 8)]
    pub bounces: u32,
    #[arg(long, default_value_t = 0.01)]
    pub lw: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Viewpoint x,y,z in meters (defaults to the scene's capture position).
    #[arg(long, value_parser = parse_vec3)]
    pub position: Option<Vec3>,
    #[arg(long, value_enum, default_value_t = SkyArg::Auto)]
    pub sky: SkyArg,
}

impl RenderOpts {
    fn params(&self) -> RenderParams {
        RenderParams {
            samples_per_pixel: self.spp,
            max_bounces: self.bounces,
            limit_weight: self.lw,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    pub scene: PathBuf,
    pub weather: PathBuf,
    /// MM-DD.
    #[arg(long)]
    pub date: String,
    /// Local standard time in decimal hours.
    #[arg(long)]
    pub hour: f64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Render a fisheye view instead of a panorama.
    #[arg(long)]
    pub fisheye: bool,
    /// Fisheye view azimuth in degrees (room frame).
    #[arg(long, default_value_t = 0.0)]
    pub view_azimuth: f64,
    /// Panorama height or fisheye diameter in pixels.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[command(flatten)]
    pub opts: RenderOpts,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PolicyArg {
    Multiplier,
    Absolute,
}

#[derive(Args, Debug)]
pub struct DgpArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyArg::Multiplier)]
    pub policy: PolicyArg,
    /// Multiplier (default 5) or absolute threshold in cd/m² (default 2000).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub scene: PathBuf,
    pub weather: PathBuf,
    /// Comma-separated MM-DD list.
    #[arg(long, value_delimiter = ',')]
    pub dates: Option<Vec<String>>,
    /// Comma-separated decimal hours.
    #[arg(long, value_delimiter = ',')]
    pub hours: Option<Vec<f64>>,
    /// Fisheye diameter in pixels.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub opts: RenderOpts,
}

fn parse_rect(s: &str) -> Result<PixelRect, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x0, y0, x1, y1] => Ok(PixelRect { x0, y0, x1, y1 }),
        _ => Err("expected x0,y0,x1,y1".into()),
    }
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err("expected x,y,z".into()),
    }
}

/// Layout file written by `layout` and read by `scene`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct LayoutFile {
    pub room: RoomLayout,
    pub apertures: Vec<WindowAperture>,
}

/// Splits `--config PATH` out of `argv` and splices the file's flags in
/// right after the subcommand name.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let p = it
                .next()
                .ok_or_else(|| CliError::Usage("--config needs a path".into()))?;
            config = Some(PathBuf::from(p));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let json: Value = serde_json::from_str(&text).map_err(data(format!("config {}", path.display())))?;
    let Value::Object(map) = json else {
        return Err(CliError::Data(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    };
    let given = |flag: &str| {
        rest.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&format!("{flag}=")) || (flag == "--output" && a == "-o")
        })
    };
    let mut injected = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if given(&flag) {
            continue;
        }
        match value {
            Value::Bool(true) => injected.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar_text).collect();
                injected.push(flag);
                injected.push(joined.join(","));
            }
            v => {
                injected.push(flag);
                injected.push(scalar_text(&v));
            }
        }
    }
    // Position 0 is the program name; the subcommand is the first token after
    // it that is neither a flag nor the value of `--threads`.
    let mut sub_pos = rest.len();
    let mut i = 1;
    while i < rest.len() {
        let a = rest[i].to_string_lossy();
        if a == "--threads" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            sub_pos = i + 1;
            break;
        }
    }
    let tail = rest.split_off(sub_pos.min(rest.len()));
    rest.extend(injected.into_iter().map(OsString::from));
    rest.extend(tail);
    Ok(rest)
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("{THREADS_ENV}=`{v}` is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        // A pool built earlier in this process (e.g. by an embedding test) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match configure_threads(cli.threads).and_then(|_| execute(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn require_file(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file {} does not exist", p.display())))
    }
}

fn require_parent(p: &Path) -> Result<(), CliError> {
    match p.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn read_text(p: &Path) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(data(p.display()))
}

fn write_text(p: &Path, text: &str) -> Result<(), CliError> {
    fs::write(p, text).map_err(data(p.display()))
}

fn load_hdr(p: &Path) -> Result<HdrImage, CliError> {
    read_hdr_file(p).map_err(data(p.display()))
}

fn load_luminance(p: &Path, k: f64) -> Result<LuminanceMap, CliError> {
    let k = CalibrationFactor::new(k).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(to_luminance_map(&load_hdr(p)?, k))
}

fn load_scene(p: &Path) -> Result<SceneModel, CliError> {
    let scene: SceneModel = serde_json::from_str(&read_text(p)?).map_err(data(p.display()))?;
    scene.validate().map_err(data(p.display()))?;
    Ok(scene)
}

fn load_epw(p: &Path) -> Result<EpwFile, CliError> {
    parse_epw(&read_text(p)?).map_err(data(p.display()))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn viewpoint_position(scene: &SceneModel, flag: Option<Vec3>) -> Result<Vec3, CliError> {
    flag.or_else(|| scene.interior.as_ref().map(|i| i.camera))
        .ok_or_else(|| CliError::Usage("scene has no capture position; pass --position x,y,z".into()))
}

#[derive(Serialize)]
struct HdrInfo {
    width: usize,
    height: usize,
    projection: &'static str,
    exposure: f64,
    header: Vec<String>,
    luminance_min: f64,
    luminance_mean: f64,
    luminance_max: f64,
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::HdrInfo(a) => {
            require_file(&a.input)?;
            let img = load_hdr(&a.input)?;
            let k = CalibrationFactor::new(a.k).map_err(|e| CliError::Usage(e.to_string()))?;
            let lum = to_luminance_map(&img, k);
            let v = lum.values();
            let info = HdrInfo {
                width: img.width(),
                height: img.height(),
                projection: img.projection().as_str(),
                exposure: img.exposure(),
                header: img.header_lines().to_vec(),
                luminance_min: v.iter().copied().fold(f64::INFINITY, f64::min),
                luminance_mean: v.iter().sum::<f64>() / v.len().max(1) as f64,
                luminance_max: v.iter().copied().fold(0.0, f64::max),
            };
            if a.json {
                print!("{}", to_json(&info));
            } else {
                println!(
                    "{}: {} x {} ({})",
                    a.input.display(),
                    info.width,
                    info.height,
                    info.projection
                );
                println!("exposure: {}", info.exposure);
                for h in &info.header {
                    println!("header: {h}");
                }
                println!(
                    "luminance (k = {}): min {:.4} mean {:.4} max {:.4} cd/m2",
                    a.k, info.luminance_min, info.luminance_mean, info.luminance_max
                );
            }
        }
        Command::Falsecolor(a) => {
            require_file(&a.input)?;
            require_parent(&a.output)?;
            let scale = match a.scale {
                ScaleArg::Linear => ColorScale::Linear,
                ScaleArg::Log => ColorScale::Log,
            };
            let fc = FalseColorScale::new(a.min, a.max, scale).map_err(|e| CliError::Usage(e.to_string()))?;
            let lum = load_luminance(&a.input, a.k)?;
            let out = false_color(&lum, &fc);
            let raster = if a.no_legend { out.image } else { out.composite() };
            write_raster_png(&raster, &a.output).map_err(data(a.output.display()))?;
        }
        Command::Fisheye(a) => {
            require_file(&a.input)?;
            if !a.output_dir.is_dir() {
                return Err(CliError::Usage(format!(
                    "{} is not a directory",
                    a.output_dir.display()
                )));
            }
            if !(a.increment > 0.0 && a.increment <= 360.0) || a.size == 0 {
                return Err(CliError::Usage("need 0 < increment <= 360 and size > 0".into()));
            }
            let img = load_hdr(&a.input)?;
            let img = if img.projection() == Projection::Unspecified {
                img.with_projection(Projection::Equirectangular)
                    .map_err(data(a.input.display()))?
            } else {
                img
            };
            let n = (360.0 / a.increment).round().max(1.0) as usize;
            for k in 0..n {
                let az = k as f64 * a.increment;
                let view = extract_fisheye(&img, az.to_radians(), a.size).map_err(data(a.input.display()))?;
                let path = a.output_dir.join(format!("{}_{:03}.hdr", a.prefix, az.round() as i64));
                write_hdr_file(&view, &path).map_err(data(path.display()))?;
                println!("{}", path.display());
            }
        }
        Command::Luminance(a) => {
            require_file(&a.input)?;
            require_parent(&a.output)?;
            let img = load_hdr(&a.input)?;
            let k = match (a.k, a.measured, a.region) {
                (Some(k), _, _) => CalibrationFactor::new(k).map_err(|e| CliError::Usage(e.to_string()))?,
                (None, Some(m), Some(r)) => compute_k(m, r, &img).map_err(data(a.input.display()))?,
                _ => CalibrationFactor::IDENTITY,
            };
            let lum = to_luminance_map(&img, k);
            write_hdr_file(&lum.to_hdr_image(), &a.output).map_err(data(a.output.display()))?;
            println!("k = {}", k.value());
        }
        Command::Errmap(a) => {
            require_file(&a.a)?;
            require_file(&a.b)?;
            require_parent(&a.output)?;
            let stats_path = a.stats.clone().unwrap_or_else(|| a.output.with_extension("json"));
            require_parent(&stats_path)?;
            let la = load_luminance(&a.a, 1.0)?;
            let lb = load_luminance(&a.b, 1.0)?;
            let em = error_map(&la, &lb, a.clip).map_err(|e| CliError::Data(e.to_string()))?;
            write_raster_png(&em.render(), &a.output).map_err(data(a.output.display()))?;
            let json = to_json(&em.stats);
            write_text(&stats_path, &json)?;
            print!("{json}");
        }
        Command::Layout(a) => {
            require_file(&a.corners)?;
            require_parent(&a.output)?;
            let corners = parse_corner_json(&read_text(&a.corners)?).map_err(data(a.corners.display()))?;
            let h = a.camera_height.unwrap_or(if corners.camera_height_m > 0.0 {
                corners.camera_height_m
            } else {
                DEFAULT_CAMERA_HEIGHT
            });
            let room = reconstruct_room(&corners, h).map_err(data(a.corners.display()))?;
            let apertures = corners
                .windows
                .iter()
                .map(|w| project_window(&w.quad, w.wall, &room, corners.image))
                .collect::<Result<Vec<_>, _>>()
                .map_err(data(a.corners.display()))?;
            write_text(&a.output, &to_json(&LayoutFile { room, apertures }))?;
        }
        Command::Scene(a) => {
            require_file(&a.layout)?;
            require_parent(&a.output)?;
            let layout: LayoutFile = serde_json::from_str(&read_text(&a.layout)?).map_err(data(a.layout.display()))?;
            let mats = MaterialSet {
                wall: a.wall,
                ceiling: a.ceiling,
                floor: a.floor,
                window: match a.glazing {
                    Some(t) => WindowMaterial::Glazing { transmittance: t },
                    None => WindowMaterial::Open,
                },
            };
            let mut scene = build_scene(&layout.room, &layout.apertures, &mats).map_err(data(a.layout.display()))?;
            if let Some(depth) = a.reveal {
                add_window_reveals(&mut scene, &layout.room, &layout.apertures, depth)
                    .map_err(data(a.layout.display()))?;
            }
            scene.heading_deg = a.heading;
            let ext = a.output.extension().and_then(|e| e.to_str()).unwrap_or("json");
            let text = match ext {
                "rad" => export_rad(&scene),
                "obj" => export_obj(&scene, a.triangulate),
                "json" => to_json(&scene),
                other => return Err(CliError::Usage(format!("unknown scene format `.{other}`"))),
            };
            write_text(&a.output, &text)?;
        }
        Command::Render(a) => {
            require_file(&a.scene)?;
            require_file(&a.weather)?;
            require_parent(&a.output)?;
            let date: MonthDay = a
                .date
                .parse()
                .map_err(|e: crate::glare::GlareError| CliError::Usage(e.to_string()))?;
            let scene = load_scene(&a.scene)?;
            let epw = load_epw(&a.weather)?;
            let sky = sky_for_time(&epw, date.month, date.day, a.hour, a.opts.sky.into())
                .map_err(|e| CliError::Data(e.to_string()))?;
            let renderer = Renderer::new(&scene, &sky, a.opts.params()).map_err(|e| CliError::Usage(e.to_string()))?;
            let vp = Viewpoint {
                position: viewpoint_position(&scene, a.opts.position)?,
                view_azimuth: a.view_azimuth.to_radians(),
            };
            let map = if a.fisheye {
                renderer.fisheye(&vp, a.size)
            } else {
                renderer.panorama(vp.position, a.size)
            }
            .map_err(|e| CliError::Data(e.to_string()))?;
            write_hdr_file(&map.to_hdr_image(), &a.output).map_err(data(a.output.display()))?;
        }
        Command::Dgp(a) => {
            require_file(&a.input)?;
            let policy = match a.policy {
                PolicyArg::Multiplier => SourcePolicy::Multiplier(a.threshold.unwrap_or(DEFAULT_SOURCE_MULTIPLIER)),
                PolicyArg::Absolute => SourcePolicy::Absolute(a.threshold.unwrap_or(DEFAULT_ABSOLUTE_THRESHOLD)),
            };
            let mut img = load_hdr(&a.input)?;
            if img.projection() == Projection::Unspecified {
                img = img
                    .with_projection(Projection::Fisheye180)
                    .map_err(data(a.input.display()))?;
            }
            let k = CalibrationFactor::new(a.k).map_err(|e| CliError::Usage(e.to_string()))?;
            let result = evaluate_glare(&to_luminance_map(&img, k), policy).map_err(data(a.input.display()))?;
            let json = to_json(&result);
            if let Some(out) = &a.output {
                require_parent(out)?;
                write_text(out, &json)?;
            }
            print!("{json}");
        }
        Command::Sweep(a) => {
            require_file(&a.scene)?;
            require_file(&a.weather)?;
            if let Some(o) = &a.output {
                require_parent(o)?;
            }
            let dates = match &a.dates {
                Some(ds) => ds
                    .iter()
                    .map(|d| d.parse::<MonthDay>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                None => default_dates(),
            };
            let scene = load_scene(&a.scene)?;
            let epw = load_epw(&a.weather)?;
            let position = viewpoint_position(&scene, a.opts.position)?;
            let cfg = SweepConfig {
                dates,
                hours: a.hours.clone().unwrap_or_else(default_hours),
                fisheye_size: a.size,
                sky: a.opts.sky.into(),
                params: a.opts.params(),
                ..SweepConfig::default()
            };
            let rows = dgp_sweep(&scene, &epw, position, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
            let csv = sweep_to_csv(&rows);
            match &a.output {
                Some(o) => write_text(o, &csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}
