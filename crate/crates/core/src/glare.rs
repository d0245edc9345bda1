//! Daylight Glare Probability from fisheye luminance maps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::layout::SceneModel;
use crate::photometry::LuminanceMap;
use crate::projection::{fisheye_pixel, Projection};
use crate::renderer::{RenderError, RenderParams, Renderer, Viewpoint};
use crate::skymodel::{sky_for_time, EpwFile, SkyChoice, SkyError};

/// Source detection multiplier over the mean luminance of the view.
pub const DEFAULT_SOURCE_MULTIPLIER: f64 = 5.0;
/// Threshold (cd/m²) for [`SourcePolicy::Absolute`] when none is given.
pub const DEFAULT_ABSOLUTE_THRESHOLD: f64 = 2000.0;
/// Connected regions smaller than this (sr) are not reported as sources.
pub const MIN_SOURCE_SOLID_ANGLE: f64 = 1e-6;
pub const VIEW_COUNT: usize = 16;
pub const VIEW_STEP_DEG: f64 = 22.5;

#[derive(Debug, Error, PartialEq)]
pub enum GlareError {
    #[error("expected a fisheye180 map, got {0:?}")]
    BadProjection(Projection),
    #[error("vertical illuminance must be finite and non-negative, got {0}")]
    BadIlluminance(f64),
    #[error("glare sources present but vertical illuminance is zero")]
    ZeroEvWithSources,
    #[error("bad date `{0}`, expected MM-DD")]
    BadDate(String),
    #[error(transparent)]
    Sky(#[from] SkyError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlareSource {
    pub mean_luminance: f64,
    pub solid_angle: f64,
    pub position_index: f64,
    /// Unit direction in view coordinates (right, up, forward).
    pub centroid_dir: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlareLevel {
    Imperceptible,
    Perceptible,
    Disturbing,
    Intolerable,
}

impl GlareLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            GlareLevel::Imperceptible => "imperceptible",
            GlareLevel::Perceptible => "perceptible",
            GlareLevel::Disturbing => "disturbing",
            GlareLevel::Intolerable => "intolerable",
        }
    }
}

impl fmt::Display for GlareLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlareResult {
    pub dgp: f64,
    pub ev: f64,
    pub sources: Vec<GlareSource>,
    pub level: GlareLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum SourcePolicy {
    /// Threshold is this multiple of the solid-angle weighted mean luminance.
    Multiplier(f64),
    /// Fixed threshold in cd/m².
    Absolute(f64),
}

impl Default for SourcePolicy {
    fn default() -> Self {
        SourcePolicy::Multiplier(DEFAULT_SOURCE_MULTIPLIER)
    }
}

fn require_fisheye(map: &LuminanceMap) -> Result<(), GlareError> {
    match map.projection() {
        Projection::Fisheye180 => Ok(()),
        p => Err(GlareError::BadProjection(p)),
    }
}

pub fn vertical_illuminance(map: &LuminanceMap) -> Result<f64, GlareError> {
    require_fisheye(map)?;
    let n = map.width();
    let v = map.values();
    Ok((0..n * n)
        .filter_map(|k| fisheye_pixel(k % n, k / n, n).map(|px| v[k] * px.alpha.cos() * px.solid_angle))
        .sum())
}

pub fn detect_sources(map: &LuminanceMap, policy: SourcePolicy) -> Result<Vec<GlareSource>, GlareError> {
    require_fisheye(map)?;
    let n = map.width();
    let v = map.values();
    let px: Vec<_> = (0..n * n).map(|k| fisheye_pixel(k % n, k / n, n)).collect();
    let threshold = match policy {
        SourcePolicy::Absolute(t) => t,
        SourcePolicy::Multiplier(m) => {
            let (mut lw, mut w) = (0.0, 0.0);
            for (k, p) in px.iter().enumerate() {
                if let Some(p) = p {
                    lw += v[k] * p.solid_angle;
                    w += p.solid_angle;
                }
            }
            if w > 0.0 {
                m * lw / w
            } else {
                0.0
            }
        }
    };
    let bright = |k: usize| px[k].is_some() && v[k] > threshold;
    let mut seen = vec![false; n * n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n * n {
        if seen[start] || !bright(start) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut omega, mut flux, mut dir) = (0.0, 0.0, Vec3::ZERO);
        while let Some(k) = stack.pop() {
            let p = px[k].expect("bright pixels lie in the disk");
            omega += p.solid_angle;
            flux += v[k] * p.solid_angle;
            dir += p.local * p.solid_angle;
            let (i, j) = (k % n, k / n);
            let mut push = |nk: usize| {
                if !seen[nk] && bright(nk) {
                    seen[nk] = true;
                    stack.push(nk);
                }
            };
            if i > 0 {
                push(k - 1);
            }
            if i + 1 < n {
                push(k + 1);
            }
            if j > 0 {
                push(k - n);
            }
            if j + 1 < n {
                push(k + n);
            }
        }
        if omega < MIN_SOURCE_SOLID_ANGLE {
            continue;
        }
        let centroid = dir.normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
        let sigma = centroid.z.clamp(-1.0, 1.0).acos().min(std::f64::consts::FRAC_PI_2);
        let tau = centroid.x.abs().atan2(centroid.y.abs());
        out.push(GlareSource {
            mean_luminance: flux / omega,
            solid_angle: omega,
            position_index: guth_position_index(sigma, tau),
            centroid_dir: centroid,
        });
    }
    Ok(out)
}

/// Guth position index for a source `sigma` radians off the line of sight,
/// in a plane `tau` radians from vertical. Sources below the line of sight
/// should be passed with `tau` mirrored above it.
pub fn guth_position_index(sigma: f64, tau: f64) -> f64 {
    let s = sigma.to_degrees();
    let t = tau.to_degrees();
    let a = (35.2 - 0.31889 * t - 1.22 * (-2.0 * t / 9.0).exp()) * 1e-3 * s;
    let b = (21.0 + 0.26667 * t - 0.002963 * t * t) * 1e-5 * s * s;
    (a + b).exp()
}

pub fn compute_dgp(ev: f64, sources: &[GlareSource]) -> Result<GlareResult, GlareError> {
    if !(ev >= 0.0 && ev.is_finite()) {
        return Err(GlareError::BadIlluminance(ev));
    }
    let contrast = if sources.is_empty() {
        0.0
    } else {
        if ev == 0.0 {
            return Err(GlareError::ZeroEvWithSources);
        }
        let e = ev.powf(1.87);
        sources
            .iter()
            .map(|s| s.mean_luminance.powi(2) * s.solid_angle / (e * s.position_index.powi(2)))
            .sum()
    };
    let dgp = (5.87e-5 * ev + 0.098 * (1.0 + contrast).log10() + 0.16).clamp(0.0, 1.0);
    Ok(GlareResult {
        dgp,
        ev,
        sources: sources.to_vec(),
        level: classify(dgp),
    })
}

pub fn classify(dgp: f64) -> GlareLevel {
    if dgp < 0.35 {
        GlareLevel::Imperceptible
    } else if dgp < 0.40 {
        GlareLevel::Perceptible
    } else if dgp < 0.45 {
        GlareLevel::Disturbing
    } else {
        GlareLevel::Intolerable
    }
}

/// Vertical illuminance, source detection and DGP for one fisheye view.
pub fn evaluate_glare(map: &LuminanceMap, policy: SourcePolicy) -> Result<GlareResult, GlareError> {
    let ev = vertical_illuminance(map)?;
    let sources = detect_sources(map, policy)?;
    compute_dgp(ev, &sources)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

impl FromStr for MonthDay {
    type Err = GlareError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GlareError::BadDate(s.to_string());
        let (m, d) = s.trim().split_once('-').ok_or_else(bad)?;
        let md = MonthDay {
            month: m.parse().map_err(|_| bad())?,
            day: d.parse().map_err(|_| bad())?,
        };
        crate::skymodel::day_of_year(md.month, md.day).ok_or_else(bad)?;
        Ok(md)
    }
}

pub fn default_dates() -> Vec<MonthDay> {
    [(3, 21), (6, 21), (9, 21), (12, 21)]
        .into_iter()
        .map(|(month, day)| MonthDay { month, day })
        .collect()
}

/// 08:30 through 16:30 in one-hour steps.
pub fn default_hours() -> Vec<f64> {
    (0..9).map(|k| 8.5 + k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub date: MonthDay,
    pub hour: f64,
    /// 1-based view number.
    pub view: usize,
    pub azimuth_deg: f64,
    pub ev_lux: f64,
    pub dgp: f64,
    pub level: GlareLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dates: Vec<MonthDay>,
    pub hours: Vec<f64>,
    pub fisheye_size: usize,
    pub sky: SkyChoice,
    pub policy: SourcePolicy,
    pub params: RenderParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            dates: default_dates(),
            hours: default_hours(),
            fisheye_size: 64,
            sky: SkyChoice::Auto,
            policy: SourcePolicy::default(),
            params: RenderParams::default(),
        }
    }
}

/// DGP for every date, hour and one of 16 horizontal views at 22.5° steps
/// of room azimuth. Rows come back ordered by date, hour, then view.
pub fn dgp_sweep(
    scene: &SceneModel,
    epw: &EpwFile,
    position: Vec3,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>, GlareError> {
    let slots: Vec<(MonthDay, f64)> = cfg
        .dates
        .iter()
        .flat_map(|&d| cfg.hours.iter().map(move |&h| (d, h)))
        .collect();
    let per_slot: Vec<Vec<SweepRow>> = slots
        .par_iter()
        .map(|&(date, hour)| {
            let sky = sky_for_time(epw, date.month, date.day, hour, cfg.sky)?;
            let renderer = Renderer::new(scene, &sky, cfg.params)?;
            (0..VIEW_COUNT)
                .into_par_iter()
                .map(|k| {
                    let azimuth_deg = k as f64 * VIEW_STEP_DEG;
                    let vp = Viewpoint {
                        position,
                        view_azimuth: azimuth_deg.to_radians(),
                    };
                    let map = renderer.fisheye(&vp, cfg.fisheye_size)?;
                    let g = evaluate_glare(&map, cfg.policy)?;
                    Ok(SweepRow {
                        date,
                        hour,
                        view: k + 1,
                        azimuth_deg,
                        ev_lux: g.ev,
                        dgp: g.dgp,
                        level: g.level,
                    })
                })
                .collect::<Result<Vec<_>, GlareError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_slot.into_iter().flatten().collect())
}

pub const CSV_HEADER: &str = "date,hour,view,azimuth_deg,ev_lux,dgp,level";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{},{:.4},{:.4},{:.4},{}\n",
            r.date, r.hour, r.view, r.azimuth_deg, r.ev_lux, r.dgp, r.level
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::fisheye_mask;

    fn uniform(size: usize, l: f64) -> LuminanceMap {
        let vals = fisheye_mask(size)
            .into_iter()
            .map(|m| if m { l } else { 0.0 })
            .collect();
        LuminanceMap::new(size, size, vals, Projection::Fisheye180).unwrap()
    }

    #[test]
    fn dgp_scalar_cases() {
        assert!((compute_dgp(1000.0, &[]).unwrap().dgp - 0.2187).abs() < 1e-12);
        assert_eq!(compute_dgp(0.0, &[]).unwrap().dgp, 0.16);
        let s = GlareSource {
            mean_luminance: 1e4,
            solid_angle: 1e-3,
            position_index: 1.0,
            centroid_dir: Vec3::new(0.0, 0.0, 1.0),
        };
        assert_eq!(compute_dgp(0.0, &[s]), Err(GlareError::ZeroEvWithSources));
        let g = compute_dgp(1000.0, &[s]).unwrap();
        let expect = 0.2187 + 0.098 * (1.0 + 1e5 / 1000f64.powf(1.87)).log10();
        assert!((g.dgp - expect).abs() < 1e-12);
    }

    #[test]
    fn classification_bands() {
        assert_eq!(classify(0.30), GlareLevel::Imperceptible);
        assert_eq!(classify(0.35), GlareLevel::Perceptible);
        assert_eq!(classify(0.38), GlareLevel::Perceptible);
        assert_eq!(classify(0.40), GlareLevel::Disturbing);
        assert_eq!(classify(0.42), GlareLevel::Disturbing);
        assert_eq!(classify(0.45), GlareLevel::Intolerable);
        assert_eq!(classify(0.47), GlareLevel::Intolerable);
    }

    #[test]
    fn guth_examples() {
        assert_eq!(guth_position_index(0.0, 0.0), 1.0);
        let p = guth_position_index(20f64.to_radians(), 0.0);
        let expect = ((35.2 - 1.22) * 1e-3 * 20.0 + 21e-5 * 400.0f64).exp();
        assert!((p - expect).abs() < 1e-12);
        assert!((p - 2.146).abs() < 1e-3);
    }

    #[test]
    fn uniform_view() {
        let m = uniform(512, 100.0);
        let ev = vertical_illuminance(&m).unwrap();
        assert!((ev / (100.0 * std::f64::consts::PI) - 1.0).abs() < 0.005);
        assert!(detect_sources(&m, SourcePolicy::default()).unwrap().is_empty());
        assert_eq!(vertical_illuminance(&uniform(64, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_panoramas() {
        let m = LuminanceMap::new(8, 4, vec![0.0; 32], Projection::Equirectangular).unwrap();
        assert!(matches!(vertical_illuminance(&m), Err(GlareError::BadProjection(_))));
    }

    #[test]
    fn csv_format() {
        let rows = [SweepRow {
            date: MonthDay { month: 3, day: 21 },
            hour: 8.5,
            view: 1,
            azimuth_deg: 0.0,
            ev_lux: 123.456789,
            dgp: 0.16,
            level: GlareLevel::Imperceptible,
        }];
        assert_eq!(
            sweep_to_csv(&rows),
            "date,hour,view,azimuth_deg,ev_lux,dgp,level\n03-21,8.5000,1,0.0000,123.4568,0.1600,imperceptible\n"
        );
        assert!("02-30".parse::<MonthDay>().is_err());
        assert_eq!("12-21".parse::<MonthDay>().unwrap(), MonthDay { month: 12, day: 21 });
    }
}
