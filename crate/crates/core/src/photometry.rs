//! Calibrated luminance, false-color rendering and signed error maps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hdr_io::{HdrImage, Raster8, Rgb};
use crate::projection::{fisheye_mask, ProjectedRaster, Projection};

/// Rec.709 luminance weights applied to linear RGB.
pub const LUMINANCE_COEFFS: [f64; 3] = [0.2127, 0.7151, 0.0722];

pub const DEFAULT_FALSE_COLOR_MAX: f64 = 1000.0;
pub const DEFAULT_ERROR_CLIP: f64 = 3000.0;

#[derive(Debug, Error, PartialEq)]
pub enum PhotometryError {
    #[error("calibration factor must be positive and finite, got {0}")]
    BadCalibration(f64),
    #[error("calibration region is empty or outside the image")]
    EmptyRegion,
    #[error("calibration region has zero mean luminance")]
    ZeroRegionLuminance,
    #[error("bad display range [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },
    #[error("maps differ: {0}")]
    DimensionMismatch(String),
    #[error("invalid luminance map: {0}")]
    InvalidMap(String),
}

/// Scalar that turns relative luminance into cd/m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFactor(f64);

impl CalibrationFactor {
    pub const IDENTITY: CalibrationFactor = CalibrationFactor(1.0);

    pub fn new(k: f64) -> Result<Self, PhotometryError> {
        if k > 0.0 && k.is_finite() {
            Ok(CalibrationFactor(k))
        } else {
            Err(PhotometryError::BadCalibration(k))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Luminance raster in cd/m².
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    projection: Projection,
}

impl LuminanceMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, projection: Projection) -> Result<Self, PhotometryError> {
        if values.len() != width * height {
            return Err(PhotometryError::InvalidMap(format!(
                "{} values for {width}x{height}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(PhotometryError::InvalidMap(format!(
                "value {v} is not finite and non-negative"
            )));
        }
        projection
            .check_dims(width, height)
            .map_err(|e| PhotometryError::InvalidMap(e.to_string()))?;
        Ok(LuminanceMap {
            width,
            height,
            values,
            projection,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    /// Pixels that carry data: the image circle for fisheyes, everything otherwise.
    pub fn valid_mask(&self) -> Vec<bool> {
        match self.projection {
            Projection::Fisheye180 => fisheye_mask(self.width),
            _ => vec![true; self.values.len()],
        }
    }

    /// Grey RGB image whose Rec.709 luminance equals this map.
    pub fn to_hdr_image(&self) -> HdrImage {
        let pixels = self.values.iter().map(|&v| [v as f32; 3]).collect();
        HdrImage::new(self.width, self.height, pixels, self.projection).expect("map invariants imply image invariants")
    }
}

impl ProjectedRaster for LuminanceMap {
    type Texel = f64;

    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn projection(&self) -> Projection {
        self.projection
    }

    fn texels(&self) -> &[f64] {
        &self.values
    }

    fn from_texels(width: usize, height: usize, texels: Vec<f64>, projection: Projection) -> Self {
        LuminanceMap {
            width,
            height,
            values: texels,
            projection,
        }
    }
}

pub fn pixel_luminance(rgb: Rgb, k: CalibrationFactor) -> f64 {
    let [r, g, b] = rgb.map(f64::from);
    k.0 * (LUMINANCE_COEFFS[0] * r + LUMINANCE_COEFFS[1] * g + LUMINANCE_COEFFS[2] * b)
}

pub fn to_luminance_map(img: &HdrImage, k: CalibrationFactor) -> LuminanceMap {
    LuminanceMap {
        width: img.width(),
        height: img.height(),
        values: img.pixels().iter().map(|&p| pixel_luminance(p, k)).collect(),
        projection: img.projection(),
    }
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

/// Calibration factor mapping the region's mean relative luminance onto a spot measurement.
pub fn compute_k(measured: f64, region: PixelRect, img: &HdrImage) -> Result<CalibrationFactor, PhotometryError> {
    if region.x0 >= region.x1 || region.y0 >= region.y1 || region.x1 > img.width() || region.y1 > img.height() {
        return Err(PhotometryError::EmptyRegion);
    }
    let mut sum = 0.0;
    for y in region.y0..region.y1 {
        for x in region.x0..region.x1 {
            sum += pixel_luminance(img.pixel(x, y), CalibrationFactor::IDENTITY);
        }
    }
    let n = ((region.x1 - region.x0) * (region.y1 - region.y0)) as f64;
    let mean = sum / n;
    if mean <= 0.0 {
        return Err(PhotometryError::ZeroRegionLuminance);
    }
    CalibrationFactor::new(measured / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorScale {
    #[default]
    Linear,
    Log,
}

const RAMP_ANCHORS: [[f64; 3]; 5] = [
    [0.0, 0.0, 255.0],
    [0.0, 255.0, 255.0],
    [0.0, 255.0, 0.0],
    [255.0, 255.0, 0.0],
    [255.0, 0.0, 0.0],
];

pub const RAMP_LEN: usize = 256;

/// Color of ramp entry `i` (0 = blue … 255 = red).
pub fn ramp_color(i: usize) -> [u8; 3] {
    let t = i.min(RAMP_LEN - 1) as f64 / (RAMP_LEN - 1) as f64 * (RAMP_ANCHORS.len() - 1) as f64;
    let seg = (t.floor() as usize).min(RAMP_ANCHORS.len() - 2);
    let f = t - seg as f64;
    let (a, b) = (RAMP_ANCHORS[seg], RAMP_ANCHORS[seg + 1]);
    [0, 1, 2].map(|c| (a[c] + (b[c] - a[c]) * f).round() as u8)
}

/// Display mapping from luminance to a ramp index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalseColorScale {
    lo: f64,
    hi: f64,
    scale: ColorScale,
}

impl FalseColorScale {
    pub fn new(lo: f64, hi: f64, scale: ColorScale) -> Result<Self, PhotometryError> {
        let ok = lo.is_finite() && hi.is_finite() && lo < hi && (scale == ColorScale::Linear || lo > 0.0);
        if !ok {
            return Err(PhotometryError::BadRange { lo, hi });
        }
        Ok(FalseColorScale { lo, hi, scale })
    }

    pub fn index(&self, l: f64) -> usize {
        let t = match self.scale {
            ColorScale::Linear => (l - self.lo) / (self.hi - self.lo),
            ColorScale::Log if l <= self.lo => 0.0,
            ColorScale::Log => (l / self.lo).ln() / (self.hi / self.lo).ln(),
        };
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        (t * (RAMP_LEN - 1) as f64).round() as usize
    }

    /// Luminance at the center of ramp entry `i`.
    pub fn value_at(&self, i: usize) -> f64 {
        let t = i as f64 / (RAMP_LEN - 1) as f64;
        match self.scale {
            ColorScale::Linear => self.lo + t * (self.hi - self.lo),
            ColorScale::Log => self.lo * (self.hi / self.lo).powf(t),
        }
    }
}

impl Default for FalseColorScale {
    fn default() -> Self {
        FalseColorScale {
            lo: 0.0,
            hi: DEFAULT_FALSE_COLOR_MAX,
            scale: ColorScale::Linear,
        }
    }
}

pub struct FalseColorImage {
    pub image: Raster8,
    /// Vertical ramp strip, `hi` at the top.
    pub legend: Raster8,
}

impl FalseColorImage {
    /// Image with the legend strip placed to its right.
    pub fn composite(&self) -> Raster8 {
        let gap = 4;
        let w = self.image.width + gap + self.legend.width;
        let h = self.image.height.max(self.legend.height);
        let mut out = Raster8::new(w, h);
        out.data.fill([255; 3]);
        for y in 0..self.image.height {
            for x in 0..self.image.width {
                out.set(x, y, self.image.get(x, y));
            }
        }
        for y in 0..self.legend.height {
            for x in 0..self.legend.width {
                out.set(self.image.width + gap + x, y, self.legend.get(x, y));
            }
        }
        out
    }
}

pub const LEGEND_WIDTH: usize = 16;

/// Renders `map` through the blue→red ramp. Pixels outside a fisheye's image circle are black.
pub fn false_color(map: &LuminanceMap, scale: &FalseColorScale) -> FalseColorImage {
    let mask = map.valid_mask();
    let data = map
        .values
        .iter()
        .zip(&mask)
        .map(|(&l, &ok)| if ok { ramp_color(scale.index(l)) } else { [0; 3] })
        .collect();
    let image = Raster8 {
        width: map.width,
        height: map.height,
        data,
    };
    let h = map.height.max(2);
    let mut legend = Raster8::new(LEGEND_WIDTH, h);
    for y in 0..h {
        let idx = ((h - 1 - y) as f64 / (h - 1) as f64 * (RAMP_LEN - 1) as f64).round() as usize;
        for x in 0..LEGEND_WIDTH {
            legend.set(x, y, ramp_color(idx));
        }
    }
    FalseColorImage { image, legend }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mae: f64,
    pub rmse: f64,
    pub bias: f64,
    pub n_pixels: usize,
    pub clip: f64,
}

/// Signed difference `a − b` with statistics over valid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub width: usize,
    pub height: usize,
    pub projection: Projection,
    /// Raw, unclipped difference in cd/m².
    pub signed_diff: Vec<f64>,
    pub clip: f64,
    pub stats: ErrorStats,
    mask: Vec<bool>,
}

pub fn error_map(a: &LuminanceMap, b: &LuminanceMap, clip: f64) -> Result<ErrorMap, PhotometryError> {
    if (a.width, a.height, a.projection) != (b.width, b.height, b.projection) {
        return Err(PhotometryError::DimensionMismatch(format!(
            "{}x{} {:?} vs {}x{} {:?}",
            a.width, a.height, a.projection, b.width, b.height, b.projection
        )));
    }
    if !(clip > 0.0 && clip.is_finite()) {
        return Err(PhotometryError::BadRange { lo: -clip, hi: clip });
    }
    let mask = a.valid_mask();
    let signed_diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let (mut abs, mut sq, mut sum, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (d, _) in signed_diff.iter().zip(&mask).filter(|(_, ok)| **ok) {
        abs += d.abs();
        sq += d * d;
        sum += d;
        n += 1;
    }
    let nf = n.max(1) as f64;
    Ok(ErrorMap {
        width: a.width,
        height: a.height,
        projection: a.projection,
        signed_diff,
        clip,
        stats: ErrorStats {
            mae: abs / nf,
            rmse: (sq / nf).sqrt(),
            bias: sum / nf,
            n_pixels: n,
            clip,
        },
        mask,
    })
}

/// Blue below zero, white at zero, red above; saturates at `±clip`.
pub fn diverging_color(d: f64, clip: f64) -> [u8; 3] {
    let t = (d / clip).clamp(-1.0, 1.0);
    let fade = (255.0 * (1.0 - t.abs())).round() as u8;
    if t < 0.0 {
        [fade, fade, 255]
    } else if t > 0.0 {
        [255, fade, fade]
    } else {
        [255; 3]
    }
}

impl ErrorMap {
    pub fn render(&self) -> Raster8 {
        let data = self
            .signed_diff
            .iter()
            .zip(&self.mask)
            .map(|(&d, &ok)| if ok { diverging_color(d, self.clip) } else { [0; 3] })
            .collect();
        Raster8 {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(values: Vec<f64>, w: usize, h: usize) -> LuminanceMap {
        LuminanceMap::new(w, h, values, Projection::Unspecified).unwrap()
    }

    #[test]
    fn luminance_examples() {
        assert_eq!(pixel_luminance([1.0; 3], CalibrationFactor::IDENTITY), 1.0);
        let k2 = CalibrationFactor::new(2.0).unwrap();
        assert!((pixel_luminance([1.0, 0.0, 0.0], k2) - 0.4254).abs() < 1e-15);
        assert_eq!(pixel_luminance([0.0; 3], k2), 0.0);
        assert!(CalibrationFactor::new(0.0).is_err());
        assert!(CalibrationFactor::new(f64::NAN).is_err());
    }

    #[test]
    fn luminance_map_keeps_projection() {
        let img = HdrImage::new(2, 1, vec![[1.0; 3], [2.0; 3]], Projection::Equirectangular).unwrap();
        let m = to_luminance_map(&img, CalibrationFactor::IDENTITY);
        assert_eq!(m.values(), &[1.0, 2.0]);
        assert_eq!(m.projection(), Projection::Equirectangular);
        let m2 = to_luminance_map(&img, CalibrationFactor::new(2.0).unwrap());
        assert_eq!(m2.values(), &[2.0, 4.0]);
    }

    #[test]
    fn calibration_factor_examples() {
        let img = HdrImage::new(4, 4, vec![[100.0; 3]; 16], Projection::Unspecified).unwrap();
        let r = PixelRect {
            x0: 1,
            y0: 1,
            x1: 3,
            y1: 3,
        };
        assert!((compute_k(200.0, r, &img).unwrap().value() - 2.0).abs() < 1e-12);
        assert!((compute_k(100.0, r, &img).unwrap().value() - 1.0).abs() < 1e-12);
        let black = HdrImage::new(4, 4, vec![[0.0; 3]; 16], Projection::Unspecified).unwrap();
        assert_eq!(compute_k(100.0, r, &black), Err(PhotometryError::ZeroRegionLuminance));
        let empty = PixelRect {
            x0: 2,
            y0: 1,
            x1: 2,
            y1: 3,
        };
        assert_eq!(compute_k(100.0, empty, &img), Err(PhotometryError::EmptyRegion));
    }

    #[test]
    fn false_color_ends_of_ramp() {
        let s = FalseColorScale::default();
        let fc = false_color(&map(vec![0.0, 1000.0, 5000.0, 500.0], 4, 1), &s);
        assert_eq!(fc.image.get(0, 0), [0, 0, 255]);
        assert_eq!(fc.image.get(1, 0), [255, 0, 0]);
        assert_eq!(fc.image.get(2, 0), [255, 0, 0]);
        assert_eq!(fc.image.get(3, 0), ramp_color(128));
        assert_eq!(fc.legend.get(0, 0), [255, 0, 0]);
        assert_eq!(fc.legend.get(0, fc.legend.height - 1), [0, 0, 255]);
        assert!(FalseColorScale::new(10.0, 10.0, ColorScale::Linear).is_err());
        assert!(FalseColorScale::new(0.0, 10.0, ColorScale::Log).is_err());
    }

    #[test]
    fn log_scale_maps_decades_evenly() {
        let s = FalseColorScale::new(1.0, 10_000.0, ColorScale::Log).unwrap();
        assert_eq!(s.index(0.0), 0);
        assert_eq!(s.index(100.0), 128);
        assert_eq!(s.index(1e6), 255);
    }

    #[test]
    fn error_map_examples() {
        let a = map(vec![10.0, 20.0, 30.0], 3, 1);
        let e = error_map(&a, &a, DEFAULT_ERROR_CLIP).unwrap();
        assert_eq!((e.stats.mae, e.stats.rmse, e.stats.bias), (0.0, 0.0, 0.0));
        assert!(e.render().data.iter().all(|c| *c == [255; 3]));

        let b = map(vec![5010.0, 20.0, 30.0], 3, 1);
        let e = error_map(&b, &a, DEFAULT_ERROR_CLIP).unwrap();
        assert_eq!(e.render().get(0, 0), [255, 0, 0]);
        assert!((e.stats.mae - 5000.0 / 3.0).abs() < 1e-9);
        let back = error_map(&a, &b, DEFAULT_ERROR_CLIP).unwrap();
        assert_eq!(back.stats.bias, -e.stats.bias);
        assert_eq!(back.stats.mae, e.stats.mae);
        assert_eq!(back.render().get(0, 0), [0, 0, 255]);

        let c = map(vec![1.0; 4], 4, 1);
        assert!(matches!(
            error_map(&a, &c, 3000.0),
            Err(PhotometryError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fisheye_stats_ignore_outside_of_disk() {
        let size = 8;
        let a = LuminanceMap::new(size, size, vec![1.0; 64], Projection::Fisheye180).unwrap();
        let b = LuminanceMap::new(size, size, vec![0.0; 64], Projection::Fisheye180).unwrap();
        let e = error_map(&a, &b, 10.0).unwrap();
        let inside = fisheye_mask(size).iter().filter(|m| **m).count();
        assert_eq!(e.stats.n_pixels, inside);
        assert_eq!(e.render().get(0, 0), [0, 0, 0]);
    }

    proptest! {
        #[test]
        fn luminance_linear_in_k(r in 0f32..1e4, g in 0f32..1e4, b in 0f32..1e4, k in 1e-3f64..1e3) {
            let one = pixel_luminance([r, g, b], CalibrationFactor::IDENTITY);
            let scaled = pixel_luminance([r, g, b], CalibrationFactor::new(k).unwrap());
            prop_assert!((scaled - k * one).abs() <= 1e-12 * scaled.abs().max(1.0));
        }

        #[test]
        fn ramp_is_monotone(a in 0f64..2000.0, b in 0f64..2000.0) {
            let s = FalseColorScale::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(s.index(lo) <= s.index(hi));
        }

        #[test]
        fn false_color_scale_invariant(vals in prop::collection::vec(0f64..3000.0, 16), e in -8i32..8) {
            let f = 2f64.powi(e);
            let m = map(vals.clone(), 16, 1);
            let ms = map(vals.iter().map(|v| v * f).collect(), 16, 1);
            let s1 = FalseColorScale::new(0.0, 1000.0, ColorScale::Linear).unwrap();
            let s2 = FalseColorScale::new(0.0, 1000.0 * f, ColorScale::Linear).unwrap();
            prop_assert_eq!(false_color(&m, &s1).image, false_color(&ms, &s2).image);
        }
    }
}
