//! Radiance RGBE (`.hdr`) reader/writer and 8-bit PNG output.
//!
//! Only the `-Y H +X W` orientation is accepted. Pixel values returned by
//! [`read_hdr`] are always divided by the cumulative `EXPOSURE` of the header,
//! and [`write_hdr`] always writes `EXPOSURE=1.0`, so a round trip is
//! self-describing.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use thiserror::Error;

use crate::projection::{ProjectedRaster, Projection};

pub type Rgb = [f32; 3];

const FORMAT_RGBE: &str = "32-bit_rle_rgbe";
const MIN_RUN: usize = 4;

#[derive(Debug, Error)]
pub enum HdrError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported orientation `{0}` (only `-Y H +X W` is supported)")]
    UnsupportedOrientation(String),
    #[error("truncated scanline at row {row}")]
    TruncatedScanline { row: usize },
    #[error("corrupt run-length data at row {row}")]
    CorruptScanline { row: usize },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Linear RGB radiance raster.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
    exposure: f64,
    projection: Projection,
    header: Vec<String>,
}

impl HdrImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>, projection: Projection) -> Result<Self, HdrError> {
        if pixels.len() != width * height {
            return Err(HdrError::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().flatten().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(HdrError::InvalidImage(format!(
                "pixel component {p} is not finite and non-negative"
            )));
        }
        projection
            .check_dims(width, height)
            .map_err(|e| HdrError::InvalidImage(e.to_string()))?;
        Ok(HdrImage {
            width,
            height,
            pixels,
            exposure: 1.0,
            projection,
            header: Vec::new(),
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        projection: Projection,
        mut f: impl FnMut(usize, usize) -> Rgb,
    ) -> Result<Self, HdrError> {
        let pixels = (0..width * height).map(|k| f(k % width, k / width)).collect();
        Self::new(width, height, pixels, projection)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Cumulative `EXPOSURE` declared by the source header (1.0 for in-memory images).
    pub fn exposure(&self) -> f64 {
        self.exposure
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    /// Re-tags the projection after checking the raster shape.
    pub fn with_projection(mut self, projection: Projection) -> Result<Self, HdrError> {
        projection
            .check_dims(self.width, self.height)
            .map_err(|e| HdrError::InvalidImage(e.to_string()))?;
        self.projection = projection;
        Ok(self)
    }

    /// Header lines other than magic, `FORMAT`, `EXPOSURE` and projection tags.
    pub fn header_lines(&self) -> &[String] {
        &self.header
    }
}

impl ProjectedRaster for HdrImage {
    type Texel = Rgb;

    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn projection(&self) -> Projection {
        self.projection
    }

    fn texels(&self) -> &[Rgb] {
        &self.pixels
    }

    fn from_texels(width: usize, height: usize, texels: Vec<Rgb>, projection: Projection) -> Self {
        HdrImage {
            width,
            height,
            pixels: texels,
            exposure: 1.0,
            projection,
            header: Vec::new(),
        }
    }
}

/// Splits a positive finite `v` into `(m, e)` with `v = m · 2^e`, `m ∈ [0.5, 1)`.
fn frexp(v: f64) -> (f64, i32) {
    debug_assert!(v > 0.0 && v.is_finite());
    let bits = v.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i32;
    if raw == 0 {
        let (m, e) = frexp(v * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, raw - 1022)
}

/// Decodes one shared-exponent pixel: `c = (m + 0.5) / 256 · 2^(e − 128)`.
pub fn decode_rgbe(q: [u8; 4]) -> Rgb {
    if q[3] == 0 {
        return [0.0; 3];
    }
    let f = 2f64.powi(q[3] as i32 - (128 + 8));
    [
        ((q[0] as f64 + 0.5) * f) as f32,
        ((q[1] as f64 + 0.5) * f) as f32,
        ((q[2] as f64 + 0.5) * f) as f32,
    ]
}

/// Encodes a non-negative RGB triple with a shared exponent taken from the
/// largest component. Values below 2⁻¹²⁸ encode as black; values at or above
/// 2¹²⁷ saturate.
pub fn encode_rgbe(rgb: Rgb) -> [u8; 4] {
    let c = rgb.map(|c| if c.is_finite() && c > 0.0 { c as f64 } else { 0.0 });
    let v = c[0].max(c[1]).max(c[2]);
    if v <= 0.0 {
        return [0; 4];
    }
    let (m, e) = frexp(v);
    if e < -127 {
        return [0; 4];
    }
    if e > 127 {
        return [255, 255, 255, 255];
    }
    let scale = m * 256.0 / v;
    let q = |x: f64| ((x * scale) as i64).clamp(0, 255) as u8;
    [q(c[0]), q(c[1]), q(c[2]), (e + 128) as u8]
}

fn header_error(msg: impl Into<String>) -> HdrError {
    HdrError::MalformedHeader(msg.into())
}

fn next_line<'a>(data: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    if *pos >= data.len() {
        return None;
    }
    let rest = &data[*pos..];
    let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
    *pos += (end + 1).min(rest.len());
    let line = &rest[..end];
    Some(line.strip_suffix(b"\r").unwrap_or(line))
}

fn parse_resolution(line: &str) -> Result<(usize, usize), HdrError> {
    let tok: Vec<&str> = line.split_whitespace().collect();
    let is_axis = |t: &str| matches!(t, "-Y" | "+Y" | "-X" | "+X");
    if tok.len() != 4 || !is_axis(tok[0]) || !is_axis(tok[2]) {
        return Err(header_error(format!("bad resolution line `{line}`")));
    }
    let a: usize = tok[1]
        .parse()
        .map_err(|_| header_error(format!("bad resolution line `{line}`")))?;
    let b: usize = tok[3]
        .parse()
        .map_err(|_| header_error(format!("bad resolution line `{line}`")))?;
    if tok[0] != "-Y" || tok[2] != "+X" {
        return Err(HdrError::UnsupportedOrientation(line.to_string()));
    }
    if a == 0 || b == 0 {
        return Err(header_error("zero image dimension"));
    }
    Ok((a, b))
}

/// Parses a Radiance RGBE stream.
pub fn read_hdr(data: &[u8]) -> Result<HdrImage, HdrError> {
    let mut pos = 0;
    let magic = next_line(data, &mut pos).ok_or_else(|| header_error("empty stream"))?;
    if !(magic.starts_with(b"#?RADIANCE") || magic.starts_with(b"#?RGBE")) {
        return Err(header_error("missing #?RADIANCE magic"));
    }
    let mut format_ok = false;
    let mut exposure = 1.0f64;
    let mut projection = None;
    let mut header = Vec::new();
    loop {
        let line = next_line(data, &mut pos).ok_or_else(|| header_error("header not terminated"))?;
        if line.is_empty() {
            break;
        }
        let line = String::from_utf8_lossy(line).into_owned();
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != FORMAT_RGBE {
                return Err(header_error(format!("unsupported FORMAT `{}`", fmt.trim())));
            }
            format_ok = true;
        } else if let Some(e) = line.strip_prefix("EXPOSURE=") {
            let e: f64 = e
                .trim()
                .parse()
                .map_err(|_| header_error(format!("bad EXPOSURE `{}`", e.trim())))?;
            if !(e > 0.0 && e.is_finite()) {
                return Err(header_error(format!("non-positive EXPOSURE {e}")));
            }
            exposure *= e;
        } else if let Some(p) = line.strip_prefix("PROJECTION=") {
            projection = Some(Projection::parse(p).ok_or_else(|| header_error(format!("unknown PROJECTION `{p}`")))?);
        } else if line.starts_with("VIEW=") && line.contains("-vta") {
            projection.get_or_insert(Projection::Fisheye180);
        } else {
            header.push(line);
        }
    }
    if !format_ok {
        return Err(header_error("missing FORMAT line"));
    }
    let res = next_line(data, &mut pos).ok_or_else(|| header_error("missing resolution line"))?;
    let (height, width) = parse_resolution(&String::from_utf8_lossy(res))?;
    let projection = projection.unwrap_or_default();
    projection
        .check_dims(width, height)
        .map_err(|e| header_error(e.to_string()))?;

    let mut quads = vec![[0u8; 4]; width];
    let mut pixels = Vec::with_capacity(width * height);
    let inv = 1.0 / exposure;
    for row in 0..height {
        read_scanline(data, &mut pos, row, &mut quads)?;
        pixels.extend(quads.iter().map(|&q| {
            let c = decode_rgbe(q);
            if exposure == 1.0 {
                c
            } else {
                c.map(|v| (v as f64 * inv) as f32)
            }
        }));
    }
    Ok(HdrImage {
        width,
        height,
        pixels,
        exposure,
        projection,
        header,
    })
}

fn read_scanline(data: &[u8], pos: &mut usize, row: usize, out: &mut [[u8; 4]]) -> Result<(), HdrError> {
    let width = out.len();
    let p = *pos;
    let new_rle = (8..=0x7fff).contains(&width)
        && data.len() >= p + 4
        && data[p] == 2
        && data[p + 1] == 2
        && data[p + 2] & 0x80 == 0;
    if new_rle {
        let w = (data[p + 2] as usize) << 8 | data[p + 3] as usize;
        if w != width {
            return Err(HdrError::CorruptScanline { row });
        }
        let mut i = p + 4;
        for ch in 0..4 {
            let mut x = 0;
            while x < width {
                let count = *data.get(i).ok_or(HdrError::TruncatedScanline { row })? as usize;
                i += 1;
                if count > 128 {
                    let n = count - 128;
                    let val = *data.get(i).ok_or(HdrError::TruncatedScanline { row })?;
                    i += 1;
                    if x + n > width {
                        return Err(HdrError::CorruptScanline { row });
                    }
                    out[x..x + n].iter_mut().for_each(|q| q[ch] = val);
                    x += n;
                } else {
                    if count == 0 || x + count > width {
                        return Err(HdrError::CorruptScanline { row });
                    }
                    let src = data.get(i..i + count).ok_or(HdrError::TruncatedScanline { row })?;
                    out[x..x + count].iter_mut().zip(src).for_each(|(q, &b)| q[ch] = b);
                    i += count;
                    x += count;
                }
            }
        }
        *pos = i;
        return Ok(());
    }
    // flat pixels, honoring old-style (1,1,1,n) repeat codes
    let mut i = p;
    let mut x = 0;
    let mut shift = 0u32;
    while x < width {
        let q: [u8; 4] = data
            .get(i..i + 4)
            .ok_or(HdrError::TruncatedScanline { row })?
            .try_into()
            .expect("slice of length 4");
        i += 4;
        if q[0] == 1 && q[1] == 1 && q[2] == 1 {
            if x == 0 || shift > 16 {
                return Err(HdrError::CorruptScanline { row });
            }
            let n = (q[3] as usize) << shift;
            if x + n > width {
                return Err(HdrError::CorruptScanline { row });
            }
            let prev = out[x - 1];
            out[x..x + n].fill(prev);
            x += n;
            shift += 8;
        } else {
            out[x] = q;
            x += 1;
            shift = 0;
        }
    }
    *pos = i;
    Ok(())
}

fn write_rle_channel(bytes: &[u8], out: &mut Vec<u8>) {
    let n = bytes.len();
    let mut cur = 0;
    while cur < n {
        let mut beg_run = cur;
        let mut run_count = 0;
        let mut old_run_count = 0;
        while run_count < MIN_RUN && beg_run < n {
            beg_run += run_count;
            old_run_count = run_count;
            run_count = 1;
            while beg_run + run_count < n && run_count < 127 && bytes[beg_run] == bytes[beg_run + run_count] {
                run_count += 1;
            }
        }
        if old_run_count > 1 && old_run_count == beg_run - cur {
            out.push(128 + old_run_count as u8);
            out.push(bytes[cur]);
            cur = beg_run;
        }
        while cur < beg_run {
            let literal = (beg_run - cur).min(128);
            out.push(literal as u8);
            out.extend_from_slice(&bytes[cur..cur + literal]);
            cur += literal;
        }
        if run_count >= MIN_RUN {
            out.push(128 + run_count as u8);
            out.push(bytes[beg_run]);
            cur += run_count;
        }
    }
}

/// Serializes an image as Radiance RGBE, run-length encoding scanlines whose
/// width is in `8..=32767`.
pub fn write_hdr(img: &HdrImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.width * img.height * 4 + 128);
    out.extend_from_slice(b"#?RADIANCE\n");
    for line in &img.header {
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    match img.projection {
        Projection::Unspecified => {}
        Projection::Fisheye180 => {
            out.extend_from_slice(b"VIEW= -vta -vh 180 -vv 180\n");
            out.extend_from_slice(b"PROJECTION=fisheye180\n");
        }
        p => out.extend_from_slice(format!("PROJECTION={}\n", p.as_str()).as_bytes()),
    }
    out.extend_from_slice(format!("FORMAT={FORMAT_RGBE}\nEXPOSURE=1.0\n\n").as_bytes());
    out.extend_from_slice(format!("-Y {} +X {}\n", img.height, img.width).as_bytes());

    let w = img.width;
    let rle = (8..=0x7fff).contains(&w);
    let mut channel = vec![0u8; w];
    for row in img.pixels.chunks(w) {
        let quads: Vec<[u8; 4]> = row.iter().map(|&p| encode_rgbe(p)).collect();
        if !rle {
            quads.iter().for_each(|q| out.extend_from_slice(q));
            continue;
        }
        out.extend_from_slice(&[2, 2, (w >> 8) as u8, (w & 0xff) as u8]);
        for ch in 0..4 {
            channel.iter_mut().zip(&quads).for_each(|(c, q)| *c = q[ch]);
            write_rle_channel(&channel, &mut out);
        }
    }
    out
}

pub fn read_hdr_file(path: impl AsRef<Path>) -> Result<HdrImage, HdrError> {
    read_hdr(&std::fs::read(path)?)
}

pub fn write_hdr_file(img: &HdrImage, path: impl AsRef<Path>) -> Result<(), HdrError> {
    std::fs::write(path, write_hdr(img))?;
    Ok(())
}

/// 8-bit RGB raster used for visualizations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster8 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

impl Raster8 {
    pub fn new(width: usize, height: usize) -> Self {
        Raster8 {
            width,
            height,
            data: vec![[0; 3]; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: [u8; 3]) {
        self.data[y * self.width + x] = c;
    }
}

pub fn write_raster_png(raster: &Raster8, path: impl AsRef<Path>) -> Result<(), HdrError> {
    let file = File::create(path)?;
    let mut enc = png::Encoder::new(BufWriter::new(file), raster.width as u32, raster.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| HdrError::Png(e.to_string()))?;
    let bytes: Vec<u8> = raster.data.iter().flatten().copied().collect();
    writer
        .write_image_data(&bytes)
        .map_err(|e| HdrError::Png(e.to_string()))?;
    writer.finish().map_err(|e| HdrError::Png(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(extra: &str) -> Vec<u8> {
        format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n{extra}\n-Y 1 +X 1\n").into_bytes()
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_rgbe([0, 0, 0, 0]), [0.0; 3]);
        assert_eq!(decode_rgbe([128, 128, 128, 129]), [1.00390625; 3]);
        assert_eq!(decode_rgbe([255, 0, 0, 136]), [255.5, 0.5, 0.5]);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_rgbe([0.0; 3]), [0; 4]);
        assert_eq!(encode_rgbe([1.0; 3]), [128, 128, 128, 129]);
    }

    #[test]
    fn frexp_matches_definition() {
        for v in [1.0, 0.75, 3.0, 1e-30, 6e37, 2f64.powi(-130)] {
            let (m, e) = frexp(v);
            assert!((0.5..1.0).contains(&m));
            assert_eq!(m * 2f64.powi(e), v);
        }
    }

    #[test]
    fn minimal_file_and_exposure() {
        let mut f = header("");
        f.extend_from_slice(&[128, 128, 128, 129]);
        let img = read_hdr(&f).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.pixel(0, 0), [1.00390625; 3]);

        let mut f = header("EXPOSURE=2.0\n");
        f.extend_from_slice(&[128, 128, 128, 129]);
        let img = read_hdr(&f).unwrap();
        assert_eq!(img.pixel(0, 0), [1.00390625 / 2.0; 3]);
        assert_eq!(img.exposure(), 2.0);

        let mut f = header("EXPOSURE=2.0\nEXPOSURE=4\n");
        f.extend_from_slice(&[128, 128, 128, 129]);
        let img = read_hdr(&f).unwrap();
        assert_eq!(img.pixel(0, 0), [1.00390625 / 8.0; 3]);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(read_hdr(b"P6\n1 1\n"), Err(HdrError::MalformedHeader(_))));
        assert!(matches!(
            read_hdr(b"#?RADIANCE\n\n-Y 1 +X 1\n\x80\x80\x80\x81"),
            Err(HdrError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n"),
            Err(HdrError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n+Y 1 +X 1\n\0\0\0\0"),
            Err(HdrError::UnsupportedOrientation(_))
        ));
        assert!(matches!(
            read_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 2 +X 1\n\0\0\0\0"),
            Err(HdrError::TruncatedScanline { row: 1 })
        ));
    }

    #[test]
    fn rle_truncation_detected() {
        let img = HdrImage::new(16, 1, vec![[0.5, 0.25, 1.0]; 16], Projection::Unspecified).unwrap();
        let bytes = write_hdr(&img);
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(read_hdr(cut), Err(HdrError::TruncatedScanline { row: 0 })));
    }

    #[test]
    fn old_style_repeat_codes() {
        let mut f = b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 5\n".to_vec();
        f.extend_from_slice(&[128, 128, 128, 129, 1, 1, 1, 4]);
        let img = read_hdr(&f).unwrap();
        assert!(img.pixels().iter().all(|p| *p == [1.00390625; 3]));
    }

    #[test]
    fn black_pixel_roundtrips_exactly() {
        let img = HdrImage::new(1, 1, vec![[0.0; 3]], Projection::Unspecified).unwrap();
        let back = read_hdr(&write_hdr(&img)).unwrap();
        assert_eq!(back.pixels(), img.pixels());
    }

    #[test]
    fn constant_image_compresses() {
        let img = HdrImage::new(64, 32, vec![[3.0, 2.0, 1.0]; 64 * 32], Projection::Equirectangular).unwrap();
        let bytes = write_hdr(&img);
        assert!(bytes.len() < 4 * 64 * 32);
        let back = read_hdr(&bytes).unwrap();
        assert_eq!(back.projection(), Projection::Equirectangular);
        assert_eq!(back.pixel(10, 10), decode_rgbe(encode_rgbe([3.0, 2.0, 1.0])));
    }

    #[test]
    fn header_comments_and_fisheye_tag_survive() {
        let mut img = HdrImage::new(4, 4, vec![[1.0; 3]; 16], Projection::Fisheye180).unwrap();
        img.header
            .push("PRIMARIES= 0.64 0.33 0.3 0.6 0.15 0.06 0.3127 0.329".into());
        let back = read_hdr(&write_hdr(&img)).unwrap();
        assert_eq!(back.projection(), Projection::Fisheye180);
        assert_eq!(back.header_lines(), img.header_lines());
    }

    #[test]
    fn invalid_images_rejected() {
        assert!(HdrImage::new(2, 2, vec![[0.0; 3]; 3], Projection::Unspecified).is_err());
        assert!(HdrImage::new(1, 1, vec![[-1.0, 0.0, 0.0]], Projection::Unspecified).is_err());
        assert!(HdrImage::new(1, 1, vec![[f32::NAN, 0.0, 0.0]], Projection::Unspecified).is_err());
        assert!(HdrImage::new(3, 2, vec![[0.0; 3]; 6], Projection::Equirectangular).is_err());
    }

    fn rel_err(a: Rgb, b: Rgb) -> f64 {
        let m = a.iter().fold(0f32, |m, &c| m.max(c)) as f64;
        if m == 0.0 {
            return 0.0;
        }
        a.iter()
            .zip(&b)
            .map(|(x, y)| (*x as f64 - *y as f64).abs())
            .fold(0.0, f64::max)
            / m
    }

    proptest! {
        #[test]
        fn roundtrip_within_quantization(
            w in 1usize..40,
            h in 1usize..6,
            seed in prop::collection::vec((0f32..1e4, 0f32..1e4, 0f32..1e4), 240),
        ) {
            let pixels: Vec<Rgb> = (0..w * h).map(|k| { let s = seed[k % seed.len()]; [s.0, s.1, s.2] }).collect();
            let img = HdrImage::new(w, h, pixels, Projection::Unspecified).unwrap();
            let back = read_hdr(&write_hdr(&img)).unwrap();
            prop_assert_eq!(back.width(), w);
            for (a, b) in img.pixels().iter().zip(back.pixels()) {
                prop_assert!(rel_err(*a, *b) <= 1.0 / 256.0);
            }
        }
    }
}
