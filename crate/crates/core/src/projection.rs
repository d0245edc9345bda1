//! Spherical geometry: direction transforms, equirectangular pixel mapping,
//! equidistant fisheye extraction and per-pixel solid angles.
//!
//! All pixel mappings use the pixel-center convention: pixel `(u, v)` covers
//! `[u, u + 1) × [v, v + 1)` and is evaluated at `(u + 0.5, v + 0.5)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    #[error("zero-length direction vector")]
    ZeroVector,
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("expected {expected:?} projection, got {found:?}")]
    BadProjection { expected: Projection, found: Projection },
}

/// Raster projection tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Full sphere, `width = 2 × height`, azimuth linear in columns.
    Equirectangular,
    /// 180° equidistant fisheye inscribed in a square raster.
    Fisheye180,
    #[default]
    Unspecified,
}

impl Projection {
    pub fn as_str(self) -> &'static str {
        match self {
            Projection::Equirectangular => "equirectangular",
            Projection::Fisheye180 => "fisheye180",
            Projection::Unspecified => "unspecified",
        }
    }

    pub fn parse(s: &str) -> Option<Projection> {
        match s.trim() {
            "equirectangular" => Some(Projection::Equirectangular),
            "fisheye180" => Some(Projection::Fisheye180),
            "unspecified" => Some(Projection::Unspecified),
            _ => None,
        }
    }

    /// Checks the raster shape this projection implies.
    pub fn check_dims(self, width: usize, height: usize) -> Result<(), ProjectionError> {
        match self {
            Projection::Equirectangular if width != 2 * height => Err(ProjectionError::BadDimensions(format!(
                "equirectangular raster must be 2:1, got {width}x{height}"
            ))),
            Projection::Fisheye180 if width != height => Err(ProjectionError::BadDimensions(format!(
                "fisheye raster must be square, got {width}x{height}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Azimuth `theta` ∈ (−π, π] and altitude `phi` ∈ [−π/2, π/2], in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalDir {
    pub theta: f64,
    pub phi: f64,
}

impl SphericalDir {
    pub fn new(theta: f64, phi: f64) -> Self {
        SphericalDir { theta, phi }
    }
}

/// Unit direction, `y` up, `z` forward, `x` right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianDir(Vec3);

impl CartesianDir {
    /// Normalizes `v`; fails for zero vectors.
    pub fn new(v: Vec3) -> Result<Self, ProjectionError> {
        v.normalized().map(CartesianDir).ok_or(ProjectionError::ZeroVector)
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }
}

pub fn sph_to_cart(d: SphericalDir) -> CartesianDir {
    let (st, ct) = d.theta.sin_cos();
    let (sp, cp) = d.phi.sin_cos();
    CartesianDir(Vec3::new(cp * st, sp, cp * ct))
}

/// Inverse of [`sph_to_cart`] for any nonzero vector.
///
/// The altitude uses `atan2(y, hypot(x, z))`, which equals `asin(y / |v|)` but
/// stays well conditioned near the poles.
pub fn cart_to_sph(v: Vec3) -> Result<SphericalDir, ProjectionError> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(ProjectionError::ZeroVector);
    }
    let mut theta = v.x.atan2(v.z);
    if theta <= -PI {
        theta = PI;
    }
    let phi = v.y.atan2(v.x.hypot(v.z));
    Ok(SphericalDir { theta, phi })
}

fn check_equirect(u: usize, v: usize, width: usize, height: usize) -> Result<(), ProjectionError> {
    Projection::Equirectangular.check_dims(width, height)?;
    if height == 0 || u >= width || v >= height {
        return Err(ProjectionError::BadDimensions(format!(
            "pixel ({u}, {v}) outside {width}x{height}"
        )));
    }
    Ok(())
}

/// Direction through the center of equirectangular pixel `(u, v)`.
pub fn pixel_to_dir(u: usize, v: usize, width: usize, height: usize) -> Result<SphericalDir, ProjectionError> {
    check_equirect(u, v, width, height)?;
    Ok(pixel_coord_to_dir(u as f64, v as f64, width, height))
}

/// Continuous form of [`pixel_to_dir`]: integer coordinates hit pixel centers.
pub fn pixel_coord_to_dir(u: f64, v: f64, width: usize, height: usize) -> SphericalDir {
    SphericalDir {
        theta: TAU * (u + 0.5) / width as f64 - PI,
        phi: FRAC_PI_2 - PI * (v + 0.5) / height as f64,
    }
}

/// Continuous inverse of [`pixel_to_dir`]. Directions just right of −π map
/// to `u` slightly above −0.5; samplers wrap columns modulo the width.
pub fn dir_to_pixel(d: SphericalDir, width: usize, height: usize) -> (f64, f64) {
    let u = (d.theta + PI) / TAU * width as f64 - 0.5;
    let v = (FRAC_PI_2 - d.phi) / PI * height as f64 - 0.5;
    (u, v)
}

/// Solid angle of any pixel in row `v` of a `width × height` equirectangular raster.
pub fn equirect_pixel_solid_angle(v: usize, width: usize, height: usize) -> f64 {
    let h = height as f64;
    let top = FRAC_PI_2 - PI * v as f64 / h;
    let bottom = FRAC_PI_2 - PI * (v as f64 + 1.0) / h;
    TAU / width as f64 * (top.sin() - bottom.sin())
}

/// Solid angle of a unit-area fisheye pixel at radius `r` (pixels) in a disk of radius `r_max`.
pub fn fisheye_pixel_solid_angle(r: f64, r_max: f64) -> f64 {
    let k = FRAC_PI_2 / r_max;
    if r < 1e-9 {
        return k * k;
    }
    k * (k * r).sin() / r
}

/// Pixel-level geometry of an equidistant 180° fisheye.
#[derive(Debug, Clone, Copy)]
pub struct FisheyePixel {
    /// Off-axis angle in radians.
    pub alpha: f64,
    /// Direction in view coordinates (right, up, forward).
    pub local: Vec3,
    pub solid_angle: f64,
}

/// Geometry of pixel `(i, j)` of a `size × size` fisheye; `None` outside the disk.
pub fn fisheye_pixel(i: usize, j: usize, size: usize) -> Option<FisheyePixel> {
    let r_max = size as f64 / 2.0;
    let dx = i as f64 + 0.5 - r_max;
    let dy = r_max - (j as f64 + 0.5);
    let r = dx.hypot(dy);
    if r > r_max {
        return None;
    }
    let alpha = FRAC_PI_2 * r / r_max;
    let local = if r == 0.0 {
        Vec3::new(0.0, 0.0, 1.0)
    } else {
        let s = alpha.sin() / r;
        Vec3::new(s * dx, s * dy, alpha.cos())
    };
    Some(FisheyePixel {
        alpha,
        local,
        solid_angle: fisheye_pixel_solid_angle(r, r_max),
    })
}

/// Disk-membership mask of a `size × size` fisheye, row-major.
pub fn fisheye_mask(size: usize) -> Vec<bool> {
    (0..size * size)
        .map(|k| fisheye_pixel(k % size, k / size, size).is_some())
        .collect()
}

/// Orthonormal (right, up, forward) frame of a horizontal view at `view_azimuth`.
pub fn view_basis(view_azimuth: f64) -> (Vec3, Vec3, Vec3) {
    let (s, c) = view_azimuth.sin_cos();
    (Vec3::new(c, 0.0, -s), Vec3::UP, Vec3::new(s, 0.0, c))
}

/// Rotates a view-local direction into the room frame.
pub fn view_to_room(local: Vec3, view_azimuth: f64) -> Vec3 {
    let (r, u, f) = view_basis(view_azimuth);
    r * local.x + u * local.y + f * local.z
}

/// Continuous fisheye pixel coordinates of a room-frame direction, or `None`
/// when it lies behind the view plane.
pub fn dir_to_fisheye_pixel(d: Vec3, view_azimuth: f64, size: usize) -> Option<(f64, f64)> {
    let (r, u, f) = view_basis(view_azimuth);
    let d = d.normalized()?;
    let (x, y, z) = (d.dot(r), d.dot(u), d.dot(f));
    let alpha = z.clamp(-1.0, 1.0).acos();
    if alpha > FRAC_PI_2 {
        return None;
    }
    let r_max = size as f64 / 2.0;
    let rad = alpha / FRAC_PI_2 * r_max;
    let h = x.hypot(y);
    let (dx, dy) = if h > 0.0 {
        (rad * x / h, rad * y / h)
    } else {
        (0.0, 0.0)
    };
    Some((r_max + dx - 0.5, r_max - dy - 0.5))
}

/// Pixel value that can be bilinearly blended.
pub trait Texel: Copy + Send + Sync {
    const ZERO: Self;
    fn blend(self, other: Self, w: f64) -> Self;
}

impl Texel for f64 {
    const ZERO: f64 = 0.0;
    fn blend(self, other: f64, w: f64) -> f64 {
        self + other * w
    }
}

impl Texel for [f32; 3] {
    const ZERO: [f32; 3] = [0.0; 3];
    fn blend(self, o: [f32; 3], w: f64) -> [f32; 3] {
        let w = w as f32;
        [self[0] + o[0] * w, self[1] + o[1] * w, self[2] + o[2] * w]
    }
}

/// Bilinear lookup at continuous pixel coordinates, wrapping longitude and
/// clamping latitude.
pub fn sample_equirect<T: Texel>(data: &[T], width: usize, height: usize, u: f64, v: f64) -> T {
    let u0 = u.floor();
    let v0 = v.floor();
    let fu = u - u0;
    let fv = v - v0;
    let w = width as i64;
    let x0 = (u0 as i64).rem_euclid(w) as usize;
    let x1 = (u0 as i64 + 1).rem_euclid(w) as usize;
    let clamp_row = |r: i64| r.clamp(0, height as i64 - 1) as usize;
    let y0 = clamp_row(v0 as i64);
    let y1 = clamp_row(v0 as i64 + 1);
    T::ZERO
        .blend(data[y0 * width + x0], (1.0 - fu) * (1.0 - fv))
        .blend(data[y0 * width + x1], fu * (1.0 - fv))
        .blend(data[y1 * width + x0], (1.0 - fu) * fv)
        .blend(data[y1 * width + x1], fu * fv)
}

/// Bilinear lookup inside a square fisheye raster; samples outside the image read as zero.
pub fn sample_fisheye<T: Texel>(data: &[T], size: usize, u: f64, v: f64) -> T {
    let u0 = u.floor();
    let v0 = v.floor();
    let fu = u - u0;
    let fv = v - v0;
    let at = |x: i64, y: i64| {
        if x < 0 || y < 0 || x >= size as i64 || y >= size as i64 {
            T::ZERO
        } else {
            data[y as usize * size + x as usize]
        }
    };
    let (x, y) = (u0 as i64, v0 as i64);
    T::ZERO
        .blend(at(x, y), (1.0 - fu) * (1.0 - fv))
        .blend(at(x + 1, y), fu * (1.0 - fv))
        .blend(at(x, y + 1), (1.0 - fu) * fv)
        .blend(at(x + 1, y + 1), fu * fv)
}

/// A raster that can be remapped between projections.
pub trait ProjectedRaster: Sized {
    type Texel: Texel;
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn projection(&self) -> Projection;
    fn texels(&self) -> &[Self::Texel];
    /// Builds a raster of the same kind; texels come from a remap of valid input.
    fn from_texels(width: usize, height: usize, texels: Vec<Self::Texel>, projection: Projection) -> Self;
}

/// Extracts a horizontal 180° equidistant fisheye view from an equirectangular raster.
///
/// `size` is the output diameter in pixels. Pixels outside the image circle
/// are zero (see [`fisheye_mask`]).
pub fn extract_fisheye<R: ProjectedRaster>(src: &R, view_azimuth: f64, size: usize) -> Result<R, ProjectionError> {
    if src.projection() != Projection::Equirectangular {
        return Err(ProjectionError::BadProjection {
            expected: Projection::Equirectangular,
            found: src.projection(),
        });
    }
    if size == 0 {
        return Err(ProjectionError::BadDimensions("fisheye size must be positive".into()));
    }
    let (w, h) = (src.width(), src.height());
    let data = src.texels();
    let out = (0..size * size)
        .map(|k| match fisheye_pixel(k % size, k / size, size) {
            Some(px) => {
                let room = view_to_room(px.local, view_azimuth);
                let d = cart_to_sph(room).expect("unit vector");
                let (u, v) = dir_to_pixel(d, w, h);
                sample_equirect(data, w, h, u, v)
            }
            None => R::Texel::ZERO,
        })
        .collect();
    Ok(R::from_texels(size, size, out, Projection::Fisheye180))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn axis_directions() {
        let c = sph_to_cart(SphericalDir::new(0.0, 0.0)).vec();
        assert_abs_diff_eq!(c.z, 1.0);
        let c = sph_to_cart(SphericalDir::new(FRAC_PI_2, 0.0)).vec();
        assert_abs_diff_eq!(c.x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.z, 0.0, epsilon = 1e-15);
        let c = sph_to_cart(SphericalDir::new(0.0, FRAC_PI_2)).vec();
        assert_abs_diff_eq!(c.y, 1.0);
        let s = cart_to_sph(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((s.theta, s.phi), (0.0, 0.0));
        let s = cart_to_sph(Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(s.theta, FRAC_PI_2);
        assert_eq!(cart_to_sph(Vec3::ZERO), Err(ProjectionError::ZeroVector));
    }

    #[test]
    fn theta_range_excludes_minus_pi() {
        let s = cart_to_sph(Vec3::new(-0.0, 0.0, -1.0)).unwrap();
        assert_eq!(s.theta, PI);
    }

    #[test]
    fn pixel_mapping_examples() {
        let d = pixel_to_dir(2, 0, 4, 2).unwrap();
        assert_abs_diff_eq!(d.theta, PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.phi, PI / 4.0, epsilon = 1e-15);
        let (u, v) = dir_to_pixel(SphericalDir::new(0.0, 0.0), 4, 2);
        assert_abs_diff_eq!(u, 1.5);
        assert_abs_diff_eq!(v, 0.5);
        let left = pixel_to_dir(0, 0, 4096, 2048).unwrap();
        assert!(left.theta > -PI && left.theta < -PI + 1e-2);
        let (u, _) = dir_to_pixel(SphericalDir::new(-PI + 1e-9, 0.0), 4, 2);
        assert!(u > -0.5 && u < -0.49);
        assert!(matches!(
            pixel_to_dir(0, 0, 5, 2),
            Err(ProjectionError::BadDimensions(_))
        ));
        assert!(matches!(
            pixel_to_dir(4, 0, 4, 2),
            Err(ProjectionError::BadDimensions(_))
        ));
    }

    #[test]
    fn pixel_centers_roundtrip() {
        let (w, h) = (64, 32);
        for v in 0..h {
            for u in 0..w {
                let (uu, vv) = dir_to_pixel(pixel_to_dir(u, v, w, h).unwrap(), w, h);
                assert_abs_diff_eq!(uu, u as f64, epsilon = 1e-12);
                assert_abs_diff_eq!(vv, v as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn equirect_solid_angles() {
        assert_abs_diff_eq!(equirect_pixel_solid_angle(0, 2, 1), TAU, epsilon = 1e-12);
        let (w, h) = (360, 180);
        for v in 0..h {
            assert_abs_diff_eq!(
                equirect_pixel_solid_angle(v, w, h),
                equirect_pixel_solid_angle(h - 1 - v, w, h),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn fisheye_center_pixel_limit() {
        let r = 256.0;
        let k = FRAC_PI_2 / r;
        assert_abs_diff_eq!(fisheye_pixel_solid_angle(0.0, r), k * k);
        assert!((fisheye_pixel_solid_angle(1e-6, r) - k * k).abs() < 1e-12);
        for i in 0..=256 {
            assert!(fisheye_pixel_solid_angle(i as f64, r) > 0.0);
        }
    }

    #[test]
    fn fisheye_center_looks_along_view_axis() {
        let size = 65;
        let px = fisheye_pixel(32, 32, size).unwrap();
        assert_abs_diff_eq!(px.alpha, 0.0);
        let room = view_to_room(px.local, FRAC_PI_2);
        assert_abs_diff_eq!(room.x, 1.0, epsilon = 1e-12);
        let (u, v) = dir_to_fisheye_pixel(room, FRAC_PI_2, size).unwrap();
        assert_abs_diff_eq!(u, 32.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 32.0, epsilon = 1e-9);
        assert!(dir_to_fisheye_pixel(Vec3::new(-1.0, 0.0, 0.0), FRAC_PI_2, size).is_none());
        assert!(fisheye_pixel(0, 0, size).is_none());
    }

    proptest! {
        #[test]
        fn fisheye_pixel_inverse(i in 0usize..128, j in 0usize..128, az in -PI..PI) {
            let size = 128;
            if let Some(px) = fisheye_pixel(i, j, size) {
                let (u, v) = dir_to_fisheye_pixel(view_to_room(px.local, az), az, size).unwrap();
                prop_assert!((u - i as f64).abs() < 1e-9 && (v - j as f64).abs() < 1e-9);
            }
        }
    }
}
