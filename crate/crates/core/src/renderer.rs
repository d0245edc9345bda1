//! Monte Carlo luminance renderer for planar daylit rooms.
//!
//! Paths start at the viewpoint, reflect diffusely off `plastic` surfaces,
//! pass through `glass` scaled by its transmittance and through `open`
//! apertures untouched, and pick up sky luminance when they leave the scene.
//! The sun is handled by next-event estimation at every reflection and by a
//! splat into the pixel that contains it. Units stay in cd/m² throughout.
//!
//! `max_bounces` counts diffuse reflections: with 0, every surface seen by
//! the camera is black. Paths whose throughput falls below `limit_weight`
//! continue with probability `throughput / limit_weight`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{newell_normal, Vec3};
use crate::layout::{MaterialKind, SceneModel};
use crate::photometry::LuminanceMap;
use crate::projection::{
    cart_to_sph, dir_to_fisheye_pixel, dir_to_pixel, equirect_pixel_solid_angle, fisheye_pixel, pixel_coord_to_dir,
    sph_to_cart, view_to_room, Projection, SphericalDir,
};
use crate::skymodel::{sky_luminance, sun_solid_angle, SkyModel};

const HIT_EPS: f64 = 1e-9;
const ORIGIN_OFFSET: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("viewpoint ({x:.3}, {y:.3}, {z:.3}) is not inside the room")]
    ViewpointOutsideRoom { x: f64, y: f64, z: f64 },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid render parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub samples_per_pixel: u32,
    pub max_bounces: u32,
    pub limit_weight: f64,
    pub seed: u64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            samples_per_pixel: 100,
            max_bounces: 8,
            limit_weight: 0.01,
            seed: 0,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.samples_per_pixel == 0 {
            return Err(RenderError::BadParams("samples_per_pixel must be at least 1".into()));
        }
        if !(self.limit_weight > 0.0 && self.limit_weight < 1.0) {
            return Err(RenderError::BadParams(format!(
                "limit_weight {} must lie in (0, 1)",
                self.limit_weight
            )));
        }
        Ok(())
    }
}

/// Camera position in the room frame and the fisheye view direction
/// (radians, room azimuth).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub position: Vec3,
    pub view_azimuth: f64,
}

#[derive(Debug, Clone, Copy)]
enum Optics {
    Diffuse(f64),
    Glass(f64),
}

#[derive(Debug, Clone)]
struct Prim {
    normal: Vec3,
    offset: f64,
    origin: Vec3,
    eu: Vec3,
    ev: Vec3,
    pts: Vec<[f64; 2]>,
    lo: [f64; 2],
    hi: [f64; 2],
    optics: Optics,
}

impl Prim {
    fn hit(&self, o: Vec3, d: Vec3, tmax: f64) -> Option<f64> {
        let denom = self.normal.dot(d);
        if denom.abs() < 1e-14 {
            return None;
        }
        let t = (self.offset - self.normal.dot(o)) / denom;
        if !(t > HIT_EPS && t < tmax) {
            return None;
        }
        let p = o + d * t - self.origin;
        let q = [p.dot(self.eu), p.dot(self.ev)];
        if q[0] < self.lo[0] || q[0] > self.hi[0] || q[1] < self.lo[1] || q[1] > self.hi[1] {
            return None;
        }
        inside(&self.pts, q).then_some(t)
    }
}

fn inside(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut c = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
            c = !c;
        }
        j = i;
    }
    c
}

struct Hit {
    t: f64,
    prim: usize,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn pixel_seed(seed: u64, x: usize, y: usize) -> u64 {
    splitmix(splitmix(seed) ^ splitmix(((y as u64) << 32) | x as u64))
}

/// A scene and sky prepared for ray queries.
pub struct Renderer {
    prims: Vec<Prim>,
    sky: SkyModel,
    heading: f64,
    /// Unit direction to the sun in the room frame, when it contributes.
    sun: Option<Vec3>,
    sun_irradiance: f64,
    params: RenderParams,
    inside: Box<dyn Fn(Vec3) -> bool + Send + Sync>,
}

impl Renderer {
    pub fn new(scene: &SceneModel, sky: &SkyModel, params: RenderParams) -> Result<Self, RenderError> {
        params.validate()?;
        scene.validate().map_err(|e| RenderError::InvalidScene(e.to_string()))?;
        let mut prims = Vec::with_capacity(scene.surfaces.len());
        let (mut bmin, mut bmax) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        for s in &scene.surfaces {
            for p in &s.polygon {
                for (k, v) in p.to_array().into_iter().enumerate() {
                    bmin[k] = bmin[k].min(v);
                    bmax[k] = bmax[k].max(v);
                }
            }
            let mat = scene.material(&s.material).expect("validated scene");
            let optics = match mat.kind {
                MaterialKind::Plastic { reflectance } => Optics::Diffuse(reflectance),
                MaterialKind::Glass { transmittance } => Optics::Glass(transmittance),
                MaterialKind::Open => continue,
            };
            let normal = newell_normal(&s.polygon).normalized().expect("validated scene");
            let origin = s.polygon[0];
            let (eu, ev) = normal.orthonormal_basis();
            let pts: Vec<[f64; 2]> = s
                .polygon
                .iter()
                .map(|&p| [(p - origin).dot(eu), (p - origin).dot(ev)])
                .collect();
            let lo = pts
                .iter()
                .fold([f64::INFINITY; 2], |a, p| [a[0].min(p[0]), a[1].min(p[1])]);
            let hi = pts
                .iter()
                .fold([f64::NEG_INFINITY; 2], |a, p| [a[0].max(p[0]), a[1].max(p[1])]);
            prims.push(Prim {
                normal,
                offset: normal.dot(origin),
                origin,
                eu,
                ev,
                pts,
                lo,
                hi,
                optics,
            });
        }
        let heading = scene.heading_deg.to_radians();
        let sun = (sky.sun.is_up() && sky.sun_luminance > 0.0).then(|| {
            let room_az = sky.sun.azimuth - heading;
            sph_to_cart(SphericalDir::new(room_az, sky.sun.altitude)).vec()
        });
        let inside: Box<dyn Fn(Vec3) -> bool + Send + Sync> = match scene.interior.clone() {
            Some(int) => Box::new(move |p| int.contains(p)),
            None => Box::new(move |p: Vec3| {
                p.to_array()
                    .iter()
                    .enumerate()
                    .all(|(k, &v)| v > bmin[k] && v < bmax[k])
            }),
        };
        Ok(Renderer {
            prims,
            sky: *sky,
            heading,
            sun,
            sun_irradiance: sky.sun_luminance * sun_solid_angle(),
            params,
            inside,
        })
    }

    pub fn params(&self) -> &RenderParams {
        &self.params
    }

    fn check_viewpoint(&self, p: Vec3) -> Result<(), RenderError> {
        if (self.inside)(p) {
            Ok(())
        } else {
            Err(RenderError::ViewpointOutsideRoom { x: p.x, y: p.y, z: p.z })
        }
    }

    /// Nearest opaque hit and the glass transmittance accumulated before it.
    fn trace(&self, o: Vec3, d: Vec3) -> (Option<Hit>, f64) {
        let mut best: Option<Hit> = None;
        let mut tmax = f64::INFINITY;
        for (i, p) in self.prims.iter().enumerate() {
            if let Optics::Diffuse(_) = p.optics {
                if let Some(t) = p.hit(o, d, tmax) {
                    tmax = t;
                    best = Some(Hit { t, prim: i });
                }
            }
        }
        let mut tr = 1.0;
        for p in &self.prims {
            if let Optics::Glass(tau) = p.optics {
                if p.hit(o, d, tmax).is_some() {
                    tr *= tau;
                }
            }
        }
        (best, tr)
    }

    /// Transmittance along an unbounded ray: 0 when blocked, else the glass product.
    fn visibility(&self, o: Vec3, d: Vec3) -> f64 {
        match self.trace(o, d) {
            (Some(_), _) => 0.0,
            (None, tr) => tr,
        }
    }

    /// Sky luminance for a room-frame direction (no sun disk).
    pub fn sky_radiance(&self, d: Vec3) -> f64 {
        match cart_to_sph(d) {
            Ok(s) if s.phi >= 0.0 => sky_luminance(&self.sky, SphericalDir::new(s.theta + self.heading, s.phi)),
            _ => 0.0,
        }
    }

    /// One path sample of luminance arriving at `o` from direction `d`.
    /// `first_bounce` supplies the stratified pair for the first reflection.
    fn path(&self, o: Vec3, d: Vec3, first_bounce: (f64, f64), rng: &mut ChaCha8Rng) -> f64 {
        let (mut o, mut d) = (o, d);
        let mut beta = 1.0;
        let mut l = 0.0;
        let mut depth = 0u32;
        loop {
            let (hit, tr) = self.trace(o, d);
            beta *= tr;
            let Some(hit) = hit else {
                return l + beta * self.sky_radiance(d);
            };
            if beta == 0.0 || depth >= self.params.max_bounces {
                return l;
            }
            let prim = &self.prims[hit.prim];
            let Optics::Diffuse(rho) = prim.optics else {
                unreachable!()
            };
            let n = if prim.normal.dot(d) < 0.0 {
                prim.normal
            } else {
                -prim.normal
            };
            let p = o + d * hit.t + n * ORIGIN_OFFSET;

            let (u1, u2) = if depth == 0 {
                first_bounce
            } else {
                (rng.random::<f64>(), rng.random::<f64>())
            };
            let u_rr: f64 = rng.random();

            if let Some(s) = self.sun {
                let c = n.dot(s);
                if c > 0.0 {
                    let v = self.visibility(p, s);
                    if v > 0.0 {
                        l += beta * rho / PI * self.sun_irradiance * c * v;
                    }
                }
            }

            beta *= rho;
            if beta == 0.0 {
                return l;
            }
            let lw = self.params.limit_weight;
            if beta < lw {
                let q = beta / lw;
                if u_rr >= q {
                    return l;
                }
                beta /= q;
            }
            d = cosine_sample(n, u1, u2);
            o = p;
            depth += 1;
        }
    }

    /// Mean of `spp` path samples along `d`, using the pixel stream for `(x, y)`.
    fn pixel_estimate(&self, o: Vec3, d: Vec3, x: usize, y: usize) -> f64 {
        let spp = self.params.samples_per_pixel as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(pixel_seed(self.params.seed, x, y));
        let mut perm: Vec<usize> = (0..spp).collect();
        for i in (1..spp).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut sum = 0.0;
        for (s, &ps) in perm.iter().enumerate() {
            let first = (
                (s as f64 + rng.random::<f64>()) / spp as f64,
                (ps as f64 + rng.random::<f64>()) / spp as f64,
            );
            let mut path_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
            sum += self.path(o, d, first, &mut path_rng);
        }
        sum / spp as f64
    }

    /// Luminance estimate along a single ray, excluding the sun disk; `key`
    /// selects an independent random stream.
    pub fn estimate_radiance(&self, origin: Vec3, dir: Vec3, key: u64) -> f64 {
        let d = dir.normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
        self.pixel_estimate(origin, d, key as usize, usize::MAX)
    }

    /// Sun-disk contribution, as a luminance spread over a pixel of solid angle `pixel_sr`.
    fn sun_splat(&self, vp: Vec3, pixel_sr: f64) -> Option<(Vec3, f64)> {
        let s = self.sun?;
        let v = self.visibility(vp, s);
        (v > 0.0).then(|| (s, self.sun_irradiance * v / pixel_sr))
    }

    pub fn panorama(&self, position: Vec3, height: usize) -> Result<LuminanceMap, RenderError> {
        self.check_viewpoint(position)?;
        if height == 0 {
            return Err(RenderError::BadParams("panorama height must be positive".into()));
        }
        let width = 2 * height;
        let mut values = vec![0.0; width * height];
        values.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                let d = sph_to_cart(pixel_coord_to_dir(x as f64, y as f64, width, height)).vec();
                *out = self.pixel_estimate(position, d, x, y);
            }
        });
        if let Some(s) = self.sun {
            let (u, v) = dir_to_pixel(cart_to_sph(s).expect("unit"), width, height);
            let x = (u.round() as i64).rem_euclid(width as i64) as usize;
            let y = (v.round().max(0.0) as usize).min(height - 1);
            if let Some((_, l)) = self.sun_splat(position, equirect_pixel_solid_angle(y, width, height)) {
                values[y * width + x] += l;
            }
        }
        Ok(LuminanceMap::new(width, height, values, Projection::Equirectangular).expect("finite non-negative"))
    }

    pub fn fisheye(&self, vp: &Viewpoint, size: usize) -> Result<LuminanceMap, RenderError> {
        self.check_viewpoint(vp.position)?;
        if size == 0 {
            return Err(RenderError::BadParams("fisheye size must be positive".into()));
        }
        let mut values = vec![0.0; size * size];
        values.par_chunks_mut(size).enumerate().for_each(|(j, row)| {
            for (i, out) in row.iter_mut().enumerate() {
                if let Some(px) = fisheye_pixel(i, j, size) {
                    let d = view_to_room(px.local, vp.view_azimuth);
                    *out = self.pixel_estimate(vp.position, d, i, j);
                }
            }
        });
        if let Some(s) = self.sun {
            if let Some((u, v)) = dir_to_fisheye_pixel(s, vp.view_azimuth, size) {
                let (i, j) = (u.round().max(0.0) as usize, v.round().max(0.0) as usize);
                if i < size && j < size {
                    if let Some(px) = fisheye_pixel(i, j, size) {
                        if let Some((_, l)) = self.sun_splat(vp.position, px.solid_angle) {
                            values[j * size + i] += l;
                        }
                    }
                }
            }
        }
        Ok(LuminanceMap::new(size, size, values, Projection::Fisheye180).expect("finite non-negative"))
    }

    /// Illuminance at `point` on a sensor facing `normal` from sky and sun seen
    /// directly (no interreflection), by a deterministic `n × 4n` quadrature
    /// that is uniform in `sin²` of the off-normal angle and in azimuth.
    pub fn direct_illuminance(&self, point: Vec3, normal: Vec3, n: usize) -> f64 {
        let Some(nz) = normal.normalized() else {
            return 0.0;
        };
        let n = n.max(1);
        let (ex, ey) = nz.orthonormal_basis();
        let m = 4 * n;
        let sky: f64 = (0..n)
            .into_par_iter()
            .map(|i| {
                let mu = (i as f64 + 0.5) / n as f64;
                let (sa, ca) = (mu.sqrt(), (1.0 - mu).sqrt());
                let mut row = 0.0;
                for j in 0..m {
                    let b = TAU * (j as f64 + 0.5) / m as f64;
                    let d = ex * (sa * b.cos()) + ey * (sa * b.sin()) + nz * ca;
                    let v = self.visibility(point, d);
                    if v > 0.0 {
                        row += v * self.sky_radiance(d);
                    }
                }
                row
            })
            .sum::<f64>()
            * PI
            / (n * m) as f64;
        let sun = match self.sun {
            Some(s) if s.dot(nz) > 0.0 => self.sun_irradiance * s.dot(nz) * self.visibility(point, s),
            _ => 0.0,
        };
        sky + sun
    }
}

/// Cosine-weighted direction about `n` from two uniforms.
fn cosine_sample(n: Vec3, u1: f64, u2: f64) -> Vec3 {
    let (t, b) = n.orthonormal_basis();
    let r = u1.sqrt();
    let phi = TAU * u2;
    let z = (1.0 - u1).max(0.0).sqrt();
    t * (r * phi.cos()) + b * (r * phi.sin()) + n * z
}

/// Default quadrature resolution for [`direct_illuminance`]: the polar
/// variable is split into this many bands, azimuth into four times as many.
pub const DIRECT_QUADRATURE_N: usize = 720;

pub fn render_panorama(
    scene: &SceneModel,
    sky: &SkyModel,
    vp: &Viewpoint,
    height: usize,
    params: &RenderParams,
) -> Result<LuminanceMap, RenderError> {
    Renderer::new(scene, sky, *params)?.panorama(vp.position, height)
}

pub fn render_fisheye(
    scene: &SceneModel,
    sky: &SkyModel,
    vp: &Viewpoint,
    size: usize,
    params: &RenderParams,
) -> Result<LuminanceMap, RenderError> {
    Renderer::new(scene, sky, *params)?.fisheye(vp, size)
}

pub fn direct_illuminance(scene: &SceneModel, sky: &SkyModel, point: Vec3, normal: Vec3) -> Result<f64, RenderError> {
    let r = Renderer::new(scene, sky, RenderParams::default())?;
    r.check_viewpoint(point)?;
    Ok(r.direct_illuminance(point, normal, DIRECT_QUADRATURE_N))
}

pub fn direct_horizontal_illuminance(scene: &SceneModel, sky: &SkyModel, point: Vec3) -> Result<f64, RenderError> {
    direct_illuminance(scene, sky, point, Vec3::UP)
}

/// Room-frame unit vector along the axis of a fisheye view.
pub fn view_forward(view_azimuth: f64) -> Vec3 {
    view_to_room(Vec3::new(0.0, 0.0, 1.0), view_azimuth)
}
