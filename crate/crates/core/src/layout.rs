//! Planar room reconstruction from panorama corner annotations, window
//! apertures, scene assembly and scene-file export.
//!
//! Corner columns come from an external layout estimator. Each column gives
//! the image position of one vertical wall corner: `u` (column), `v_floor`
//! and `v_ceiling` (rows where the corner meets floor and ceiling). With a
//! known camera height `h_c`, a floor corner at altitude `φ_f < 0` lies at plan
//! distance `h_c / tan(−φ_f)` along its azimuth.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{is_simple_polygon, newell_normal, point_in_polygon, polygon_area, signed_area2, Vec3};
use crate::projection::{cart_to_sph, dir_to_pixel, pixel_coord_to_dir, sph_to_cart};

pub const DEFAULT_CAMERA_HEIGHT: f64 = 1.6;
pub const DEFAULT_WALL_REFLECTANCE: f64 = 0.5;
pub const DEFAULT_CEILING_REFLECTANCE: f64 = 0.7;
pub const DEFAULT_FLOOR_REFLECTANCE: f64 = 0.2;
pub const DEFAULT_GLAZING_TRANSMITTANCE: f64 = 0.88;

const MIN_FLOOR_ALTITUDE: f64 = 1e-3;
const PLANARITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("corner polygon is not simple in plan")]
    CornerOrderError,
    #[error("corner {index}: {what} corner on the wrong side of the horizon")]
    HorizonViolation { index: usize, what: &'static str },
    #[error("corner {index}: floor point too close to the horizon")]
    DegenerateCorner { index: usize },
    #[error("camera is not inside the reconstructed floor polygon")]
    CameraOutside,
    #[error("window ray is parallel to wall {wall}")]
    RayParallelToWall { wall: usize },
    #[error("window ray hits wall {wall} behind the camera")]
    BehindCamera { wall: usize },
    #[error("window projects to an empty region of wall {wall}")]
    EmptyAperture { wall: usize },
    #[error("invalid aperture: {0}")]
    InvalidAperture(String),
    #[error("apertures {a} and {b} overlap on wall {wall}")]
    OverlappingApertures { wall: usize, a: usize, b: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerColumn {
    pub u: f64,
    pub v_floor: f64,
    pub v_ceiling: f64,
}

/// A window outline in image coordinates, attached to wall `wall`
/// (the wall from corner `wall` to corner `wall + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowQuad {
    pub wall: usize,
    pub quad: [[f64; 2]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CornerFile {
    image: ImageDims,
    #[serde(default)]
    camera_height_m: Option<f64>,
    corners: Vec<CornerColumn>,
    #[serde(default)]
    windows: Vec<WindowQuad>,
}

/// Validated corner annotations of one panorama.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSet {
    pub image: ImageDims,
    pub camera_height_m: f64,
    pub corners: Vec<CornerColumn>,
    pub windows: Vec<WindowQuad>,
}

impl CornerSet {
    pub fn new(
        image: ImageDims,
        camera_height_m: f64,
        corners: Vec<CornerColumn>,
        windows: Vec<WindowQuad>,
    ) -> Result<Self, LayoutError> {
        let set = CornerSet {
            image,
            camera_height_m,
            corners,
            windows,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), LayoutError> {
        let schema = |m: String| Err(LayoutError::SchemaError(m));
        let ImageDims { width, height } = self.image;
        if height == 0 || width != 2 * height {
            return schema(format!("image must be a 2:1 panorama, got {width}x{height}"));
        }
        if !(self.camera_height_m > 0.0 && self.camera_height_m.is_finite()) {
            return schema(format!("camera height {} must be positive", self.camera_height_m));
        }
        if self.corners.len() < 3 {
            return schema(format!("need at least 3 corners, got {}", self.corners.len()));
        }
        for (i, c) in self.corners.iter().enumerate() {
            if ![c.u, c.v_floor, c.v_ceiling].iter().all(|v| v.is_finite()) {
                return schema(format!("corner {i} has non-finite coordinates"));
            }
            if self.dir(c.u, c.v_floor).phi >= 0.0 {
                return Err(LayoutError::HorizonViolation {
                    index: i,
                    what: "floor",
                });
            }
            if self.dir(c.u, c.v_ceiling).phi <= 0.0 {
                return Err(LayoutError::HorizonViolation {
                    index: i,
                    what: "ceiling",
                });
            }
        }
        for w in &self.windows {
            if w.wall >= self.corners.len() {
                return schema(format!("window refers to missing wall {}", w.wall));
            }
            if w.quad.iter().flatten().any(|v| !v.is_finite()) {
                return schema("window quad has non-finite coordinates".into());
            }
        }
        let plan: Vec<[f64; 2]> = self
            .corners
            .iter()
            .map(|c| {
                let f = self.dir(c.u, c.v_floor);
                let d = 1.0 / (-f.phi).tan();
                [d * f.theta.sin(), d * f.theta.cos()]
            })
            .collect();
        if !is_simple_polygon(&plan) {
            return Err(LayoutError::CornerOrderError);
        }
        Ok(())
    }

    fn dir(&self, u: f64, v: f64) -> crate::projection::SphericalDir {
        pixel_coord_to_dir(u, v, self.image.width, self.image.height)
    }
}

impl CornerSet {
    /// JSON in the format read by [`parse_corner_json`].
    pub fn to_json(&self) -> String {
        let f = CornerFile {
            image: self.image,
            camera_height_m: Some(self.camera_height_m),
            corners: self.corners.clone(),
            windows: self.windows.clone(),
        };
        serde_json::to_string_pretty(&f).expect("plain data")
    }
}

/// Annotations an exact layout estimator would report for `room` seen from
/// its camera: corner columns in floor-polygon order and one quad per aperture.
pub fn synthesize_corners(
    room: &RoomLayout,
    image: ImageDims,
    apertures: &[WindowAperture],
) -> Result<CornerSet, LayoutError> {
    room.validate()?;
    let cam = room.camera();
    let px = |p: Vec3| -> Result<[f64; 2], LayoutError> {
        let d = cart_to_sph(p - cam).map_err(|e| LayoutError::SchemaError(e.to_string()))?;
        let (u, v) = dir_to_pixel(d, image.width, image.height);
        Ok([u.rem_euclid(image.width as f64), v])
    };
    let mut corners = Vec::with_capacity(room.floor.len());
    for c in &room.floor {
        let f = px(Vec3::new(c[0], 0.0, c[1]))?;
        let t = px(Vec3::new(c[0], room.ceiling_height, c[1]))?;
        corners.push(CornerColumn {
            u: f[0],
            v_floor: f[1],
            v_ceiling: t[1],
        });
    }
    let walls = room.walls();
    let mut windows = Vec::with_capacity(apertures.len());
    for ap in apertures {
        let w = walls
            .get(ap.wall_index)
            .ok_or_else(|| LayoutError::InvalidAperture(format!("no wall {}", ap.wall_index)))?;
        let mut quad = [[0.0; 2]; 4];
        for (q, (s, t)) in quad
            .iter_mut()
            .zip([(ap.s0, ap.t0), (ap.s1, ap.t0), (ap.s1, ap.t1), (ap.s0, ap.t1)])
        {
            *q = px(w.point(s, t, 0.0))?;
        }
        windows.push(WindowQuad {
            wall: ap.wall_index,
            quad,
        });
    }
    CornerSet::new(image, room.camera_height, corners, windows)
}

pub fn parse_corner_json(text: &str) -> Result<CornerSet, LayoutError> {
    let f: CornerFile = serde_json::from_str(text).map_err(|e| LayoutError::SchemaError(e.to_string()))?;
    CornerSet::new(
        f.image,
        f.camera_height_m.unwrap_or(DEFAULT_CAMERA_HEIGHT),
        f.corners,
        f.windows,
    )
}

/// Reconstructed room: floor polygon in plan `(x, z)` at `y = 0`, flat
/// ceiling, camera at `(0, camera_height, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomLayout {
    pub floor: Vec<[f64; 2]>,
    pub ceiling_height: f64,
    pub camera_height: f64,
}

/// One vertical wall between consecutive floor vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub length: f64,
    /// Unit direction from start to end in plan.
    pub along: [f64; 2],
    /// Unit plan normal pointing into the room.
    pub inward: [f64; 2],
}

impl Wall {
    /// 3D point at wall coordinates `(s, t)`, offset `depth` meters outward.
    pub fn point(&self, s: f64, t: f64, depth: f64) -> Vec3 {
        Vec3::new(
            self.start[0] + self.along[0] * s - self.inward[0] * depth,
            t,
            self.start[1] + self.along[1] * s - self.inward[1] * depth,
        )
    }
}

impl RoomLayout {
    pub fn new(floor: Vec<[f64; 2]>, ceiling_height: f64, camera_height: f64) -> Result<Self, LayoutError> {
        let room = RoomLayout {
            floor,
            ceiling_height,
            camera_height,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        if !is_simple_polygon(&self.floor) {
            return Err(LayoutError::CornerOrderError);
        }
        if !(self.camera_height > 0.0 && self.ceiling_height > self.camera_height) {
            return Err(LayoutError::SchemaError(format!(
                "need ceiling height {} > camera height {} > 0",
                self.ceiling_height, self.camera_height
            )));
        }
        if !point_in_polygon(&self.floor, [0.0, 0.0]) {
            return Err(LayoutError::CameraOutside);
        }
        Ok(())
    }

    pub fn camera(&self) -> Vec3 {
        Vec3::new(0.0, self.camera_height, 0.0)
    }

    pub fn walls(&self) -> Vec<Wall> {
        let n = self.floor.len();
        let ccw = signed_area2(&self.floor) > 0.0;
        (0..n)
            .map(|i| {
                let a = self.floor[i];
                let b = self.floor[(i + 1) % n];
                let (dx, dz) = (b[0] - a[0], b[1] - a[1]);
                let length = dx.hypot(dz);
                let along = [dx / length, dz / length];
                let inward = if ccw {
                    [-along[1], along[0]]
                } else {
                    [along[1], -along[0]]
                };
                Wall {
                    start: a,
                    end: b,
                    length,
                    along,
                    inward,
                }
            })
            .collect()
    }

    pub fn floor_area(&self) -> f64 {
        signed_area2(&self.floor).abs() / 2.0
    }
}

/// Builds the planar room implied by `c` for a camera `camera_height` meters above the floor.
pub fn reconstruct_room(c: &CornerSet, camera_height: f64) -> Result<RoomLayout, LayoutError> {
    let (w, h) = (c.image.width, c.image.height);
    let mut floor = Vec::with_capacity(c.corners.len());
    let mut rise = 0.0;
    for (i, col) in c.corners.iter().enumerate() {
        let f = pixel_coord_to_dir(col.u, col.v_floor, w, h);
        if f.phi >= 0.0 || f.phi.abs() < MIN_FLOOR_ALTITUDE {
            return Err(LayoutError::DegenerateCorner { index: i });
        }
        let d = camera_height / (-f.phi).tan();
        floor.push([d * f.theta.sin(), d * f.theta.cos()]);
        let ceil = pixel_coord_to_dir(col.u, col.v_ceiling, w, h);
        rise += d * ceil.phi.tan();
    }
    let ceiling_height = camera_height + rise / c.corners.len() as f64;
    RoomLayout::new(floor, ceiling_height, camera_height)
}

/// Rectangular opening on a wall in wall coordinates: `s` along the wall
/// from its start vertex, `t` height above the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowAperture {
    pub wall_index: usize,
    pub s0: f64,
    pub t0: f64,
    pub s1: f64,
    pub t1: f64,
}

impl WindowAperture {
    pub fn area(&self) -> f64 {
        (self.s1 - self.s0) * (self.t1 - self.t0)
    }

    fn overlaps(&self, o: &WindowAperture) -> bool {
        self.wall_index == o.wall_index && self.s0 < o.s1 && o.s0 < self.s1 && self.t0 < o.t1 && o.t0 < self.t1
    }
}

/// Intersects the rays through the four quad points with the plane of wall
/// `wall_index` and returns their bounding rectangle clamped to the wall.
pub fn project_window(
    quad: &[[f64; 2]; 4],
    wall_index: usize,
    room: &RoomLayout,
    image: ImageDims,
) -> Result<WindowAperture, LayoutError> {
    let walls = room.walls();
    let wall = walls
        .get(wall_index)
        .ok_or_else(|| LayoutError::InvalidAperture(format!("no wall {wall_index}")))?;
    let cam = room.camera();
    let (mut s0, mut s1, mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in quad {
        let d = sph_to_cart(pixel_coord_to_dir(p[0], p[1], image.width, image.height)).vec();
        let denom = wall.inward[0] * d.x + wall.inward[1] * d.z;
        if denom.abs() < 1e-12 {
            return Err(LayoutError::RayParallelToWall { wall: wall_index });
        }
        let num = wall.inward[0] * (wall.start[0] - cam.x) + wall.inward[1] * (wall.start[1] - cam.z);
        let r = num / denom;
        if r <= 0.0 {
            return Err(LayoutError::BehindCamera { wall: wall_index });
        }
        let hit = cam + d * r;
        let s = (hit.x - wall.start[0]) * wall.along[0] + (hit.z - wall.start[1]) * wall.along[1];
        s0 = s0.min(s);
        s1 = s1.max(s);
        t0 = t0.min(hit.y);
        t1 = t1.max(hit.y);
    }
    let ap = WindowAperture {
        wall_index,
        s0: s0.clamp(0.0, wall.length),
        s1: s1.clamp(0.0, wall.length),
        t0: t0.clamp(0.0, room.ceiling_height),
        t1: t1.clamp(0.0, room.ceiling_height),
    };
    if ap.s0 >= ap.s1 || ap.t0 >= ap.t1 {
        return Err(LayoutError::EmptyAperture { wall: wall_index });
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowMaterial {
    Open,
    Glazing { transmittance: f64 },
}

/// Uniform surface properties applied when building a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSet {
    pub wall: f64,
    pub ceiling: f64,
    pub floor: f64,
    pub window: WindowMaterial,
}

impl Default for MaterialSet {
    fn default() -> Self {
        MaterialSet {
            wall: DEFAULT_WALL_REFLECTANCE,
            ceiling: DEFAULT_CEILING_REFLECTANCE,
            floor: DEFAULT_FLOOR_REFLECTANCE,
            window: WindowMaterial::Open,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MaterialKind {
    /// Lambertian reflector.
    Plastic { reflectance: f64 },
    /// Thin non-refracting transmitter.
    Glass { transmittance: f64 },
    /// Unglazed opening.
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    #[serde(flatten)]
    pub kind: MaterialKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub name: String,
    pub material: String,
    pub polygon: Vec<Vec3>,
}

/// Optional room description carried with a scene: floor outline, ceiling
/// height and the capture position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interior {
    pub floor: Vec<[f64; 2]>,
    pub ceiling_height: f64,
    pub camera: Vec3,
}

impl Interior {
    pub fn contains(&self, p: Vec3) -> bool {
        p.y > 0.0 && p.y < self.ceiling_height && point_in_polygon(&self.floor, [p.x, p.z])
    }
}

/// Material-tagged planar surfaces in the room frame (meters, `y` up).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneModel {
    /// Compass bearing (degrees clockwise from north) of the room's `+z` axis.
    #[serde(default)]
    pub heading_deg: f64,
    pub materials: Vec<Material>,
    pub surfaces: Vec<Surface>,
    #[serde(default)]
    pub interior: Option<Interior>,
}

impl SceneModel {
    pub fn empty() -> Self {
        SceneModel {
            heading_deg: 0.0,
            materials: Vec::new(),
            surfaces: Vec::new(),
            interior: None,
        }
    }

    pub fn material(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let bad = |m: String| Err(LayoutError::InvalidScene(m));
        let mut names = HashMap::new();
        for m in &self.materials {
            if names.insert(m.name.as_str(), ()).is_some() {
                return bad(format!("duplicate material `{}`", m.name));
            }
            let v = match m.kind {
                MaterialKind::Plastic { reflectance } => reflectance,
                MaterialKind::Glass { transmittance } => transmittance,
                MaterialKind::Open => 0.0,
            };
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("material `{}` coefficient {v} outside [0, 1]", m.name));
            }
        }
        for s in &self.surfaces {
            if self.material(&s.material).is_none() {
                return bad(format!("surface `{}` uses unknown material `{}`", s.name, s.material));
            }
            if s.polygon.len() < 3 || s.polygon.iter().any(|p| !p.to_array().iter().all(|v| v.is_finite())) {
                return bad(format!("surface `{}` is not a valid polygon", s.name));
            }
            let n = newell_normal(&s.polygon);
            let Some(unit) = n.normalized() else {
                return bad(format!("surface `{}` has zero area", s.name));
            };
            let p0 = s.polygon[0];
            if s.polygon.iter().any(|p| (*p - p0).dot(unit).abs() > PLANARITY_TOL) {
                return bad(format!("surface `{}` is not planar", s.name));
            }
        }
        Ok(())
    }

    /// Total area of surfaces whose name starts with `prefix`.
    pub fn area_with_prefix(&self, prefix: &str) -> f64 {
        self.surfaces
            .iter()
            .filter(|s| s.name.starts_with(prefix))
            .map(|s| polygon_area(&s.polygon))
            .sum()
    }
}

fn oriented(mut poly: Vec<Vec3>, want: Vec3) -> Vec<Vec3> {
    if newell_normal(&poly).dot(want) < 0.0 {
        poly.reverse();
    }
    poly
}

fn rect_on_wall(wall: &Wall, s0: f64, s1: f64, t0: f64, t1: f64) -> Vec<Vec3> {
    let inward = Vec3::new(wall.inward[0], 0.0, wall.inward[1]);
    oriented(
        vec![
            wall.point(s0, t0, 0.0),
            wall.point(s1, t0, 0.0),
            wall.point(s1, t1, 0.0),
            wall.point(s0, t1, 0.0),
        ],
        inward,
    )
}

/// Splits `[0, length] × [0, height]` into opaque rectangles around `holes`.
fn frame_rectangles(length: f64, height: f64, holes: &[&WindowAperture]) -> Vec<[f64; 4]> {
    let mut cuts: Vec<f64> = vec![0.0, length];
    for h in holes {
        cuts.push(h.s0);
        cuts.push(h.s1);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let mut spans: Vec<(f64, f64)> = holes
            .iter()
            .filter(|h| h.s0 <= a && h.s1 >= b)
            .map(|h| (h.t0, h.t1))
            .collect();
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut t = 0.0;
        for (lo, hi) in spans {
            if lo > t {
                out.push([a, b, t, lo]);
            }
            t = hi;
        }
        if height > t {
            out.push([a, b, t, height]);
        }
    }
    out
}

fn check_apertures(room: &RoomLayout, walls: &[Wall], apertures: &[WindowAperture]) -> Result<(), LayoutError> {
    for (i, ap) in apertures.iter().enumerate() {
        let wall = walls.get(ap.wall_index).ok_or_else(|| {
            LayoutError::InvalidAperture(format!("aperture {i} refers to missing wall {}", ap.wall_index))
        })?;
        let ok = 0.0 <= ap.s0
            && ap.s0 < ap.s1
            && ap.s1 <= wall.length
            && 0.0 <= ap.t0
            && ap.t0 < ap.t1
            && ap.t1 <= room.ceiling_height;
        if !ok {
            return Err(LayoutError::InvalidAperture(format!(
                "aperture {i} exceeds wall {}",
                ap.wall_index
            )));
        }
        for (j, other) in apertures.iter().enumerate().skip(i + 1) {
            if ap.overlaps(other) {
                return Err(LayoutError::OverlappingApertures {
                    wall: ap.wall_index,
                    a: i,
                    b: j,
                });
            }
        }
    }
    Ok(())
}

/// Assembles floor, ceiling, framed walls and aperture surfaces.
///
/// Surface names: `floor`, `ceiling`, `wall{i}_{k}` for the opaque pieces of
/// wall `i`, `window{j}` for aperture `j`.
pub fn build_scene(
    room: &RoomLayout,
    apertures: &[WindowAperture],
    mats: &MaterialSet,
) -> Result<SceneModel, LayoutError> {
    room.validate()?;
    let walls = room.walls();
    check_apertures(room, &walls, apertures)?;

    let mut materials = vec![
        Material {
            name: "floor".into(),
            kind: MaterialKind::Plastic {
                reflectance: mats.floor,
            },
        },
        Material {
            name: "ceiling".into(),
            kind: MaterialKind::Plastic {
                reflectance: mats.ceiling,
            },
        },
        Material {
            name: "wall".into(),
            kind: MaterialKind::Plastic { reflectance: mats.wall },
        },
    ];
    if !apertures.is_empty() {
        materials.push(match mats.window {
            WindowMaterial::Open => Material {
                name: "opening".into(),
                kind: MaterialKind::Open,
            },
            WindowMaterial::Glazing { transmittance } => Material {
                name: "glazing".into(),
                kind: MaterialKind::Glass { transmittance },
            },
        });
    }
    let window_mat = materials.last().map(|m| m.name.clone()).unwrap_or_default();

    let h = room.ceiling_height;
    let floor3: Vec<Vec3> = room.floor.iter().map(|p| Vec3::new(p[0], 0.0, p[1])).collect();
    let ceil3: Vec<Vec3> = room.floor.iter().map(|p| Vec3::new(p[0], h, p[1])).collect();
    let mut surfaces = vec![
        Surface {
            name: "floor".into(),
            material: "floor".into(),
            polygon: oriented(floor3, Vec3::UP),
        },
        Surface {
            name: "ceiling".into(),
            material: "ceiling".into(),
            polygon: oriented(ceil3, -Vec3::UP),
        },
    ];
    for (i, wall) in walls.iter().enumerate() {
        let holes: Vec<&WindowAperture> = apertures.iter().filter(|a| a.wall_index == i).collect();
        for (k, [s0, s1, t0, t1]) in frame_rectangles(wall.length, h, &holes).into_iter().enumerate() {
            surfaces.push(Surface {
                name: format!("wall{i}_{k}"),
                material: "wall".into(),
                polygon: rect_on_wall(wall, s0, s1, t0, t1),
            });
        }
    }
    for (j, ap) in apertures.iter().enumerate() {
        surfaces.push(Surface {
            name: format!("window{j}"),
            material: window_mat.clone(),
            polygon: rect_on_wall(&walls[ap.wall_index], ap.s0, ap.s1, ap.t0, ap.t1),
        });
    }
    let scene = SceneModel {
        heading_deg: 0.0,
        materials,
        surfaces,
        interior: Some(Interior {
            floor: room.floor.clone(),
            ceiling_height: h,
            camera: room.camera(),
        }),
    };
    scene.validate()?;
    Ok(scene)
}

/// Adds wall-thickness reveals (jambs, sill and head) of `depth` meters
/// outside each aperture, using the wall material.
pub fn add_window_reveals(
    scene: &mut SceneModel,
    room: &RoomLayout,
    apertures: &[WindowAperture],
    depth: f64,
) -> Result<(), LayoutError> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(LayoutError::InvalidScene(format!(
            "reveal depth {depth} must be positive"
        )));
    }
    let walls = room.walls();
    check_apertures(room, &walls, apertures)?;
    for (j, ap) in apertures.iter().enumerate() {
        let w = &walls[ap.wall_index];
        let along = Vec3::new(w.along[0], 0.0, w.along[1]);
        let quad = |a: (f64, f64), b: (f64, f64)| {
            vec![
                w.point(a.0, a.1, 0.0),
                w.point(b.0, b.1, 0.0),
                w.point(b.0, b.1, depth),
                w.point(a.0, a.1, depth),
            ]
        };
        let pieces = [
            ("left", quad((ap.s0, ap.t0), (ap.s0, ap.t1)), along),
            ("right", quad((ap.s1, ap.t0), (ap.s1, ap.t1)), -along),
            ("sill", quad((ap.s0, ap.t0), (ap.s1, ap.t0)), Vec3::UP),
            ("head", quad((ap.s0, ap.t1), (ap.s1, ap.t1)), -Vec3::UP),
        ];
        for (tag, poly, facing) in pieces {
            scene.surfaces.push(Surface {
                name: format!("reveal{j}_{tag}"),
                material: "wall".into(),
                polygon: oriented(poly, facing),
            });
        }
    }
    scene.validate()
}

fn num(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

const EXPORT_HEADER: &str = "# panolight scene export\n";

/// Radiance scene text. Coordinates are converted to Radiance's `z`-up
/// frame as `(x, z, y)`; open apertures are holes and emit nothing.
pub fn export_rad(scene: &SceneModel) -> String {
    let mut out = String::from(EXPORT_HEADER);
    let mut used: Vec<&str> = Vec::new();
    for s in &scene.surfaces {
        if !used.contains(&s.material.as_str()) {
            used.push(&s.material);
        }
    }
    for name in &used {
        let Some(m) = scene.material(name) else {
            continue;
        };
        match m.kind {
            MaterialKind::Plastic { reflectance: r } => {
                let r = num(r);
                writeln!(out, "void plastic {name} 0 0 5 {r} {r} {r} 0 0").unwrap();
            }
            MaterialKind::Glass { transmittance: t } => {
                let t = num(t);
                writeln!(out, "void glass {name} 0 0 3 {t} {t} {t}").unwrap();
            }
            MaterialKind::Open => {}
        }
    }
    for s in &scene.surfaces {
        if matches!(
            scene.material(&s.material).map(|m| m.kind),
            Some(MaterialKind::Open) | None
        ) {
            continue;
        }
        write!(out, "{} polygon {} 0 0 {}", s.material, s.name, 3 * s.polygon.len()).unwrap();
        for p in &s.polygon {
            write!(out, " {} {} {}", num(p.x), num(p.z), num(p.y)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn triangulate(poly: &[Vec3]) -> Vec<[usize; 3]> {
    let n = newell_normal(poly);
    let (ax, ay) = if n.x.abs() >= n.y.abs() && n.x.abs() >= n.z.abs() {
        (1, 2)
    } else if n.y.abs() >= n.z.abs() {
        (2, 0)
    } else {
        (0, 1)
    };
    let pts: Vec<[f64; 2]> = poly.iter().map(|p| [p.to_array()[ax], p.to_array()[ay]]).collect();
    let sign = signed_area2(&pts).signum();
    let cross =
        |a: [f64; 2], b: [f64; 2], c: [f64; 2]| ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) * sign;
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::new();
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&i| {
            let (a, b, c) = (pts[idx[(i + m - 1) % m]], pts[idx[i]], pts[idx[(i + 1) % m]]);
            cross(a, b, c) > 0.0
                && idx.iter().all(|&k| {
                    let p = pts[k];
                    p == a
                        || p == b
                        || p == c
                        || !(cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0)
                })
        });
        let i = ear.unwrap_or(0);
        tris.push([idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]]);
        idx.remove(i);
    }
    tris.push([idx[0], idx[1], idx[2]]);
    tris
}

/// Wavefront OBJ text with welded vertices and one group per surface.
/// Open apertures are holes and emit nothing.
pub fn export_obj(scene: &SceneModel, triangulated: bool) -> String {
    let mut out = String::from(EXPORT_HEADER);
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut verts: Vec<Vec3> = Vec::new();
    let mut faces: Vec<(&Surface, Vec<usize>)> = Vec::new();
    for s in &scene.surfaces {
        if matches!(
            scene.material(&s.material).map(|m| m.kind),
            Some(MaterialKind::Open) | None
        ) {
            continue;
        }
        let ids = s
            .polygon
            .iter()
            .map(|p| {
                let key = p.to_array().map(|v| (v * 1e9).round() as i64);
                *index.entry(key).or_insert_with(|| {
                    verts.push(*p);
                    verts.len()
                })
            })
            .collect();
        faces.push((s, ids));
    }
    for v in &verts {
        writeln!(out, "v {} {} {}", num(v.x), num(v.y), num(v.z)).unwrap();
    }
    for (s, ids) in faces {
        writeln!(out, "g {}\nusemtl {}", s.name, s.material).unwrap();
        if triangulated {
            for t in triangulate(&s.polygon) {
                writeln!(out, "f {} {} {}", ids[t[0]], ids[t[1]], ids[t[2]]).unwrap();
            }
        } else {
            let list: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
            writeln!(out, "f {}", list.join(" ")).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn box_room() -> RoomLayout {
        RoomLayout::new(vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 4.0], [-2.0, 4.0]], 3.0, 1.5).unwrap()
    }

    fn corner_json(corners: &str) -> String {
        format!(r#"{{"image": {{"width": 1024, "height": 512}}, "camera_height_m": 1.6, "corners": [{corners}]}}"#)
    }

    #[test]
    fn parse_four_corner_box() {
        let text = corner_json(
            r#"{"u": 128, "v_floor": 400, "v_ceiling": 100},
               {"u": 384, "v_floor": 400, "v_ceiling": 100},
               {"u": 640, "v_floor": 400, "v_ceiling": 100},
               {"u": 896, "v_floor": 400, "v_ceiling": 100}"#,
        );
        let c = parse_corner_json(&text).unwrap();
        assert_eq!(c.corners.len(), 4);
        assert_eq!(c.camera_height_m, 1.6);
    }

    #[test]
    fn parse_errors() {
        let above = corner_json(
            r#"{"u": 128, "v_floor": 100, "v_ceiling": 50},
               {"u": 384, "v_floor": 400, "v_ceiling": 100},
               {"u": 640, "v_floor": 400, "v_ceiling": 100}"#,
        );
        assert_eq!(
            parse_corner_json(&above),
            Err(LayoutError::HorizonViolation {
                index: 0,
                what: "floor"
            })
        );
        let two = corner_json(
            r#"{"u": 128, "v_floor": 400, "v_ceiling": 100}, {"u": 384, "v_floor": 400, "v_ceiling": 100}"#,
        );
        assert!(matches!(parse_corner_json(&two), Err(LayoutError::SchemaError(_))));
        assert!(matches!(parse_corner_json("{"), Err(LayoutError::SchemaError(_))));
        let crossed = corner_json(
            r#"{"u": 128, "v_floor": 400, "v_ceiling": 100},
               {"u": 640, "v_floor": 400, "v_ceiling": 100},
               {"u": 384, "v_floor": 400, "v_ceiling": 100},
               {"u": 896, "v_floor": 400, "v_ceiling": 100}"#,
        );
        assert_eq!(parse_corner_json(&crossed), Err(LayoutError::CornerOrderError));
    }

    #[test]
    fn single_corner_geometry() {
        // corner dead ahead at 45° below and above the horizon
        let (w, h) = (1024usize, 512usize);
        let u = w as f64 / 2.0 - 0.5;
        let vf = 0.75 * h as f64 - 0.5;
        let vc = 0.25 * h as f64 - 0.5;
        let side = |du: f64| CornerColumn {
            u: u + du,
            v_floor: vf,
            v_ceiling: vc,
        };
        let c = CornerSet {
            image: ImageDims { width: w, height: h },
            camera_height_m: 1.6,
            corners: vec![side(0.0), side(384.0), side(-384.0)],
            windows: vec![],
        };
        let room = reconstruct_room(&c, 1.6).unwrap();
        assert!((room.floor[0][0]).abs() < 1e-12);
        assert!((room.floor[0][1] - 1.6).abs() < 1e-12);
        assert!((room.ceiling_height - 3.2).abs() < 1e-12);
    }

    #[test]
    fn box_scene_has_six_surfaces() {
        let s = build_scene(&box_room(), &[], &MaterialSet::default()).unwrap();
        assert_eq!(s.surfaces.len(), 6);
        let obj = export_obj(&s, false);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 6);
        let tri = export_obj(&s, true);
        assert_eq!(tri.lines().filter(|l| l.starts_with("f ")).count(), 12);
    }

    #[test]
    fn one_window_frames_wall() {
        let room = box_room();
        let ap = WindowAperture {
            wall_index: 1,
            s0: 1.0,
            t0: 1.0,
            s1: 3.0,
            t1: 2.5,
        };
        let s = build_scene(&room, &[ap], &MaterialSet::default()).unwrap();
        let pieces: Vec<_> = s.surfaces.iter().filter(|x| x.name.starts_with("wall1_")).collect();
        assert_eq!(pieces.len(), 4);
        assert_eq!(s.surfaces.len(), 6 + 3 + 1);
        let wall_area = 6.0 * 3.0;
        assert!((s.area_with_prefix("wall1_") - (wall_area - ap.area())).abs() < 1e-12);
        let overl = WindowAperture { s0: 2.0, s1: 4.0, ..ap };
        assert!(matches!(
            build_scene(&room, &[ap, overl], &MaterialSet::default()),
            Err(LayoutError::OverlappingApertures { .. })
        ));
    }

    #[test]
    fn two_windows_tile_wall() {
        let room = box_room();
        let a = WindowAperture {
            wall_index: 1,
            s0: 0.5,
            t0: 1.0,
            s1: 2.0,
            t1: 2.0,
        };
        let b = WindowAperture {
            wall_index: 1,
            s0: 1.5,
            t0: 2.25,
            s1: 5.0,
            t1: 2.75,
        };
        let s = build_scene(&room, &[a, b], &MaterialSet::default()).unwrap();
        assert!((s.area_with_prefix("wall1_") + a.area() + b.area() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn window_projection_centered() {
        let room = box_room();
        let walls = room.walls();
        // wall 1 runs from (2,-2) to (2,4); camera at origin, 1.5 m high
        assert_eq!(walls[1].inward, [-1.0, 0.0]);
        let img = ImageDims {
            width: 2048,
            height: 1024,
        };
        let to_px = |p: Vec3| {
            let d = crate::projection::cart_to_sph(p - room.camera()).unwrap();
            let (u, v) = crate::projection::dir_to_pixel(d, img.width, img.height);
            [u, v]
        };
        let quad = [
            to_px(walls[1].point(2.0, 1.0, 0.0)),
            to_px(walls[1].point(4.0, 1.0, 0.0)),
            to_px(walls[1].point(4.0, 2.0, 0.0)),
            to_px(walls[1].point(2.0, 2.0, 0.0)),
        ];
        let ap = project_window(&quad, 1, &room, img).unwrap();
        for (got, want) in [(ap.s0, 2.0), (ap.s1, 4.0), (ap.t0, 1.0), (ap.t1, 2.0)] {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let high = [
            quad[0],
            quad[1],
            to_px(walls[1].point(4.0, 3.5, 0.0)),
            to_px(walls[1].point(2.0, 3.5, 0.0)),
        ];
        assert_eq!(project_window(&high, 1, &room, img).unwrap().t1, 3.0);
        // a quad seen on wall 3 cannot hit wall 1 in front of the camera
        let far = [
            to_px(walls[3].point(2.0, 1.0, 0.0)),
            to_px(walls[3].point(4.0, 1.0, 0.0)),
            to_px(walls[3].point(4.0, 2.0, 0.0)),
            to_px(walls[3].point(2.0, 2.0, 0.0)),
        ];
        assert_eq!(
            project_window(&far, 1, &room, img),
            Err(LayoutError::BehindCamera { wall: 1 })
        );
        let _ = PI;
    }

    #[test]
    fn rad_export_golden() {
        let scene = SceneModel::empty();
        assert_eq!(export_rad(&scene), EXPORT_HEADER);
        assert_eq!(export_obj(&scene, false), EXPORT_HEADER);
        let scene = SceneModel {
            heading_deg: 0.0,
            materials: vec![Material {
                name: "floor".into(),
                kind: MaterialKind::Plastic { reflectance: 0.2 },
            }],
            surfaces: vec![Surface {
                name: "floor".into(),
                material: "floor".into(),
                polygon: vec![
                    Vec3::new(0.0, 0.0, 0.0),
                    Vec3::new(0.0, 0.0, 1.0),
                    Vec3::new(1.0, 0.0, 1.0),
                    Vec3::new(1.0, 0.0, 0.0),
                ],
            }],
            interior: None,
        };
        let want = "# panolight scene export\n\
                    void plastic floor 0 0 5 0.2 0.2 0.2 0 0\n\
                    floor polygon floor 0 0 12 0 0 0 0 1 0 1 1 0 1 0 0\n";
        assert_eq!(export_rad(&scene), want);
        assert_eq!(export_rad(&scene), export_rad(&scene));
    }

    #[test]
    fn glazing_exported_as_glass() {
        let room = box_room();
        let ap = WindowAperture {
            wall_index: 0,
            s0: 1.0,
            t0: 1.0,
            s1: 2.0,
            t1: 2.0,
        };
        let mats = MaterialSet {
            window: WindowMaterial::Glazing { transmittance: 0.88 },
            ..MaterialSet::default()
        };
        let rad = export_rad(&build_scene(&room, &[ap], &mats).unwrap());
        assert!(rad.contains("void glass glazing 0 0 3 0.88 0.88 0.88\n"));
        assert!(rad.contains("glazing polygon window0 0 0 12"));
        let open = export_rad(&build_scene(&room, &[ap], &MaterialSet::default()).unwrap());
        assert!(!open.contains("window0"));
    }

    #[test]
    fn reveals_add_four_pieces_per_window() {
        let room = box_room();
        let ap = WindowAperture {
            wall_index: 1,
            s0: 1.0,
            t0: 1.0,
            s1: 3.0,
            t1: 2.5,
        };
        let mut s = build_scene(&room, &[ap], &MaterialSet::default()).unwrap();
        add_window_reveals(&mut s, &room, &[ap], 0.3).unwrap();
        assert_eq!(s.surfaces.iter().filter(|x| x.name.starts_with("reveal0_")).count(), 4);
        let expect = 2.0 * 0.3 * 1.5 + 2.0 * 0.3 * 2.0;
        assert!((s.area_with_prefix("reveal0_") - expect).abs() < 1e-12);
        // reveals sit outside the room (x > 2 for wall 1)
        let outside = s
            .surfaces
            .iter()
            .filter(|x| x.name.starts_with("reveal"))
            .flat_map(|x| &x.polygon)
            .all(|p| p.x >= 2.0);
        assert!(outside);
    }

    #[test]
    fn non_convex_floor_triangulates() {
        let room = RoomLayout::new(
            vec![
                [-1.0, -1.0],
                [3.0, -1.0],
                [3.0, 1.0],
                [1.0, 1.0],
                [1.0, 3.0],
                [-1.0, 3.0],
            ],
            2.5,
            1.2,
        )
        .unwrap();
        let s = build_scene(&room, &[], &MaterialSet::default()).unwrap();
        let tris = triangulate(&s.surfaces[0].polygon);
        assert_eq!(tris.len(), 4);
        let area: f64 = tris
            .iter()
            .map(|t| {
                polygon_area(&[
                    s.surfaces[0].polygon[t[0]],
                    s.surfaces[0].polygon[t[1]],
                    s.surfaces[0].polygon[t[2]],
                ])
            })
            .sum();
        assert!((area - room.floor_area()).abs() < 1e-12);
    }
}
