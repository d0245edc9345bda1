#![allow(dead_code)]

use panolight::geom::Vec3;
use panolight::layout::{
    build_scene, Material, MaterialKind, MaterialSet, RoomLayout, SceneModel, Surface, WindowAperture, WindowMaterial,
};
use panolight::photometry::LuminanceMap;
use panolight::projection::{fisheye_mask, Projection};

/// 4 m wide (x), 6 m deep (z), 3 m high, camera 1.6 m above the floor at the origin.
pub fn box_room() -> RoomLayout {
    RoomLayout::new(vec![[-1.5, -2.0], [2.5, -2.0], [2.5, 4.0], [-1.5, 4.0]], 3.0, 1.6).unwrap()
}

/// A 2 m × 1.3 m window in the `z = 4` wall (wall 2), spanning x ∈ [−0.5, 1.5], y ∈ [0.9, 2.2].
pub fn front_window() -> WindowAperture {
    WindowAperture {
        wall_index: 2,
        s0: 1.0,
        t0: 0.9,
        s1: 3.0,
        t1: 2.2,
    }
}

pub fn mats(wall: f64, ceiling: f64, floor: f64, window: WindowMaterial) -> MaterialSet {
    MaterialSet {
        wall,
        ceiling,
        floor,
        window,
    }
}

pub fn box_scene(m: MaterialSet, windows: &[WindowAperture]) -> SceneModel {
    build_scene(&box_room(), windows, &m).unwrap()
}

fn quad(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> Vec<Vec3> {
    vec![a, b, c, d]
}

/// Closed box `[x0,x1] × [0,h] × [z0,z1]` whose ceiling has an open
/// rectangular skylight `[sx0,sx1] × [sz0,sz1]`. Built directly from
/// polygons, independent of the layout module.
pub fn skylight_box(x: [f64; 2], z: [f64; 2], h: f64, sx: [f64; 2], sz: [f64; 2], rho: f64) -> SceneModel {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let mut s = vec![
        (
            "floor",
            "grey",
            quad(
                v(x[0], 0.0, z[0]),
                v(x[0], 0.0, z[1]),
                v(x[1], 0.0, z[1]),
                v(x[1], 0.0, z[0]),
            ),
        ),
        (
            "south",
            "grey",
            quad(
                v(x[0], 0.0, z[0]),
                v(x[1], 0.0, z[0]),
                v(x[1], h, z[0]),
                v(x[0], h, z[0]),
            ),
        ),
        (
            "north",
            "grey",
            quad(
                v(x[0], 0.0, z[1]),
                v(x[0], h, z[1]),
                v(x[1], h, z[1]),
                v(x[1], 0.0, z[1]),
            ),
        ),
        (
            "west",
            "grey",
            quad(
                v(x[0], 0.0, z[0]),
                v(x[0], h, z[0]),
                v(x[0], h, z[1]),
                v(x[0], 0.0, z[1]),
            ),
        ),
        (
            "east",
            "grey",
            quad(
                v(x[1], 0.0, z[0]),
                v(x[1], 0.0, z[1]),
                v(x[1], h, z[1]),
                v(x[1], h, z[0]),
            ),
        ),
    ];
    // Ceiling frame around the skylight: two full-depth strips and two short ones.
    s.push((
        "c0",
        "grey",
        quad(v(x[0], h, z[0]), v(sx[0], h, z[0]), v(sx[0], h, z[1]), v(x[0], h, z[1])),
    ));
    s.push((
        "c1",
        "grey",
        quad(v(sx[1], h, z[0]), v(x[1], h, z[0]), v(x[1], h, z[1]), v(sx[1], h, z[1])),
    ));
    s.push((
        "c2",
        "grey",
        quad(
            v(sx[0], h, z[0]),
            v(sx[1], h, z[0]),
            v(sx[1], h, sz[0]),
            v(sx[0], h, sz[0]),
        ),
    ));
    s.push((
        "c3",
        "grey",
        quad(
            v(sx[0], h, sz[1]),
            v(sx[1], h, sz[1]),
            v(sx[1], h, z[1]),
            v(sx[0], h, z[1]),
        ),
    ));
    s.push((
        "skylight",
        "hole",
        quad(
            v(sx[0], h, sz[0]),
            v(sx[1], h, sz[0]),
            v(sx[1], h, sz[1]),
            v(sx[0], h, sz[1]),
        ),
    ));
    SceneModel {
        heading_deg: 0.0,
        materials: vec![
            Material {
                name: "grey".into(),
                kind: MaterialKind::Plastic { reflectance: rho },
            },
            Material {
                name: "hole".into(),
                kind: MaterialKind::Open,
            },
        ],
        surfaces: s
            .into_iter()
            .map(|(n, m, p)| Surface {
                name: n.into(),
                material: m.into(),
                polygon: p,
            })
            .collect(),
        interior: None,
    }
}

/// Form factor from a differential area to a parallel rectangle with one
/// corner directly above it, sides `a` and `b`, at distance `h`.
pub fn corner_form_factor(a: f64, b: f64, h: f64) -> f64 {
    let (x, y) = (a / h, b / h);
    let sx = (1.0 + x * x).sqrt();
    let sy = (1.0 + y * y).sqrt();
    ((x / sx) * (y / sx).atan() + (y / sy) * (x / sy).atan()) / (2.0 * std::f64::consts::PI)
}

/// Form factor to an axis-aligned rectangle `[x0,x1] × [z0,z1]` at height `h`
/// above a point at the plan origin, by signed corner decomposition.
pub fn rect_form_factor(x: [f64; 2], z: [f64; 2], h: f64) -> f64 {
    let f = |a: f64, b: f64| a.signum() * b.signum() * corner_form_factor(a.abs(), b.abs(), h);
    f(x[1], z[1]) - f(x[0], z[1]) - f(x[1], z[0]) + f(x[0], z[0])
}

pub fn uniform_fisheye(size: usize, l: f64) -> LuminanceMap {
    let vals = fisheye_mask(size)
        .into_iter()
        .map(|m| if m { l } else { 0.0 })
        .collect();
    LuminanceMap::new(size, size, vals, Projection::Fisheye180).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}
