mod common;

use common::*;
use panolight::layout::{
    add_window_reveals, build_scene, export_obj, export_rad, parse_corner_json, project_window, reconstruct_room,
    synthesize_corners, ImageDims, LayoutError, RoomLayout, WindowAperture, WindowMaterial,
};
use proptest::prelude::*;

const DIMS: ImageDims = ImageDims {
    width: 2048,
    height: 1024,
};

/// Star-shaped floor around the camera: vertices at increasing bearings.
fn star_room(radii: &[f64], jitter: &[f64], ceiling: f64, camera: f64) -> RoomLayout {
    let n = radii.len();
    let floor = (0..n)
        .map(|i| {
            let a = (i as f64 + 0.3 * jitter[i]) / n as f64 * std::f64::consts::TAU;
            [radii[i] * a.sin(), radii[i] * a.cos()]
        })
        .collect();
    RoomLayout::new(floor, ceiling, camera).unwrap()
}

fn assert_rooms_close(a: &RoomLayout, b: &RoomLayout, tol: f64) {
    assert_eq!(a.floor.len(), b.floor.len());
    for (p, q) in a.floor.iter().zip(&b.floor) {
        assert!((p[0] - q[0]).abs() < tol && (p[1] - q[1]).abs() < tol, "{p:?} vs {q:?}");
    }
    assert!((a.ceiling_height - b.ceiling_height).abs() < tol);
}

#[test]
fn box_room_survives_the_annotation_round_trip() {
    let room = box_room();
    let ap = front_window();
    let corners = synthesize_corners(&room, DIMS, &[ap]).unwrap();
    let parsed = parse_corner_json(&corners.to_json()).unwrap();
    assert_eq!(parsed, corners);
    let back = reconstruct_room(&parsed, room.camera_height).unwrap();
    assert_rooms_close(&back, &room, 1e-9);
    let w = &parsed.windows[0];
    let got = project_window(&w.quad, w.wall, &back, DIMS).unwrap();
    for (x, y) in [(got.s0, ap.s0), (got.s1, ap.s1), (got.t0, ap.t0), (got.t1, ap.t1)] {
        assert!((x - y).abs() < 1e-9, "{got:?} vs {ap:?}");
    }
}

#[test]
fn reversed_corner_order_is_accepted() {
    let mut room = box_room();
    room.floor.reverse();
    let corners = synthesize_corners(&room, DIMS, &[]).unwrap();
    let back = reconstruct_room(&corners, room.camera_height).unwrap();
    assert_rooms_close(&back, &room, 1e-9);
    assert!((back.floor_area() - 24.0).abs() < 1e-9);
}

#[test]
fn scrambled_corners_are_rejected() {
    let room = box_room();
    let mut corners = synthesize_corners(&room, DIMS, &[]).unwrap();
    corners.corners.swap(1, 2);
    let text = corners.to_json();
    assert_eq!(parse_corner_json(&text), Err(LayoutError::CornerOrderError));
}

#[test]
fn scene_exports_agree_on_geometry() {
    let room = box_room();
    let ap = front_window();
    let open = build_scene(&room, &[ap], &mats(0.5, 0.8, 0.2, WindowMaterial::Open)).unwrap();
    let glazed = build_scene(
        &room,
        &[ap],
        &mats(0.5, 0.8, 0.2, WindowMaterial::Glazing { transmittance: 0.7 }),
    )
    .unwrap();

    // Wall area lost to the window equals the window area.
    let wall_area = 2.0 * (4.0 + 6.0) * 3.0;
    assert!((open.area_with_prefix("wall") + ap.area() - wall_area).abs() < 1e-9);
    assert!((open.area_with_prefix("window") - ap.area()).abs() < 1e-9);

    let rad_open = export_rad(&open);
    let rad_glass = export_rad(&glazed);
    assert!(!rad_open.contains(" polygon window"));
    assert!(rad_glass.contains("void glass"));
    assert!(rad_glass.contains(" polygon window0"));
    // Radiance is z-up: the ceiling's height appears as the third coordinate.
    let ceiling = rad_open.lines().find(|l| l.contains(" polygon ceiling")).unwrap();
    let nums: Vec<f64> = ceiling.split_whitespace().skip(6).map(|t| t.parse().unwrap()).collect();
    assert_eq!(nums.len(), 12);
    assert!(nums.chunks(3).all(|p| (p[2] - 3.0).abs() < 1e-12));

    let obj = export_obj(&open, false);
    let obj_tri = export_obj(&open, true);
    let count = |s: &str, p: &str| s.lines().filter(|l| l.starts_with(p)).count();
    assert_eq!(count(&obj, "v "), count(&obj_tri, "v "));
    // Welding: box corners, the window outline, and where the wall strips
    // beside the window meet the floor and ceiling.
    assert_eq!(count(&obj, "v "), 8 + 4 + 4);
    assert!(count(&obj_tri, "f ") > count(&obj, "f "));
    assert!(obj_tri
        .lines()
        .filter(|l| l.starts_with("f "))
        .all(|l| l.split_whitespace().count() == 4));
    assert!(!obj.contains("g window"));
}

#[test]
fn reveals_add_wall_material_around_each_aperture() {
    let room = box_room();
    let ap = front_window();
    let mut scene = build_scene(&room, &[ap], &mats(0.5, 0.8, 0.2, WindowMaterial::Open)).unwrap();
    let before = scene.surfaces.len();
    add_window_reveals(&mut scene, &room, &[ap], 0.3).unwrap();
    assert_eq!(scene.surfaces.len(), before + 4);
    scene.validate().unwrap();
    let perimeter = 2.0 * ((ap.s1 - ap.s0) + (ap.t1 - ap.t0));
    let added: f64 = scene.surfaces[before..].iter().map(|s| polygon_area(&s.polygon)).sum();
    assert!((added - 0.3 * perimeter).abs() < 1e-9);
    assert!(add_window_reveals(&mut scene, &room, &[ap], -0.1).is_err());
}

fn polygon_area(p: &[panolight::geom::Vec3]) -> f64 {
    let mut n = panolight::geom::Vec3::ZERO;
    for i in 0..p.len() {
        n += p[i].cross(p[(i + 1) % p.len()]);
    }
    n.norm() / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn star_rooms_round_trip(
        radii in prop::collection::vec(1.5f64..6.0, 4..9),
        jitter in prop::collection::vec(-1.0f64..1.0, 9),
        ceiling in 2.4f64..4.0,
        camera in 1.0f64..2.0,
        wall_pick in 0usize..8,
        s in (0.1f64..0.4, 0.6f64..0.9),
        t in (0.1f64..0.4, 0.6f64..0.95),
    ) {
        prop_assume!(camera < ceiling - 0.2);
        let room = star_room(&radii, &jitter, ceiling, camera);
        let wall_index = wall_pick % room.floor.len();
        let len = room.walls()[wall_index].length;
        let ap = WindowAperture {
            wall_index,
            s0: s.0 * len,
            s1: s.1 * len,
            t0: t.0 * ceiling,
            t1: t.1 * ceiling,
        };
        let corners = synthesize_corners(&room, DIMS, &[ap]).unwrap();
        let parsed = parse_corner_json(&corners.to_json()).unwrap();
        let back = reconstruct_room(&parsed, camera).unwrap();
        for (p, q) in back.floor.iter().zip(&room.floor) {
            prop_assert!((p[0] - q[0]).abs() < 1e-6 && (p[1] - q[1]).abs() < 1e-6);
        }
        prop_assert!((back.ceiling_height - ceiling).abs() < 1e-6);
        let w = &parsed.windows[0];
        let got = project_window(&w.quad, w.wall, &back, DIMS).unwrap();
        prop_assert!((got.s0 - ap.s0).abs() < 1e-6 && (got.s1 - ap.s1).abs() < 1e-6);
        prop_assert!((got.t0 - ap.t0).abs() < 1e-6 && (got.t1 - ap.t1).abs() < 1e-6);
    }
}
