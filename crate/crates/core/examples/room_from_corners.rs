//! Rebuild a room from panorama corner annotations, locate its window and
//! export the scene to Radiance and OBJ.

use std::fs;

use panolight::layout::{
    add_window_reveals, build_scene, export_obj, export_rad, parse_corner_json, project_window, reconstruct_room,
    synthesize_corners, ImageDims, MaterialSet, RoomLayout, WindowAperture, WindowMaterial,
};

fn main() {
    let out = std::env::temp_dir().join("panolight-examples");
    fs::create_dir_all(&out).unwrap();

    // Annotations as a layout estimator would produce them for a 5 × 4 m office.
    let truth = RoomLayout::new(vec![[-2.0, -1.5], [3.0, -1.5], [3.0, 2.5], [-2.0, 2.5]], 2.8, 1.5).unwrap();
    let window = WindowAperture {
        wall_index: 2,
        s0: 1.0,
        t0: 0.8,
        s1: 4.0,
        t1: 2.3,
    };
    let dims = ImageDims {
        width: 2048,
        height: 1024,
    };
    let json = synthesize_corners(&truth, dims, &[window]).unwrap().to_json();

    let corners = parse_corner_json(&json).unwrap();
    let room = reconstruct_room(&corners, corners.camera_height_m).unwrap();
    println!(
        "floor area {:.2} m², ceiling {:.2} m",
        room.floor_area(),
        room.ceiling_height
    );
    let apertures: Vec<WindowAperture> = corners
        .windows
        .iter()
        .map(|w| project_window(&w.quad, w.wall, &room, dims).unwrap())
        .collect();
    for a in &apertures {
        println!(
            "window on wall {}: s {:.2}..{:.2}, t {:.2}..{:.2} ({:.2} m²)",
            a.wall_index,
            a.s0,
            a.s1,
            a.t0,
            a.t1,
            a.area()
        );
    }

    let mats = MaterialSet {
        window: WindowMaterial::Glazing { transmittance: 0.7 },
        ..MaterialSet::default()
    };
    let mut scene = build_scene(&room, &apertures, &mats).unwrap();
    add_window_reveals(&mut scene, &room, &apertures, 0.2).unwrap();
    println!("{} surfaces", scene.surfaces.len());
    fs::write(out.join("office.rad"), export_rad(&scene)).unwrap();
    fs::write(out.join("office.obj"), export_obj(&scene, true)).unwrap();
    println!("{}", out.join("office.rad").display());
}
