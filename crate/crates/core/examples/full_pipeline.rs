//! End to end: corner annotations -> room -> scene -> weather -> render ->
//! calibrated luminance -> glare, with every intermediate written to disk.

use std::fs;

use panolight::glare::{evaluate_glare, SourcePolicy};
use panolight::hdr_io::{read_hdr_file, write_hdr_file, write_raster_png};
use panolight::layout::{
    build_scene, parse_corner_json, project_window, reconstruct_room, synthesize_corners, ImageDims, MaterialSet,
    RoomLayout, WindowAperture,
};
use panolight::photometry::{false_color, to_luminance_map, CalibrationFactor, ColorScale, FalseColorScale};
use panolight::projection::extract_fisheye;
use panolight::renderer::{render_panorama, RenderParams, Viewpoint};
use panolight::skymodel::{parse_epw, pittsburgh, sky_for_time, synthetic_clear_year, SkyChoice};

fn main() {
    let out = std::env::temp_dir().join("panolight-examples").join("pipeline");
    fs::create_dir_all(&out).unwrap();
    let dims = ImageDims {
        width: 1024,
        height: 512,
    };

    let truth = RoomLayout::new(vec![[-1.8, -2.2], [2.6, -2.2], [2.6, 3.1], [-1.8, 3.1]], 2.9, 1.6).unwrap();
    let ap = WindowAperture {
        wall_index: 1,
        s0: 1.2,
        t0: 0.9,
        s1: 4.0,
        t1: 2.2,
    };
    fs::write(
        out.join("corners.json"),
        synthesize_corners(&truth, dims, &[ap]).unwrap().to_json(),
    )
    .unwrap();
    fs::write(
        out.join("weather.epw"),
        synthetic_clear_year(pittsburgh()).to_epw_string(),
    )
    .unwrap();

    let corners = parse_corner_json(&fs::read_to_string(out.join("corners.json")).unwrap()).unwrap();
    let room = reconstruct_room(&corners, corners.camera_height_m).unwrap();
    let apertures: Vec<_> = corners
        .windows
        .iter()
        .map(|w| project_window(&w.quad, w.wall, &room, dims).unwrap())
        .collect();
    let mut scene = build_scene(&room, &apertures, &MaterialSet::default()).unwrap();
    scene.heading_deg = 90.0;
    fs::write(out.join("scene.json"), serde_json::to_string_pretty(&scene).unwrap()).unwrap();

    let epw = parse_epw(&fs::read_to_string(out.join("weather.epw")).unwrap()).unwrap();
    let sky = sky_for_time(&epw, 9, 21, 15.5, SkyChoice::Auto).unwrap();
    let params = RenderParams {
        samples_per_pixel: 24,
        seed: 1,
        ..RenderParams::default()
    };
    let vp = Viewpoint {
        position: room.camera(),
        view_azimuth: 0.0,
    };
    let pano = render_panorama(&scene, &sky, &vp, 128, &params).unwrap();
    write_hdr_file(&pano.to_hdr_image(), out.join("render.hdr")).unwrap();

    // Treat the render like a captured photograph from here on.
    let img = read_hdr_file(out.join("render.hdr")).unwrap();
    let lum = to_luminance_map(&img, CalibrationFactor::IDENTITY);
    let fc = false_color(&lum, &FalseColorScale::new(1.0, 20_000.0, ColorScale::Log).unwrap());
    write_raster_png(&fc.composite(), out.join("render_fc.png")).unwrap();

    for az in [0.0f64, 90.0, 180.0, 270.0] {
        let view = extract_fisheye(&lum, az.to_radians(), 128).unwrap();
        let g = evaluate_glare(&view, SourcePolicy::default()).unwrap();
        println!("view {az:>5.1}°: Ev {:>7.0} lux  DGP {:.3}  {}", g.ev, g.dgp, g.level);
    }
    println!("outputs in {}", out.display());
}
