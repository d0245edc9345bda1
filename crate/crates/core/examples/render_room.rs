//! Path-trace a panorama and a fisheye view of a daylit room.

use std::fs;

use panolight::glare::vertical_illuminance;
use panolight::hdr_io::write_hdr_file;
use panolight::layout::{build_scene, MaterialSet, RoomLayout, WindowAperture, WindowMaterial};
use panolight::renderer::{direct_horizontal_illuminance, render_fisheye, render_panorama, RenderParams, Viewpoint};
use panolight::skymodel::{pittsburgh, sky_for_time, synthetic_clear_year, SkyChoice};

fn main() {
    let out = std::env::temp_dir().join("panolight-examples");
    fs::create_dir_all(&out).unwrap();

    let room = RoomLayout::new(vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 3.0], [-2.0, 3.0]], 3.0, 1.5).unwrap();
    let windows = [WindowAperture {
        wall_index: 2,
        s0: 0.8,
        t0: 0.9,
        s1: 3.2,
        t1: 2.4,
    }];
    let mats = MaterialSet {
        window: WindowMaterial::Glazing { transmittance: 0.75 },
        ..MaterialSet::default()
    };
    let mut scene = build_scene(&room, &windows, &mats).unwrap();
    // The window wall faces south, so the afternoon sun reaches the floor.
    scene.heading_deg = 180.0;

    let epw = synthetic_clear_year(pittsburgh());
    let sky = sky_for_time(&epw, 3, 21, 14.5, SkyChoice::Auto).unwrap();
    let params = RenderParams {
        samples_per_pixel: 32,
        ..RenderParams::default()
    };
    let eye = room.camera();

    let t = std::time::Instant::now();
    let pano = render_panorama(
        &scene,
        &sky,
        &Viewpoint {
            position: eye,
            view_azimuth: 0.0,
        },
        128,
        &params,
    )
    .unwrap();
    write_hdr_file(&pano.to_hdr_image(), out.join("room_pano.hdr")).unwrap();
    let view = Viewpoint {
        position: eye,
        view_azimuth: 0.0,
    };
    let fish = render_fisheye(&scene, &sky, &view, 128, &params).unwrap();
    write_hdr_file(&fish.to_hdr_image(), out.join("room_fisheye.hdr")).unwrap();
    println!("rendered in {:.2} s", t.elapsed().as_secs_f64());

    println!(
        "vertical illuminance toward the window: {:.0} lux",
        vertical_illuminance(&fish).unwrap()
    );
    let desk = eye - panolight::geom::Vec3::new(0.0, 0.75, 0.0);
    let e = direct_horizontal_illuminance(&scene, &sky, desk).unwrap();
    println!("direct sky component on the desk: {e:.0} lux");
    println!("{}", out.display());
}
