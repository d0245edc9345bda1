//! Glare evaluation for one view, then an annual sweep over sixteen view
//! directions at a coarse resolution.

use std::fs;

use panolight::glare::{dgp_sweep, evaluate_glare, sweep_to_csv, GlareLevel, MonthDay, SourcePolicy, SweepConfig};
use panolight::layout::{build_scene, MaterialSet, RoomLayout, WindowAperture};
use panolight::renderer::{render_fisheye, RenderParams, Viewpoint};
use panolight::skymodel::{pittsburgh, sky_for_time, synthetic_clear_year, SkyChoice};

fn main() {
    let out = std::env::temp_dir().join("panolight-examples");
    fs::create_dir_all(&out).unwrap();

    let room = RoomLayout::new(vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 3.0], [-2.0, 3.0]], 3.0, 1.2).unwrap();
    let windows = [WindowAperture {
        wall_index: 2,
        s0: 0.5,
        t0: 0.8,
        s1: 3.5,
        t1: 2.6,
    }];
    let mut scene = build_scene(&room, &windows, &MaterialSet::default()).unwrap();
    scene.heading_deg = 180.0;
    let epw = synthetic_clear_year(pittsburgh());
    let position = room.camera();

    let sky = sky_for_time(&epw, 12, 21, 12.5, SkyChoice::Auto).unwrap();
    let params = RenderParams {
        samples_per_pixel: 16,
        ..RenderParams::default()
    };
    let view = render_fisheye(
        &scene,
        &sky,
        &Viewpoint {
            position,
            view_azimuth: 0.0,
        },
        96,
        &params,
    )
    .unwrap();
    let g = evaluate_glare(&view, SourcePolicy::default()).unwrap();
    println!(
        "12-21 12:30 facing the window: DGP {:.3} ({}), Ev {:.0} lux, {} sources",
        g.dgp,
        g.level,
        g.ev,
        g.sources.len()
    );

    let cfg = SweepConfig {
        dates: vec!["03-21".parse::<MonthDay>().unwrap(), "12-21".parse().unwrap()],
        fisheye_size: 32,
        params: RenderParams {
            samples_per_pixel: 4,
            max_bounces: 2,
            ..RenderParams::default()
        },
        ..SweepConfig::default()
    };
    let rows = dgp_sweep(&scene, &epw, position, &cfg).unwrap();
    let worst = rows.iter().max_by(|a, b| a.dgp.total_cmp(&b.dgp)).unwrap();
    let glary = rows.iter().filter(|r| r.level >= GlareLevel::Perceptible).count();
    println!("{} rows, {} at perceptible glare or worse", rows.len(), glary);
    println!(
        "worst: {} {:.1} h view {} ({:.1}°) DGP {:.3}",
        worst.date, worst.hour, worst.view, worst.azimuth_deg, worst.dgp
    );
    let path = out.join("sweep.csv");
    fs::write(&path, sweep_to_csv(&rows)).unwrap();
    println!("{}", path.display());
}
