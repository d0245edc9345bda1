//! Calibrate an HDR image against a spot-meter reading and render it in
//! false color with a legend.

use std::fs;

use panolight::hdr_io::{write_raster_png, HdrImage};
use panolight::photometry::{compute_k, false_color, to_luminance_map, ColorScale, FalseColorScale, PixelRect};
use panolight::projection::Projection;

fn main() {
    let out = std::env::temp_dir().join("panolight-examples");
    fs::create_dir_all(&out).unwrap();

    let img = HdrImage::from_fn(400, 200, Projection::Equirectangular, |x, y| {
        let window = (150..250).contains(&x) && (50..120).contains(&y);
        let v = if window { 40.0 } else { 0.5 + 0.5 * (x as f32 / 400.0) };
        [v, v, v * 0.9]
    })
    .unwrap();

    // A meter aimed at the window read 6000 cd/m².
    let region = PixelRect {
        x0: 170,
        y0: 60,
        x1: 230,
        y1: 110,
    };
    let k = compute_k(6000.0, region, &img).unwrap();
    let lum = to_luminance_map(&img, k);
    let max = lum.values().iter().copied().fold(0.0, f64::max);
    println!("k = {:.3}, peak luminance {:.0} cd/m²", k.value(), max);

    for (name, scale) in [("linear", ColorScale::Linear), ("log", ColorScale::Log)] {
        let lo = if name == "log" { 10.0 } else { 0.0 };
        let fc = false_color(&lum, &FalseColorScale::new(lo, 8000.0, scale).unwrap());
        let path = out.join(format!("falsecolor_{name}.png"));
        write_raster_png(&fc.composite(), &path).unwrap();
        println!("{}", path.display());
    }
}
