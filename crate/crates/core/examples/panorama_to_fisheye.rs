//! Cut eight 180° fisheye views out of a synthetic equirectangular panorama.

use std::fs;

use panolight::hdr_io::{write_hdr_file, HdrImage};
use panolight::projection::{extract_fisheye, fisheye_mask, pixel_to_dir, sph_to_cart, Projection};

fn main() {
    let out = std::env::temp_dir().join("panolight-examples");
    fs::create_dir_all(&out).unwrap();

    // Bright band above the horizon, dim floor, one hot spot due east.
    let (w, h) = (512, 256);
    let pano = HdrImage::from_fn(w, h, Projection::Equirectangular, |x, y| {
        let d = sph_to_cart(pixel_to_dir(x, y, w, h).unwrap()).vec();
        let l = if d.x > 0.97 {
            5000.0
        } else if d.y > 0.0 {
            200.0 + 300.0 * d.y
        } else {
            30.0
        };
        [l as f32; 3]
    })
    .unwrap();

    let size = 128;
    let inside = fisheye_mask(size).iter().filter(|&&m| m).count();
    for k in 0..8 {
        let az = 45.0 * k as f64;
        let view = extract_fisheye(&pano, az.to_radians(), size).unwrap();
        let peak = view.pixels().iter().map(|p| p[1]).fold(0.0, f32::max);
        let path = out.join(format!("view_{:03}.hdr", az as i64));
        write_hdr_file(&view, &path).unwrap();
        println!("{:>5.1}°  peak {:>7.1}  {}", az, peak, path.display());
    }
    println!("{inside} of {} pixels lie inside the image circle", size * size);
}
