//! Encode a synthetic sky gradient as Radiance RGBE, read it back and
//! report the worst relative error.

use panolight::hdr_io::{decode_rgbe, encode_rgbe, read_hdr, write_hdr, HdrImage};
use panolight::projection::Projection;

fn main() {
    let img = HdrImage::from_fn(256, 128, Projection::Equirectangular, |x, y| {
        let l = 10f32.powf(4.0 * (1.0 - y as f32 / 127.0)) * (1.0 + x as f32 / 256.0);
        [0.9 * l, l, 1.2 * l]
    })
    .expect("valid dimensions");

    let bytes = write_hdr(&img);
    let back = read_hdr(&bytes).expect("own output parses");
    let mut worst = 0f32;
    for (a, b) in img.pixels().iter().zip(back.pixels()) {
        let peak = a.iter().copied().fold(0.0, f32::max);
        for c in 0..3 {
            worst = worst.max((a[c] - b[c]).abs() / peak);
        }
    }
    println!("{} x {} image, {} bytes", back.width(), back.height(), bytes.len());
    println!("projection: {}", back.projection().as_str());
    println!("max error relative to the brightest channel: {worst:.3e}");

    let q = encode_rgbe([1.0, 0.5, 0.25]);
    println!("(1.0, 0.5, 0.25) -> {q:?} -> {:?}", decode_rgbe(q));
}
