//! Compare two luminance maps pixel by pixel and write a diverging error image.

use std::fs;

use panolight::hdr_io::write_raster_png;
use panolight::photometry::{error_map, LuminanceMap};
use panolight::projection::Projection;

fn main() {
    let out = std::env::temp_dir().join("panolight-examples");
    fs::create_dir_all(&out).unwrap();

    let (w, h) = (256, 128);
    let reference: Vec<f64> = (0..w * h).map(|k| 100.0 + (k % w) as f64 * 4.0).collect();
    // A simulation that overshoots the left half and undershoots the right.
    let simulated: Vec<f64> = reference
        .iter()
        .enumerate()
        .map(|(k, v)| if k % w < w / 2 { v * 1.2 } else { v * 0.9 })
        .collect();
    let a = LuminanceMap::new(w, h, reference, Projection::Equirectangular).unwrap();
    let b = LuminanceMap::new(w, h, simulated, Projection::Equirectangular).unwrap();

    let em = error_map(&a, &b, 300.0).unwrap();
    let s = em.stats;
    println!(
        "pixels {}  MAE {:.2}  RMSE {:.2}  bias {:+.2} cd/m²",
        s.n_pixels, s.mae, s.rmse, s.bias
    );
    let path = out.join("errmap.png");
    write_raster_png(&em.render(), &path).unwrap();
    println!("{}", path.display());
}
