//! Sun positions and sky luminance over a summer day from a synthetic
//! clear-sky weather year.

use std::f64::consts::FRAC_PI_2;

use panolight::projection::SphericalDir;
use panolight::skymodel::{
    pittsburgh, sky_for_time, sky_horizontal_illuminance, sky_luminance, solar_noon, solar_position,
    synthetic_clear_year, SkyChoice,
};

fn main() {
    let loc = pittsburgh();
    let epw = synthetic_clear_year(loc.clone());
    let noon = solar_noon(loc.longitude, loc.timezone, 6, 21).unwrap();
    println!("{}: solar noon on 06-21 at {:.2} h standard time", loc.city, noon);

    println!(" hour  alt°   az°   sky  zenith cd/m²  E_h lux  sun cd/m²");
    for hour in [6.5, 8.5, 10.5, 12.5, 14.5, 16.5, 18.5] {
        let sun = solar_position(loc.latitude, loc.longitude, loc.timezone, 6, 21, hour).unwrap();
        let sky = sky_for_time(&epw, 6, 21, hour, SkyChoice::Auto).unwrap();
        println!(
            "{hour:>5.1} {:>5.1} {:>5.1} {:>5?} {:>13.0} {:>8.0} {:>10.3e}",
            sun.altitude.to_degrees(),
            sun.azimuth.to_degrees(),
            sky.condition,
            sky.zenith_luminance,
            sky_horizontal_illuminance(&sky, 1.0),
            sky.sun_luminance,
        );
    }

    let sky = sky_for_time(&epw, 6, 21, 12.5, SkyChoice::Overcast).unwrap();
    let zenith = sky_luminance(&sky, SphericalDir::new(0.0, FRAC_PI_2));
    let horizon = sky_luminance(&sky, SphericalDir::new(0.0, 0.0));
    println!("overcast zenith/horizon ratio {:.2}", zenith / horizon);
}
