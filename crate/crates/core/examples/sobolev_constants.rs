//! The best Sobolev constant by its closed form and through the sphere area,
//! with the single-equation energy level it fixes.

use critsep::geometry::{sobolev_constant, sobolev_constant_via_sphere, sobolev_level, sphere_area};

fn main() -> critsep::Result<()> {
    println!("{:>2} {:>18} {:>18} {:>10} {:>14}", "N", "S", "S via |S^N|", "rel diff", "S^(N/2)/N");
    for dim in 3..=8 {
        let s = sobolev_constant(dim)?;
        let t = sobolev_constant_via_sphere(dim)?;
        println!(
            "{dim:>2} {s:>18.12} {t:>18.12} {:>10.1e} {:>14.8}",
            (s - t).abs() / s,
            sobolev_level(dim)? / dim as f64
        );
    }
    println!("|S^4| = {:.12} (8 pi^2 / 3 = {:.12})", sphere_area(4)?, 8.0 * std::f64::consts::PI.powi(2) / 3.0);
    Ok(())
}
