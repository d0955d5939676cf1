//! The two-variable fiber function `e(s, t)`: an inward-pointing box and the
//! complete list of critical points, for a fixed and a few random instances.

use critsep::scalar::{plane_box, plane_coeffs, plane_critical_points, verify_box, BOX_EDGE_POINTS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(a1: f64, a2: f64, d: f64) -> critsep::Result<()> {
    let c = plane_coeffs(a1, a2, d, 4.0, 2.0, 2.0)?;
    let bx = plane_box(&c)?;
    let rep = plane_critical_points(&c)?;
    println!(
        "a = ({a1:.3}, {a2:.3}), d = {d:.3}: box [{}, {}] valid {}, {} critical point(s), unique at (1,1): {}",
        bx.r,
        bx.big_r,
        verify_box(&c, &bx, BOX_EDGE_POINTS),
        rep.points.len(),
        rep.uniqueness_holds()
    );
    Ok(())
}

fn main() -> critsep::Result<()> {
    report(1.0, 1.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..4 {
        report(rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0), rng.gen_range(0.01..3.0))?;
    }
    Ok(())
}
