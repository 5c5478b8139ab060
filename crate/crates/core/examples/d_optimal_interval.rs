//! D-optimal designs on [-1, 1] for degrees 1 to 6.
//!
//! The optimal atoms are the zeros of (1 - x^2) P_s'(x), each with weight
//! 1/(s+1).

use optdesign::{d_optimal, DesignSpace, SolverOptions, WeightFunction};

fn main() -> optdesign::Result<()> {
    let space = DesignSpace::interval(1.0, 401)?;
    let unit = WeightFunction::unit();
    let opts = SolverOptions {
        merge_radius: 0.01,
        ..SolverOptions::with_epsilon(1e-6)
    };
    for s in 1..=6 {
        let r = d_optimal(&space, &unit, s, &opts)?;
        println!(
            "s = {s}: log det M = {:+.8}, G = {:.6} (n = {}), {} iterations",
            r.log_det, r.g_value, r.n, r.iterations
        );
        for (p, w) in r.design.iter() {
            println!("    x = {:+.5}  weight = {:.5}", p.coord(0).re, w);
        }
    }
    Ok(())
}
