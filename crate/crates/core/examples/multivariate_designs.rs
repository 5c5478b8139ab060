//! D-optimal designs on the square, the disk-shaped real ball and the
//! triangle, with a Gaussian weight for comparison.

use optdesign::{d_optimal, DesignSpace, SolverOptions, WeightFunction};

fn main() -> optdesign::Result<()> {
    let spaces = [
        ("square", DesignSpace::cube(2, 1.0, 21)?),
        ("ball", DesignSpace::ball(2, 1.0, 12, 24)?),
        ("triangle", DesignSpace::simplex(2, 1.0, 21)?),
    ];
    for (name, space) in &spaces {
        for (wname, w) in [("unit", WeightFunction::unit()), ("gaussian", WeightFunction::gaussian())] {
            let r = d_optimal(space, &w, 3, &SolverOptions::default())?;
            println!(
                "{name:<8} {wname:<8} grid {:>4}: {:>3} atoms, log det = {:+.6}, kw gap = {:.2e}",
                space.grid().len(),
                r.design.len(),
                r.log_det,
                r.kw_gap
            );
        }
    }
    Ok(())
}
