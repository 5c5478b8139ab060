//! Densities, distribution functions and moments of the closed-form
//! equilibrium measures.

use optdesign::{EquilibriumMeasure, MultiIndex, Point};

fn main() -> optdesign::Result<()> {
    let arc = EquilibriumMeasure::arcsine(1.0)?;
    println!("arcsine on [-1, 1]");
    for x in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        println!(
            "    x = {x:+.1}  density = {:.6}  cdf = {:.6}",
            arc.density(&Point::real1(x))?,
            arc.cdf(x)?
        );
    }
    for k in [2, 4, 6] {
        println!("    moment x^{k} = {:.6}", arc.moment(&MultiIndex(vec![k]))?);
    }

    let cube = EquilibriumMeasure::cube(2, 1.0)?;
    let ball = EquilibriumMeasure::ball(2, 1.0)?;
    let simplex = EquilibriumMeasure::simplex(2, 1.0)?;
    let disk = EquilibriumMeasure::weighted_complex_ball(1)?;
    for m in [&cube, &ball, &simplex] {
        println!(
            "{}: C_d = {:.6}, int x^2 = {:.6}, int x^2 y^2 = {:.6}",
            m.describe(),
            m.normalization(),
            m.moment(&MultiIndex(vec![2, 0]))?,
            m.moment(&MultiIndex(vec![2, 2]))?
        );
    }
    let one = MultiIndex(vec![1]);
    println!(
        "{}: C_d = {:.6}, int |z|^2 = {:.6}",
        disk.describe(),
        disk.normalization(),
        disk.mixed_moment(&one, &one)?
    );
    Ok(())
}
