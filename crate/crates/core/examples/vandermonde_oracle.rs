//! det M and K(z) written as averages of squared Vandermonde determinants,
//! evaluated by brute force and compared with the matrix computations.

use optdesign::{
    christoffel, make_design, moment_matrix, orthonormal_factor, vdm_integral_christoffel, vdm_integral_det, PolyBasis,
    Point, WeightFunction,
};

fn main() -> optdesign::Result<()> {
    let w = WeightFunction::custom("exp(-x)", |p: &Point| (-p.coord(0).re).exp());
    let pts: Vec<Point> = [-0.9, -0.2, 0.1, 0.6, 0.95].into_iter().map(Point::real1).collect();
    let design = make_design(pts, vec![0.1, 0.3, 0.2, 0.25, 0.15])?;
    for s in 1..=3 {
        let basis = PolyBasis::monomial(1, s)?;
        let m = moment_matrix(&design, &w, s, &basis)?;
        let brute = vdm_integral_det(&design, &w, s)?;
        println!("s = {s}: det M = {:.12e}  brute force = {brute:.12e}", m.det());
        let ev = orthonormal_factor(&m)?;
        for x in [-1.0, 0.0, 0.7] {
            let z = Point::real1(x);
            println!(
                "    K({x:+.1}) = {:.10}  brute force = {:.10}",
                christoffel(&ev, &z)?,
                vdm_integral_christoffel(&design, &w, s, &z)?
            );
        }
    }
    Ok(())
}
