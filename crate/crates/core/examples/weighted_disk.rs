//! Optimal designs on the unit disk for the weight exp(-|z|^2).
//!
//! As s grows the designs spread over the disk of radius 1/sqrt 2, where
//! the weighted extremal function equals |z|^2.

use num_complex::Complex64;
use optdesign::{d_optimal, weighted_ball_green, DesignSpace, Point, SolverOptions, WeightFunction};

fn main() -> optdesign::Result<()> {
    let space = DesignSpace::complex_disk(1.0, 40, 48)?;
    let w = WeightFunction::gaussian();
    for s in [1, 2, 4, 8] {
        let r = d_optimal(&space, &w, s, &SolverOptions::default())?;
        let m2 = r.design.integrate(|p| p.norm_sqr());
        let m4 = r.design.integrate(|p| p.norm_sqr().powi(2));
        let outer = r.design.iter().map(|(p, _)| p.norm()).fold(0.0, f64::max);
        println!(
            "s = {s}: int |z|^2 = {m2:.6}  int |z|^4 = {m4:.6}  outermost atom |z| = {outer:.4}  kw gap = {:.2e}",
            r.kw_gap
        );
    }
    println!("uniform law on |z| <= 1/sqrt 2: int |z|^2 = 0.25, int |z|^4 = {:.6}", 1.0 / 12.0);
    for r in [0.0, 0.5, 0.75, 1.0] {
        let v = weighted_ball_green(&Point::complex1(Complex64::new(r, 0.0)));
        println!("V(|z| = {r}) = {v:.6}");
    }
    Ok(())
}
