//! Optimal designs on [-1, 1] approach the arcsine law as the degree grows.

use optdesign::{convergence_sweep, DesignSpace, EquilibriumMeasure, SolverOptions, WeightFunction};

fn main() -> optdesign::Result<()> {
    let space = DesignSpace::interval(1.0, 401)?;
    let target = EquilibriumMeasure::arcsine(1.0)?;
    let report = convergence_sweep(
        &space,
        &WeightFunction::unit(),
        &[2, 4, 8, 16, 24],
        &target,
        6,
        &SolverOptions::default(),
    )?;
    println!(" s   KS distance   moment distance   |int x^2 - 1/2|");
    for r in &report.rows {
        println!(
            "{:>2}   {:.6}      {:.6}          {:.6}",
            r.s,
            r.ks_distance.unwrap_or(f64::NAN),
            r.moment_distance,
            r.second_moment_error
        );
    }
    Ok(())
}
