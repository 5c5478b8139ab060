//! Kiefer–Wolfowitz certificate: an optimal design has max K = n on the
//! grid, while any other design has a larger G-value and a positive
//! directional derivative toward the optimum.

use optdesign::optimal::kw_directional_derivative;
use optdesign::{certify, d_optimal, uniform_design, DesignSpace, PolyBasis, SolverOptions, WeightFunction};

fn main() -> optdesign::Result<()> {
    let s = 4;
    let space = DesignSpace::cube(2, 1.0, 21)?;
    let unit = WeightFunction::unit();
    let opt = d_optimal(&space, &unit, s, &SolverOptions::default())?;
    let cert = certify(&opt.design, &unit, s, &space)?;
    println!("optimal on the square, s = {s}, n = {}", cert.n);
    println!("  atoms          {}", opt.design.len());
    println!("  G-value        {:.6}", cert.g_value);
    println!("  kw gap         {:.3e}", cert.kw_gap);
    println!("  mass residual  {:.3e}", cert.mass_residual);
    println!("  K on support   [{:.5}, {:.5}]", cert.min_support_k, cert.max_support_k);

    let uniform = uniform_design(space.grid().to_vec())?;
    let ucert = certify(&uniform, &unit, s, &space)?;
    println!("uniform design on the grid");
    println!("  G-value        {:.6}", ucert.g_value);
    println!("  log det gap    {:.6}", opt.log_det - ucert.log_det);
    let basis = PolyBasis::stabilized_for(2, s, space.grid())?;
    let h = kw_directional_derivative(&uniform, &opt.design, &unit, s, &basis)?;
    println!("  h'(0) toward the optimum = {h:.6} (positive: uniform is not optimal)");
    Ok(())
}
