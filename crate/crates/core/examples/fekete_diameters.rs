//! Approximate Fekete points and the s-th order diameters on [-1, 1],
//! side by side with the Gram-determinant roots of optimal designs. Both
//! tend to the transfinite diameter 1/2.

use optdesign::fekete::tfd_csv;
use optdesign::{approx_fekete, tfd_table, DesignSpace, FeketeOptions, SolverOptions, WeightFunction};

fn main() -> optdesign::Result<()> {
    let space = DesignSpace::interval(1.0, 401)?;
    let unit = WeightFunction::unit();
    let f = approx_fekete(&space, &unit, 5, &FeketeOptions::default())?;
    println!("Fekete points for s = 5 ({}):", f.method);
    for p in &f.points {
        println!("    {:+.5}", p.coord(0).re);
    }
    let rows = tfd_table(
        &space,
        &unit,
        &[1, 2, 3, 4, 8, 16],
        &FeketeOptions::default(),
        &SolverOptions::default(),
    )?;
    print!("{}", tfd_csv(&rows).render());

    let square = DesignSpace::cube(2, 1.0, 31)?;
    let f2 = approx_fekete(&square, &unit, 6, &FeketeOptions::default())?;
    println!("square, s = 6: delta_s = {:.6} from {} points", f2.delta_s, f2.points.len());
    Ok(())
}
