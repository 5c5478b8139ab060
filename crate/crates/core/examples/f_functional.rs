//! The functional f_s(t) = -(1/2m_s) log det M_s for the tilted weight
//! w exp(-t u): its slope at 0 is ((d+1)/d) int u dmu_s for an optimal mu_s,
//! and it is concave in t.

use optdesign::asymptotics::{first_derivative_pair, t_grid, DERIVATIVE_STEP};
use optdesign::{concavity_probe, d_optimal, f_of_t, scalar_field, DesignSpace, SolverOptions, WeightFunction};

fn main() -> optdesign::Result<()> {
    let space = DesignSpace::interval(1.0, 201)?;
    let unit = WeightFunction::unit();
    let fields = [
        ("u = 1", scalar_field(|_| 1.0)),
        ("u = x", scalar_field(|p| p.coord(0).re)),
        ("u = x^2", scalar_field(|p| p.coord(0).re.powi(2))),
        ("u = cos 3x", scalar_field(|p| (3.0 * p.coord(0).re).cos())),
    ];
    for s in 1..=3 {
        let mu = d_optimal(&space, &unit, s, &SolverOptions::with_epsilon(1e-9))?.design;
        println!("s = {s}: f_s(0) = {:.8}", f_of_t(&space, &unit, s, &fields[0].1, 0.0, &mu)?);
        for (name, u) in &fields {
            let (fd, want) = first_derivative_pair(&space, &unit, s, u, &mu, DERIVATIVE_STEP)?;
            let conc = concavity_probe(&space, &unit, s, u, &mu, &t_grid(-1.0, 1.0, 20))?;
            println!("    {name:<10} f'(0) = {fd:+.8}  predicted = {want:+.8}  max second difference = {conc:+.2e}");
        }
    }
    Ok(())
}
