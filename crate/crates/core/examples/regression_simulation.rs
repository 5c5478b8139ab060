//! Least-squares regression on the D-optimal design: the estimator
//! covariance matches sigma^2 (V*V)^{-1} and the prediction variance at z is
//! (sigma^2/m) K(z), which peaks at n on the support.

use optdesign::{
    confidence_volume_proxy, d_optimal, simulate_regression, uniform_design, variance_identity_check, DesignSpace, Point,
    RegressionExperiment, SolverOptions, WeightFunction,
};

fn main() -> optdesign::Result<()> {
    let s = 2;
    let space = DesignSpace::interval(1.0, 201)?;
    let opt = d_optimal(
        &space,
        &WeightFunction::unit(),
        s,
        &SolverOptions {
            merge_radius: 0.02,
            ..SolverOptions::with_epsilon(1e-7)
        },
    )?;
    let exp = RegressionExperiment::real(opt.design.clone(), s, &[0.5, -1.0, 2.0], 0.1, 90, 20_000, 11);
    let stats = simulate_regression(&exp)?;
    println!("observation counts {:?}", stats.observation_counts);
    println!("mean theta_hat {:?}", stats.mean_theta.iter().map(|c| c.re).collect::<Vec<_>>());
    println!("covariance relative error {:.4}", stats.cov_relative_error);

    let pts: Vec<Point> = [-1.0, -0.5, 0.0, 0.3, 1.0].into_iter().map(Point::real1).collect();
    let check = variance_identity_check(&exp, &pts)?;
    for r in &check.rows {
        println!(
            "    z = {:+.2}: empirical {:.3e}  theory {:.3e}  ratio {:.4}",
            r.point[0][0], r.empirical_variance, r.theoretical_variance, r.ratio
        );
    }
    println!("all ratios within 10%: {}", check.pass);

    let uniform = uniform_design(space.grid().to_vec())?;
    println!(
        "confidence volume proxy: optimal {:.4e}, uniform {:.4e}",
        confidence_volume_proxy(&opt.design, s, 201)?,
        confidence_volume_proxy(&uniform, s, 201)?
    );
    Ok(())
}
