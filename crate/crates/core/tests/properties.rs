//! Randomized invariants across the library.

use num_complex::Complex64;
use optdesign::asymptotics::t_grid;
use optdesign::basis::CoordMap;
use optdesign::optimal::kw_directional_derivative;
use optdesign::{
    apportion, approx_fekete, christoffel, concavity_probe, confidence_volume_proxy, d_optimal, degree_sum, eval_basis,
    f_of_t, g_value, make_design, moment_distance, moment_matrix, orthonormal_factor, prune_and_merge, scalar_field,
    simulate_regression, space_dimension, uniform_design, vandermonde, weighted_ball_green, DesignSpace, DiscreteDesign,
    EquilibriumMeasure, FeketeOptions, MultiIndex, PolyBasis, Point, RegressionExperiment, SolverOptions,
    WeightFunction,
};
use proptest::prelude::*;

fn reals(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn separated(xs: &[f64], gap: f64) -> bool {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).all(|w| w[1] - w[0] >= gap)
}

fn design_from(xs: &[f64], ws: &[f64]) -> DiscreteDesign {
    let total: f64 = ws.iter().sum();
    make_design(
        xs.iter().map(|&x| Point::real1(x)).collect(),
        ws.iter().map(|w| w / total).collect(),
    )
    .unwrap()
}

/// Determinant by Gaussian elimination with partial pivoting.
fn direct_det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

fn linear_tilt() -> WeightFunction {
    WeightFunction::custom("1+x/2", |p: &Point| 1.0 + 0.5 * p.coord(0).re)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vandermonde_is_product_of_differences(xs in reals(2..=8)) {
        prop_assume!(separated(&xs, 0.05));
        let basis = PolyBasis::monomial(1, xs.len() - 1).unwrap();
        let pts: Vec<Point> = xs.iter().map(|&x| Point::real1(x)).collect();
        let got = vandermonde(&basis, &pts).unwrap().log_abs_det.unwrap();
        let mut want = 0.0;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                want += (xs[j] - xs[i]).abs().ln();
            }
        }
        prop_assert!((got.exp() - want.exp()).abs() <= 1e-10 * want.exp());
    }

    #[test]
    fn degree_sum_closed_form(d in 1usize..=4, s in 0usize..=10) {
        let n = space_dimension(d, s).unwrap();
        prop_assert_eq!(degree_sum(d, s).unwrap() * (d + 1), d * s * n);
    }

    #[test]
    fn basis_is_multiplicative(re in reals(3..=3), im in reals(3..=3), s in 0usize..=5) {
        let z = Point::new((0..3).map(|i| Complex64::new(re[i], im[i])).collect()).unwrap();
        let basis = PolyBasis::monomial(3, s).unwrap();
        let vals = eval_basis(&basis, &z).unwrap();
        for (alpha, v) in basis.indices().iter().zip(&vals) {
            let want: Complex64 = alpha.exponents().iter().enumerate().map(|(i, &e)| z.coord(i).powu(e)).product();
            prop_assert!((v - want).norm() <= 1e-13 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn basis_change_shifts_log_det_by_transform(
        xs in reals(6..=6), ys in reals(6..=6), cx in -2.0f64..2.0, hw in 0.5f64..3.0,
    ) {
        let pts: Vec<Point> = xs.iter().zip(&ys).map(|(&x, &y)| Point::real(&[x, y])).collect();
        let mono = PolyBasis::monomial(2, 2).unwrap();
        let lm = vandermonde(&mono, &pts).unwrap().log_abs_det.unwrap();
        prop_assume!(lm > -20.0);
        let map = CoordMap::Chebyshev { center: cx, half_width: hw };
        let stab = PolyBasis::stabilized(2, 2, vec![map.clone(), map]).unwrap();
        let ls = vandermonde(&stab, &pts).unwrap().log_abs_det.unwrap();
        prop_assert!((ls - (lm + stab.log_abs_det_transform())).abs() <= 1e-8 * (1.0 + lm.abs()));
    }

    #[test]
    fn pruning_preserves_mass(ws in prop::collection::vec(0.0f64..1.0, 2..=12), tol in 0.0f64..0.1, r in 0.0f64..0.5) {
        prop_assume!(ws.iter().any(|&w| w > 0.1));
        let xs: Vec<f64> = (0..ws.len()).map(|i| -1.0 + 0.17 * i as f64).collect();
        let keep: Vec<usize> = (0..ws.len()).filter(|&i| ws[i] > 0.0).collect();
        let d = design_from(
            &keep.iter().map(|&i| xs[i]).collect::<Vec<_>>(),
            &keep.iter().map(|&i| ws[i]).collect::<Vec<_>>(),
        );
        if let Ok(p) = prune_and_merge(&d, tol, r) {
            prop_assert!((p.design.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn uniform_then_zero_prune_is_identity(xs in reals(1..=10)) {
        prop_assume!(separated(&xs, 1e-6));
        let d = uniform_design(xs.iter().map(|&x| Point::real1(x)).collect()).unwrap();
        let p = prune_and_merge(&d, 0.0, 0.0).unwrap().design;
        prop_assert_eq!(p.support(), d.support());
        prop_assert_eq!(p.weights(), d.weights());
    }

    #[test]
    fn mass_orthonormality_and_basis_invariance(
        xs in reals(5..=9), ws in prop::collection::vec(0.05f64..1.0, 9), s in 1usize..=4,
    ) {
        prop_assume!(separated(&xs, 0.05) && xs.len() > s);
        let d = design_from(&xs, &ws[..xs.len()]);
        let w = linear_tilt();
        let mono = PolyBasis::monomial(1, s).unwrap();
        let stab = PolyBasis::stabilized_for(1, s, d.support()).unwrap();
        let em = orthonormal_factor(&moment_matrix(&d, &w, s, &mono).unwrap()).unwrap();
        let es = orthonormal_factor(&moment_matrix(&d, &w, s, &stab).unwrap()).unwrap();
        let n = (s + 1) as f64;
        prop_assert!((es.mass(&d) - n).abs() <= 1e-8 * n);
        prop_assert!(es.orthonormality_residual(&d) <= 1e-8);
        for z in [-1.0, -0.3, 0.2, 0.9] {
            let z = Point::real1(z);
            let (a, b) = (christoffel(&em, &z).unwrap(), christoffel(&es, &z).unwrap());
            prop_assert!((a - b).abs() <= 1e-8 * b);
        }
    }

    #[test]
    fn cached_log_det_matches_direct(
        jitter in prop::collection::vec(-0.05f64..0.05, 8), ws in prop::collection::vec(0.05f64..1.0, 8), s in 1usize..=5,
    ) {
        let xs: Vec<f64> = (0..8).map(|i| -0.9 + 1.8 * i as f64 / 7.0 + jitter[i]).collect();
        let d = design_from(&xs, &ws[..xs.len()]);
        let basis = PolyBasis::monomial(1, s).unwrap();
        let m = moment_matrix(&d, &linear_tilt(), s, &basis).unwrap();
        let n = s + 1;
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let e = m.get(i, j);
                prop_assert_eq!(e.im, 0.0);
                prop_assert_eq!(e, m.get(j, i));
                *v = e.re;
            }
        }
        let direct = direct_det(rows);
        prop_assert!((m.log_det().exp() - direct).abs() <= 1e-10 * direct.abs());
    }

    #[test]
    fn directional_derivative_identity(w0 in prop::collection::vec(0.05f64..1.0, 7), w1 in prop::collection::vec(0.0f64..1.0, 7)) {
        prop_assume!(w1.iter().sum::<f64>() > 0.1);
        let xs: Vec<f64> = (0..7).map(|i| -1.0 + i as f64 / 3.0).collect();
        let keep: Vec<usize> = (0..7).filter(|&i| w1[i] > 0.0).collect();
        let mu0 = design_from(&xs, &w0);
        let mu1 = design_from(
            &keep.iter().map(|&i| xs[i]).collect::<Vec<_>>(),
            &keep.iter().map(|&i| w1[i]).collect::<Vec<_>>(),
        );
        let s = 2;
        let w = linear_tilt();
        let basis = PolyBasis::monomial(1, s).unwrap();
        let (m0, m1) = (
            moment_matrix(&mu0, &w, s, &basis).unwrap(),
            moment_matrix(&mu1, &w, s, &basis).unwrap(),
        );
        // M is linear in the design, so M(t) = (1 - t) M0 + t M1 for t < 0 too
        let logdet = |t: f64| {
            let rows = (0..3)
                .map(|i| (0..3).map(|j| ((1.0 - t) * m0.get(i, j) + t * m1.get(i, j)).re).collect())
                .collect();
            direct_det(rows).ln()
        };
        let h = 1e-4;
        let fd = (logdet(h) - logdet(-h)) / (2.0 * h);
        let ev = orthonormal_factor(&moment_matrix(&mu0, &w, s, &basis).unwrap()).unwrap();
        let want = mu1.integrate(|z| christoffel(&ev, z).unwrap()) - 3.0;
        prop_assert!((fd - want).abs() <= 1e-5);
        let lib = kw_directional_derivative(&mu0, &mu1, &w, s, &basis).unwrap();
        prop_assert!((lib - want).abs() <= 1e-8 * (1.0 + want.abs()));
    }

    #[test]
    fn equilibrium_cdf_is_monotone(a in 0.2f64..3.0, us in prop::collection::vec(0.0f64..1.0, 2..20)) {
        let m = EquilibriumMeasure::arcsine(a).unwrap();
        prop_assert!(m.cdf(-a).unwrap().abs() <= 1e-12);
        prop_assert!((m.cdf(a).unwrap() - 1.0).abs() <= 1e-12);
        let mut xs: Vec<f64> = us.iter().map(|u| -a + 2.0 * a * u).collect();
        xs.sort_by(f64::total_cmp);
        let fs: Vec<f64> = xs.iter().map(|&x| m.cdf(x).unwrap()).collect();
        prop_assert!(fs.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }

    #[test]
    fn green_function_below_phi(r in 0.0f64..1.0, theta in 0.0f64..std::f64::consts::TAU) {
        let z = Point::complex1(Complex64::from_polar(r, theta));
        let v = weighted_ball_green(&z);
        prop_assert!(v <= r * r + 1e-15);
        if r <= std::f64::consts::FRAC_1_SQRT_2 {
            prop_assert!((v - r * r).abs() <= 1e-15);
        }
    }

    #[test]
    fn apportionment_sums_to_m(ws in prop::collection::vec(0.0f64..1.0, 1..12), m in 0usize..500) {
        prop_assume!(ws.iter().sum::<f64>() > 0.0);
        let total: f64 = ws.iter().sum();
        let ws: Vec<f64> = ws.iter().map(|w| w / total).collect();
        let c = apportion(&ws, m);
        prop_assert_eq!(c.iter().sum::<usize>(), m);
        for (ci, wi) in c.iter().zip(&ws) {
            prop_assert!((*ci as f64 - wi * m as f64).abs() < 1.0 + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn no_design_beats_n_on_the_grid(ws in prop::collection::vec(0.0f64..1.0, 41), s in 1usize..=4) {
        prop_assume!(ws.iter().filter(|&&w| w > 0.0).count() > s);
        let space = DesignSpace::interval(1.0, 41).unwrap();
        let keep: Vec<usize> = (0..41).filter(|&i| ws[i] > 0.0).collect();
        let d = make_design(
            keep.iter().map(|&i| space.grid()[i].clone()).collect(),
            { let t: f64 = keep.iter().map(|&i| ws[i]).sum(); keep.iter().map(|&i| ws[i] / t).collect() },
        ).unwrap();
        let unit = WeightFunction::unit();
        let basis = PolyBasis::stabilized_for(1, s, space.grid()).unwrap();
        let (g, _) = g_value(&orthonormal_factor(&moment_matrix(&d, &unit, s, &basis).unwrap()).unwrap(), &space).unwrap();
        let n = (s + 1) as f64;
        prop_assert!(g >= n * (1.0 - 1e-8));
    }

    #[test]
    fn constant_u_is_affine_and_scaling_shifts(c in 0.2f64..5.0, s in 1usize..=3) {
        let space = DesignSpace::interval(1.0, 41).unwrap();
        let unit = WeightFunction::unit();
        let mu = d_optimal(&space, &unit, s, &SolverOptions::default()).unwrap();
        let one = scalar_field(|_| 1.0);
        let second = concavity_probe(&space, &unit, s, &one, &mu.design, &t_grid(-1.0, 1.0, 10)).unwrap();
        prop_assert!(second.abs() <= 1e-12);
        let scaled = unit.scaled(c);
        let f0 = f_of_t(&space, &unit, s, &one, 0.0, &mu.design).unwrap();
        let fc = f_of_t(&space, &scaled, s, &one, 0.0, &mu.design).unwrap();
        let n = (s + 1) as f64;
        let ms = degree_sum(1, s).unwrap() as f64;
        prop_assert!((fc - f0 + s as f64 * n / ms * c.ln()).abs() <= 1e-10);
        let again = d_optimal(&space, &scaled, s, &SolverOptions::default()).unwrap();
        prop_assert!((again.kw_gap - mu.kw_gap).abs() <= 1e-9 * n);
    }
}

#[test]
fn d_optimal_meets_g_bound_and_support_deficit() {
    let eps = 1e-5;
    let cube = DesignSpace::cube(2, 1.0, 15).unwrap();
    let interval = DesignSpace::interval(1.0, 101).unwrap();
    let cases = [
        (&cube, WeightFunction::gaussian()),
        (&cube, WeightFunction::unit()),
        (&interval, WeightFunction::gaussian()),
        (&interval, WeightFunction::unit()),
    ];
    for (space, w) in &cases {
        for s in 1..=4 {
            let r = d_optimal(space, w, s, &SolverOptions::with_epsilon(eps)).unwrap();
            let n = r.n as f64;
            assert!(r.g_value - n <= eps * n && r.g_value >= n * (1.0 - 1e-8));
            // K recomputed from the returned design
            let basis = PolyBasis::stabilized_for(space.dim(), s, space.grid()).unwrap();
            let ev = orthonormal_factor(&moment_matrix(&r.design, w, s, &basis).unwrap()).unwrap();
            let k: Vec<f64> = r.design.support().iter().map(|z| christoffel(&ev, z).unwrap()).collect();
            let deficit: f64 = r.design.weights().iter().zip(&k).map(|(m, k)| m * (n - k).max(0.0)).sum();
            assert!(deficit <= 1.01 * eps * n, "{} s = {s}: deficit {deficit:e}", w.describe());
            // pointwise only where the optimal atoms are grid nodes
            if w.is_unit() && space.dim() == 1 && s <= 2 {
                assert!(k.iter().all(|&v| v >= n * (1.0 - 10.0 * eps)), "s = {s}: {k:?}");
            }
        }
    }
}

#[test]
fn exhaustive_fekete_is_symmetric() {
    let space = DesignSpace::interval(1.0, 15).unwrap();
    let unit = WeightFunction::unit();
    for s in 1..=4 {
        let f = optdesign::exhaustive_fekete(&space, &unit, s).unwrap();
        let mut xs: Vec<f64> = f.points.iter().map(|p| p.coord(0).re).collect();
        xs.sort_by(f64::total_cmp);
        for (a, b) in xs.iter().zip(xs.iter().rev()) {
            assert!((a + b).abs() <= 1e-12, "s = {s}: {xs:?}");
        }
    }
}

#[test]
fn fekete_measures_converge_in_moments() {
    let space = DesignSpace::interval(1.0, 401).unwrap();
    let unit = WeightFunction::unit();
    let arc = EquilibriumMeasure::arcsine(1.0).unwrap();
    let dist = |s| {
        let f = approx_fekete(&space, &unit, s, &FeketeOptions::default()).unwrap();
        moment_distance(&f.measure(), &arc, 6).unwrap()
    };
    assert!(dist(16) < dist(4));
}

#[test]
fn moment_distance_final_not_above_first() {
    let space = DesignSpace::cube(2, 1.0, 21).unwrap();
    let target = EquilibriumMeasure::cube(2, 1.0).unwrap();
    let report = optdesign::convergence_sweep(
        &space,
        &WeightFunction::unit(),
        &[2, 4, 8],
        &target,
        4,
        &SolverOptions::default(),
    )
    .unwrap();
    let md = report.column(|r| r.moment_distance);
    assert!(md[2] <= md[0], "{md:?}");
    assert!(report.rows.iter().all(|r| r.converged && r.kw_gap <= 1e-5 * r.n as f64));
}

#[test]
fn equilibrium_moments_match_density_quadrature() {
    // midpoint rule on the arcsine density after x = sin(theta)
    let m = EquilibriumMeasure::arcsine(1.0).unwrap();
    let k = 2000;
    let mut total = 0.0;
    let mut second = 0.0;
    for i in 0..k {
        let th = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (i as f64 + 0.5) / k as f64;
        let x = th.sin();
        let dens = m.density(&Point::real1(x)).unwrap() * th.cos() * std::f64::consts::PI / k as f64;
        total += dens;
        second += dens * x * x;
    }
    assert!((total - 1.0).abs() <= 1e-6);
    assert!((second - m.moment(&MultiIndex(vec![2])).unwrap()).abs() <= 1e-6);
}

#[test]
fn volume_proxy_tracks_det() {
    let space = DesignSpace::interval(1.0, 101).unwrap();
    let s = 2;
    let opt = d_optimal(&space, &WeightFunction::unit(), s, &SolverOptions::default()).unwrap();
    let uni = uniform_design(space.grid().to_vec()).unwrap();
    assert!(confidence_volume_proxy(&opt.design, s, 300).unwrap() < confidence_volume_proxy(&uni, s, 300).unwrap());
}

#[test]
fn covariance_error_shrinks_at_monte_carlo_rate() {
    let design = design_from(&[-1.0, 0.0, 1.0], &[1.0, 1.0, 1.0]);
    let err = |trials, seed| {
        let exp = RegressionExperiment::real(design.clone(), 2, &[1.0, 0.0, -1.0], 0.5, 30, trials, seed);
        simulate_regression(&exp).unwrap().cov_relative_error
    };
    let seeds = 0..8u64;
    let small: f64 = seeds.clone().map(|sd| err(10_000, sd)).sum::<f64>() / 8.0;
    let large: f64 = seeds.map(|sd| err(40_000, 100 + sd)).sum::<f64>() / 8.0;
    assert!(large <= 0.7 * small, "{small} -> {large}");
}
