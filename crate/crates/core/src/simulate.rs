//! Monte Carlo polynomial regression on a design: least-squares estimates,
//! their covariance, and prediction variance against the Christoffel
//! function.
//!
//! Trial `k` draws its noise from ChaCha8 stream `k` of the experiment seed,
//! so serial and parallel runs give identical bits.

use crate::basis::{eval_basis, PolyBasis, Point};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_log_det, lower_inverse, Mat};
use crate::measure::DiscreteDesign;
use crate::report::{fmt_real, Csv};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct RegressionExperiment {
    pub design: DiscreteDesign,
    pub degree: usize,
    /// True coefficients in the graded monomial basis.
    pub theta: Vec<Complex64>,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Number of observations.
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
}

impl RegressionExperiment {
    pub fn real(design: DiscreteDesign, degree: usize, theta: &[f64], sigma: f64, m: usize, trials: usize, seed: u64) -> Self {
        RegressionExperiment {
            design,
            degree,
            theta: theta.iter().map(|&t| Complex64::new(t, 0.0)).collect(),
            sigma,
            m,
            trials,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub point: Vec<[f64; 2]>,
    pub empirical_variance: f64,
    /// `(sigma^2 / m) K(z)` for the apportioned design.
    pub theoretical_variance: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub degree: usize,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub sigma: f64,
    pub seed: u64,
    pub observation_counts: Vec<usize>,
    pub mean_theta: Vec<Complex64>,
    pub empirical_cov: Vec<Vec<Complex64>>,
    /// `sigma^2 (V^* V)^{-1}`.
    pub theoretical_cov: Vec<Vec<Complex64>>,
    /// `||emp - theo||_F / ||theo||_F`.
    pub cov_relative_error: f64,
    /// `det(V^* V)^{-1/2}`.
    pub volume_proxy: f64,
    pub log_volume_proxy: f64,
    /// Prediction variance at each support atom.
    pub prediction: Vec<PredictionRow>,
}

/// Largest-remainder rounding of `m * weights` to integers summing to `m`;
/// ties go to the lower index.
pub fn apportion(weights: &[f64], m: usize) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * m as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let (ri, rj) = (quotas[i] - quotas[i].floor(), quotas[j] - quotas[j].floor());
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().take(m.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Observation Vandermonde for `m` points apportioned from a design.
struct Setup {
    basis: PolyBasis,
    points: Vec<Point>,
    counts: Vec<usize>,
    v: Mat<Complex64>,
    /// Lower factor `L` with `L^* L = (V^* V)^{-1}` (conjugated convention of
    /// the gram module: `L = C^{-1}`, `C C^* = conj(V^* V)`).
    l: Mat<Complex64>,
    log_det_vv: f64,
}

fn setup(design: &DiscreteDesign, s: usize, m: usize) -> Result<Setup> {
    let basis = PolyBasis::monomial(design.dim(), s)?;
    let n = basis.len();
    if m < n {
        return Err(Error::invalid(format!("m = {m} observations < n = {n}")));
    }
    let counts = apportion(design.weights(), m);
    let mut points = Vec::with_capacity(m);
    for (p, &c) in design.support().iter().zip(&counts) {
        points.extend(std::iter::repeat_n(p.clone(), c));
    }
    let mut data = Vec::with_capacity(m * n);
    for p in &points {
        data.extend(eval_basis(&basis, p)?);
    }
    let v = Mat::from_rows(m, n, data);
    // G = sum_j f_j f_j^* = conj(V^* V)
    let g = Mat::from_fn(n, n, |i, k| {
        (0..m).map(|j| v[(j, i)] * v[(j, k)].conj()).sum::<Complex64>()
    });
    let c = cholesky(&g).map_err(|_| {
        Error::invalid(format!(
            "observation Vandermonde has rank < n = {n}; the design is too concentrated for degree {s}"
        ))
    })?;
    Ok(Setup {
        log_det_vv: cholesky_log_det(&c),
        l: lower_inverse(&c),
        basis,
        points,
        counts,
        v,
    })
}

impl Setup {
    /// `(V^* V)^{-1}`.
    fn inverse_gram(&self) -> Mat<Complex64> {
        // G^{-1} = L^* L and (V^* V)^{-1} = conj(G^{-1})
        self.l.conj_transpose().matmul(&self.l).conj()
    }

    /// `p(z)^* (V^* V)^{-1} p(z)`.
    fn quad_form(&self, z: &Point) -> Result<f64> {
        let p = eval_basis(&self.basis, z)?;
        Ok(crate::linalg::lower_apply_norm_sqr(&self.l, &p))
    }
}

/// `det(V^* V)^{-1/2}` for the apportioned observations of a design.
pub fn confidence_volume_proxy(design: &DiscreteDesign, s: usize, m: usize) -> Result<f64> {
    Ok((-0.5 * setup(design, s, m)?.log_det_vv).exp())
}

struct Draws {
    thetas: Vec<Vec<Complex64>>,
}

fn run_trials(exp: &RegressionExperiment, st: &Setup) -> Result<Draws> {
    let n = st.basis.len();
    if exp.theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: exp.theta.len(),
        });
    }
    if exp.trials == 0 {
        return Err(Error::invalid("trial count must be >= 1"));
    }
    if !(exp.sigma >= 0.0 && exp.sigma.is_finite()) {
        return Err(Error::invalid("sigma must be finite and >= 0"));
    }
    let complex = !exp.design.support().iter().all(Point::is_real);
    let m = st.points.len();
    let clean = st.v.matvec(&exp.theta);
    // A = (V^* V)^{-1} V^*, so theta_hat = A y
    let inv = st.inverse_gram();
    let vh = st.v.conj_transpose();
    let a = inv.matmul(&vh);
    let part_sd = if complex { exp.sigma / 2f64.sqrt() } else { exp.sigma };
    let normal = Normal::new(0.0, part_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let thetas = (0..exp.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
            rng.set_stream(k as u64);
            let y: Vec<Complex64> = clean
                .iter()
                .map(|c| {
                    let re = normal.sample(&mut rng);
                    let im = if complex { normal.sample(&mut rng) } else { 0.0 };
                    c + Complex64::new(re, im)
                })
                .collect();
            debug_assert_eq!(y.len(), m);
            a.matvec(&y)
        })
        .collect();
    Ok(Draws { thetas })
}

fn mean_of(xs: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = xs[0].len();
    let mut mean = vec![Complex64::new(0.0, 0.0); n];
    for x in xs {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    let t = xs.len() as f64;
    mean.iter().map(|m| m / t).collect()
}

fn to_rows(m: &Mat<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn frobenius(a: &Mat<Complex64>) -> f64 {
    a.as_slice().iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn prediction_rows(
    exp: &RegressionExperiment,
    st: &Setup,
    draws: &Draws,
    eval_points: &[Point],
) -> Result<Vec<PredictionRow>> {
    let t = draws.thetas.len();
    let s2 = exp.sigma * exp.sigma;
    eval_points
        .iter()
        .map(|z| {
            let p = eval_basis(&st.basis, z)?;
            let preds: Vec<Complex64> = draws
                .thetas
                .iter()
                .map(|th| p.iter().zip(th).map(|(a, b)| a * b).sum())
                .collect();
            let mean: Complex64 = preds.iter().sum::<Complex64>() / t as f64;
            let var = if t > 1 {
                preds.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (t - 1) as f64
            } else {
                0.0
            };
            let theo = s2 * st.quad_form(z)?;
            Ok(PredictionRow {
                point: z.coords().iter().map(|c| [c.re, c.im]).collect(),
                empirical_variance: var,
                theoretical_variance: theo,
                ratio: var / theo,
            })
        })
        .collect()
}

pub fn simulate_regression(exp: &RegressionExperiment) -> Result<ExperimentStats> {
    let st = setup(&exp.design, exp.degree, exp.m)?;
    let draws = run_trials(exp, &st)?;
    let n = st.basis.len();
    let t = draws.thetas.len();
    let mean = mean_of(&draws.thetas);
    let mut cov = Mat::<Complex64>::zeros(n, n);
    for th in &draws.thetas {
        let dev: Vec<Complex64> = th.iter().zip(&mean).map(|(a, b)| a - b).collect();
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] += dev[i] * dev[j].conj();
            }
        }
    }
    let denom = if t > 1 { (t - 1) as f64 } else { 1.0 };
    let cov = Mat::from_fn(n, n, |i, j| cov[(i, j)] / denom);
    let s2 = exp.sigma * exp.sigma;
    let theo = Mat::from_fn(n, n, |i, j| st.inverse_gram()[(i, j)] * s2);
    let diff = Mat::from_fn(n, n, |i, j| cov[(i, j)] - theo[(i, j)]);
    let theo_norm = frobenius(&theo);
    let cov_relative_error = if theo_norm > 0.0 {
        frobenius(&diff) / theo_norm
    } else {
        frobenius(&diff)
    };
    let prediction = if exp.sigma > 0.0 {
        prediction_rows(exp, &st, &draws, exp.design.support())?
    } else {
        Vec::new()
    };
    Ok(ExperimentStats {
        degree: exp.degree,
        n,
        m: exp.m,
        trials: t,
        sigma: exp.sigma,
        seed: exp.seed,
        observation_counts: st.counts.clone(),
        mean_theta: mean,
        empirical_cov: to_rows(&cov),
        theoretical_cov: to_rows(&theo),
        cov_relative_error,
        volume_proxy: (-0.5 * st.log_det_vv).exp(),
        log_volume_proxy: -0.5 * st.log_det_vv,
        prediction,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub rows: Vec<PredictionRow>,
    /// All ratios in `[0.9, 1.1]` with at least `1e4` trials.
    pub pass: bool,
}

impl VarianceCheck {
    pub fn to_csv(&self) -> Csv {
        let d = self.rows.first().map_or(0, |r| r.point.len());
        let mut header: Vec<String> = vec!["index".into()];
        for i in 0..d {
            header.push(format!("re_{}", i + 1));
            header.push(format!("im_{}", i + 1));
        }
        for h in ["empirical_variance", "theoretical_variance", "ratio"] {
            header.push(h.into());
        }
        let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Csv::new(&header_ref);
        for (k, r) in self.rows.iter().enumerate() {
            let mut row = vec![k.to_string()];
            for c in &r.point {
                row.push(fmt_real(c[0]));
                row.push(fmt_real(c[1]));
            }
            row.push(fmt_real(r.empirical_variance));
            row.push(fmt_real(r.theoretical_variance));
            row.push(fmt_real(r.ratio));
            t.push(row);
        }
        t
    }
}

/// Empirical over theoretical prediction variance at each point.
pub fn variance_identity_check(exp: &RegressionExperiment, eval_points: &[Point]) -> Result<VarianceCheck> {
    if !(exp.sigma > 0.0) {
        return Err(Error::invalid("variance check needs sigma > 0"));
    }
    let st = setup(&exp.design, exp.degree, exp.m)?;
    let draws = run_trials(exp, &st)?;
    let rows = prediction_rows(exp, &st, &draws, eval_points)?;
    let pass = exp.trials >= 10_000 && rows.iter().all(|r| (0.9..=1.1).contains(&r.ratio));
    Ok(VarianceCheck { rows, pass })
}
