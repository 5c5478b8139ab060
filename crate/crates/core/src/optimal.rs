//! Weighted D-optimal designs on a candidate grid, G-values,
//! Kiefer–Wolfowitz certificates, and brute-force Vandermonde integrals.
//!
//! The solver is the multiplicative fixed point
//! `mu_i <- mu_i K(x_i) / n`, which never decreases `log det M` and stops
//! once `max K - n <= epsilon n` over the grid.

use crate::basis::{space_dimension, PolyBasis, Point};
use crate::error::{Error, Result};
use crate::gram::{
    feature_gram, moment_matrix, orthonormal_factor, weighted_row, ChristoffelEvaluator,
};
use crate::linalg::{cholesky, cholesky_log_det, lower_apply_norm_sqr, lower_inverse, Lu, Mat};
use crate::measure::{check_admissible, prune_and_merge, DesignSpace, DiscreteDesign, WeightFunction};
use crate::scalar::Scalar;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Work (grid size times `n^2`) above which grid sweeps run on the rayon pool.
const PARALLEL_WORK: usize = 1 << 18;

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Uniform,
    /// Starting weights on the grid, one per grid point.
    Weights(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub epsilon: f64,
    /// Defaults to `500 * grid size`.
    pub max_iter: Option<usize>,
    pub init: Init,
    /// Keep one [`IterateRecord`] per iteration.
    pub record_history: bool,
    /// Atoms closer than this are merged into their weighted barycentre.
    pub merge_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            epsilon: 1e-5,
            max_iter: None,
            init: Init::Uniform,
            record_history: false,
            merge_radius: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverOptions {
            epsilon,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub log_det: f64,
    pub g_value: f64,
    /// `sum_k mu_k K(x_k)`.
    pub mass: f64,
}

#[derive(Clone, Debug)]
pub struct OptimalResult {
    /// Pruned design: atoms lighter than `epsilon / (10 * grid size)` are
    /// dropped, then atoms within `merge_radius` merged.
    pub design: DiscreteDesign,
    /// `log det M` of the final iterate in the monomial basis.
    pub log_det: f64,
    /// Max of `K` over the grid for the final iterate.
    pub g_value: f64,
    pub argmax: Point,
    pub kw_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n: usize,
    /// `K` at each grid atom that survives the weight cut (before merging).
    pub support_k_values: Vec<f64>,
    /// Final iterate on the full grid.
    pub grid_weights: Vec<f64>,
    pub history: Vec<IterateRecord>,
}

/// Weighted rows `p(x_k) w(x_k)^s` of a grid in a stabilized basis.
pub(crate) struct GridProblem<T> {
    rows: Mat<T>,
    n: usize,
    /// `log det M_monomial = log det M_stabilized - log_det_shift`.
    log_det_shift: f64,
}

#[derive(Clone)]
pub(crate) struct Evaluation {
    pub log_det: f64,
    pub k: Vec<f64>,
}

impl<T: Scalar> GridProblem<T> {
    pub fn new(points: &[Point], weight: &WeightFunction, s: usize) -> Result<Self> {
        let d = points
            .first()
            .ok_or_else(|| Error::invalid("empty grid"))?
            .dim();
        let basis = PolyBasis::stabilized_for(d, s, points)?;
        let n = basis.len();
        let mut data = vec![T::zero(); points.len() * n];
        for (k, p) in points.iter().enumerate() {
            weighted_row(&basis, weight, p, &mut data[k * n..(k + 1) * n]);
        }
        Ok(GridProblem {
            rows: Mat::from_rows(points.len(), n, data),
            n,
            log_det_shift: 2.0 * basis.log_abs_det_transform(),
        })
    }

    fn work(&self) -> usize {
        self.rows.rows() * self.n * self.n
    }

    fn gram(&self, mu: &[f64]) -> Mat<T> {
        if self.work() < PARALLEL_WORK {
            return feature_gram(&self.rows, mu);
        }
        // fixed chunking and in-order reduction keep results reproducible
        const CHUNK: usize = 256;
        let n = self.n;
        let partials: Vec<Mat<T>> = mu
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, w)| {
                let lo = c * CHUNK;
                let sub = Mat::from_rows(
                    w.len(),
                    n,
                    self.rows.as_slice()[lo * n..(lo + w.len()) * n].to_vec(),
                );
                feature_gram(&sub, w)
            })
            .collect();
        let mut g = Mat::zeros(n, n);
        for p in partials {
            for i in 0..n {
                for (a, &b) in g.row_mut(i).iter_mut().zip(p.row(i)) {
                    *a += b;
                }
            }
        }
        g
    }

    /// Factor the Gram matrix of `mu` and evaluate `K` on every grid point.
    pub fn evaluate(&self, mu: &[f64]) -> Result<Evaluation> {
        let g = self.gram(mu);
        let c = cholesky(&g)?;
        let log_det = cholesky_log_det(&c) - self.log_det_shift;
        let l = lower_inverse(&c);
        let k = if self.work() < PARALLEL_WORK {
            (0..self.rows.rows())
                .map(|i| lower_apply_norm_sqr(&l, self.rows.row(i)))
                .collect()
        } else {
            (0..self.rows.rows())
                .into_par_iter()
                .map(|i| lower_apply_norm_sqr(&l, self.rows.row(i)))
                .collect()
        };
        Ok(Evaluation { log_det, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Compute a weighted D-optimal design of degree `s` on the grid of `space`.
pub fn d_optimal(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    opts: &SolverOptions,
) -> Result<OptimalResult> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if !(opts.merge_radius >= 0.0) {
        return Err(Error::invalid("merge radius must be >= 0"));
    }
    let report = check_admissible(weight, space, s);
    if !report.pass {
        return Err(Error::Inadmissible(
            report.reason.unwrap_or_else(|| "unknown".into()),
        ));
    }
    if space.is_real() {
        run::<f64>(space, weight, s, opts)
    } else {
        run::<Complex64>(space, weight, s, opts)
    }
}

fn run<T: Scalar>(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    opts: &SolverOptions,
) -> Result<OptimalResult> {
    let grid = space.grid();
    let m = grid.len();
    let problem = GridProblem::<T>::new(grid, weight, s)?;
    let n = problem.n();
    let nf = n as f64;
    let max_iter = opts.max_iter.unwrap_or(500 * m);

    let mut mu = match &opts.init {
        Init::Uniform => vec![1.0 / m as f64; m],
        Init::Weights(w) => {
            if w.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(Error::invalid("initial weights must be finite and >= 0"));
            }
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::invalid("initial weights sum to zero"));
            }
            w.iter().map(|x| x / total).collect()
        }
    };

    let weight_tol = opts.epsilon / (10.0 * m as f64);
    let floor = nf * (1.0 - 10.0 * opts.epsilon);
    let mut first_converged: Option<usize> = None;
    let mut last_converged = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let (eval, converged) = loop {
        let eval = problem.evaluate(&mu).map_err(|e| match (&opts.init, iterations) {
            (Init::Uniform, 0) => Error::Numerical(format!(
                "uniform start on a rank-n grid is singular ({e}); grid is too ill-conditioned"
            )),
            (_, 0) => Error::invalid(format!("initial design is singular: {e}")),
            _ => Error::Numerical(format!("iterate {iterations} became singular: {e}")),
        })?;
        let g = eval.k[argmax(&eval.k)];
        if opts.record_history {
            let mass = mu.iter().zip(&eval.k).map(|(w, k)| w * k).sum();
            history.push(IterateRecord {
                iteration: iterations,
                log_det: eval.log_det,
                g_value: g,
                mass,
            });
        }
        if g - nf <= opts.epsilon * nf {
            // Atoms with K < n(1 - 10 eps) shrink by at least K/n per step.
            // Keep iterating, for at most as many steps again as the gap
            // took, unless the first estimate says that is hopelessly short.
            let needed = mu
                .iter()
                .zip(&eval.k)
                .filter(|(w, k)| **w >= weight_tol && **k < floor)
                .map(|(w, k)| (w / weight_tol).ln() / -(k / nf).ln())
                .fold(0.0, f64::max);
            let first = *first_converged.get_or_insert(iterations);
            let hopeless = iterations == first && needed > 4.0 * first.min(max_iter - first) as f64;
            if needed == 0.0 || hopeless || iterations >= max_iter || iterations >= 2 * first {
                break (eval, true);
            }
            last_converged = Some((mu.clone(), eval.clone()));
        } else if iterations >= max_iter || first_converged.is_some_and(|f| iterations >= 2 * f) {
            match last_converged.take() {
                Some((w, e)) => {
                    mu = w;
                    break (e, true);
                }
                None => break (eval, false),
            }
        }
        for (w, k) in mu.iter_mut().zip(&eval.k) {
            *w *= k / nf;
        }
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|w| *w /= total);
        iterations += 1;
    };
    let (mu, eval) = if converged {
        settle(&problem, grid, mu, eval, opts.epsilon, weight_tol)
    } else {
        (mu, eval)
    };

    let best = argmax(&eval.k);
    let g_value = eval.k[best];
    let (support_idx, support_w): (Vec<usize>, Vec<f64>) = mu
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, w))
        .unzip();
    let full = DiscreteDesign::from_parts_unchecked(
        support_idx.iter().map(|&i| grid[i].clone()).collect(),
        support_w,
    );
    let pruned = prune_and_merge(&full, weight_tol, opts.merge_radius)?.design;
    let support_k_values = support_idx
        .iter()
        .filter(|&&i| mu[i] >= weight_tol)
        .map(|&i| eval.k[i])
        .collect();
    Ok(OptimalResult {
        design: pruned,
        log_det: eval.log_det,
        g_value,
        argmax: grid[best].clone(),
        kw_gap: g_value - nf,
        iterations,
        converged,
        n,
        support_k_values,
        grid_weights: mu,
        history,
    })
}

/// Moves the mass of atoms with `K < n(1 - 10 eps)` onto the nearest atom
/// meeting that bound, keeping the result only while the gap still holds.
fn settle<T: Scalar>(
    problem: &GridProblem<T>,
    grid: &[Point],
    mu: Vec<f64>,
    eval: Evaluation,
    eps: f64,
    weight_tol: f64,
) -> (Vec<f64>, Evaluation) {
    let nf = problem.n() as f64;
    let floor = nf * (1.0 - 10.0 * eps);
    let mut cur = (mu, eval);
    for _ in 0..3 {
        let (mu, ev) = &cur;
        let (bad, good): (Vec<usize>, Vec<usize>) =
            (0..mu.len()).filter(|&i| mu[i] >= weight_tol).partition(|&i| ev.k[i] < floor);
        if bad.is_empty() || good.is_empty() {
            break;
        }
        let mut next = mu.clone();
        for &i in &bad {
            let j = good
                .iter()
                .copied()
                .min_by(|&a, &b| grid[i].distance(&grid[a]).total_cmp(&grid[i].distance(&grid[b])))
                .unwrap();
            next[j] += next[i];
            next[i] = 0.0;
        }
        let Ok(ev) = problem.evaluate(&next) else { break };
        if ev.k[argmax(&ev.k)] - nf > eps * nf {
            break;
        }
        cur = (next, ev);
    }
    cur
}

/// Max of `K` over the grid and the lowest-index maximizing point.
pub fn g_value(ev: &ChristoffelEvaluator, space: &DesignSpace) -> Result<(f64, Point)> {
    if space.dim() != ev.basis().dim() {
        return Err(Error::DimensionMismatch {
            expected: ev.basis().dim(),
            got: space.dim(),
        });
    }
    let values: Vec<f64> = space
        .grid()
        .par_iter()
        .map(|z| ev.eval_unchecked(z))
        .collect();
    let i = argmax(&values);
    Ok((values[i], space.grid()[i].clone()))
}

/// Kiefer–Wolfowitz certificate of a design, evaluated independently of the
/// solver through the public moment-matrix path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub degree: usize,
    pub n: usize,
    /// `log det M` in the monomial basis.
    pub log_det: f64,
    pub g_value: f64,
    pub argmax: Vec<[f64; 2]>,
    pub kw_gap: f64,
    /// `|sum_k mu_k K(x_k) - n|`.
    pub mass_residual: f64,
    pub min_support_k: f64,
    pub max_support_k: f64,
}

pub fn certify(
    design: &DiscreteDesign,
    weight: &WeightFunction,
    s: usize,
    space: &DesignSpace,
) -> Result<Certificate> {
    let basis = PolyBasis::stabilized_for(space.dim(), s, space.grid())?;
    let m = moment_matrix(design, weight, s, &basis)?;
    let ev = orthonormal_factor(&m)?;
    let n = ev.n();
    let (g, arg) = g_value(&ev, space)?;
    let ks: Vec<f64> = design.support().iter().map(|p| ev.eval_unchecked(p)).collect();
    Ok(Certificate {
        degree: s,
        n,
        log_det: m.log_det() - 2.0 * basis.log_abs_det_transform(),
        g_value: g,
        argmax: arg.coords().iter().map(|c| [c.re, c.im]).collect(),
        kw_gap: g - n as f64,
        mass_residual: (ev.mass(design) - n as f64).abs(),
        min_support_k: ks.iter().cloned().fold(f64::INFINITY, f64::min),
        max_support_k: ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// `int K^{mu0,w} dmu1 - n`, the derivative at `t = 0` of
/// `t -> log det M^{(1-t) mu0 + t mu1, w}`.
pub fn kw_directional_derivative(
    mu0: &DiscreteDesign,
    mu1: &DiscreteDesign,
    weight: &WeightFunction,
    s: usize,
    basis: &PolyBasis,
) -> Result<f64> {
    let ev = orthonormal_factor(&moment_matrix(mu0, weight, s, basis)?)?;
    Ok(ev.mass(mu1) - ev.n() as f64)
}

const ORACLE_LIMIT: f64 = 1e7;

/// Visit every `len`-tuple of indices in `0..m` (with repetition).
fn for_each_tuple(m: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; len];
    loop {
        f(&idx);
        let mut pos = len;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Product of `w^{2s} * mass` over the atoms of a tuple, and the tuple's
/// `|VDM|^2` in the monomial basis.
struct TupleTerms<'a> {
    rows: Vec<Vec<Complex64>>,
    factors: Vec<f64>,
    n: usize,
    _design: &'a DiscreteDesign,
}

impl<'a> TupleTerms<'a> {
    fn new(design: &'a DiscreteDesign, weight: &WeightFunction, basis: &PolyBasis) -> Self {
        let s = basis.degree() as i32;
        let rows = design
            .support()
            .iter()
            .map(|p| crate::basis::eval_basis(basis, p).expect("dimension checked"))
            .collect();
        let factors = design
            .iter()
            .map(|(p, mu)| weight.eval(p).powi(2 * s) * mu)
            .collect();
        TupleTerms {
            rows,
            factors,
            n: basis.len(),
            _design: design,
        }
    }

    fn vdm_sq(&self, leading: Option<&[Complex64]>, idx: &[usize]) -> f64 {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        if let Some(first) = leading {
            data.extend_from_slice(first);
        }
        for &i in idx {
            data.extend_from_slice(&self.rows[i]);
        }
        let (log, _) = Lu::new(&Mat::from_rows(n, n, data)).log_abs_det();
        (2.0 * log).exp()
    }
}

fn check_oracle_input(design: &DiscreteDesign, s: usize) -> Result<PolyBasis> {
    if design.is_empty() {
        return Err(Error::invalid("empty design"));
    }
    PolyBasis::monomial(design.dim(), s)
}

/// `(1/n!) sum over n-tuples of atoms |VDM|^2 prod w^{2s} prod mu`, which
/// equals `det M_s^{mu,w}`.
pub fn vdm_integral_det(design: &DiscreteDesign, weight: &WeightFunction, s: usize) -> Result<f64> {
    let basis = check_oracle_input(design, s)?;
    let n = basis.len();
    let m = design.len();
    if (m as f64).powi(n as i32) > ORACLE_LIMIT {
        return Err(Error::TooLarge(format!("{m}^{n} tuples exceeds 1e7")));
    }
    let terms = TupleTerms::new(design, weight, &basis);
    let mut total = 0.0;
    for_each_tuple(m, n, |idx| {
        let f: f64 = idx.iter().map(|&i| terms.factors[i]).product();
        if f != 0.0 {
            total += terms.vdm_sq(None, idx) * f;
        }
    });
    let n_fact: f64 = (1..=n).map(|k| k as f64).product();
    Ok(total / n_fact)
}

/// `(n / Z_n) sum over (n-1)-tuples |VDM(z, z_2..z_n)|^2 w(z)^{2s}
/// prod w^{2s} prod mu` with `Z_n = n! det M` computed by the same
/// brute-force sum; equals `K_s^{mu,w}(z)`.
pub fn vdm_integral_christoffel(
    design: &DiscreteDesign,
    weight: &WeightFunction,
    s: usize,
    z: &Point,
) -> Result<f64> {
    let basis = check_oracle_input(design, s)?;
    if z.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: z.dim(),
        });
    }
    let n = basis.len();
    let m = design.len();
    if (m as f64).powi(n as i32 - 1) > ORACLE_LIMIT {
        return Err(Error::TooLarge(format!("{m}^{} tuples exceeds 1e7", n - 1)));
    }
    let n_fact: f64 = (1..=n).map(|k| k as f64).product();
    let z_n = if (m as f64).powi(n as i32) <= ORACLE_LIMIT {
        n_fact * vdm_integral_det(design, weight, s)?
    } else {
        n_fact * moment_matrix(design, weight, s, &basis)?.det()
    };
    if !(z_n > 0.0) {
        return Err(Error::Singular { pivot: n });
    }
    let wz = weight.eval(z).powi(2 * s as i32);
    if wz == 0.0 {
        return Ok(0.0);
    }
    let terms = TupleTerms::new(design, weight, &basis);
    let first = crate::basis::eval_basis(&basis, z)?;
    let mut total = 0.0;
    for_each_tuple(m, n - 1, |idx| {
        let f: f64 = idx.iter().map(|&i| terms.factors[i]).product();
        if f != 0.0 {
            total += terms.vdm_sq(Some(&first), idx) * f;
        }
    });
    Ok(n as f64 / z_n * total * wz)
}

/// `n = C(s + d, d)` for a space.
pub fn basis_size(space: &DesignSpace, s: usize) -> Result<usize> {
    space_dimension(space.dim(), s)
}
