//! Weighted approximate Fekete points and s-th order diameters.
//!
//! Values are reported in the monomial normalization even though the search
//! runs on a stabilized basis.

use crate::basis::{degree_sum, PolyBasis, Point};
use crate::error::{Error, Result};
use crate::gram::weighted_row;
use crate::linalg::{pivoted_row_selection, Lu, Mat};
use crate::measure::{uniform_design, DesignSpace, DiscreteDesign, WeightFunction};
use crate::optimal::{d_optimal, SolverOptions};
use crate::report::{fmt_real, Csv};
use crate::scalar::Scalar;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeketeMethod {
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "greedy+exchange")]
    GreedyExchange,
    #[serde(rename = "exhaustive")]
    Exhaustive,
}

impl std::fmt::Display for FeketeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeketeMethod::Greedy => "greedy",
            FeketeMethod::GreedyExchange => "greedy+exchange",
            FeketeMethod::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeketeOptions {
    /// Maximum number of single-point exchange sweeps; 0 keeps the greedy set.
    pub exchange_passes: usize,
}

impl Default for FeketeOptions {
    fn default() -> Self {
        FeketeOptions { exchange_passes: 20 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeketeResult {
    /// Selected grid points, in grid order.
    pub points: Vec<Point>,
    pub indices: Vec<usize>,
    /// `log(|VDM| prod w^s)` in the monomial basis.
    pub weighted_vdm_log: f64,
    /// `exp(weighted_vdm_log / m_s)`.
    pub delta_s: f64,
    pub method: FeketeMethod,
    /// Objective after greedy selection and after each exchange sweep.
    pub trace: Vec<f64>,
}

impl FeketeResult {
    /// Uniform probability measure on the points.
    pub fn measure(&self) -> DiscreteDesign {
        uniform_design(self.points.clone()).expect("nonempty point set")
    }
}

struct Rows<T> {
    a: Mat<T>,
    n: usize,
    m_s: usize,
    log_det_t: f64,
}

impl<T: Scalar> Rows<T> {
    fn new(space: &DesignSpace, weight: &WeightFunction, s: usize) -> Result<Self> {
        let grid = space.grid();
        let basis = PolyBasis::stabilized_for(space.dim(), s, grid)?;
        let n = basis.len();
        let mut data = vec![T::zero(); grid.len() * n];
        for (k, p) in grid.iter().enumerate() {
            weighted_row(&basis, weight, p, &mut data[k * n..(k + 1) * n]);
        }
        Ok(Rows {
            a: Mat::from_rows(grid.len(), n, data),
            n,
            m_s: degree_sum(space.dim(), s)?,
            log_det_t: basis.log_abs_det_transform(),
        })
    }

    fn square(&self, idx: &[usize]) -> Mat<T> {
        let mut data = Vec::with_capacity(self.n * self.n);
        for &i in idx {
            data.extend_from_slice(self.a.row(i));
        }
        Mat::from_rows(self.n, self.n, data)
    }

    /// Monomial-normalized `log(|VDM| prod w^s)` of a selection.
    fn objective(&self, idx: &[usize]) -> f64 {
        Lu::new(&self.square(idx)).log_abs_det().0 - self.log_det_t
    }

    fn finish(&self, space: &DesignSpace, mut idx: Vec<usize>, method: FeketeMethod, trace: Vec<f64>) -> FeketeResult {
        idx.sort_unstable();
        let log = self.objective(&idx);
        FeketeResult {
            points: idx.iter().map(|&i| space.grid()[i].clone()).collect(),
            indices: idx,
            weighted_vdm_log: log,
            delta_s: (log / self.m_s as f64).exp(),
            method,
            trace,
        }
    }

    fn greedy(&self) -> Result<Vec<usize>> {
        let picked = pivoted_row_selection(&self.a, self.n, 1e-13);
        if picked.len() < self.n {
            return Err(Error::Inadmissible(format!(
                "grid rank {} < n = {} under the weight",
                picked.len(),
                self.n
            )));
        }
        Ok(picked)
    }

    /// One sweep over positions; returns whether anything changed.
    fn exchange_sweep(&self, idx: &mut [usize]) -> bool {
        let n = self.n;
        let m = self.a.rows();
        let mut changed = false;
        for i in 0..n {
            let lu = Lu::new(&self.square(idx));
            if lu.is_singular() {
                break;
            }
            let inv = lu.inverse();
            let col: Vec<T> = (0..n).map(|j| inv[(j, i)]).collect();
            let ratio = |c: usize| -> f64 {
                let f = self.a.row(c);
                let mut acc = T::zero();
                for j in 0..n {
                    acc += f[j] * col[j];
                }
                acc.abs()
            };
            let scores: Vec<f64> = if m * n > 1 << 16 {
                (0..m).into_par_iter().map(ratio).collect()
            } else {
                (0..m).map(ratio).collect()
            };
            let mut best = idx[i];
            let mut best_score = 1.0 + 1e-12;
            for (c, &sc) in scores.iter().enumerate() {
                if sc > best_score {
                    best_score = sc;
                    best = c;
                }
            }
            if best != idx[i] {
                idx[i] = best;
                changed = true;
            }
        }
        changed
    }
}

/// Greedy pivoted selection on the weighted Vandermonde followed by
/// single-point exchange sweeps.
pub fn approx_fekete(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    opts: &FeketeOptions,
) -> Result<FeketeResult> {
    if space.is_real() {
        approx_impl::<f64>(space, weight, s, opts)
    } else {
        approx_impl::<Complex64>(space, weight, s, opts)
    }
}

fn approx_impl<T: Scalar>(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    opts: &FeketeOptions,
) -> Result<FeketeResult> {
    let rows = Rows::<T>::new(space, weight, s)?;
    let mut idx = rows.greedy()?;
    let mut trace = vec![rows.objective(&idx)];
    let mut method = FeketeMethod::Greedy;
    for _ in 0..opts.exchange_passes {
        method = FeketeMethod::GreedyExchange;
        let changed = rows.exchange_sweep(&mut idx);
        trace.push(rows.objective(&idx));
        if !changed {
            break;
        }
    }
    Ok(rows.finish(space, idx, method, trace))
}

const EXHAUSTIVE_LIMIT: f64 = 1e7;

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Global maximum over all `n`-subsets of the grid; at most `1e7` subsets.
pub fn exhaustive_fekete(space: &DesignSpace, weight: &WeightFunction, s: usize) -> Result<FeketeResult> {
    let rows = Rows::<Complex64>::new(space, weight, s)?;
    let (m, n) = (rows.a.rows(), rows.n);
    if n > m {
        return Err(Error::Inadmissible(format!("grid has {m} points < n = {n}")));
    }
    if binomial(m, n) > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge(format!("C({m}, {n}) subsets exceeds 1e7")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = idx.clone();
    let mut best_val = f64::NEG_INFINITY;
    loop {
        let v = rows.objective(&idx);
        // ties keep the lexicographically first subset
        let better = if best_val == f64::NEG_INFINITY {
            v > best_val
        } else {
            v > best_val + 1e-12 * best_val.abs().max(1.0)
        };
        if better {
            best_val = v;
            best.copy_from_slice(&idx);
        }
        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                if best_val == f64::NEG_INFINITY {
                    return Err(Error::Inadmissible("every subset is singular".into()));
                }
                return Ok(rows.finish(space, best, FeketeMethod::Exhaustive, vec![best_val]));
            }
            i -= 1;
            if idx[i] < m - n + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `delta_s` of the best configuration found by [`approx_fekete`] with
/// default options.
pub fn sth_diameter(space: &DesignSpace, weight: &WeightFunction, s: usize) -> Result<f64> {
    Ok(approx_fekete(space, weight, s, &FeketeOptions::default())?.delta_s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfdRow {
    pub s: usize,
    pub m_s: usize,
    pub delta_s: f64,
    /// `det(M_s^{mu_s,w})^{1/(2 m_s)}` for the computed optimal design.
    pub gram_root: f64,
    pub gap: f64,
}

/// Side-by-side `delta_s` and optimal-design Gram roots for each degree.
pub fn tfd_table(
    space: &DesignSpace,
    weight: &WeightFunction,
    s_values: &[usize],
    fekete: &FeketeOptions,
    solver: &SolverOptions,
) -> Result<Vec<TfdRow>> {
    s_values
        .iter()
        .map(|&s| {
            let f = approx_fekete(space, weight, s, fekete)?;
            let opt = d_optimal(space, weight, s, solver)?;
            let m_s = degree_sum(space.dim(), s)?;
            let gram_root = (opt.log_det / (2.0 * m_s as f64)).exp();
            Ok(TfdRow {
                s,
                m_s,
                delta_s: f.delta_s,
                gram_root,
                gap: (f.delta_s - gram_root).abs(),
            })
        })
        .collect()
}

pub fn tfd_csv(rows: &[TfdRow]) -> Csv {
    let mut t = Csv::new(&["s", "m_s", "delta_s", "gram_root", "gap"]);
    for r in rows {
        t.push(vec![
            r.s.to_string(),
            r.m_s.to_string(),
            fmt_real(r.delta_s),
            fmt_real(r.gram_root),
            fmt_real(r.gap),
        ]);
    }
    t
}
