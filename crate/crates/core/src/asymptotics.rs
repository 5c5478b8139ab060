//! The functional `f_s(t) = -(1/(2 m_s)) log det M_s^{mu_s, w_t}` with
//! `w_t = w exp(-t u)`, its derivative and concavity probes, and sweeps that
//! track optimal designs against equilibrium measures as `s` grows.

use crate::basis::{degree_sum, graded_indices, MultiIndex, PolyBasis, Point};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::gram::moment_matrix;
use crate::measure::{DesignSpace, DiscreteDesign, WeightFunction};
use crate::optimal::{d_optimal, SolverOptions};
use crate::report::{fmt_real, Csv};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

/// A real function on the design space.
pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

pub fn scalar_field(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

/// `-(1/(2 m_s)) log det M_s^{mu_s, w_t}` in the monomial normalization,
/// holding `mu_s` fixed.
pub fn f_of_t(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    u: &ScalarField,
    t: f64,
    mu_s: &DiscreteDesign,
) -> Result<f64> {
    let basis = PolyBasis::stabilized_for(space.dim(), s, space.grid())?;
    let wt = weight.tilted(u.clone(), t);
    let m = moment_matrix(mu_s, &wt, s, &basis)?;
    let log_det = m.log_det();
    if log_det == f64::NEG_INFINITY {
        return Err(Error::Singular { pivot: m.n() });
    }
    let m_s = degree_sum(space.dim(), s)? as f64;
    Ok(-(log_det - 2.0 * basis.log_abs_det_transform()) / (2.0 * m_s))
}

pub const DERIVATIVE_STEP: f64 = 1e-4;

/// Centered difference of `f_of_t` at 0 with step `h`, and the value
/// `((d+1)/d) int u dmu_s` it should match for an optimal `mu_s`.
pub fn first_derivative_pair(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    u: &ScalarField,
    mu_s: &DiscreteDesign,
    h: f64,
) -> Result<(f64, f64)> {
    let fp = f_of_t(space, weight, s, u, h, mu_s)?;
    let fm = f_of_t(space, weight, s, u, -h, mu_s)?;
    let d = space.dim() as f64;
    let predicted = (d + 1.0) / d * mu_s.integrate(|p| u(p));
    Ok(((fp - fm) / (2.0 * h), predicted))
}

/// `|f_s'(0) - ((d+1)/d) int u dmu_s|` with the derivative taken by a
/// centered difference of step `1e-4`.
pub fn first_derivative_residual(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    u: &ScalarField,
    mu_s: &DiscreteDesign,
) -> Result<f64> {
    let (fd, predicted) = first_derivative_pair(space, weight, s, u, mu_s, DERIVATIVE_STEP)?;
    Ok((fd - predicted).abs())
}

/// Largest second difference `f(t+h) - 2 f(t) + f(t-h)` over the interior of
/// an evenly spaced `t_grid`; concavity means this is `<= 0` up to rounding.
pub fn concavity_probe(
    space: &DesignSpace,
    weight: &WeightFunction,
    s: usize,
    u: &ScalarField,
    mu_s: &DiscreteDesign,
    t_grid: &[f64],
) -> Result<f64> {
    if t_grid.len() < 3 {
        return Err(Error::invalid("t grid needs at least three points"));
    }
    let h = t_grid[1] - t_grid[0];
    if !(h > 0.0) {
        return Err(Error::invalid("t grid must be increasing"));
    }
    for w in t_grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::invalid("t grid must be evenly spaced"));
        }
    }
    let f: Vec<f64> = t_grid
        .iter()
        .map(|&t| f_of_t(space, weight, s, u, t, mu_s))
        .collect::<Result<_>>()?;
    Ok(f.windows(3)
        .map(|w| w[2] - 2.0 * w[1] + w[0])
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Evenly spaced `t` values from `lo` to `hi` inclusive.
pub fn t_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect()
}

/// Test monomials up to total degree `t_max`: `x^alpha` for real spaces and
/// `z^alpha conj(z)^beta` for complex ones.
fn test_monomials(d: usize, t_max: usize, complex: bool) -> Vec<(MultiIndex, MultiIndex)> {
    let zero = MultiIndex(vec![0; d]);
    if !complex {
        return graded_indices(d, t_max)
            .into_iter()
            .map(|a| (a, zero.clone()))
            .collect();
    }
    let all = graded_indices(d, t_max);
    let mut out = Vec::new();
    for a in &all {
        for b in &all {
            if a.degree() + b.degree() <= t_max {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

fn design_moment(design: &DiscreteDesign, a: &MultiIndex, b: &MultiIndex) -> Complex64 {
    design
        .iter()
        .map(|(p, w)| {
            let mut v = Complex64::new(w, 0.0);
            for (i, z) in p.coords().iter().enumerate() {
                v *= z.powu(a.0[i]) * z.conj().powu(b.0[i]);
            }
            v
        })
        .sum()
}

fn check_target(design_dim: usize, design_complex: bool, target: &EquilibriumMeasure) -> Result<()> {
    if design_dim != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: design_dim,
        });
    }
    if design_complex != target.is_complex() {
        return Err(Error::invalid(format!(
            "target {} does not match a {} design space",
            target.describe(),
            if design_complex { "complex" } else { "real" }
        )));
    }
    Ok(())
}

/// Max over test monomials of degree `<= t_max` of
/// `|int p dmu - int p dmu_eq|`.
pub fn moment_distance(
    design: &DiscreteDesign,
    target: &EquilibriumMeasure,
    t_max: usize,
) -> Result<f64> {
    let complex = target.is_complex();
    check_target(design.dim(), complex || !design.support().iter().all(Point::is_real), target)?;
    let mut worst: f64 = 0.0;
    for (a, b) in test_monomials(design.dim(), t_max, complex) {
        let want = target.mixed_moment(&a, &b)?;
        let got = design_moment(design, &a, &b);
        worst = worst.max((got - want).norm());
    }
    Ok(worst)
}

/// `|int |x|^2 dmu - int |x|^2 dmu_eq|`.
pub fn second_moment_error(design: &DiscreteDesign, target: &EquilibriumMeasure) -> Result<f64> {
    let d = target.dim();
    let mut want = 0.0;
    for i in 0..d {
        let mut e = vec![0; d];
        e[i] = 1;
        let e = MultiIndex(e);
        want += target.mixed_moment(&e, &e)?;
    }
    let got = design.integrate(|p| p.norm_sqr());
    Ok((got - want).abs())
}

/// Kolmogorov distance between a one-dimensional design and a 1D target.
pub fn ks_distance(design: &DiscreteDesign, target: &EquilibriumMeasure) -> Result<f64> {
    if design.dim() != 1 || target.dim() != 1 || target.is_complex() {
        return Err(Error::invalid("Kolmogorov distance needs one real dimension"));
    }
    let mut atoms: Vec<(f64, f64)> = design.iter().map(|(p, w)| (p.coord(0).re, w)).collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < atoms.len() {
        let x = atoms[i].0;
        let mut mass = 0.0;
        while i < atoms.len() && atoms[i].0 == x {
            mass += atoms[i].1;
            i += 1;
        }
        let f = target.cdf(x)?;
        worst = worst.max((f - below).abs()).max((f - below - mass).abs());
        below += mass;
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub s: usize,
    pub n: usize,
    pub m_s: usize,
    pub kw_gap: f64,
    pub converged: bool,
    pub iterations: usize,
    pub moment_distance: f64,
    pub second_moment_error: f64,
    pub ks_distance: Option<f64>,
    /// Wall time of the solve; cleared when byte-stable output is wanted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub target: String,
    pub space: String,
    pub weight: String,
    pub t_max: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// One row per degree; the runtime column appears only if every row
    /// carries a runtime.
    pub fn to_csv(&self) -> Csv {
        let with_runtime = !self.rows.is_empty() && self.rows.iter().all(|r| r.runtime_seconds.is_some());
        let mut header = vec![
            "s",
            "n",
            "m_s",
            "kw_gap",
            "converged",
            "iterations",
            "moment_distance",
            "second_moment_error",
            "ks_distance",
        ];
        if with_runtime {
            header.push("runtime_seconds");
        }
        let mut t = Csv::new(&header);
        for r in &self.rows {
            let mut row = vec![
                r.s.to_string(),
                r.n.to_string(),
                r.m_s.to_string(),
                fmt_real(r.kw_gap),
                r.converged.to_string(),
                r.iterations.to_string(),
                fmt_real(r.moment_distance),
                fmt_real(r.second_moment_error),
                r.ks_distance.map(fmt_real).unwrap_or_default(),
            ];
            if with_runtime {
                row.push(fmt_real(r.runtime_seconds.unwrap_or_default()));
            }
            t.push(row);
        }
        t
    }

    /// Two-column `s value` series for one metric.
    pub fn plot_series(&self, metric: &str) -> Result<String> {
        let mut out = format!("# s {metric}\n");
        for r in &self.rows {
            let v = match metric {
                "moment_distance" => r.moment_distance,
                "second_moment_error" => r.second_moment_error,
                "kw_gap" => r.kw_gap,
                "ks_distance" => match r.ks_distance {
                    Some(v) => v,
                    None => return Err(Error::invalid("no ks_distance for this sweep")),
                },
                other => return Err(Error::invalid(format!("unknown metric '{other}'"))),
            };
            out.push_str(&format!("{} {}\n", r.s, fmt_real(v)));
        }
        Ok(out)
    }

    pub fn without_runtime(mut self) -> Self {
        for r in &mut self.rows {
            r.runtime_seconds = None;
        }
        self
    }

    pub fn column(&self, f: impl Fn(&ConvergenceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Solve for the optimal design at each `s` and compare it with `target`.
pub fn convergence_sweep(
    space: &DesignSpace,
    weight: &WeightFunction,
    s_values: &[usize],
    target: &EquilibriumMeasure,
    t_max: usize,
    solver: &SolverOptions,
) -> Result<ConvergenceReport> {
    check_target(space.dim(), !space.is_real(), target)?;
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_unstable();
    s_sorted.dedup();
    let rows = s_sorted
        .par_iter()
        .map(|&s| {
            let start = Instant::now();
            let opt = d_optimal(space, weight, s, solver)?;
            let runtime_seconds = start.elapsed().as_secs_f64();
            let ks = if space.dim() == 1 && space.is_real() {
                Some(ks_distance(&opt.design, target)?)
            } else {
                None
            };
            Ok(ConvergenceRow {
                s,
                n: opt.n,
                m_s: degree_sum(space.dim(), s)?,
                kw_gap: opt.kw_gap,
                converged: opt.converged,
                iterations: opt.iterations,
                moment_distance: moment_distance(&opt.design, target, t_max)?,
                second_moment_error: second_moment_error(&opt.design, target)?,
                ks_distance: ks,
                runtime_seconds: Some(runtime_seconds),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        target: target.describe(),
        space: space.describe(),
        weight: weight.describe(),
        t_max,
        rows,
    })
}
