//! Closed-form equilibrium measures: the arcsine law on an interval, its
//! products on cubes, the ball and simplex laws, and the uniform law on the
//! disk of radius `1/sqrt 2` that arises for the weight `exp(-|z|^2)`.
//!
//! Normalizing constants are obtained by quadrature when a measure is built.

use crate::basis::{MultiIndex, Point};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

const QUAD_TOL: f64 = 1e-13;
const MAX_MOMENT_DEGREE: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    IntervalArcsine,
    Cube,
    Ball,
    Simplex,
    WeightedComplexBall,
}

impl std::fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EquilibriumKind::IntervalArcsine => "interval-arcsine",
            EquilibriumKind::Cube => "cube",
            EquilibriumKind::Ball => "ball",
            EquilibriumKind::Simplex => "simplex",
            EquilibriumKind::WeightedComplexBall => "weighted-complex-ball",
        })
    }
}

impl std::str::FromStr for EquilibriumKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "interval-arcsine" | "arcsine" => EquilibriumKind::IntervalArcsine,
            "cube" => EquilibriumKind::Cube,
            "ball" => EquilibriumKind::Ball,
            "simplex" => EquilibriumKind::Simplex,
            "weighted-complex-ball" | "weighted-disk" => EquilibriumKind::WeightedComplexBall,
            other => return Err(Error::invalid(format!("unknown equilibrium kind '{other}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMeasure {
    kind: EquilibriumKind,
    d: usize,
    a: f64,
    c_d: f64,
}

/// `int_0^{pi/2} sin^p`.
fn wallis(p: usize) -> Result<f64> {
    integrate(|t| t.sin().powi(p as i32), 0.0, FRAC_PI_2, QUAD_TOL)
}

/// `B(p, q)` through `t = sin^2 theta`, which removes the endpoint
/// singularities for `p, q >= 1/2`.
fn beta_fn(p: f64, q: f64) -> Result<f64> {
    let v = integrate(
        |t| t.sin().powf(2.0 * p - 1.0) * t.cos().powf(2.0 * q - 1.0),
        0.0,
        FRAC_PI_2,
        QUAD_TOL,
    )?;
    Ok(2.0 * v)
}

/// Surface area of the unit sphere in `R^k`.
fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area(k - 2) / (k - 2) as f64,
    }
}

fn double_factorial_odd(k: u32) -> f64 {
    // (k-1)!! for even k
    (1..k).step_by(2).map(|j| j as f64).product()
}

/// Average of `theta^alpha` over the unit sphere in `R^d`.
fn real_sphere_average(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let d = alpha.len();
    let k: u32 = alpha.iter().sum();
    let num: f64 = alpha.iter().map(|&a| double_factorial_odd(a)).product();
    let den: f64 = (0..k / 2).map(|j| (d + 2 * j as usize) as f64).product();
    num / den
}

/// Average of `|z^alpha|^2` over the unit sphere in `C^d`.
fn complex_sphere_average(alpha: &[u32]) -> f64 {
    let d = alpha.len();
    let k: usize = alpha.iter().map(|&a| a as usize).sum();
    let fact = |n: usize| (1..=n).map(|j| j as f64).product::<f64>();
    alpha.iter().map(|&a| fact(a as usize)).product::<f64>() * fact(d - 1) / fact(d - 1 + k)
}

impl EquilibriumMeasure {
    pub fn new(kind: EquilibriumKind, d: usize, a: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be >= 1"));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("size parameter must be positive"));
        }
        let d = if kind == EquilibriumKind::IntervalArcsine {
            if d != 1 {
                return Err(Error::invalid("the arcsine law is one-dimensional"));
            }
            1
        } else {
            d
        };
        let c_d = match kind {
            EquilibriumKind::IntervalArcsine | EquilibriumKind::Cube => {
                // int (a^2 - x^2)^{-1/2} dx with x = a sin t
                let one = integrate(|_| 1.0, -FRAC_PI_2, FRAC_PI_2, QUAD_TOL)?;
                one.powi(-(d as i32))
            }
            EquilibriumKind::Ball => {
                // C a^{1-d} |S^{d-1}| int_0^a r^{d-1} (a^2-r^2)^{-1/2} dr
                1.0 / (sphere_area(d) * wallis(d - 1)?)
            }
            EquilibriumKind::Simplex => {
                // stick-breaking: prod_k B(1/2, (d+1-k)/2)
                let mut z = 1.0;
                for k in 1..=d {
                    z *= beta_fn(0.5, (d + 1 - k) as f64 / 2.0)?;
                }
                1.0 / z
            }
            EquilibriumKind::WeightedComplexBall => {
                let r = FRAC_1_SQRT_2;
                let radial = integrate(|p| p.powi(2 * d as i32 - 1), 0.0, r, QUAD_TOL)?;
                1.0 / (sphere_area(2 * d) * radial)
            }
        };
        let m = EquilibriumMeasure { kind, d, a, c_d };
        let total = m.total_mass()?;
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Quadrature(format!("{kind} mass {total} is not 1")));
        }
        Ok(m)
    }

    pub fn arcsine(a: f64) -> Result<Self> {
        Self::new(EquilibriumKind::IntervalArcsine, 1, a)
    }

    pub fn cube(d: usize, a: f64) -> Result<Self> {
        Self::new(EquilibriumKind::Cube, d, a)
    }

    pub fn ball(d: usize, a: f64) -> Result<Self> {
        Self::new(EquilibriumKind::Ball, d, a)
    }

    pub fn simplex(d: usize, a: f64) -> Result<Self> {
        Self::new(EquilibriumKind::Simplex, d, a)
    }

    /// Uniform law on `|z| <= 1/sqrt 2` in `C^d`.
    pub fn weighted_complex_ball(d: usize) -> Result<Self> {
        Self::new(EquilibriumKind::WeightedComplexBall, d, 1.0)
    }

    pub fn kind(&self) -> EquilibriumKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> f64 {
        self.a
    }

    pub fn normalization(&self) -> f64 {
        self.c_d
    }

    pub fn is_complex(&self) -> bool {
        self.kind == EquilibriumKind::WeightedComplexBall
    }

    pub fn describe(&self) -> String {
        match self.kind {
            EquilibriumKind::WeightedComplexBall => format!("{} d={}", self.kind, self.d),
            _ => format!("{} d={} a={}", self.kind, self.d, self.a),
        }
    }

    /// Mass integrated through each kind's singularity-free parametrization.
    fn total_mass(&self) -> Result<f64> {
        let (d, a, c) = (self.d, self.a, self.c_d);
        match self.kind {
            EquilibriumKind::IntervalArcsine | EquilibriumKind::Cube => {
                let line = integrate(
                    |t| {
                        let x = a * t.sin();
                        (a * a - x * x).sqrt().recip() * a * t.cos()
                    },
                    -FRAC_PI_2,
                    FRAC_PI_2,
                    QUAD_TOL,
                )?;
                Ok(c * line.powi(d as i32))
            }
            EquilibriumKind::Ball => {
                let radial = integrate(
                    |t| {
                        let r = a * t.sin();
                        r.powi(d as i32 - 1) / (a * a - r * r).sqrt() * a * t.cos()
                    },
                    0.0,
                    FRAC_PI_2,
                    QUAD_TOL,
                )?;
                Ok(c * a.powi(1 - d as i32) * sphere_area(d) * radial)
            }
            EquilibriumKind::Simplex => self.simplex_moment(&vec![0; d]),
            EquilibriumKind::WeightedComplexBall => {
                let radial =
                    integrate(|p| p.powi(2 * d as i32 - 1), 0.0, FRAC_1_SQRT_2, QUAD_TOL)?;
                Ok(c * sphere_area(2 * d) * radial)
            }
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got,
            });
        }
        Ok(())
    }

    /// Density at `x` (Lebesgue in `R^d`, or in `R^{2d}` for the complex
    /// kind); 0 outside the support and `+inf` where it blows up on the
    /// boundary.
    pub fn density(&self, x: &Point) -> Result<f64> {
        self.check_dim(x.dim())?;
        let (d, a, c) = (self.d, self.a, self.c_d);
        if self.kind == EquilibriumKind::WeightedComplexBall {
            return Ok(if x.norm() <= FRAC_1_SQRT_2 { c } else { 0.0 });
        }
        if !x.is_real() {
            return Ok(0.0);
        }
        let xs: Vec<f64> = x.coords().iter().map(|z| z.re).collect();
        Ok(match self.kind {
            EquilibriumKind::IntervalArcsine | EquilibriumKind::Cube => {
                if xs.iter().any(|v| v.abs() > a) {
                    return Ok(0.0);
                }
                let prod: f64 = xs.iter().map(|v| a * a - v * v).product();
                if prod == 0.0 {
                    f64::INFINITY
                } else {
                    c / prod.sqrt()
                }
            }
            EquilibriumKind::Ball => {
                let r2: f64 = xs.iter().map(|v| v * v).sum();
                if r2 > a * a {
                    0.0
                } else if r2 == a * a {
                    f64::INFINITY
                } else {
                    c * a.powi(1 - d as i32) / (a * a - r2).sqrt()
                }
            }
            EquilibriumKind::Simplex => {
                let rest = a - xs.iter().sum::<f64>();
                if rest < 0.0 || xs.iter().any(|&v| v < 0.0) {
                    return Ok(0.0);
                }
                let prod = rest * xs.iter().product::<f64>();
                if prod == 0.0 {
                    f64::INFINITY
                } else {
                    c * a.powf(-(d as f64 - 1.0) / 2.0) / prod.sqrt()
                }
            }
            EquilibriumKind::WeightedComplexBall => unreachable!(),
        })
    }

    /// Distribution function of a one-dimensional law.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if self.d != 1 || self.kind == EquilibriumKind::WeightedComplexBall {
            return Err(Error::invalid(format!("no CDF for {}", self.describe())));
        }
        let a = self.a;
        let u = match self.kind {
            EquilibriumKind::Simplex => 2.0 * x / a - 1.0,
            _ => x / a,
        };
        Ok((0.5 + u.clamp(-1.0, 1.0).asin() / PI).clamp(0.0, 1.0))
    }

    /// `int x^alpha dmu` for real kinds; for the complex kind this is the
    /// holomorphic moment `int z^alpha dmu`.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64> {
        self.check_dim(alpha.dim())?;
        if alpha.degree() > MAX_MOMENT_DEGREE {
            return Err(Error::invalid(format!(
                "moment degree {} exceeds {MAX_MOMENT_DEGREE}",
                alpha.degree()
            )));
        }
        let e = alpha.exponents();
        let (d, a, c) = (self.d, self.a, self.c_d);
        match self.kind {
            EquilibriumKind::IntervalArcsine | EquilibriumKind::Cube => {
                let c1 = c.powf(1.0 / d as f64);
                let mut total = 1.0;
                for &k in e {
                    if k % 2 == 1 {
                        return Ok(0.0);
                    }
                    total *= c1
                        * integrate(|t| (a * t.sin()).powi(k as i32), -FRAC_PI_2, FRAC_PI_2, QUAD_TOL)?;
                }
                Ok(total)
            }
            EquilibriumKind::Ball => {
                let avg = real_sphere_average(e);
                if avg == 0.0 {
                    return Ok(0.0);
                }
                let k = alpha.degree() as i32;
                let radial = integrate(
                    |t| (a * t.sin()).powi(k + d as i32 - 1),
                    0.0,
                    FRAC_PI_2,
                    QUAD_TOL,
                )?;
                Ok(c * a.powi(1 - d as i32) * sphere_area(d) * avg * radial)
            }
            EquilibriumKind::Simplex => self.simplex_moment(e),
            EquilibriumKind::WeightedComplexBall => {
                Ok(if alpha.degree() == 0 { 1.0 } else { 0.0 })
            }
        }
    }

    /// `int z^alpha conj(z)^beta dmu`; for real kinds this is the moment of
    /// `x^{alpha+beta}`.
    pub fn mixed_moment(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Result<f64> {
        self.check_dim(alpha.dim())?;
        self.check_dim(beta.dim())?;
        if self.kind != EquilibriumKind::WeightedComplexBall {
            let sum: Vec<u32> = alpha
                .exponents()
                .iter()
                .zip(beta.exponents())
                .map(|(x, y)| x + y)
                .collect();
            return self.moment(&MultiIndex(sum));
        }
        if alpha != beta {
            return Ok(0.0);
        }
        let k = alpha.degree();
        if 2 * k > MAX_MOMENT_DEGREE {
            return Err(Error::invalid(format!(
                "moment degree {} exceeds {MAX_MOMENT_DEGREE}",
                2 * k
            )));
        }
        let d = self.d as i32;
        let radial = integrate(|p| p.powi(2 * k as i32 + 2 * d - 1), 0.0, FRAC_1_SQRT_2, QUAD_TOL)?;
        Ok(self.c_d * sphere_area(2 * self.d) * complex_sphere_average(alpha.exponents()) * radial)
    }

    /// Stick-breaking: `y_k = t_k prod_{j<k} (1 - t_k)` with
    /// `t_k ~ Beta(1/2, (d+1-k)/2)`, so each moment factors into Beta
    /// integrals.
    fn simplex_moment(&self, e: &[u32]) -> Result<f64> {
        let d = self.d;
        let mut total = self.c_d * self.a.powi(e.iter().sum::<u32>() as i32);
        for k in 0..d {
            let tail: u32 = e[k + 1..].iter().sum();
            let q = (d - k) as f64 / 2.0;
            total *= beta_fn(0.5 + e[k] as f64, q + tail as f64)?;
        }
        Ok(total)
    }

    /// Independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Point> {
        let (d, a) = (self.d, self.a);
        let gauss_dir = |rng: &mut R, k: usize| -> Vec<f64> {
            loop {
                let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.0 {
                    return v.into_iter().map(|x| x / n).collect();
                }
            }
        };
        (0..count)
            .map(|_| match self.kind {
                EquilibriumKind::IntervalArcsine | EquilibriumKind::Cube => {
                    let xs: Vec<f64> = (0..d)
                        .map(|_| a * (PI * (rng.random::<f64>() - 0.5)).sin())
                        .collect();
                    Point::real(&xs)
                }
                EquilibriumKind::Ball => {
                    // (r/a)^2 ~ Beta(d/2, 1/2)
                    let b = Beta::new(d as f64 / 2.0, 0.5).expect("valid shape");
                    let r = a * b.sample(rng).sqrt();
                    let u = gauss_dir(rng, d);
                    Point::real(&u.iter().map(|x| r * x).collect::<Vec<_>>())
                }
                EquilibriumKind::Simplex => {
                    let g = Gamma::new(0.5, 1.0).expect("valid shape");
                    let draws: Vec<f64> = (0..=d).map(|_| g.sample(rng)).collect();
                    let total: f64 = draws.iter().sum();
                    Point::real(&draws[..d].iter().map(|x| a * x / total).collect::<Vec<_>>())
                }
                EquilibriumKind::WeightedComplexBall => {
                    let r = FRAC_1_SQRT_2 * rng.random::<f64>().powf(1.0 / (2 * d) as f64);
                    let u = gauss_dir(rng, 2 * d);
                    let coords = (0..d)
                        .map(|i| Complex64::new(r * u[2 * i], r * u[2 * i + 1]))
                        .collect();
                    Point::new(coords).expect("finite sample")
                }
            })
            .collect()
    }
}

/// Extremal function for the weight `exp(-|z|^2)` on the unit ball:
/// `|z|^2` inside radius `1/sqrt 2`, `log|z| + 1/2 + log sqrt 2` outside.
pub fn weighted_ball_green(z: &Point) -> f64 {
    let r = z.norm();
    if r <= FRAC_1_SQRT_2 {
        r * r
    } else {
        r.ln() + 0.5 - FRAC_1_SQRT_2.ln()
    }
}
