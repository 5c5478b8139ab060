//! Design spaces with candidate grids, discrete designs and admissible
//! weight functions.

use crate::basis::{space_dimension, PolyBasis, Point};
use crate::error::{Error, Result};
use crate::linalg::{pivoted_row_selection, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Two points closer than this are the same atom.
pub const ATOM_TOL: f64 = 1e-12;

const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Interval,
    Cube,
    Ball,
    Simplex,
    ComplexDisk,
    CustomGrid,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainKind::Interval => "interval",
            DomainKind::Cube => "cube",
            DomainKind::Ball => "ball",
            DomainKind::Simplex => "simplex",
            DomainKind::ComplexDisk => "complex-disk",
            DomainKind::CustomGrid => "custom-grid",
        };
        f.write_str(s)
    }
}

/// A compact design space represented by a finite candidate grid.
#[derive(Clone, Debug)]
pub struct DesignSpace {
    kind: DomainKind,
    dim: usize,
    a: f64,
    grid: Vec<Point>,
}

/// `-a cos(pi k / (m - 1))`, ascending, with exact endpoints and centre.
pub fn chebyshev_lobatto(a: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    (0..m)
        .map(|k| {
            // symmetric evaluation keeps x_k = -x_{m-1-k} exactly
            let j = (m - 1) as f64;
            let t = (2.0 * k as f64 - j) / j;
            a * (0.5 * PI * t).sin()
        })
        .collect()
}

fn check_size(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("size parameter must be positive, got {a}")));
    }
    Ok(())
}

impl DesignSpace {
    /// `[-a, a]` with `m` Chebyshev–Lobatto points.
    pub fn interval(a: f64, m: usize) -> Result<Self> {
        check_size(a)?;
        if m < 2 {
            return Err(Error::invalid("interval grid needs at least 2 points"));
        }
        Ok(DesignSpace {
            kind: DomainKind::Interval,
            dim: 1,
            a,
            grid: chebyshev_lobatto(a, m).into_iter().map(Point::real1).collect(),
        })
    }

    /// `[-a, a]^d` with a tensor grid of `m` Chebyshev–Lobatto points per axis.
    pub fn cube(d: usize, a: f64, m: usize) -> Result<Self> {
        check_size(a)?;
        if d == 0 || m < 2 {
            return Err(Error::invalid("cube needs d >= 1 and >= 2 points per axis"));
        }
        let total = m
            .checked_pow(d as u32)
            .filter(|&t| t <= 5_000_000)
            .ok_or_else(|| Error::invalid("cube grid too large"))?;
        let axis = chebyshev_lobatto(a, m);
        let mut grid = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            grid.push(Point::real(&idx.iter().map(|&i| axis[i]).collect::<Vec<_>>()));
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < m {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(DesignSpace {
            kind: DomainKind::Cube,
            dim: d,
            a,
            grid,
        })
    }

    /// Real ball `|x| <= a`. The grid is the centre plus `rings` spheres with
    /// radii clustered toward the boundary, each carrying `directions` points
    /// (equispaced angles for `d = 2`, a Fibonacci lattice for `d = 3`). For
    /// `d = 1` this is the Chebyshev interval grid; for `d >= 4` a Chebyshev
    /// cube grid restricted to the ball.
    pub fn ball(d: usize, a: f64, rings: usize, directions: usize) -> Result<Self> {
        check_size(a)?;
        if rings == 0 || directions == 0 {
            return Err(Error::invalid("ball grid needs rings and directions >= 1"));
        }
        let grid = match d {
            0 => return Err(Error::invalid("dimension must be >= 1")),
            1 => chebyshev_lobatto(a, 2 * rings + 1)
                .into_iter()
                .map(Point::real1)
                .collect(),
            2 | 3 => {
                let dirs = sphere_directions(d, directions);
                let mut g = vec![Point::real(&vec![0.0; d])];
                for j in 1..=rings {
                    let r = a * (0.5 * PI * j as f64 / rings as f64).sin();
                    for u in &dirs {
                        g.push(Point::real(&u.iter().map(|c| r * c).collect::<Vec<_>>()));
                    }
                }
                g
            }
            _ => {
                let cube = DesignSpace::cube(d, a, 2 * rings + 1)?;
                cube.grid
                    .into_iter()
                    .filter(|p| p.norm() <= a * (1.0 + MEMBERSHIP_TOL))
                    .collect()
            }
        };
        Ok(DesignSpace {
            kind: DomainKind::Ball,
            dim: d,
            a,
            grid,
        })
    }

    /// Simplex `x_i >= 0, sum x_i <= a`, sampled on the barycentric lattice
    /// `a k / m` with `sum k <= m`.
    pub fn simplex(d: usize, a: f64, m: usize) -> Result<Self> {
        check_size(a)?;
        if d == 0 || m == 0 {
            return Err(Error::invalid("simplex needs d >= 1 and m >= 1"));
        }
        let mut grid = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            if idx.iter().sum::<usize>() <= m {
                grid.push(Point::real(
                    &idx.iter().map(|&k| a * k as f64 / m as f64).collect::<Vec<_>>(),
                ));
            }
            let mut carry = true;
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot <= m {
                    carry = false;
                    break;
                }
                *slot = 0;
            }
            if carry {
                break;
            }
        }
        Ok(DesignSpace {
            kind: DomainKind::Simplex,
            dim: d,
            a,
            grid,
        })
    }

    /// Closed disk `|z| <= a` in the complex plane: the centre plus `rings`
    /// equispaced radii, each with `angles` equispaced arguments.
    pub fn complex_disk(a: f64, rings: usize, angles: usize) -> Result<Self> {
        check_size(a)?;
        if rings == 0 || angles == 0 {
            return Err(Error::invalid("disk grid needs rings and angles >= 1"));
        }
        let mut grid = vec![Point::complex1(Complex64::new(0.0, 0.0))];
        for j in 1..=rings {
            let r = a * j as f64 / rings as f64;
            for k in 0..angles {
                grid.push(Point::complex1(Complex64::from_polar(
                    r,
                    2.0 * PI * k as f64 / angles as f64,
                )));
            }
        }
        Ok(DesignSpace {
            kind: DomainKind::ComplexDisk,
            dim: 1,
            a,
            grid,
        })
    }

    /// An explicit list of candidate points; membership means being one of them.
    pub fn custom(points: Vec<Point>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.dim())
            .ok_or_else(|| Error::invalid("custom grid is empty"))?;
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        check_distinct(&points)?;
        let a = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
        Ok(DesignSpace {
            kind: DomainKind::CustomGrid,
            dim,
            a,
            grid: points,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> f64 {
        self.a
    }

    pub fn grid(&self) -> &[Point] {
        &self.grid
    }

    pub fn is_real(&self) -> bool {
        self.grid.iter().all(Point::is_real)
    }

    pub fn contains(&self, z: &Point) -> bool {
        if z.dim() != self.dim {
            return false;
        }
        let a = self.a * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL;
        let xs: Vec<f64> = z.coords().iter().map(|c| c.re).collect();
        match self.kind {
            DomainKind::Interval | DomainKind::Cube => {
                z.is_real() && xs.iter().all(|x| x.abs() <= a)
            }
            DomainKind::Ball => z.is_real() && z.norm() <= a,
            DomainKind::Simplex => {
                z.is_real()
                    && xs.iter().all(|&x| x >= -MEMBERSHIP_TOL)
                    && xs.iter().sum::<f64>() <= a
            }
            DomainKind::ComplexDisk => z.norm() <= a,
            DomainKind::CustomGrid => self.grid.iter().any(|p| p.distance(z) <= ATOM_TOL),
        }
    }

    /// Short description used in reports.
    pub fn describe(&self) -> String {
        format!(
            "{}(d={}, a={}, grid={})",
            self.kind,
            self.dim,
            self.a,
            self.grid.len()
        )
    }
}

fn sphere_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let y = if count == 1 {
                        0.0
                    } else {
                        1.0 - 2.0 * k as f64 / (count - 1) as f64
                    };
                    let r = (1.0 - y * y).max(0.0).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), y, r * t.sin()]
                })
                .collect()
        }
        _ => unreachable!("sphere directions only for d = 2, 3"),
    }
}

fn check_distinct(points: &[Point]) -> Result<()> {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].distance(&points[j]) <= ATOM_TOL {
                return Err(Error::invalid(format!(
                    "duplicate support points at indices {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

/// A probability measure with finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDesign {
    support: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteDesign {
    /// Build without validation; callers guarantee distinct points and
    /// nonnegative weights summing to one.
    pub(crate) fn from_parts_unchecked(support: Vec<Point>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(support.len(), weights.len());
        DiscreteDesign { support, weights }
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support.first().map(|p| p.dim()).unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }

    /// `sum_k weight_k f(x_k)`.
    pub fn integrate(&self, mut f: impl FnMut(&Point) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Convex combination `(1 - t) self + t other`; atoms shared by both
    /// designs are merged.
    pub fn mix(&self, other: &DiscreteDesign, t: f64) -> Result<DiscreteDesign> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid("mixing parameter must lie in [0, 1]"));
        }
        let mut support = self.support.clone();
        let mut weights: Vec<f64> = self.weights.iter().map(|w| (1.0 - t) * w).collect();
        for (p, w) in other.iter() {
            match support.iter().position(|q| q.distance(p) <= ATOM_TOL) {
                Some(i) => weights[i] += t * w,
                None => {
                    support.push(p.clone());
                    weights.push(t * w);
                }
            }
        }
        Ok(DiscreteDesign { support, weights })
    }

    pub fn to_json(&self, degree: usize) -> DesignJson {
        DesignJson {
            dimension: self.dim(),
            degree,
            points: self
                .support
                .iter()
                .map(|p| p.coords().iter().map(|c| [c.re, c.im]).collect())
                .collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn from_json(json: &DesignJson) -> Result<DiscreteDesign> {
        let points = json
            .points
            .iter()
            .map(|coords| {
                if coords.len() != json.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: json.dimension,
                        got: coords.len(),
                    });
                }
                Point::new(coords.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        make_design(points, json.weights.clone())
    }
}

/// Serialized design: `points[k][i] = [re, im]` of coordinate `i` of atom `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignJson {
    pub dimension: usize,
    pub degree: usize,
    pub points: Vec<Vec<[f64; 2]>>,
    pub weights: Vec<f64>,
}

/// Validate a design. Weights whose sum is within `1e-9` of one are
/// renormalized; a larger deviation is an error.
pub fn make_design(points: Vec<Point>, weights: Vec<f64>) -> Result<DiscreteDesign> {
    if points.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::invalid("design must have at least one atom"));
    }
    let d = points[0].dim();
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.dim(),
        });
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w >= 0.0 && w.is_finite()))
    {
        return Err(Error::invalid(format!("weight {i} is negative or not finite: {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() >= 1e-9 {
        return Err(Error::invalid(format!("weight sum {total} is not 1")));
    }
    check_distinct(&points)?;
    let weights = weights.into_iter().map(|w| w / total).collect();
    Ok(DiscreteDesign {
        support: points,
        weights,
    })
}

/// Equal mass `1/m` on each of `m` distinct points.
pub fn uniform_design(points: Vec<Point>) -> Result<DiscreteDesign> {
    if points.is_empty() {
        return Err(Error::invalid("uniform design needs at least one point"));
    }
    let w = 1.0 / points.len() as f64;
    let weights = vec![w; points.len()];
    make_design(points, weights)
}

/// Output of [`prune_and_merge`].
#[derive(Clone, Debug)]
pub struct Pruned {
    pub design: DiscreteDesign,
    /// Mass removed by the weight threshold before renormalization.
    pub dropped_mass: f64,
}

/// Drop atoms lighter than `weight_tol`, then merge clusters whose members
/// are chained within `merge_radius` into their weighted barycenter.
pub fn prune_and_merge(
    design: &DiscreteDesign,
    weight_tol: f64,
    merge_radius: f64,
) -> Result<Pruned> {
    if !(weight_tol >= 0.0 && merge_radius >= 0.0) {
        return Err(Error::invalid("tolerances must be nonnegative"));
    }
    let kept: Vec<(Point, f64)> = design
        .iter()
        .filter(|(_, w)| *w >= weight_tol)
        .map(|(p, w)| (p.clone(), w))
        .collect();
    let kept_mass: f64 = kept.iter().map(|(_, w)| w).sum();
    let dropped_mass = design.weights.iter().sum::<f64>() - kept_mass;
    if kept.is_empty() || !(kept_mass > 0.0) {
        return Err(Error::invalid("all design mass was pruned"));
    }

    // single-linkage clusters via union-find
    let m = kept.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    if merge_radius > 0.0 {
        for i in 0..m {
            for j in (i + 1)..m {
                if kept[i].0.distance(&kept[j].0) <= merge_radius {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => members[k].push(i),
            None => {
                roots.push(r);
                members.push(vec![i]);
            }
        }
    }
    if kept.len() == design.len() && members.len() == kept.len() {
        return Ok(Pruned {
            design: design.clone(),
            dropped_mass: 0.0,
        });
    }
    let d = kept[0].0.dim();
    let mut support = Vec::with_capacity(members.len());
    let mut weights = Vec::with_capacity(members.len());
    for group in members {
        if group.len() == 1 {
            support.push(kept[group[0]].0.clone());
            weights.push(kept[group[0]].1 / kept_mass);
            continue;
        }
        let mass: f64 = group.iter().map(|&i| kept[i].1).sum();
        let mut coords = vec![Complex64::new(0.0, 0.0); d];
        for &i in &group {
            for (c, x) in coords.iter_mut().zip(kept[i].0.coords()) {
                *c += x * kept[i].1;
            }
        }
        if mass > 0.0 {
            coords.iter_mut().for_each(|c| *c /= mass);
        } else {
            coords = kept[group[0]].0.coords().to_vec();
        }
        support.push(Point::new(coords)?);
        weights.push(mass / kept_mass);
    }
    Ok(Pruned {
        design: DiscreteDesign { support, weights },
        dropped_mass,
    })
}

type WeightFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WeightKind {
    Unit,
    /// `exp(-scale |z|^2)`.
    GaussianRadial { scale: f64 },
    /// Values on listed points; zero elsewhere.
    Table { points: Vec<Point>, values: Vec<f64> },
    Custom { name: String, f: WeightFn },
}

impl fmt::Debug for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Unit => write!(f, "Unit"),
            WeightKind::GaussianRadial { scale } => write!(f, "GaussianRadial({scale})"),
            WeightKind::Table { points, .. } => write!(f, "Table({} points)", points.len()),
            WeightKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// An admissible weight `w >= 0` on the design space, with `phi = -log w`.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    kind: WeightKind,
    factor: f64,
}

impl WeightFunction {
    pub fn unit() -> Self {
        WeightFunction {
            kind: WeightKind::Unit,
            factor: 1.0,
        }
    }

    /// `exp(-|z|^2)`, i.e. `phi(z) = |z|^2`.
    pub fn gaussian() -> Self {
        Self::gaussian_scaled(1.0)
    }

    pub fn gaussian_scaled(scale: f64) -> Self {
        WeightFunction {
            kind: WeightKind::GaussianRadial { scale },
            factor: 1.0,
        }
    }

    pub fn table(points: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::invalid("weight table: points and values differ in length"));
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("weight table values must be finite and >= 0"));
        }
        Ok(WeightFunction {
            kind: WeightKind::Table { points, values },
            factor: 1.0,
        })
    }

    /// Arbitrary callable; it must return values `>= 0`.
    pub fn custom(name: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        WeightFunction {
            kind: WeightKind::Custom {
                name: name.into(),
                f: Arc::new(f),
            },
            factor: 1.0,
        }
    }

    /// `c * w` for a constant `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0, "weight scale must be positive");
        WeightFunction {
            kind: self.kind.clone(),
            factor: self.factor * c,
        }
    }

    /// `w_t(z) = w(z) exp(-t u(z))`.
    pub fn tilted(&self, u: Arc<dyn Fn(&Point) -> f64 + Send + Sync>, t: f64) -> Self {
        let base = self.clone();
        WeightFunction::custom(format!("{}*exp(-{t}u)", base.describe()), move |z| {
            base.eval(z) * (-t * u(z)).exp()
        })
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.kind, WeightKind::Unit) && self.factor == 1.0
    }

    pub fn eval(&self, z: &Point) -> f64 {
        let v = match &self.kind {
            WeightKind::Unit => 1.0,
            WeightKind::GaussianRadial { scale } => (-scale * z.norm_sqr()).exp(),
            WeightKind::Table { points, values } => points
                .iter()
                .position(|p| p.distance(z) <= ATOM_TOL)
                .map(|i| values[i])
                .unwrap_or(0.0),
            WeightKind::Custom { f, .. } => f(z),
        };
        self.factor * v
    }

    /// `phi = -log w`; `+inf` where `w = 0`.
    pub fn phi(&self, z: &Point) -> f64 {
        -self.eval(z).ln()
    }

    pub fn describe(&self) -> String {
        let base = match &self.kind {
            WeightKind::Unit => "unit".to_string(),
            WeightKind::GaussianRadial { scale } => format!("gaussian(scale={scale})"),
            WeightKind::Table { points, .. } => format!("table({} points)", points.len()),
            WeightKind::Custom { name, .. } => name.clone(),
        };
        if self.factor == 1.0 {
            base
        } else {
            format!("{}*{}", self.factor, base)
        }
    }

    pub fn to_spec(&self) -> Option<WeightSpec> {
        let spec = match &self.kind {
            WeightKind::Unit => WeightSpec::Unit,
            WeightKind::GaussianRadial { scale } => WeightSpec::Gaussian { scale: *scale },
            WeightKind::Table { points, values } => WeightSpec::Table {
                points: points
                    .iter()
                    .map(|p| p.coords().iter().map(|c| [c.re, c.im]).collect())
                    .collect(),
                values: values.clone(),
            },
            WeightKind::Custom { .. } => return None,
        };
        if self.factor != 1.0 {
            return None;
        }
        Some(spec)
    }
}

/// JSON form of a weight: `{"kind": "unit" | "gaussian" | "table", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    Unit,
    Gaussian {
        #[serde(default = "one")]
        scale: f64,
    },
    Table {
        points: Vec<Vec<[f64; 2]>>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl WeightSpec {
    pub fn build(&self) -> Result<WeightFunction> {
        match self {
            WeightSpec::Unit => Ok(WeightFunction::unit()),
            WeightSpec::Gaussian { scale } => {
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::invalid("gaussian scale must be finite and >= 0"));
                }
                Ok(WeightFunction::gaussian_scaled(*scale))
            }
            WeightSpec::Table { points, values } => {
                let pts = points
                    .iter()
                    .map(|c| Point::new(c.iter().map(|&[re, im]| Complex64::new(re, im)).collect()))
                    .collect::<Result<Vec<_>>>()?;
                WeightFunction::table(pts, values.clone())
            }
        }
    }
}

/// Finite-rank stand-in for non-pluripolarity of `{w > 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub positive_points: usize,
    pub n: usize,
    pub rank: usize,
    pub pass: bool,
    pub reason: Option<String>,
}

/// Passes iff at least `n` grid points have `w > 0` and the Vandermonde
/// matrix on those points has numerical rank `n`.
pub fn check_admissible(weight: &WeightFunction, space: &DesignSpace, s: usize) -> AdmissibilityReport {
    let n = match space_dimension(space.dim(), s) {
        Ok(n) => n,
        Err(e) => {
            return AdmissibilityReport {
                positive_points: 0,
                n: 0,
                rank: 0,
                pass: false,
                reason: Some(e.to_string()),
            }
        }
    };
    let mut bad = None;
    let positive: Vec<Point> = space
        .grid()
        .iter()
        .filter(|p| {
            let w = weight.eval(p);
            if w < 0.0 || w.is_nan() {
                bad = Some(w);
            }
            w > 0.0
        })
        .cloned()
        .collect();
    let fail = |rank: usize, reason: String| AdmissibilityReport {
        positive_points: positive.len(),
        n,
        rank,
        pass: false,
        reason: Some(reason),
    };
    if let Some(w) = bad {
        return fail(0, format!("weight takes invalid value {w} on the grid"));
    }
    if positive.is_empty() {
        return fail(0, "w ≡ 0 on grid".to_string());
    }
    if positive.len() < n {
        return fail(
            0,
            format!(
                "fewer positive-weight points than n ({} < {n})",
                positive.len()
            ),
        );
    }
    let rank = match numerical_rank(space.dim(), s, &positive) {
        Ok(r) => r,
        Err(e) => return fail(0, e.to_string()),
    };
    if rank < n {
        return fail(
            rank,
            format!("Vandermonde on positive-weight points has rank {rank} < n = {n}"),
        );
    }
    AdmissibilityReport {
        positive_points: positive.len(),
        n,
        rank,
        pass: true,
        reason: None,
    }
}

fn numerical_rank(d: usize, s: usize, points: &[Point]) -> Result<usize> {
    let basis = PolyBasis::stabilized_for(d, s, points)?;
    let n = basis.len();
    let mut data = vec![Complex64::new(0.0, 0.0); points.len() * n];
    for (i, p) in points.iter().enumerate() {
        basis.eval_into(p, &mut data[i * n..(i + 1) * n]);
    }
    let a = Mat::from_rows(points.len(), n, data);
    Ok(pivoted_row_selection(&a, n, 1e-10).len())
}
