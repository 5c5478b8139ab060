//! Polynomial bases of total degree at most `s` in `d` variables.
//!
//! The public contract is the monomial basis in graded lexicographic order.
//! A stabilized variant replaces each coordinate power `x^k` by a shifted and
//! scaled Chebyshev polynomial `T_k` (real coordinates) or a scaled power
//! (complex coordinates). The change of basis is lower triangular in graded
//! order, so Christoffel values are identical and determinants differ only
//! by the known factor [`PolyBasis::log_abs_det_transform`].

use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::scalar::Scalar;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest degree per dimension before conditioning of double precision
/// factorizations becomes a concern.
pub fn degree_cap(d: usize) -> usize {
    match d {
        1 => 24,
        2 => 12,
        3 => 8,
        _ => 6,
    }
}

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::invalid("multi-index must have dimension >= 1"));
        }
        Ok(MultiIndex(exponents))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A point of `C^d`; real design spaces use zero imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<Complex64>,
}

impl Point {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Point { coords })
    }

    pub fn real(xs: &[f64]) -> Self {
        Point::new(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .expect("finite real coordinates")
    }

    pub fn real1(x: f64) -> Self {
        Point::real(&[x])
    }

    pub fn complex1(z: Complex64) -> Self {
        Point::new(vec![z]).expect("finite complex coordinate")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Complex64 {
        self.coords[i]
    }

    pub fn is_real(&self) -> bool {
        self.coords.iter().all(|c| c.im == 0.0)
    }

    /// Euclidean norm in `C^d`.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Coordinates as `2d` reals `(Re z_1, Im z_1, ...)`.
    pub fn real_parts_interleaved(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|c| [c.re, c.im]).collect()
    }
}

/// `C(s + d, d)`, the dimension of polynomials of degree at most `s` in `d`
/// variables.
pub fn space_dimension(d: usize, s: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    // C(s+d, d) = prod_{i=1}^{d} (s+i)/i, exact at every step
    let mut acc: u128 = 1;
    for i in 1..=d as u128 {
        acc = acc
            .checked_mul(s as u128 + i)
            .ok_or(Error::Overflow("space dimension"))?
            / i;
    }
    usize::try_from(acc).map_err(|_| Error::Overflow("space dimension"))
}

/// `m_s = d s n / (d + 1)`, the sum of the total degrees of the basis
/// monomials.
pub fn degree_sum(d: usize, s: usize) -> Result<usize> {
    let n = space_dimension(d, s)? as u128;
    let num = (d as u128)
        .checked_mul(s as u128)
        .and_then(|x| x.checked_mul(n))
        .ok_or(Error::Overflow("degree sum"))?;
    debug_assert_eq!(num % (d as u128 + 1), 0);
    usize::try_from(num / (d as u128 + 1)).map_err(|_| Error::Overflow("degree sum"))
}

/// All multi-indices of total degree `<= s` in graded lexicographic order:
/// degree ascending, and within a degree the first exponent descending.
pub fn graded_indices(d: usize, s: usize) -> Vec<MultiIndex> {
    fn fill(d: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() == d - 1 {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            fill(d, remaining - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for deg in 0..=s as u32 {
        fill(d, deg, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

/// Per-coordinate univariate family used by the stabilized basis.
#[derive(Clone, Debug, PartialEq)]
pub enum CoordMap {
    /// `T_k((x - center) / half_width)` for a real coordinate.
    Chebyshev { center: f64, half_width: f64 },
    /// `((z - center) / radius)^k` for a complex coordinate.
    ScaledPower { center: Complex64, radius: f64 },
}

impl CoordMap {
    /// Leading coefficient of the degree-`k` family member as a polynomial in
    /// the original coordinate.
    fn log_abs_leading(&self, k: u32) -> f64 {
        match *self {
            CoordMap::Chebyshev { half_width, .. } => {
                if k == 0 {
                    0.0
                } else {
                    (k as f64 - 1.0) * std::f64::consts::LN_2 - k as f64 * half_width.ln()
                }
            }
            CoordMap::ScaledPower { radius, .. } => -(k as f64) * radius.ln(),
        }
    }

    fn eval_family<T: Scalar>(&self, x: Complex64, out: &mut [T]) {
        match *self {
            CoordMap::Chebyshev { center, half_width } => {
                let t = T::from_complex((x - center) / half_width);
                out[0] = T::one();
                if out.len() > 1 {
                    out[1] = t;
                }
                for k in 2..out.len() {
                    out[k] = (t * out[k - 1]).scale(2.0) - out[k - 2];
                }
            }
            CoordMap::ScaledPower { center, radius } => {
                let t = T::from_complex((x - center) / radius);
                out[0] = T::one();
                for k in 1..out.len() {
                    out[k] = out[k - 1] * t;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisKind {
    Monomial,
    Stabilized(Vec<CoordMap>),
}

/// Ordered basis `{p_1, ..., p_n}` of polynomials of degree `<= s`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyBasis {
    dim: usize,
    degree: usize,
    indices: Vec<MultiIndex>,
    kind: BasisKind,
}

impl PolyBasis {
    pub fn monomial(d: usize, s: usize) -> Result<Self> {
        space_dimension(d, s)?;
        if s > degree_cap(d) {
            log::warn!("degree {s} exceeds the double-precision conditioning cap for d = {d}");
        }
        Ok(PolyBasis {
            dim: d,
            degree: s,
            indices: graded_indices(d, s),
            kind: BasisKind::Monomial,
        })
    }

    pub fn stabilized(d: usize, s: usize, maps: Vec<CoordMap>) -> Result<Self> {
        if maps.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: maps.len(),
            });
        }
        for m in &maps {
            let scale = match m {
                CoordMap::Chebyshev { half_width, .. } => *half_width,
                CoordMap::ScaledPower { radius, .. } => *radius,
            };
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::invalid("stabilized basis needs positive finite scales"));
            }
        }
        let mut b = PolyBasis::monomial(d, s)?;
        b.kind = BasisKind::Stabilized(maps);
        Ok(b)
    }

    /// Stabilized basis adapted to the bounding box of `points`: Chebyshev
    /// families on coordinates that are real on every point, scaled powers
    /// otherwise.
    pub fn stabilized_for(d: usize, s: usize, points: &[Point]) -> Result<Self> {
        let mut maps = Vec::with_capacity(d);
        for i in 0..d {
            let coords: Vec<Complex64> = points
                .iter()
                .map(|p| {
                    if p.dim() != d {
                        Err(Error::DimensionMismatch {
                            expected: d,
                            got: p.dim(),
                        })
                    } else {
                        Ok(p.coord(i))
                    }
                })
                .collect::<Result<_>>()?;
            let (lo_re, hi_re) = min_max(coords.iter().map(|c| c.re));
            let (lo_im, hi_im) = min_max(coords.iter().map(|c| c.im));
            if lo_im == 0.0 && hi_im == 0.0 {
                let half = 0.5 * (hi_re - lo_re);
                maps.push(CoordMap::Chebyshev {
                    center: 0.5 * (hi_re + lo_re),
                    half_width: if half > 0.0 { half } else { 1.0 },
                });
            } else {
                let center = Complex64::new(0.5 * (hi_re + lo_re), 0.5 * (hi_im + lo_im));
                let radius = coords.iter().map(|c| (c - center).norm()).fold(0.0, f64::max);
                maps.push(CoordMap::ScaledPower {
                    center,
                    radius: if radius > 0.0 { radius } else { 1.0 },
                });
            }
        }
        PolyBasis::stabilized(d, s, maps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn is_monomial(&self) -> bool {
        matches!(self.kind, BasisKind::Monomial)
    }

    /// `log|det T|` where `p_self = T p_monomial`; zero for the monomial basis.
    pub fn log_abs_det_transform(&self) -> f64 {
        match &self.kind {
            BasisKind::Monomial => 0.0,
            BasisKind::Stabilized(maps) => self
                .indices
                .iter()
                .map(|idx| {
                    idx.0
                        .iter()
                        .zip(maps)
                        .map(|(&k, m)| m.log_abs_leading(k))
                        .sum::<f64>()
                })
                .sum(),
        }
    }

    fn check_dim(&self, z: &Point) -> Result<()> {
        if z.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.dim(),
            });
        }
        Ok(())
    }

    /// Evaluate all basis elements at `z` into `out` (length `n`).
    pub(crate) fn eval_into<T: Scalar>(&self, z: &Point, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.len());
        let s = self.degree;
        // per-coordinate tables of univariate values 0..=s
        let mut table = vec![T::zero(); self.dim * (s + 1)];
        for i in 0..self.dim {
            let row = &mut table[i * (s + 1)..(i + 1) * (s + 1)];
            match &self.kind {
                BasisKind::Monomial => {
                    let x = T::from_complex(z.coord(i));
                    row[0] = T::one();
                    for k in 1..=s {
                        row[k] = row[k - 1] * x;
                    }
                }
                BasisKind::Stabilized(maps) => maps[i].eval_family(z.coord(i), row),
            }
        }
        for (o, idx) in out.iter_mut().zip(&self.indices) {
            let mut v = T::one();
            for (i, &e) in idx.0.iter().enumerate() {
                v *= table[i * (s + 1) + e as usize];
            }
            *o = v;
        }
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

/// The column of basis values `p(z) = [p_1(z), ..., p_n(z)]`.
pub fn eval_basis(basis: &PolyBasis, z: &Point) -> Result<Vec<Complex64>> {
    basis.check_dim(z)?;
    let mut out = vec![Complex64::new(0.0, 0.0); basis.len()];
    basis.eval_into(z, &mut out);
    Ok(out)
}

/// Vandermonde matrix `[p_j(z_i)]`, with `log|det|` and the unit-modulus
/// phase of the determinant when it is square.
#[derive(Clone, Debug)]
pub struct Vandermonde {
    pub matrix: Mat<Complex64>,
    pub log_abs_det: Option<f64>,
    pub phase: Option<Complex64>,
}

pub fn vandermonde(basis: &PolyBasis, points: &[Point]) -> Result<Vandermonde> {
    let n = basis.len();
    let mut data = vec![Complex64::new(0.0, 0.0); points.len() * n];
    for (i, z) in points.iter().enumerate() {
        basis.check_dim(z)?;
        basis.eval_into(z, &mut data[i * n..(i + 1) * n]);
    }
    let matrix = Mat::from_rows(points.len(), n, data);
    let (log_abs_det, phase) = if points.len() == n {
        let (l, ph) = Lu::new(&matrix).log_abs_det();
        (Some(l), Some(ph))
    } else {
        (None, None)
    };
    Ok(Vandermonde {
        matrix,
        log_abs_det,
        phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn space_dimension_examples() {
        assert_eq!(space_dimension(1, 3).unwrap(), 4);
        assert_eq!(space_dimension(2, 2).unwrap(), 6);
        assert_eq!(space_dimension(3, 1).unwrap(), 4);
        assert_eq!(space_dimension(4, 0).unwrap(), 1);
    }

    #[test]
    fn space_dimension_overflow_is_an_error() {
        assert!(matches!(
            space_dimension(60, usize::MAX / 2),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn degree_sum_examples() {
        assert_eq!(degree_sum(1, 3).unwrap(), 6);
        assert_eq!(degree_sum(2, 1).unwrap(), 2);
        assert_eq!(degree_sum(2, 2).unwrap(), 8);
    }

    #[test]
    fn degree_sum_matches_index_sum() {
        for d in 1..=4 {
            for s in 0..=10 {
                let direct: usize = graded_indices(d, s).iter().map(|m| m.degree()).sum();
                assert_eq!(direct, degree_sum(d, s).unwrap(), "d={d} s={s}");
                assert_eq!(graded_indices(d, s).len(), space_dimension(d, s).unwrap());
            }
        }
    }

    #[test]
    fn graded_order_is_degree_nondecreasing() {
        let idx = graded_indices(3, 4);
        assert!(idx.windows(2).all(|w| w[0].degree() <= w[1].degree()));
        let d2: Vec<Vec<u32>> = graded_indices(2, 2).into_iter().map(|m| m.0).collect();
        assert_eq!(
            d2,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn eval_basis_examples() {
        let b = PolyBasis::monomial(1, 2).unwrap();
        assert_eq!(
            eval_basis(&b, &Point::real1(2.0)).unwrap(),
            vec![c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]
        );
        let b = PolyBasis::monomial(2, 1).unwrap();
        assert_eq!(
            eval_basis(&b, &Point::real(&[3.0, 5.0])).unwrap(),
            vec![c(1.0, 0.0), c(3.0, 0.0), c(5.0, 0.0)]
        );
        let b = PolyBasis::monomial(1, 1).unwrap();
        assert_eq!(
            eval_basis(&b, &Point::complex1(c(0.0, 1.0))).unwrap(),
            vec![c(1.0, 0.0), c(0.0, 1.0)]
        );
    }

    #[test]
    fn eval_basis_rejects_wrong_dimension() {
        let b = PolyBasis::monomial(2, 1).unwrap();
        assert!(matches!(
            eval_basis(&b, &Point::real1(1.0)),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn vandermonde_examples() {
        let b = PolyBasis::monomial(1, 2).unwrap();
        let pts: Vec<Point> = [0.0, 1.0, 2.0].iter().map(|&x| Point::real1(x)).collect();
        let v = vandermonde(&b, &pts).unwrap();
        assert!((v.log_abs_det.unwrap() - 2f64.ln()).abs() < 1e-14);

        let rep: Vec<Point> = [0.0, 1.0, 1.0].iter().map(|&x| Point::real1(x)).collect();
        assert_eq!(
            vandermonde(&b, &rep).unwrap().log_abs_det.unwrap(),
            f64::NEG_INFINITY
        );

        let b = PolyBasis::monomial(2, 1).unwrap();
        let pts = vec![
            Point::real(&[0.0, 0.0]),
            Point::real(&[1.0, 0.0]),
            Point::real(&[0.0, 1.0]),
        ];
        let v = vandermonde(&b, &pts).unwrap();
        assert!(v.log_abs_det.unwrap().abs() < 1e-15);
        assert!((v.phase.unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rectangular_vandermonde_has_no_determinant() {
        let b = PolyBasis::monomial(1, 1).unwrap();
        let pts: Vec<Point> = [0.0, 1.0, 2.0].iter().map(|&x| Point::real1(x)).collect();
        let v = vandermonde(&b, &pts).unwrap();
        assert_eq!(v.matrix.rows(), 3);
        assert!(v.log_abs_det.is_none());
    }

    #[test]
    fn stabilized_transform_accounts_for_determinant() {
        let pts: Vec<Point> = [-0.9, -0.2, 0.3, 0.5, 1.0]
            .iter()
            .map(|&x| Point::real1(x))
            .collect();
        let mono = PolyBasis::monomial(1, 4).unwrap();
        let stab = PolyBasis::stabilized_for(1, 4, &pts).unwrap();
        let lm = vandermonde(&mono, &pts).unwrap().log_abs_det.unwrap();
        let ls = vandermonde(&stab, &pts).unwrap().log_abs_det.unwrap();
        assert!((ls - stab.log_abs_det_transform() - lm).abs() < 1e-12);
    }

    #[test]
    fn stabilized_transform_complex_and_mixed() {
        let pts = vec![
            Point::new(vec![c(0.1, 0.2), c(0.5, 0.0)]).unwrap(),
            Point::new(vec![c(-0.3, 0.4), c(-0.7, 0.0)]).unwrap(),
            Point::new(vec![c(0.9, -0.1), c(0.2, 0.0)]).unwrap(),
            Point::new(vec![c(0.0, 0.0), c(0.9, 0.0)]).unwrap(),
            Point::new(vec![c(0.3, 0.3), c(-0.4, 0.0)]).unwrap(),
            Point::new(vec![c(-0.5, -0.6), c(0.1, 0.0)]).unwrap(),
        ];
        let mono = PolyBasis::monomial(2, 2).unwrap();
        let stab = PolyBasis::stabilized_for(2, 2, &pts).unwrap();
        assert!(matches!(
            stab.kind(),
            BasisKind::Stabilized(m) if matches!(m[0], CoordMap::ScaledPower { .. })
                && matches!(m[1], CoordMap::Chebyshev { .. })
        ));
        let lm = vandermonde(&mono, &pts).unwrap().log_abs_det.unwrap();
        let ls = vandermonde(&stab, &pts).unwrap().log_abs_det.unwrap();
        assert!((ls - stab.log_abs_det_transform() - lm).abs() < 1e-11);
    }
}
