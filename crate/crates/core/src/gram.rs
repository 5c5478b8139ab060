//! Weighted moment (Gram) matrices and Christoffel functions.
//!
//! With `f(z) = p(z) w(z)^s`, the moment matrix is
//! `M_ij = sum_k mu_k conj(f_i(x_k)) f_j(x_k)` and the Christoffel function
//! is `K(z) = sum_j |q_j(z)|^2 w(z)^{2s}` for the orthonormal `q = L p`.

use crate::basis::{PolyBasis, Point};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, lower_apply_norm_sqr, lower_inverse, Mat};
use crate::measure::{DiscreteDesign, WeightFunction};
use crate::scalar::Scalar;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct MomentMatrix {
    matrix: Mat<Complex64>,
    degree: usize,
    log_det: f64,
    basis: PolyBasis,
    weight: WeightFunction,
    design: Option<DiscreteDesign>,
}

impl MomentMatrix {
    /// Wrap an explicit Hermitian matrix, e.g. one assembled elsewhere.
    pub fn from_matrix(
        mut matrix: Mat<Complex64>,
        basis: PolyBasis,
        weight: WeightFunction,
    ) -> Result<Self> {
        let n = basis.len();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.rows(),
            });
        }
        matrix.hermitize();
        let log_det = hpd_log_det(&matrix);
        Ok(MomentMatrix {
            matrix,
            degree: basis.degree(),
            log_det,
            basis,
            weight,
            design: None,
        })
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// Cached `log det`, `-inf` when singular.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }

    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn design(&self) -> Option<&DiscreteDesign> {
        self.design.as_ref()
    }
}

/// `log det` of a Hermitian positive semidefinite matrix; `-inf` if a
/// Cholesky pivot is not strictly positive.
pub(crate) fn hpd_log_det<T: Scalar>(m: &Mat<T>) -> f64 {
    let n = m.rows();
    let mut c = Mat::<T>::zeros(n, n);
    let mut log = 0.0;
    for j in 0..n {
        let mut d = m[(j, j)].re();
        for k in 0..j {
            d -= c[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return f64::NEG_INFINITY;
        }
        let djj = d.sqrt();
        log += d.ln();
        c[(j, j)] = T::from_real(djj);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)].conj();
            }
            c[(i, j)] = s.scale(1.0 / djj);
        }
    }
    log
}

/// Row `p(z) w(z)^s` in the arithmetic `T`.
pub(crate) fn weighted_row<T: Scalar>(
    basis: &PolyBasis,
    weight: &WeightFunction,
    z: &Point,
    out: &mut [T],
) {
    basis.eval_into(z, out);
    let ws = weight.eval(z).powi(basis.degree() as i32);
    for v in out.iter_mut() {
        *v = v.scale(ws);
    }
}

/// `G = sum_k mu_k f_k f_k^*` for rows `f_k`; this is the transpose (equally
/// the conjugate) of the moment matrix.
const NEGLIGIBLE_MASS: f64 = 1e-24;

pub(crate) fn feature_gram<T: Scalar>(rows: &Mat<T>, mu: &[f64]) -> Mat<T> {
    let n = rows.cols();
    let mut g = Mat::<T>::zeros(n, n);
    for (k, &w) in mu.iter().enumerate() {
        // far below rounding relative to a unit-mass design
        if w < NEGLIGIBLE_MASS {
            continue;
        }
        let f = rows.row(k);
        for i in 0..n {
            let fi = f[i].scale(w);
            let gi = g.row_mut(i);
            for j in 0..=i {
                gi[j] += fi * f[j].conj();
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(j, i)] = g[(i, j)].conj();
        }
        let d = g[(i, i)].re();
        g[(i, i)] = T::from_real(d);
    }
    g
}

/// Assemble `M_s^{mu,w}` in the given basis.
pub fn moment_matrix(
    design: &DiscreteDesign,
    weight: &WeightFunction,
    s: usize,
    basis: &PolyBasis,
) -> Result<MomentMatrix> {
    if basis.degree() != s {
        return Err(Error::invalid(format!(
            "basis degree {} does not match s = {s}",
            basis.degree()
        )));
    }
    let n = basis.len();
    let mut data = vec![Complex64::new(0.0, 0.0); design.len() * n];
    for (k, (p, _)) in design.iter().enumerate() {
        if p.dim() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: p.dim(),
            });
        }
        let w = weight.eval(p);
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!("weight is {w} at a support point")));
        }
        weighted_row(basis, weight, p, &mut data[k * n..(k + 1) * n]);
    }
    let rows = Mat::from_rows(design.len(), n, data);
    let mut m = feature_gram(&rows, design.weights()).transpose();
    m.hermitize();
    let log_det = hpd_log_det(&m);
    Ok(MomentMatrix {
        matrix: m,
        degree: s,
        log_det,
        basis: basis.clone(),
        weight: weight.clone(),
        design: Some(design.clone()),
    })
}

/// Orthonormalizing factor and evaluator for `K_s^{mu,w}`.
#[derive(Clone, Debug)]
pub struct ChristoffelEvaluator {
    l: Mat<Complex64>,
    basis: PolyBasis,
    degree: usize,
    weight: WeightFunction,
}

impl ChristoffelEvaluator {
    /// Lower-triangular `L` with positive diagonal; `q = L p` is orthonormal.
    pub fn factor(&self) -> &Mat<Complex64> {
        &self.l
    }

    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn n(&self) -> usize {
        self.l.rows()
    }

    /// Orthonormal polynomials `q(z) = L p(z)` (unweighted).
    pub fn orthonormal_values(&self, z: &Point) -> Result<Vec<Complex64>> {
        let p = crate::basis::eval_basis(&self.basis, z)?;
        Ok(self.l.matvec(&p))
    }

    /// `K(z) = ||L p(z)||^2 w(z)^{2s}`.
    pub fn eval(&self, z: &Point) -> Result<f64> {
        if z.dim() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                got: z.dim(),
            });
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &Point) -> f64 {
        let w = self.weight.eval(z);
        if w == 0.0 {
            return 0.0;
        }
        let mut f = vec![Complex64::new(0.0, 0.0); self.basis.len()];
        weighted_row(&self.basis, &self.weight, z, &mut f);
        lower_apply_norm_sqr(&self.l, &f)
    }

    /// `sum_k mu_k K(x_k)`, equal to `n` when `design` is the measure the
    /// evaluator was built from.
    pub fn mass(&self, design: &DiscreteDesign) -> f64 {
        design.integrate(|p| self.eval_unchecked(p))
    }

    /// Max-abs deviation from the identity of the Gram matrix of `q` under
    /// `(design, w)`.
    pub fn orthonormality_residual(&self, design: &DiscreteDesign) -> f64 {
        let n = self.n();
        let mut g = Mat::<Complex64>::zeros(n, n);
        let mut f = vec![Complex64::new(0.0, 0.0); n];
        for (p, mu) in design.iter() {
            weighted_row(&self.basis, &self.weight, p, &mut f);
            let q = self.l.matvec(&f);
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] += q[i].conj() * q[j] * mu;
                }
            }
        }
        g.max_abs_diff(&Mat::identity(n))
    }
}

/// Factor `M` so that `q = L p` is orthonormal: with `C C^* = conj(M)`,
/// `L = C^{-1}` (for real `M` this is `M^{-1} = L^* L`).
pub fn orthonormal_factor(m: &MomentMatrix) -> Result<ChristoffelEvaluator> {
    let c = cholesky(&m.matrix.conj())?;
    Ok(ChristoffelEvaluator {
        l: lower_inverse(&c),
        basis: m.basis.clone(),
        degree: m.degree,
        weight: m.weight.clone(),
    })
}

/// Pointwise Christoffel function.
pub fn christoffel(ev: &ChristoffelEvaluator, z: &Point) -> Result<f64> {
    ev.eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_design, uniform_design};

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::real1(x)).collect()
    }

    fn re(m: &MomentMatrix) -> Vec<Vec<f64>> {
        (0..m.n())
            .map(|i| (0..m.n()).map(|j| m.get(i, j).re).collect())
            .collect()
    }

    #[test]
    fn two_point_symmetric_design_gives_identity() {
        let d = make_design(pts(&[-1.0, 1.0]), vec![0.5, 0.5]).unwrap();
        let b = PolyBasis::monomial(1, 1).unwrap();
        let m = moment_matrix(&d, &WeightFunction::unit(), 1, &b).unwrap();
        assert_eq!(re(&m), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(m.log_det().abs() < 1e-15);
    }

    #[test]
    fn three_point_design_quadratic() {
        let d = uniform_design(pts(&[-1.0, 0.0, 1.0])).unwrap();
        let b = PolyBasis::monomial(1, 2).unwrap();
        let m = moment_matrix(&d, &WeightFunction::unit(), 2, &b).unwrap();
        let expect = [
            [1.0, 0.0, 2.0 / 3.0],
            [0.0, 2.0 / 3.0, 0.0],
            [2.0 / 3.0, 0.0, 2.0 / 3.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j).re - expect[i][j]).abs() < 1e-15);
            }
        }
        assert!((m.det() - 4.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn weight_enters_squared_degree_power() {
        let d = make_design(pts(&[0.0, 1.0]), vec![0.5, 0.5]).unwrap();
        let w = WeightFunction::custom("exp(-z)", |z: &Point| (-z.coord(0).re).exp());
        let b = PolyBasis::monomial(1, 1).unwrap();
        let m = moment_matrix(&d, &w, 1, &b).unwrap();
        let e2 = (-2f64).exp();
        let expect = [[(1.0 + e2) / 2.0, e2 / 2.0], [e2 / 2.0, e2 / 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.get(i, j).re - expect[i][j]).abs() < 1e-15);
            }
        }
        assert!((m.get(0, 0).re - 0.56767).abs() < 1e-5);
        assert!((m.get(0, 1).re - 0.06767).abs() < 1e-5);
    }

    #[test]
    fn factor_examples() {
        let b = PolyBasis::monomial(1, 1).unwrap();
        let id = MomentMatrix::from_matrix(Mat::identity(2), b.clone(), WeightFunction::unit())
            .unwrap();
        let ev = orthonormal_factor(&id).unwrap();
        assert!(ev.factor().max_abs_diff(&Mat::identity(2)) < 1e-15);

        let half = Mat::from_rows(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.5, 0.0),
            ],
        );
        let m = MomentMatrix::from_matrix(half, b.clone(), WeightFunction::unit()).unwrap();
        let ev = orthonormal_factor(&m).unwrap();
        assert!((ev.factor()[(1, 1)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!(ev.factor()[(1, 0)].norm() < 1e-15);

        let single = make_design(pts(&[0.3]), vec![1.0]).unwrap();
        let m = moment_matrix(&single, &WeightFunction::unit(), 1, &b).unwrap();
        assert_eq!(m.log_det(), f64::NEG_INFINITY);
        match orthonormal_factor(&m) {
            Err(Error::Singular { pivot }) => assert_eq!(pivot, 2),
            other => panic!("expected singular at pivot 2, got {other:?}"),
        }
    }

    #[test]
    fn christoffel_examples() {
        let b = PolyBasis::monomial(1, 1).unwrap();
        let unit = WeightFunction::unit();
        let d = make_design(pts(&[-1.0, 1.0]), vec![0.5, 0.5]).unwrap();
        let ev = orthonormal_factor(&moment_matrix(&d, &unit, 1, &b).unwrap()).unwrap();
        assert!((christoffel(&ev, &Point::real1(0.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!((christoffel(&ev, &Point::real1(1.0)).unwrap() - 2.0).abs() < 1e-14);
        for &x in &[-0.7, 0.2, 1.5] {
            let k = christoffel(&ev, &Point::real1(x)).unwrap();
            assert!((k - (1.0 + x * x)).abs() < 1e-14);
        }
        let z = Point::complex1(Complex64::new(0.3, 0.4));
        assert!((christoffel(&ev, &z).unwrap() - 1.25).abs() < 1e-14);

        let d = make_design(pts(&[0.0, 1.0]), vec![0.5, 0.5]).unwrap();
        let ev = orthonormal_factor(&moment_matrix(&d, &unit, 1, &b).unwrap()).unwrap();
        assert!((christoffel(&ev, &Point::real1(0.0)).unwrap() - 2.0).abs() < 1e-14);
        assert!((christoffel(&ev, &Point::real1(1.0)).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn christoffel_vanishes_where_weight_does() {
        let b = PolyBasis::monomial(1, 2).unwrap();
        let w = WeightFunction::custom("bump", |z: &Point| (1.0 - z.coord(0).re.abs()).max(0.0));
        let d = uniform_design(pts(&[-0.5, 0.0, 0.5])).unwrap();
        let ev = orthonormal_factor(&moment_matrix(&d, &w, 2, &b).unwrap()).unwrap();
        assert_eq!(christoffel(&ev, &Point::real1(1.0)).unwrap(), 0.0);
        assert!(christoffel(&ev, &Point::real1(0.2)).unwrap() > 0.0);
    }

    #[test]
    fn complex_design_orthonormality_and_mass() {
        // non-symmetric complex design where conj(M) != M
        let i = Complex64::i();
        let zs = [
            Complex64::new(0.2, 0.1),
            Complex64::new(-0.5, 0.4),
            0.9 * i,
            Complex64::new(0.7, -0.6),
            Complex64::new(-0.1, -0.3),
        ];
        let d = make_design(
            zs.iter().map(|&z| Point::complex1(z)).collect(),
            vec![0.1, 0.3, 0.2, 0.25, 0.15],
        )
        .unwrap();
        let w = WeightFunction::gaussian();
        let b = PolyBasis::monomial(1, 3).unwrap();
        let m = moment_matrix(&d, &w, 3, &b).unwrap();
        assert!(m.get(0, 1).im.abs() > 1e-3);
        let ev = orthonormal_factor(&m).unwrap();
        assert!(ev.orthonormality_residual(&d) < 1e-10);
        assert!((ev.mass(&d) - 4.0).abs() < 1e-10);
    }
}
