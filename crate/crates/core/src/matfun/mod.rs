//! Dense complex matrix functions.
//!
//! Everything downstream is built from four primitives: the Hermitian
//! functional calculus ([`herm_funcalc`]), the general exponential
//! ([`matrix_exp`]), the principal unitary logarithm ([`unitary_log`]) and the
//! polar decomposition ([`polar_decompose`]). Inner products and norms use the
//! real trace pairing `Re Tr(b* a)`, so real-linear subspaces of complex
//! matrices get honest orthogonal projections.

mod expm;
mod norms;
mod polar;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{GeoError, Result};

pub use expm::matrix_exp;
pub use norms::{op_norm, schatten_norm, singular_values};
pub use polar::{polar_decompose, polar_derivative};

/// A square complex matrix of arbitrary size.
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance on `|a - a*|_2 / |a|_2` for Hermitian inputs.
pub const HERMITIAN_RTOL: f64 = 1e-12;
/// Eigenvalues at or below `POSITIVITY_FLOOR * |a|` count as non-positive.
pub const POSITIVITY_FLOOR: f64 = 1e-12;
/// Eigenvalue phases closer than this to pi make the unitary logarithm ambiguous.
pub const BRANCH_TOL: f64 = 1e-8;
/// Tolerance on `|u*u - 1|_2 / sqrt(n)`.
pub const UNITARY_TOL: f64 = 1e-12;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Matrix with real diagonal `d`.
pub fn real_diag(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| real(x))))
}

pub fn complex_diag(d: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_column_slice(d))
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn fro_norm(x: &CMatrix) -> f64 {
    x.norm()
}

/// `Re Tr(b* a)`.
pub fn re_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// The full complex pairing `Tr(b* a)`; its real part is [`re_inner`].
pub fn trace_pairing(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum()
}

/// Lie bracket `ab - ba`.
pub fn bracket(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn is_finite(x: &CMatrix) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn check_square(x: &CMatrix) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(GeoError::DimensionMismatch { expected: x.nrows(), found: x.ncols() });
    }
    if !is_finite(x) {
        return Err(GeoError::NonFinite);
    }
    Ok(x.nrows())
}

pub(crate) fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(GeoError::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(())
}

/// Splits `x` into `((x - x*)/2, (x + x*)/2)`.
pub fn herm_split(x: &CMatrix) -> (CMatrix, CMatrix) {
    let adj = x.adjoint();
    let anti = (x - &adj).map(|z| z * 0.5);
    let herm = (x + &adj).map(|z| z * 0.5);
    (anti, herm)
}

pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()).map(|z| z * 0.5)
}

pub fn anti_hermitian_part(x: &CMatrix) -> CMatrix {
    (x - x.adjoint()).map(|z| z * 0.5)
}

/// `g^{-1}`, or `Singular` when LU breaks down.
pub fn inverse(g: &CMatrix) -> Result<CMatrix> {
    let n = check_square(g)?;
    let inv = g.clone().lu().try_inverse().ok_or(GeoError::Singular { min_singular: 0.0, floor: POSITIVITY_FLOOR })?;
    if !is_finite(&inv) {
        return Err(GeoError::Singular { min_singular: 0.0, floor: POSITIVITY_FLOOR });
    }
    debug_assert_eq!(inv.nrows(), n);
    Ok(inv)
}

/// `g^{-1} v` by LU solve.
pub fn solve_left(g: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    check_same_dim(g, v)?;
    let sol = g
        .clone()
        .lu()
        .solve(v)
        .ok_or(GeoError::Singular { min_singular: 0.0, floor: POSITIVITY_FLOOR })?;
    if !is_finite(&sol) {
        return Err(GeoError::Singular { min_singular: 0.0, floor: POSITIVITY_FLOOR });
    }
    Ok(sol)
}

/// Spectral decomposition `V diag(values) V*` of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEigen {
    /// Decomposes the Hermitian part of `a`.
    pub fn new(a: &CMatrix) -> Self {
        let sym = hermitian_part(a);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
        HermEigen { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue, i.e. the operator norm.
    pub fn abs_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `V diag(f(values)) V*`, symmetrized.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }

    /// `V* x V`: expresses `x` in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * x * &self.vectors
    }

    pub fn from_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        &self.vectors * x * self.vectors.adjoint()
    }
}

/// A matrix known to be Hermitian; stored exactly symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates `|a - a*|_2 <= 1e-12 |a|_2`.
    pub fn new(a: CMatrix) -> Result<Self> {
        check_square(&a)?;
        let residual = (&a - a.adjoint()).norm();
        let tolerance = HERMITIAN_RTOL * a.norm();
        if residual > tolerance {
            return Err(GeoError::NotHermitian { residual, tolerance });
        }
        Ok(HermitianMatrix(hermitian_part(&a)))
    }

    /// Takes the Hermitian part of `a` without checking how far off it was.
    pub fn from_hermitian_part(a: &CMatrix) -> Self {
        HermitianMatrix(hermitian_part(a))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigen(&self) -> HermEigen {
        HermEigen::new(&self.0)
    }
}

/// A positive definite matrix, carrying its spectral decomposition.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    mat: CMatrix,
    eig: HermEigen,
}

impl SpdMatrix {
    /// Validates hermiticity and `lambda_min > 1e-12 |a|`.
    pub fn new(a: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(a)?;
        Self::from_hermitian(h)
    }

    pub fn from_hermitian(h: HermitianMatrix) -> Result<Self> {
        let eig = h.eigen();
        check_positive(&eig)?;
        Ok(SpdMatrix { mat: h.0, eig })
    }

    /// Builds `V diag(values) V*` from a known spectral decomposition.
    pub(crate) fn from_eigen(eig: HermEigen) -> Result<Self> {
        check_positive(&eig)?;
        let mat = eig.apply(|x| x);
        Ok(SpdMatrix { mat, eig })
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix { mat: identity(n), eig: HermEigen { values: vec![1.0; n], vectors: identity(n) } }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn eigen(&self) -> &HermEigen {
        &self.eig
    }

    pub fn as_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix(self.mat.clone())
    }

    /// `p^t` for real `t`.
    pub fn pow(&self, t: f64) -> CMatrix {
        if t == 1.0 {
            return self.mat.clone();
        }
        self.eig.apply(|x| x.powf(t))
    }

    pub fn sqrt(&self) -> CMatrix {
        self.eig.apply(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> CMatrix {
        self.eig.apply(|x| 1.0 / x.sqrt())
    }

    pub fn inv(&self) -> CMatrix {
        self.eig.apply(|x| 1.0 / x)
    }

    pub fn log(&self) -> HermitianMatrix {
        HermitianMatrix(self.eig.apply(f64::ln))
    }

    /// Operator-norm condition number `|p| |p^{-1}|`.
    pub fn condition(&self) -> f64 {
        self.eig.max() / self.eig.min()
    }
}

fn check_positive(eig: &HermEigen) -> Result<()> {
    let floor = POSITIVITY_FLOOR * eig.abs_max();
    let min_eigenvalue = eig.min();
    if !(min_eigenvalue > floor) {
        return Err(GeoError::NotPositiveDefinite { min_eigenvalue, floor });
    }
    Ok(())
}

/// A matrix with `|u*u - 1|_2 <= 1e-12 sqrt(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(u: CMatrix) -> Result<Self> {
        let n = check_square(&u)?;
        let residual = (u.adjoint() * &u - identity(n)).norm();
        let tolerance = UNITARY_TOL * (n as f64).sqrt();
        if residual > tolerance {
            return Err(GeoError::NotUnitary { residual, tolerance });
        }
        Ok(UnitaryMatrix(u))
    }

    /// Wraps a matrix unitary by construction (exponential of an anti-Hermitian
    /// matrix, converged polar factor).
    pub(crate) fn new_unchecked(u: CMatrix) -> Self {
        UnitaryMatrix(u)
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }
}

/// Scalar function applied through the Hermitian functional calculus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatFn {
    Exp,
    Log,
    Sqrt,
    Pow(f64),
}

impl MatFn {
    fn needs_positive(self) -> bool {
        match self {
            MatFn::Exp => false,
            MatFn::Log | MatFn::Sqrt => true,
            MatFn::Pow(t) => t.fract() != 0.0,
        }
    }
}

/// Applies `f` to the eigenvalues of `a`, keeping its eigenvectors.
pub fn herm_funcalc(a: &HermitianMatrix, f: MatFn) -> Result<HermitianMatrix> {
    let eig = a.eigen();
    let floor = POSITIVITY_FLOOR * eig.abs_max();
    if f.needs_positive() && !(eig.min() > floor) {
        return Err(GeoError::NotPositiveDefinite { min_eigenvalue: eig.min(), floor });
    }
    if let MatFn::Pow(t) = f {
        if t < 0.0 && eig.values.iter().any(|v| v.abs() <= floor) {
            return Err(GeoError::NotPositiveDefinite { min_eigenvalue: eig.min(), floor });
        }
    }
    let out = match f {
        MatFn::Exp => eig.apply(f64::exp),
        MatFn::Log => eig.apply(f64::ln),
        MatFn::Sqrt => eig.apply(f64::sqrt),
        MatFn::Pow(t) if t.fract() == 0.0 && t.abs() < i32::MAX as f64 => eig.apply(|x| x.powi(t as i32)),
        MatFn::Pow(t) => eig.apply(|x| x.powf(t)),
    };
    Ok(HermitianMatrix(out))
}

/// `exp(h)` for Hermitian `h`, as a positive definite matrix.
pub fn spd_from_log(h: &HermitianMatrix) -> Result<SpdMatrix> {
    let mut eig = h.eigen();
    for v in eig.values.iter_mut() {
        *v = v.exp();
    }
    SpdMatrix::from_eigen(eig)
}

/// Principal logarithm of a unitary matrix: anti-Hermitian `z` with
/// `exp(z) = u` and eigenvalue phases in `(-pi, pi)`.
///
/// Fails with `BranchCut` when some eigenvalue phase is within
/// [`BRANCH_TOL`] of pi, since the principal branch is then not unique.
pub fn unitary_log(u: &UnitaryMatrix) -> Result<CMatrix> {
    let n = u.dim();
    let (q, t) = u.0.clone().schur().unpack();
    let mut phases = Vec::with_capacity(n);
    for i in 0..n {
        let phase = t[(i, i)].arg();
        if PI - phase.abs() < BRANCH_TOL {
            return Err(GeoError::BranchCut { phase, tolerance: BRANCH_TOL });
        }
        phases.push(Complex64::new(0.0, phase));
    }
    let z = &q * complex_diag(&phases) * q.adjoint();
    Ok(anti_hermitian_part(&z))
}

/// `exp(z)` for anti-Hermitian `z`.
pub fn unitary_exp(z: &CMatrix) -> UnitaryMatrix {
    UnitaryMatrix(matrix_exp(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian_matrix, random_anti_hermitian, random_unitary, rng_for};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let i2 = HermitianMatrix::new(identity(2)).unwrap();
        let r = herm_funcalc(&i2, MatFn::Sqrt).unwrap();
        assert!((r.as_matrix() - identity(2)).norm() < 1e-15);

        let d = HermitianMatrix::new(real_diag(&[4.0, 9.0])).unwrap();
        let r = herm_funcalc(&d, MatFn::Sqrt).unwrap();
        assert!((r.as_matrix() - real_diag(&[2.0, 3.0])).norm() < 1e-14);
    }

    #[test]
    fn exp_log_round_trip_against_constructed_spectrum() {
        let mut rng = rng_for(11, 0);
        let n = 8;
        let q = random_unitary(&mut rng, n);
        let lambdas: Vec<f64> = (0..n).map(|i| 0.05 * (1.0 + i as f64).powf(1.7)).collect();
        let p = q.as_matrix() * real_diag(&lambdas) * q.as_matrix().adjoint();
        let p = HermitianMatrix::from_hermitian_part(&p);

        // independent oracle: log built from the known eigenpairs
        let logs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
        let want_log = q.as_matrix() * real_diag(&logs) * q.as_matrix().adjoint();

        let log = herm_funcalc(&p, MatFn::Log).unwrap();
        assert!((log.as_matrix() - &want_log).norm() < 1e-12 * want_log.norm());
        let back = herm_funcalc(&log, MatFn::Exp).unwrap();
        let pn = op_norm(p.as_matrix());
        assert!((back.as_matrix() - p.as_matrix()).norm() < 1e-12 * pn);
    }

    #[test]
    fn fractional_power_needs_positivity() {
        let h = HermitianMatrix::new(real_diag(&[1.0, -1.0])).unwrap();
        assert!(matches!(herm_funcalc(&h, MatFn::Log), Err(GeoError::NotPositiveDefinite { .. })));
        assert!(matches!(herm_funcalc(&h, MatFn::Sqrt), Err(GeoError::NotPositiveDefinite { .. })));
        assert!(matches!(herm_funcalc(&h, MatFn::Pow(0.5)), Err(GeoError::NotPositiveDefinite { .. })));
        // integer powers and exp are fine on indefinite input
        let sq = herm_funcalc(&h, MatFn::Pow(2.0)).unwrap();
        assert!((sq.as_matrix() - identity(2)).norm() < 1e-15);
        assert!(herm_funcalc(&h, MatFn::Exp).is_ok());
    }

    #[test]
    fn zero_eigenvalue_is_rejected_not_clamped() {
        let h = HermitianMatrix::new(real_diag(&[1.0, 1e-14])).unwrap();
        assert!(herm_funcalc(&h, MatFn::Log).is_err());
        assert!(SpdMatrix::new(real_diag(&[1.0, 1e-14])).is_err());
        assert!(SpdMatrix::new(real_diag(&[1.0, 1e-10])).is_ok());
    }

    #[test]
    fn non_hermitian_rejected() {
        let x = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(x), Err(GeoError::NotHermitian { .. })));
    }

    #[test]
    fn funcalc_result_is_exactly_hermitian() {
        let mut rng = rng_for(3, 1);
        let g = gaussian_matrix(&mut rng, 6);
        let h = HermitianMatrix::from_hermitian_part(&g);
        let e = herm_funcalc(&h, MatFn::Exp).unwrap();
        assert_eq!(e.as_matrix(), &e.as_matrix().adjoint());
    }

    #[test]
    fn unitary_log_examples() {
        assert!(unitary_log(&UnitaryMatrix::identity(3)).unwrap().norm() < 1e-15);
        let u = UnitaryMatrix::new(complex_diag(&[c(0.0, 1.0), c(1.0, 0.0)])).unwrap();
        let z = unitary_log(&u).unwrap();
        let want = complex_diag(&[c(0.0, PI / 2.0), c(0.0, 0.0)]);
        assert!((z - want).norm() < 1e-14);
    }

    #[test]
    fn unitary_log_round_trip() {
        for trial in 0..20 {
            let mut rng = rng_for(5, trial);
            let mut z = random_anti_hermitian(&mut rng, 6);
            // operator norm at most pi - 0.1
            let s = op_norm(&z);
            z *= real((PI - 0.1) / s * 0.999);
            let u = unitary_exp(&z);
            let back = unitary_log(&u).unwrap();
            assert!((&back - &z).norm() < 1e-10, "trial {trial}: {}", (&back - &z).norm());
            assert!(op_norm(&back) <= PI);
        }
    }

    #[test]
    fn antipodal_unitary_is_branch_cut() {
        let u = UnitaryMatrix::new(real_diag(&[-1.0, 1.0])).unwrap();
        assert!(matches!(unitary_log(&u), Err(GeoError::BranchCut { .. })));
        let mut rng = rng_for(9, 0);
        let w = random_unitary(&mut rng, 4);
        let d = complex_diag(&[c(-1.0, 1e-10), c(0.0, 1.0), c(1.0, 0.0), c(0.6, 0.8)]);
        let u = UnitaryMatrix::new(w.as_matrix() * d * w.as_matrix().adjoint()).unwrap();
        assert!(matches!(unitary_log(&u), Err(GeoError::BranchCut { .. })));
    }

    #[test]
    fn herm_split_cases() {
        let mut rng = rng_for(2, 2);
        let x = gaussian_matrix(&mut rng, 5);
        let h = hermitian_part(&x);
        let (a, b) = herm_split(&h);
        assert_eq!(a.norm(), 0.0);
        assert_eq!(b, h);
        let s = anti_hermitian_part(&x);
        let (a, b) = herm_split(&s);
        assert_eq!(b.norm(), 0.0);
        assert_eq!(a, s);
        let (a, b) = herm_split(&x);
        assert!((&a + &b - &x).norm() <= 1e-15 * x.norm());
        assert_eq!(a, -a.adjoint());
        assert_eq!(b, b.adjoint());
    }

    #[test]
    fn pairing_real_part_matches_re_inner() {
        let mut rng = rng_for(4, 4);
        let a = gaussian_matrix(&mut rng, 4);
        let b = gaussian_matrix(&mut rng, 4);
        let full = trace_pairing(&a, &b);
        let direct = (b.adjoint() * &a).trace();
        assert!((full - direct).norm() < 1e-12);
        assert!((re_inner(&a, &b) - direct.re).abs() < 1e-12);
        assert!((re_inner(&a, &a) - a.norm_squared()).abs() < 1e-12);
    }
}
