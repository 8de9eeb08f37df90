//! Metric structures on invertible matrices.
//!
//! * the positive cone with `p(P, X) = |P^{-1/2} X P^{-1/2}|_2`,
//! * the unitary group with the bi-invariant metric `|u^{-1} x|_2`,
//! * the general linear group with the left-invariant metric `I_p(g, v) = |g^{-1} v|_p`,
//! * the polar product metric, pulling back the unitary and positive-cone
//!   metrics through `g -> (u_g, |g|)`.
//!
//! Distances are closed forms. Geodesics are exposed both as one-shot
//! evaluations and as reusable structs with analytic velocities, which the
//! quadrature oracles in [`crate::curves`] consume.

use num_complex::Complex64;

use crate::error::{GeoError, Result};
use crate::matfun::{
    check_same_dim, check_square, complex_diag, fro_norm, hermitian_part, identity, inverse, matrix_exp,
    polar_decompose, schatten_norm, solve_left, unitary_log, CMatrix, HermEigen, HermitianMatrix, SpdMatrix,
    UnitaryMatrix, POSITIVITY_FLOOR,
};

/// Relative tolerance on `|u_g |g| - g|_2`.
pub const POLAR_RTOL: f64 = 1e-12;

/// An invertible matrix with its polar factors and inverse cached.
#[derive(Debug, Clone)]
pub struct GroupPoint {
    g: CMatrix,
    inv: CMatrix,
    u: UnitaryMatrix,
    abs: SpdMatrix,
}

impl GroupPoint {
    pub fn new(g: CMatrix) -> Result<Self> {
        check_square(&g)?;
        let (u, abs) = polar_decompose(&g)?;
        let inv = inverse(&g)?;
        Ok(GroupPoint { g, inv, u, abs })
    }

    pub fn identity(n: usize) -> Self {
        GroupPoint { g: identity(n), inv: identity(n), u: UnitaryMatrix::identity(n), abs: SpdMatrix::identity(n) }
    }

    /// `u P` from given polar factors.
    pub fn from_polar(u: UnitaryMatrix, abs: SpdMatrix) -> Result<Self> {
        check_same_dim(u.as_matrix(), abs.as_matrix())?;
        let g = u.as_matrix() * abs.as_matrix();
        let inv = abs.inv() * u.as_matrix().adjoint();
        Ok(GroupPoint { g, inv, u, abs })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.g
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.inv
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.u
    }

    pub fn modulus(&self) -> &SpdMatrix {
        &self.abs
    }

    /// Re-checks `u_g |g| = g`; returns the relative residual.
    pub fn revalidate(&self) -> Result<f64> {
        let gn = fro_norm(&self.g);
        let residual = fro_norm(&(self.u.as_matrix() * self.abs.as_matrix() - &self.g)) / gn;
        if residual > POLAR_RTOL * (self.dim() as f64).sqrt() {
            return Err(GeoError::Singular { min_singular: self.abs.eigen().min(), floor: POSITIVITY_FLOOR });
        }
        Ok(residual)
    }

    /// Operator-norm condition number `|g| |g^{-1}|`.
    pub fn condition(&self) -> f64 {
        self.abs.condition()
    }
}

/// Which metric measures a tangent vector or a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    /// `|g^{-1} v|_p`, Schatten `p >= 1` (`f64::INFINITY` allowed).
    LeftInvariant(f64),
    PositiveCone,
    PolarProduct,
}

impl MetricKind {
    pub fn validate(self) -> Result<Self> {
        if let MetricKind::LeftInvariant(p) = self {
            if p.is_nan() || p < 1.0 {
                return Err(GeoError::InvalidP(p));
            }
        }
        Ok(self)
    }
}

/// A tangent vector together with the point it is attached to.
#[derive(Debug, Clone)]
pub enum TangentVector {
    Group { base: GroupPoint, vec: CMatrix },
    Positive { base: SpdMatrix, vec: HermitianMatrix },
    Unitary { base: UnitaryMatrix, vec: CMatrix },
}

impl TangentVector {
    /// Checks that `u^{-1} x` is anti-Hermitian for unitary bases.
    pub fn validate(&self) -> Result<()> {
        match self {
            TangentVector::Group { base, vec } => check_same_dim(base.matrix(), vec),
            TangentVector::Positive { base, vec } => check_same_dim(base.as_matrix(), vec.as_matrix()),
            TangentVector::Unitary { base, vec } => {
                check_same_dim(base.as_matrix(), vec)?;
                let w = base.as_matrix().adjoint() * vec;
                let residual = fro_norm(&(&w + w.adjoint()));
                let tolerance = crate::matfun::HERMITIAN_RTOL * fro_norm(&w).max(1.0);
                if residual > tolerance {
                    return Err(GeoError::NotHermitian { residual, tolerance });
                }
                Ok(())
            }
        }
    }

    /// Length of the vector in the metric natural to its base.
    pub fn norm(&self, p: f64) -> Result<f64> {
        match self {
            TangentVector::Group { base, vec } => left_metric(base, vec, p),
            TangentVector::Positive { base, vec } => spd_metric(base, vec),
            TangentVector::Unitary { base, vec } => schatten_norm(&(base.as_matrix().adjoint() * vec), p),
        }
    }
}

/// `|g^{-1} v|_p`.
pub fn left_metric(g: &GroupPoint, v: &CMatrix, p: f64) -> Result<f64> {
    check_same_dim(g.matrix(), v)?;
    schatten_norm(&(g.inverse() * v), p)
}

/// Same as [`left_metric`] for a bare matrix base point, solving instead of inverting.
pub fn left_metric_at(g: &CMatrix, v: &CMatrix, p: f64) -> Result<f64> {
    schatten_norm(&solve_left(g, v)?, p)
}

/// `|p^{-1/2} x p^{-1/2}|_2`, evaluated in the eigenbasis of `p`.
pub fn spd_metric(p: &SpdMatrix, x: &HermitianMatrix) -> Result<f64> {
    check_same_dim(p.as_matrix(), x.as_matrix())?;
    Ok(congruence_norm(p.eigen(), x.as_matrix()))
}

/// `|P^{-1/2} x P^{-1/2}|_2` given the spectral decomposition of `P`.
pub(crate) fn congruence_norm(eig: &HermEigen, x: &CMatrix) -> f64 {
    let xt = eig.to_eigenbasis(x);
    let lam = &eig.values;
    let mut acc = 0.0;
    for i in 0..lam.len() {
        for j in 0..lam.len() {
            acc += xt[(i, j)].norm_sqr() / (lam[i] * lam[j]);
        }
    }
    acc.sqrt()
}

/// The positive-cone geodesic `p^{1/2} (p^{-1/2} q p^{-1/2})^t p^{1/2}`.
#[derive(Debug, Clone)]
pub struct SpdGeodesic {
    p_sqrt: CMatrix,
    /// spectral decomposition of `p^{-1/2} q p^{-1/2}`, stored through its logarithm
    inner: HermEigen,
}

impl SpdGeodesic {
    pub fn new(p: &SpdMatrix, q: &SpdMatrix) -> Result<Self> {
        check_same_dim(p.as_matrix(), q.as_matrix())?;
        let p_isqrt = p.inv_sqrt();
        let v = hermitian_part(&(&p_isqrt * q.as_matrix() * &p_isqrt));
        let mut inner = HermEigen::new(&v);
        let floor = POSITIVITY_FLOOR * inner.abs_max();
        if !(inner.min() > floor) {
            return Err(GeoError::NotPositiveDefinite { min_eigenvalue: inner.min(), floor });
        }
        for l in inner.values.iter_mut() {
            *l = l.ln();
        }
        Ok(SpdGeodesic { p_sqrt: p.sqrt(), inner })
    }

    /// From a base point and an initial velocity (`Exp_p(t v)`).
    pub fn from_velocity(p: &SpdMatrix, v: &HermitianMatrix) -> Result<Self> {
        check_same_dim(p.as_matrix(), v.as_matrix())?;
        let p_isqrt = p.inv_sqrt();
        let w = hermitian_part(&(&p_isqrt * v.as_matrix() * &p_isqrt));
        Ok(SpdGeodesic { p_sqrt: p.sqrt(), inner: HermEigen::new(&w) })
    }

    pub fn dim(&self) -> usize {
        self.p_sqrt.nrows()
    }

    /// `|log(p^{-1/2} q p^{-1/2})|_2`.
    pub fn length(&self) -> f64 {
        self.inner.values.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mid = self.inner.apply(|l| (t * l).exp());
        hermitian_part(&(&self.p_sqrt * mid * &self.p_sqrt))
    }

    pub fn velocity(&self, t: f64) -> CMatrix {
        let mid = self.inner.apply(|l| l * (t * l).exp());
        hermitian_part(&(&self.p_sqrt * mid * &self.p_sqrt))
    }

    pub fn point(&self, t: f64) -> Result<SpdMatrix> {
        let mut eig = self.inner.clone();
        for l in eig.values.iter_mut() {
            *l = (t * *l).exp();
        }
        // p^{1/2} V e^{tL} V* p^{1/2}; validate through a fresh decomposition
        SpdMatrix::from_hermitian(HermitianMatrix::from_hermitian_part(&(&self.p_sqrt * eig.apply(|x| x) * &self.p_sqrt)))
    }
}

pub fn spd_geodesic(p: &SpdMatrix, q: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    if t == 0.0 {
        return Ok(p.clone());
    }
    if t == 1.0 {
        return Ok(q.clone());
    }
    SpdGeodesic::new(p, q)?.point(t)
}

/// `p^{1/2} exp(p^{-1/2} v p^{-1/2}) p^{1/2}`.
pub fn spd_exp(p: &SpdMatrix, v: &HermitianMatrix) -> Result<SpdMatrix> {
    SpdGeodesic::from_velocity(p, v)?.point(1.0)
}

/// `p^{1/2} log(p^{-1/2} q p^{-1/2}) p^{1/2}`, the inverse of [`spd_exp`].
pub fn spd_log(p: &SpdMatrix, q: &SpdMatrix) -> Result<HermitianMatrix> {
    let geo = SpdGeodesic::new(p, q)?;
    Ok(HermitianMatrix::from_hermitian_part(&geo.velocity(0.0)))
}

/// `|log(p^{-1/2} q p^{-1/2})|_2`.
pub fn spd_dist(p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
    if p.as_matrix() == q.as_matrix() {
        return Ok(0.0);
    }
    Ok(SpdGeodesic::new(p, q)?.length())
}

/// The one-parameter curve `u exp(t z)`, `z` anti-Hermitian.
///
/// `exp(tz)` is evaluated through the spectral decomposition of `-iz`, so every
/// point is unitary to rounding.
#[derive(Debug, Clone)]
pub struct UnitaryGeodesic {
    base: CMatrix,
    z: CMatrix,
    /// spectral decomposition of the Hermitian matrix `-i z`
    phases: HermEigen,
}

impl UnitaryGeodesic {
    pub fn new(u: &UnitaryMatrix, w: &UnitaryMatrix) -> Result<Self> {
        check_same_dim(u.as_matrix(), w.as_matrix())?;
        let rel = UnitaryMatrix::new_unchecked(u.as_matrix().adjoint() * w.as_matrix());
        let z = unitary_log(&rel)?;
        Ok(Self::from_generator(u.as_matrix().clone(), z))
    }

    /// `base exp(t z)` for anti-Hermitian `z`.
    pub fn from_generator(base: CMatrix, z: CMatrix) -> Self {
        let minus_iz = z.map(|c| c * Complex64::new(0.0, -1.0));
        let phases = HermEigen::new(&minus_iz);
        UnitaryGeodesic { base, z, phases }
    }

    pub fn generator(&self) -> &CMatrix {
        &self.z
    }

    pub fn length(&self) -> f64 {
        fro_norm(&self.z)
    }

    /// `exp(t z)`.
    pub fn flow(&self, t: f64) -> CMatrix {
        let d: Vec<Complex64> = self.phases.values.iter().map(|&th| Complex64::new(0.0, t * th).exp()).collect();
        self.phases.from_eigenbasis(&complex_diag(&d))
    }

    pub fn at(&self, t: f64) -> CMatrix {
        &self.base * self.flow(t)
    }

    pub fn velocity(&self, t: f64) -> CMatrix {
        &self.base * &self.z * self.flow(t)
    }
}

/// `|log(u^{-1} w)|_2` with the principal logarithm.
pub fn unitary_dist(u: &UnitaryMatrix, w: &UnitaryMatrix) -> Result<f64> {
    if u.as_matrix() == w.as_matrix() {
        return Ok(0.0);
    }
    Ok(UnitaryGeodesic::new(u, w)?.length())
}

/// `g exp(v*) exp(v - v*)`, the left-invariant exponential at `g`.
pub fn left_exp(g: &GroupPoint, v: &CMatrix) -> Result<GroupPoint> {
    GroupPoint::new(left_exp_matrix(g.matrix(), v))
}

pub(crate) fn left_exp_matrix(g: &CMatrix, v: &CMatrix) -> CMatrix {
    let vs = v.adjoint();
    g * matrix_exp(&vs) * matrix_exp(&(v - &vs))
}

/// `(|x|_2^2 + p(P, y)^2)^{1/2}` at the base point `(u, P)`.
pub fn polar_metric(base: (&UnitaryMatrix, &SpdMatrix), x: &CMatrix, y: &HermitianMatrix) -> Result<f64> {
    let (u, p) = base;
    check_same_dim(u.as_matrix(), p.as_matrix())?;
    check_same_dim(u.as_matrix(), x)?;
    let a = fro_norm(x);
    let b = spd_metric(p, y)?;
    Ok(a.hypot(b))
}

/// The polar-metric geodesic `u_p e^{tz} |p|^{1/2} (|p|^{-1/2}|q||p|^{-1/2})^t |p|^{1/2}`.
#[derive(Debug, Clone)]
pub struct PolarGeodesic {
    unitary: UnitaryGeodesic,
    positive: SpdGeodesic,
}

impl PolarGeodesic {
    pub fn new(p: &GroupPoint, q: &GroupPoint) -> Result<Self> {
        check_same_dim(p.matrix(), q.matrix())?;
        Ok(PolarGeodesic {
            unitary: UnitaryGeodesic::new(p.unitary(), q.unitary())?,
            positive: SpdGeodesic::new(p.modulus(), q.modulus())?,
        })
    }

    pub fn unitary_part(&self) -> &UnitaryGeodesic {
        &self.unitary
    }

    pub fn positive_part(&self) -> &SpdGeodesic {
        &self.positive
    }

    /// `(|z|_2^2 + |ln v|_2^2)^{1/2}`.
    pub fn length(&self) -> f64 {
        self.unitary.length().hypot(self.positive.length())
    }

    pub fn at(&self, t: f64) -> CMatrix {
        self.unitary.at(t) * self.positive.at(t)
    }

    pub fn velocity(&self, t: f64) -> CMatrix {
        self.unitary.velocity(t) * self.positive.at(t) + self.unitary.at(t) * self.positive.velocity(t)
    }

    pub fn point(&self, t: f64) -> Result<GroupPoint> {
        let u = UnitaryMatrix::new_unchecked(self.unitary.at(t));
        let abs = self.positive.point(t)?;
        GroupPoint::from_polar(u, abs)
    }
}

pub fn polar_geodesic(p: &GroupPoint, q: &GroupPoint, t: f64) -> Result<GroupPoint> {
    let geo = PolarGeodesic::new(p, q)?;
    if t == 0.0 {
        return Ok(p.clone());
    }
    if t == 1.0 {
        return Ok(q.clone());
    }
    geo.point(t)
}

/// `(d_I(u_p, u_q)^2 + d_p(|p|, |q|)^2)^{1/2}`.
pub fn polar_dist(p: &GroupPoint, q: &GroupPoint) -> Result<f64> {
    let du = unitary_dist(p.unitary(), q.unitary())?;
    let dp = spd_dist(p.modulus(), q.modulus())?;
    Ok(du.hypot(dp))
}
