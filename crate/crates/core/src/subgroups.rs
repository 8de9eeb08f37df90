//! Self-adjoint matrix Lie algebras, their Cartan splits `g = k + m`, and the
//! subgroups they generate.
//!
//! An algebra is an explicit real-linear basis of complex matrices. Membership,
//! projection and closure checks are linear algebra under the real trace
//! pairing `Re Tr(b* a)`. The subgroup `G`, its unitary part `K = G ∩ U` and its
//! positive part `M_G = exp(m)` are never enumerated: membership is decided by
//! projecting logarithms onto `k` or `m`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::io::{AlgebraFile, MatrixFile};
use crate::manifolds::GroupPoint;
use crate::matfun::{
    bracket, check_same_dim, check_square, fro_norm, herm_split, hermitian_part, identity, matrix_exp, re_inner,
    unitary_log, CMatrix, SpdMatrix,
};
use crate::sampling::{rng_for, std_normal, TrialRng};

/// Closure residuals at or above this fail validation.
pub const CLOSURE_TOL: f64 = 1e-10;
/// Gram eigenvalues below this (relative) make a basis degenerate.
const GRAM_FLOOR: f64 = 1e-12;
/// Relative norm below which a Gram-Schmidt remainder is treated as dependent.
const RANK_TOL: f64 = 1e-10;

/// Orthonormalizes `vecs` under `Re Tr(b* a)`, dropping dependent elements.
fn orthonormalize(vecs: &[CMatrix]) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = Vec::new();
    for v in vecs {
        let scale = fro_norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for e in &out {
                let c = re_inner(&w, e);
                w -= e.map(|z| z * c);
            }
        }
        let nw = fro_norm(&w);
        if nw > RANK_TOL * scale {
            out.push(w.map(|z| z / nw));
        }
    }
    out
}

/// Orthogonal projection onto the span of an orthonormal list.
fn project_onto(onb: &[CMatrix], x: &CMatrix) -> (CMatrix, f64) {
    let mut proj = CMatrix::zeros(x.nrows(), x.ncols());
    for e in onb {
        let c = re_inner(x, e);
        proj += e.map(|z| z * c);
    }
    let residual = fro_norm(&(x - &proj));
    (proj, residual)
}

/// A real-linear basis of a matrix Lie algebra.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec {
    name: String,
    dim: usize,
    basis: Vec<CMatrix>,
    onb: Vec<CMatrix>,
    gram_condition: f64,
}

impl LieAlgebraSpec {
    /// Checks shapes and real-linear independence (`DegenerateBasis` otherwise).
    pub fn new(name: impl Into<String>, dim: usize, basis: Vec<CMatrix>) -> Result<Self> {
        if basis.is_empty() {
            return Err(GeoError::DegenerateBasis("empty basis".into()));
        }
        for b in &basis {
            let n = check_square(b)?;
            if n != dim {
                return Err(GeoError::DimensionMismatch { expected: dim, found: n });
            }
        }
        let d = basis.len();
        let gram = DMatrix::<f64>::from_fn(d, d, |i, j| re_inner(&basis[i], &basis[j]));
        let eig = gram.symmetric_eigen();
        let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if !(min > GRAM_FLOOR * max) {
            return Err(GeoError::DegenerateBasis(format!(
                "Gram matrix is singular (eigenvalues in [{min:.3e}, {max:.3e}])"
            )));
        }
        let onb = orthonormalize(&basis);
        if onb.len() != d {
            return Err(GeoError::DegenerateBasis("basis is numerically dependent".into()));
        }
        Ok(LieAlgebraSpec { name: name.into(), dim, basis, onb, gram_condition: max / min })
    }

    pub fn from_file(file: &AlgebraFile) -> Result<Self> {
        let basis = file.basis.iter().map(MatrixFile::to_matrix).collect::<Result<Vec<_>>>()?;
        Self::new(file.name.clone(), file.dim, basis)
    }

    pub fn to_file(&self) -> AlgebraFile {
        AlgebraFile { name: self.name.clone(), dim: self.dim, basis: self.basis.iter().map(MatrixFile::from_matrix).collect() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient matrix size `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Real dimension of the algebra.
    pub fn real_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// The basis after Gram-Schmidt under the real trace pairing.
    pub fn orthonormal_basis(&self) -> &[CMatrix] {
        &self.onb
    }

    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    /// Gaussian combination of the orthonormal basis, capped at `|v|_2 <= spread`.
    pub fn random_element(&self, rng: &mut TrialRng, spread: f64) -> CMatrix {
        random_combination(&self.onb, self.dim, rng, spread)
    }
}

/// `sum_i c_i e_i` with `c_i ~ N(0, spread^2 / len)`, rescaled to norm `spread` if longer.
pub fn random_combination(onb: &[CMatrix], n: usize, rng: &mut TrialRng, spread: f64) -> CMatrix {
    let mut v = CMatrix::zeros(n, n);
    if onb.is_empty() {
        return v;
    }
    let sigma = spread / (onb.len() as f64).sqrt();
    for e in onb {
        let c = sigma * std_normal(rng);
        v += e.map(|z| z * c);
    }
    let nv = fro_norm(&v);
    if nv > spread {
        v *= Complex64::new(spread / nv, 0.0);
    }
    v
}

/// Orthogonal projection onto the algebra and the norm of what is left over.
pub fn project_to_algebra(spec: &LieAlgebraSpec, x: &CMatrix) -> Result<(CMatrix, f64)> {
    check_same_dim(&spec.onb[0], x)?;
    Ok(project_onto(&spec.onb, x))
}

/// `x ∈ g` within `1e-10 max(1, |x|_2)`.
pub fn contains(spec: &LieAlgebraSpec, x: &CMatrix) -> Result<bool> {
    let (_, r) = project_to_algebra(spec, x)?;
    Ok(r < CLOSURE_TOL * fro_norm(x).max(1.0))
}

/// The classical self-adjoint algebras available without a spec file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinKind {
    FullGl,
    Unitary,
    Symplectic,
    Orthogonal,
}

impl BuiltinKind {
    pub const ALL: [BuiltinKind; 4] = [BuiltinKind::FullGl, BuiltinKind::Unitary, BuiltinKind::Symplectic, BuiltinKind::Orthogonal];

    pub fn as_str(self) -> &'static str {
        match self {
            BuiltinKind::FullGl => "full_gl",
            BuiltinKind::Unitary => "unitary",
            BuiltinKind::Symplectic => "symplectic",
            BuiltinKind::Orthogonal => "orthogonal",
        }
    }
}

impl fmt::Display for BuiltinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuiltinKind {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_gl" | "gl" => Ok(BuiltinKind::FullGl),
            "unitary" | "u" => Ok(BuiltinKind::Unitary),
            "symplectic" | "sp" => Ok(BuiltinKind::Symplectic),
            "orthogonal" | "o" => Ok(BuiltinKind::Orthogonal),
            other => Err(GeoError::ConfigInvalid(format!(
                "unknown algebra kind {other:?} (expected full_gl, unitary, symplectic or orthogonal)"
            ))),
        }
    }
}

fn unit(n: usize, i: usize, j: usize, z: Complex64) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = z;
    m
}

const RE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Canonical basis of a classical algebra.
///
/// * `full_gl`: every complex matrix, real dimension `2n^2`;
/// * `unitary`: anti-Hermitian matrices, `n^2`;
/// * `symplectic`: real `x` with `x^T J + J x = 0`, `J = [[0, 1], [-1, 0]]`, `n = 2m`, dimension `2m^2 + m`;
/// * `orthogonal`: real skew-symmetric matrices, `n(n-1)/2`.
pub fn builtin_algebra(kind: BuiltinKind, n: usize) -> Result<LieAlgebraSpec> {
    if n == 0 {
        return Err(GeoError::ConfigInvalid("matrix size must be at least 1".into()));
    }
    let mut basis = Vec::new();
    match kind {
        BuiltinKind::FullGl => {
            for i in 0..n {
                for j in 0..n {
                    basis.push(unit(n, i, j, RE));
                    basis.push(unit(n, i, j, IM));
                }
            }
        }
        BuiltinKind::Unitary => {
            for i in 0..n {
                basis.push(unit(n, i, i, IM));
                for j in (i + 1)..n {
                    basis.push(unit(n, i, j, RE) - unit(n, j, i, RE));
                    basis.push(unit(n, i, j, IM) + unit(n, j, i, IM));
                }
            }
        }
        BuiltinKind::Orthogonal => {
            if n < 2 {
                return Err(GeoError::DegenerateBasis("so(1) is the zero algebra".into()));
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    basis.push(unit(n, i, j, RE) - unit(n, j, i, RE));
                }
            }
        }
        BuiltinKind::Symplectic => {
            if n % 2 != 0 {
                return Err(GeoError::OddDimension(n));
            }
            let m = n / 2;
            // [[A, 0], [0, -A^T]]
            for i in 0..m {
                for j in 0..m {
                    basis.push(unit(n, i, j, RE) - unit(n, m + j, m + i, RE));
                }
            }
            // [[0, B], [0, 0]] and [[0, 0], [C, 0]] with B, C symmetric
            for i in 0..m {
                for j in i..m {
                    let mut b = unit(n, i, m + j, RE);
                    let mut c = unit(n, m + i, j, RE);
                    if i != j {
                        b += unit(n, j, m + i, RE);
                        c += unit(n, m + j, i, RE);
                    }
                    basis.push(b);
                    basis.push(c);
                }
            }
        }
    }
    LieAlgebraSpec::new(format!("{kind}({n})"), n, basis)
}

/// The standard skew form `J = [[0, 1], [-1, 0]]` of size `2m`.
pub fn symplectic_form(n: usize) -> Result<CMatrix> {
    if n % 2 != 0 {
        return Err(GeoError::OddDimension(n));
    }
    let m = n / 2;
    let mut j = CMatrix::zeros(n, n);
    for i in 0..m {
        j[(i, m + i)] = RE;
        j[(m + i, i)] = -RE;
    }
    Ok(j)
}

/// Outcome of the closure checks on a basis.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// largest distance from `[e_i, e_j]` to the span, over orthonormal pairs
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub bracket_residual: f64,
    /// largest distance from `e_i*` to the span
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub adjoint_residual: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub gram_condition: f64,
    pub real_dim: usize,
    pub passed: bool,
}

/// Checks closure under brackets and adjoints (a self-adjoint Lie algebra).
pub fn validate_algebra(spec: &LieAlgebraSpec) -> ValidationReport {
    let onb = &spec.onb;
    let mut bracket_residual = 0.0f64;
    let mut adjoint_residual = 0.0f64;
    for (i, a) in onb.iter().enumerate() {
        let (_, r) = project_onto(onb, &a.adjoint());
        adjoint_residual = adjoint_residual.max(r);
        for b in &onb[i + 1..] {
            let (_, r) = project_onto(onb, &bracket(a, b));
            bracket_residual = bracket_residual.max(r);
        }
    }
    ValidationReport {
        bracket_residual,
        adjoint_residual,
        gram_condition: spec.gram_condition,
        real_dim: spec.real_dim(),
        passed: bracket_residual < CLOSURE_TOL && adjoint_residual < CLOSURE_TOL,
    }
}

/// `g = k + m` with `k` anti-Hermitian and `m` Hermitian, both orthonormal.
#[derive(Debug, Clone)]
pub struct CartanSplit {
    pub k_basis: Vec<CMatrix>,
    pub m_basis: Vec<CMatrix>,
}

impl CartanSplit {
    pub fn dims(&self) -> (usize, usize) {
        (self.k_basis.len(), self.m_basis.len())
    }

    pub fn project_k(&self, x: &CMatrix) -> (CMatrix, f64) {
        project_onto(&self.k_basis, x)
    }

    pub fn project_m(&self, x: &CMatrix) -> (CMatrix, f64) {
        project_onto(&self.m_basis, x)
    }

    /// Largest `|Re Tr(k* m)|` over basis pairs.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in &self.k_basis {
            for m in &self.m_basis {
                worst = worst.max(re_inner(m, k).abs());
            }
        }
        worst
    }
}

/// Splits every basis element into anti-Hermitian and Hermitian parts and
/// re-orthonormalizes each family.
pub fn cartan_split(spec: &LieAlgebraSpec) -> Result<CartanSplit> {
    let (ks, ms): (Vec<CMatrix>, Vec<CMatrix>) = spec.onb.iter().map(herm_split).unzip();
    let k_basis = orthonormalize(&ks);
    let m_basis = orthonormalize(&ms);
    if k_basis.len() + m_basis.len() != spec.real_dim() {
        return Err(GeoError::DegenerateBasis(format!(
            "split dimensions {} + {} do not add up to {}; the basis is not closed under adjoints",
            k_basis.len(),
            m_basis.len(),
            spec.real_dim()
        )));
    }
    Ok(CartanSplit { k_basis, m_basis })
}

/// Residuals of the bracket relations `[m,m] ⊂ k`, `[k,m] ⊂ m`, `[k,k] ⊂ k`.
#[derive(Debug, Clone, Serialize)]
pub struct TripleSystemReport {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub mm_in_k: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub km_in_m: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub kk_in_k: f64,
    /// `[[m,m],m] ⊂ m`, the Lie triple system property itself
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub mmm_in_m: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub max_residual: f64,
    pub passed: bool,
}

pub fn triple_system_check(split: &CartanSplit) -> TripleSystemReport {
    let (k, m) = (&split.k_basis, &split.m_basis);
    let worst = |pairs: &mut dyn Iterator<Item = CMatrix>, target: &[CMatrix]| {
        pairs.fold(0.0f64, |acc, x| acc.max(project_onto(target, &x).1))
    };
    let mm_in_k = worst(&mut pairs(m, m).map(|(a, b)| bracket(a, b)), k);
    let km_in_m = worst(&mut pairs(k, m).map(|(a, b)| bracket(a, b)), m);
    let kk_in_k = worst(&mut pairs(k, k).map(|(a, b)| bracket(a, b)), k);
    let mmm_in_m = worst(
        &mut pairs(m, m).flat_map(|(a, b)| {
            let ab = bracket(a, b);
            m.iter().map(move |c| bracket(&ab, c)).collect::<Vec<_>>()
        }),
        m,
    );
    let max_residual = mm_in_k.max(km_in_m).max(kk_in_k).max(mmm_in_m);
    TripleSystemReport { mm_in_k, km_in_m, kk_in_k, mmm_in_m, max_residual, passed: max_residual < CLOSURE_TOL }
}

fn pairs<'a>(a: &'a [CMatrix], b: &'a [CMatrix]) -> impl Iterator<Item = (&'a CMatrix, &'a CMatrix)> + 'a {
    a.iter().flat_map(move |x| b.iter().map(move |y| (x, y)))
}

/// A validated algebra together with its Cartan split.
#[derive(Debug, Clone)]
pub struct SubgroupContext {
    pub spec: LieAlgebraSpec,
    pub split: CartanSplit,
}

impl SubgroupContext {
    /// Fails with `DegenerateBasis` unless the basis spans a self-adjoint Lie algebra.
    pub fn new(spec: LieAlgebraSpec) -> Result<Self> {
        let report = validate_algebra(&spec);
        if !report.passed {
            return Err(GeoError::DegenerateBasis(format!(
                "{} is not a self-adjoint Lie algebra (bracket residual {:.3e}, adjoint residual {:.3e})",
                spec.name, report.bracket_residual, report.adjoint_residual
            )));
        }
        let split = cartan_split(&spec)?;
        Ok(SubgroupContext { spec, split })
    }

    pub fn builtin(kind: BuiltinKind, n: usize) -> Result<Self> {
        Self::new(builtin_algebra(kind, n)?)
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }
}

/// `I_g(p) = g p g*`.
pub fn isometric_action(g: &GroupPoint, p: &SpdMatrix) -> Result<SpdMatrix> {
    check_same_dim(g.matrix(), p.as_matrix())?;
    SpdMatrix::new(hermitian_part(&(g.matrix() * p.as_matrix() * g.matrix().adjoint())))
}

/// The positive `g` with `g p g = q`: the geometric mean
/// `p^{-1} # q = p^{-1/2} (p^{1/2} q p^{1/2})^{1/2} p^{-1/2}`.
pub fn transitivity_witness(p: &SpdMatrix, q: &SpdMatrix) -> Result<GroupPoint> {
    geometric_mean(&SpdMatrix::new(p.inv())?, q)
}

/// `a # b = a^{1/2} (a^{-1/2} b a^{-1/2})^{1/2} a^{1/2}`, the midpoint of the
/// positive-cone geodesic from `a` to `b`; it solves `g a^{-1} g = b`.
pub fn geometric_mean(a: &SpdMatrix, b: &SpdMatrix) -> Result<GroupPoint> {
    let mid = crate::manifolds::spd_geodesic(a, b, 0.5)?;
    GroupPoint::new(mid.into_matrix())
}

/// Product of one to three exponentials `exp(v_i)` with `v_i ∈ g`, `|v_i|_2 <= spread`.
pub fn random_group_element(spec: &LieAlgebraSpec, seed: u64, spread: f64) -> Result<GroupPoint> {
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(GeoError::ConfigInvalid(format!("spread must be positive, got {spread}")));
    }
    let mut rng = rng_for(seed, 0x67_726f_7570);
    random_group_element_with(spec, &mut rng, spread)
}

pub fn random_group_element_with(spec: &LieAlgebraSpec, rng: &mut TrialRng, spread: f64) -> Result<GroupPoint> {
    let factors = 1 + (crate::sampling::uniform(rng, 0.0, 3.0) as usize).min(2);
    let mut g = identity(spec.dim);
    for _ in 0..factors {
        g *= matrix_exp(&spec.random_element(rng, spread));
    }
    GroupPoint::new(g)
}

/// Residuals of `log(u_g)` against `k` and of `log|g|` against `m`.
pub fn polar_closure_residuals(split: &CartanSplit, g: &GroupPoint) -> Result<(f64, f64)> {
    let z = unitary_log(g.unitary())?;
    let (_, rk) = split.project_k(&z);
    let (_, rm) = split.project_m(g.modulus().log().as_matrix());
    Ok((rk, rm))
}

/// Residual of `u x u*` against `m` for `u = exp(k)`.
pub fn conjugation_residual(split: &CartanSplit, k: &CMatrix, x: &CMatrix) -> f64 {
    let u = matrix_exp(k);
    let y = &u * x * u.adjoint();
    split.project_m(&y).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::spd_dist;
    use crate::matfun::{op_norm, real};
    use crate::sampling::{random_spd_matrix, real_gaussian_matrix};

    #[test]
    fn builtin_dimensions_and_splits() {
        let cases = [
            (BuiltinKind::Unitary, 2, 4, (4, 0)),
            (BuiltinKind::Unitary, 3, 9, (9, 0)),
            (BuiltinKind::FullGl, 2, 8, (4, 4)),
            (BuiltinKind::FullGl, 3, 18, (9, 9)),
            (BuiltinKind::Symplectic, 4, 10, (4, 6)),
            (BuiltinKind::Symplectic, 6, 21, (9, 12)),
            (BuiltinKind::Orthogonal, 4, 6, (6, 0)),
        ];
        for (kind, n, dim, split_dims) in cases {
            let spec = builtin_algebra(kind, n).unwrap();
            assert_eq!(spec.real_dim(), dim, "{kind}({n})");
            assert!(validate_algebra(&spec).passed, "{kind}({n})");
            let split = cartan_split(&spec).unwrap();
            assert_eq!(split.dims(), split_dims, "{kind}({n})");
            let report = triple_system_check(&split);
            assert!(report.max_residual < 1e-12, "{kind}({n}): {report:?}");
            assert!(split.orthogonality_defect() < 1e-14);
        }
    }

    /// Dimension of `{x : L(x) = 0}` for a real-linear map on real `n x n` matrices.
    fn null_dim(n: usize, constraints: &dyn Fn(&DMatrix<f64>) -> Vec<f64>) -> usize {
        let cols: Vec<Vec<f64>> = (0..n * n)
            .map(|k| {
                let mut e = DMatrix::<f64>::zeros(n, n);
                e[(k / n, k % n)] = 1.0;
                constraints(&e)
            })
            .collect();
        let rows = cols[0].len();
        let a = DMatrix::<f64>::from_fn(rows, n * n, |i, j| cols[j][i]);
        let sv = a.svd(false, false).singular_values;
        let rank = sv.iter().filter(|s| **s > 1e-9).count();
        n * n - rank
    }

    #[test]
    fn symplectic_dimensions_by_constraint_rank() {
        // brute-force oracle: count solutions of x^T J + J x = 0 (and with x skew / symmetric)
        let n = 4;
        let j = DMatrix::<f64>::from_fn(n, n, |r, c| symplectic_form(n).unwrap()[(r, c)].re);
        let sp = |x: &DMatrix<f64>| (x.transpose() * &j + &j * x).iter().copied().collect::<Vec<_>>();
        let with = |extra: fn(&DMatrix<f64>) -> DMatrix<f64>| {
            move |x: &DMatrix<f64>| {
                let mut v = sp(x);
                v.extend(extra(x).iter().copied());
                v
            }
        };
        let dim_g = null_dim(n, &sp);
        let dim_k = null_dim(n, &with(|x| x + x.transpose()));
        let dim_m = null_dim(n, &with(|x| x - x.transpose()));
        assert_eq!((dim_g, dim_k, dim_m), (10, 4, 6));
        let split = cartan_split(&builtin_algebra(BuiltinKind::Symplectic, n).unwrap()).unwrap();
        assert_eq!(split.dims(), (dim_k, dim_m));
    }

    #[test]
    fn symplectic_rejects_odd_size() {
        assert!(matches!(builtin_algebra(BuiltinKind::Symplectic, 3), Err(GeoError::OddDimension(3))));
    }

    #[test]
    fn small_custom_algebras() {
        let d = LieAlgebraSpec::new("h1", 2, vec![crate::matfun::real_diag(&[1.0, 0.0])]).unwrap();
        let r = validate_algebra(&d);
        assert!(r.passed);
        assert_eq!(cartan_split(&d).unwrap().dims(), (0, 1));

        let e12 = LieAlgebraSpec::new("n", 2, vec![unit(2, 0, 1, RE)]).unwrap();
        let r = validate_algebra(&e12);
        assert!(!r.passed);
        assert!((r.adjoint_residual - 1.0).abs() < 1e-14);
        assert!(SubgroupContext::new(e12).is_err());
    }

    #[test]
    fn degenerate_bases_rejected() {
        let a = unit(2, 0, 0, RE);
        assert!(matches!(
            LieAlgebraSpec::new("dup", 2, vec![a.clone(), a.map(|z| z * 2.0)]),
            Err(GeoError::DegenerateBasis(_))
        ));
        assert!(LieAlgebraSpec::new("empty", 2, vec![]).is_err());
        assert!(matches!(LieAlgebraSpec::new("bad", 3, vec![a]), Err(GeoError::DimensionMismatch { .. })));
    }

    #[test]
    fn projection_examples() {
        let spec = builtin_algebra(BuiltinKind::Symplectic, 4).unwrap();
        for b in spec.basis() {
            let (p, r) = project_to_algebra(&spec, b).unwrap();
            assert!((p - b).norm() < 1e-14 && r < 1e-14);
        }
        // imaginary matrices are orthogonal to a real algebra
        let x = unit(4, 1, 2, IM);
        let (p, r) = project_to_algebra(&spec, &x).unwrap();
        assert!(p.norm() < 1e-15 && (r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_of_constructed_decomposition() {
        let spec = builtin_algebra(BuiltinKind::Unitary, 3).unwrap();
        let mut rng = rng_for(5, 0);
        let inside = spec.random_element(&mut rng, 2.0);
        // Hermitian matrices are Re-trace orthogonal to u(n)
        let w = crate::sampling::random_hermitian(&mut rng, 3);
        let noise = 0.37;
        let x = &inside + w.map(|z| z * noise);
        let (p, r) = project_to_algebra(&spec, &x).unwrap();
        assert!((r - noise * w.norm()).abs() < 1e-12);
        assert!((p - inside).norm() < 1e-12);
    }

    #[test]
    fn isometric_action_examples() {
        let mut rng = rng_for(6, 0);
        let p = SpdMatrix::new(random_spd_matrix(&mut rng, 4, 1.0)).unwrap();
        let out = isometric_action(&GroupPoint::identity(4), &p).unwrap();
        assert!((out.as_matrix() - p.as_matrix()).norm() < 1e-14);
    }

    #[test]
    fn transitivity_witnesses() {
        for trial in 0..20 {
            let mut rng = rng_for(7, trial);
            let p = SpdMatrix::new(random_spd_matrix(&mut rng, 5, 1.2)).unwrap();
            let q = SpdMatrix::new(random_spd_matrix(&mut rng, 5, 1.2)).unwrap();
            let g = transitivity_witness(&p, &q).unwrap();
            let moved = isometric_action(&g, &p).unwrap();
            assert!((moved.as_matrix() - q.as_matrix()).norm() < 1e-10);
            // the midpoint p # q carries p^{-1} (not p) to q
            let mid = geometric_mean(&p, &q).unwrap();
            let pinv = SpdMatrix::new(p.inv()).unwrap();
            let moved = isometric_action(&mid, &pinv).unwrap();
            assert!((moved.as_matrix() - q.as_matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn midpoint_does_not_carry_p_to_q_in_general() {
        // scalar case: g = sqrt(ab) gives g a g = a^2 b
        let a = SpdMatrix::new(crate::matfun::real_diag(&[2.0])).unwrap();
        let b = SpdMatrix::new(crate::matfun::real_diag(&[3.0])).unwrap();
        let mid = geometric_mean(&a, &b).unwrap();
        let moved = isometric_action(&mid, &a).unwrap();
        assert!((moved.as_matrix()[(0, 0)].re - 12.0).abs() < 1e-12);
    }

    #[test]
    fn action_preserves_distance() {
        for trial in 0..100 {
            let mut rng = rng_for(8, trial);
            let g = GroupPoint::new(crate::sampling::gaussian_matrix(&mut rng, 6) + identity(6).map(|z| z * 2.0)).unwrap();
            let p = SpdMatrix::new(random_spd_matrix(&mut rng, 6, 1.0)).unwrap();
            let q = SpdMatrix::new(random_spd_matrix(&mut rng, 6, 1.0)).unwrap();
            let d0 = spd_dist(&p, &q).unwrap();
            let d1 = spd_dist(&isometric_action(&g, &p).unwrap(), &isometric_action(&g, &q).unwrap()).unwrap();
            assert!((d0 - d1).abs() < 1e-10, "{d0} {d1}");
        }
    }

    #[test]
    fn random_elements() {
        let spec = builtin_algebra(BuiltinKind::Unitary, 4).unwrap();
        let g = random_group_element(&spec, 3, 0.8).unwrap();
        let u = g.matrix();
        assert!((u.adjoint() * u - identity(4)).norm() < 1e-12);
        // deterministic per seed
        let g2 = random_group_element(&spec, 3, 0.8).unwrap();
        assert_eq!(g.matrix(), g2.matrix());

        let spec = builtin_algebra(BuiltinKind::Symplectic, 4).unwrap();
        let j = symplectic_form(4).unwrap();
        let g = random_group_element(&spec, 42, 0.8).unwrap();
        assert!((g.matrix().transpose() * &j * g.matrix() - &j).norm() < 1e-10);

        // small spread stays near the identity: |g - 1| <= e^{3s} - 1
        let spec = builtin_algebra(BuiltinKind::FullGl, 3).unwrap();
        for &s in &[1e-2, 1e-4, 1e-6] {
            let g = random_group_element(&spec, 9, s).unwrap();
            assert!((g.matrix() - identity(3)).norm() <= (3.0 * s).exp_m1() * 1.0001);
        }
        assert!(random_group_element(&spec, 1, 0.0).is_err());
    }

    #[test]
    fn polar_factors_stay_in_subgroup() {
        for kind in [BuiltinKind::Symplectic, BuiltinKind::FullGl, BuiltinKind::Orthogonal] {
            let ctx = SubgroupContext::builtin(kind, 4).unwrap();
            for seed in 0..30 {
                let g = random_group_element(&ctx.spec, seed, 1.0).unwrap();
                let (rk, rm) = polar_closure_residuals(&ctx.split, &g).unwrap();
                assert!(rk < 1e-8 && rm < 1e-8, "{kind} seed {seed}: {rk:e} {rm:e}");
            }
        }
    }

    #[test]
    fn conjugation_keeps_m() {
        let ctx = SubgroupContext::builtin(BuiltinKind::Symplectic, 4).unwrap();
        let mut rng = rng_for(10, 0);
        for _ in 0..10 {
            let mut k = CMatrix::zeros(4, 4);
            for e in &ctx.split.k_basis {
                let c = std_normal(&mut rng);
                k += e.map(|z| z * c);
            }
            for x in &ctx.split.m_basis {
                let r = conjugation_residual(&ctx.split, &k, x);
                assert!(r < 1e-10, "{r:e}");
            }
        }
        // a generic unitary does not preserve sp(4) ∩ Herm
        let k = crate::sampling::random_anti_hermitian(&mut rng, 4);
        let worst = ctx.split.m_basis.iter().map(|x| conjugation_residual(&ctx.split, &k, x)).fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }

    #[test]
    fn spec_file_round_trip() {
        let spec = builtin_algebra(BuiltinKind::Symplectic, 4).unwrap();
        let js = serde_json::to_string(&spec.to_file()).unwrap();
        let back = LieAlgebraSpec::from_file(&serde_json::from_str(&js).unwrap()).unwrap();
        assert_eq!(back.real_dim(), 10);
        assert_eq!(back.basis(), spec.basis());
    }

    #[test]
    fn real_gaussian_is_not_in_orthogonal_algebra() {
        let spec = builtin_algebra(BuiltinKind::Orthogonal, 3).unwrap();
        let x = real_gaussian_matrix(&mut rng_for(1, 1), 3);
        let sym = hermitian_part(&x);
        let (_, r) = project_to_algebra(&spec, &sym).unwrap();
        assert!((r - sym.norm()).abs() < 1e-12);
        assert!(contains(&spec, &crate::matfun::anti_hermitian_part(&x)).unwrap());
        let _ = (op_norm(&x), real(0.0));
    }
}
