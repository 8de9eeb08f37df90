use super::{
    check_square, fro_norm, hermitian_part, inverse, real, CMatrix, GeoError, HermEigen, Result, SpdMatrix,
    UnitaryMatrix, POSITIVITY_FLOOR,
};

const MAX_NEWTON_STEPS: usize = 100;
/// Relative step size below which the Newton iteration is one step from convergence.
const NEWTON_SWITCH: f64 = 1e-9;
/// Stop rescaling once steps are this small; scaling only accelerates the early phase.
const SCALING_CUTOFF: f64 = 1e-2;

/// Polar decomposition `g = u P` with `u` unitary and `P = (g*g)^{1/2}`.
///
/// The unitary factor comes from the scaled Newton iteration
/// `X <- (z X + X^{-*}/z) / 2`, and `P` is the Hermitian part of `u* g`.
pub fn polar_decompose(g: &CMatrix) -> Result<(UnitaryMatrix, SpdMatrix)> {
    let n = check_square(g)?;
    let gnorm = fro_norm(g);
    if gnorm == 0.0 {
        return Err(GeoError::Singular { min_singular: 0.0, floor: 0.0 });
    }

    let mut x = g.clone();
    let mut scale = true;
    let mut finishing = false;
    for _ in 0..MAX_NEWTON_STEPS {
        let xinv = inverse(&x).map_err(|_| GeoError::Singular { min_singular: 0.0, floor: POSITIVITY_FLOOR * gnorm })?;
        let zeta = if scale { (fro_norm(&xinv) / fro_norm(&x)).sqrt() } else { 1.0 };
        let next = (x.map(|v| v * zeta) + xinv.adjoint().map(|v| v / zeta)).map(|v| v * 0.5);
        let step = fro_norm(&(&next - &x)) / fro_norm(&next);
        x = next;
        if finishing {
            break;
        }
        if step < SCALING_CUTOFF {
            scale = false;
        }
        if step < NEWTON_SWITCH {
            finishing = true;
        }
    }

    let p = hermitian_part(&(x.adjoint() * g));
    let eig = HermEigen::new(&p);
    let floor = POSITIVITY_FLOOR * eig.abs_max();
    if !(eig.min() > floor) {
        return Err(GeoError::Singular { min_singular: eig.min(), floor });
    }
    let p = SpdMatrix::from_eigen(eig)
        .map_err(|_| GeoError::Singular { min_singular: 0.0, floor })?;
    debug_assert_eq!(p.dim(), n);
    Ok((UnitaryMatrix::new_unchecked(x), p))
}

/// First-order variation of the polar factors of `g = u P` along `g_dot`.
#[derive(Debug, Clone)]
pub struct PolarVelocity {
    pub u_dot: CMatrix,
    pub p_dot: CMatrix,
    /// `|u^{-1} u_dot|_2`, the left-invariant speed of the unitary factor.
    pub unitary_speed: f64,
    /// `|P^{-1/2} P_dot P^{-1/2}|_2`, the positive-cone speed of the modulus.
    pub positive_speed: f64,
}

/// Differentiates the polar decomposition.
///
/// `P_dot` solves the Sylvester equation `P P_dot + P_dot P = g_dot* g + g* g_dot`,
/// which is diagonal in the eigenbasis of `P`; then `u_dot = (g_dot - u P_dot) P^{-1}`.
pub fn polar_derivative(u: &UnitaryMatrix, p: &SpdMatrix, g_dot: &CMatrix) -> PolarVelocity {
    let g = u.as_matrix() * p.as_matrix();
    let rhs = g_dot.adjoint() * &g + g.adjoint() * g_dot;
    let eig = p.eigen();
    let lam = &eig.values;
    let n = lam.len();
    let mut dp = eig.to_eigenbasis(&rhs);
    let mut positive_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            dp[(i, j)] /= real(lam[i] + lam[j]);
            positive_sq += dp[(i, j)].norm_sqr() / (lam[i] * lam[j]);
        }
    }
    let p_dot = hermitian_part(&eig.from_eigenbasis(&dp));
    let u_dot = (g_dot - u.as_matrix() * &p_dot) * p.inv();
    let unitary_speed = fro_norm(&u_dot);
    PolarVelocity { u_dot, p_dot, unitary_speed, positive_speed: positive_sq.sqrt() }
}
