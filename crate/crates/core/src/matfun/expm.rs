//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CMatrix;

/// Numerator coefficients of the [13/13] Padé approximant to exp.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the [13/13] approximant is accurate to unit roundoff.
const THETA13: f64 = 5.371920351148152;

fn one_norm(x: &CMatrix) -> f64 {
    (0..x.ncols())
        .map(|j| x.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(x: &CMatrix, c: f64) -> CMatrix {
    x.map(|z| z * c)
}

/// `exp(x)` for any square complex matrix.
///
/// `exp(0)` returns the identity exactly.
pub fn matrix_exp(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    debug_assert_eq!(n, x.ncols());
    let ident = DMatrix::<Complex64>::identity(n, n);
    if x.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return ident;
    }

    let norm = one_norm(x);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scaled(x, 0.5f64.powi(squarings));

    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u_poly = &a6 * inner_u
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(&ident, b[1]);
    let u = &a * u_poly;

    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&ident, b[0]);

    let numer = &v + &u;
    let denom = &v - &u;
    // the denominator is well conditioned for ||a||_1 <= THETA13
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular within the scaling bound");

    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
