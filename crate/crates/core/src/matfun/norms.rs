use super::{check_square, fro_norm, CMatrix, GeoError, Result};

/// Singular values in descending order.
pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = x.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Operator norm: the largest singular value.
pub fn op_norm(x: &CMatrix) -> f64 {
    singular_values(x).first().copied().unwrap_or(0.0)
}

/// Schatten `p`-norm `(sum s_i^p)^{1/p}`; `p = f64::INFINITY` gives the
/// operator norm and `p = 2` the Hilbert-Schmidt norm.
pub fn schatten_norm(x: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(GeoError::InvalidP(p));
    }
    check_square(x)?;
    if p == 2.0 {
        return Ok(fro_norm(x));
    }
    let s = singular_values(x);
    let smax = s.first().copied().unwrap_or(0.0);
    if p.is_infinite() || smax == 0.0 {
        return Ok(smax);
    }
    // scale by the largest value so large p cannot overflow
    let sum: f64 = s.iter().map(|v| (v / smax).powf(p)).sum();
    Ok(smax * sum.powf(1.0 / p))
}
