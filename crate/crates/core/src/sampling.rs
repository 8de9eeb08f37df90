//! Seeded random matrices.
//!
//! Every random draw in the crate goes through [`rng_for`], so a `(seed, stream)`
//! pair fully determines the values a trial sees regardless of thread scheduling.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matfun::{anti_hermitian_part, hermitian_part, matrix_exp, real, CMatrix, UnitaryMatrix};

pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit seed from a base seed and a stream index.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(stream.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng_for(seed: u64, stream: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, stream))
}

pub fn std_normal(rng: &mut TrialRng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn uniform(rng: &mut TrialRng, lo: f64, hi: f64) -> f64 {
    use rand::RngExt;
    rng.random_range(lo..hi)
}

/// Complex Ginibre matrix: iid standard normal real and imaginary parts.
pub fn gaussian_matrix(rng: &mut TrialRng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(std_normal(rng), std_normal(rng)))
}

pub fn real_gaussian_matrix(rng: &mut TrialRng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| real(std_normal(rng)))
}

pub fn random_hermitian(rng: &mut TrialRng, n: usize) -> CMatrix {
    hermitian_part(&gaussian_matrix(rng, n))
}

pub fn random_anti_hermitian(rng: &mut TrialRng, n: usize) -> CMatrix {
    anti_hermitian_part(&gaussian_matrix(rng, n))
}

/// Rescales `x` to Hilbert-Schmidt norm `target` (zero stays zero).
pub fn with_norm(x: &CMatrix, target: f64) -> CMatrix {
    let nx = x.norm();
    if nx == 0.0 {
        return x.clone();
    }
    x.map(|z| z * (target / nx))
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary(rng: &mut TrialRng, n: usize) -> UnitaryMatrix {
    let (q, r) = gaussian_matrix(rng, n).qr().unpack();
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { real(1.0) } else { d / d.norm() };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new_unchecked(q)
}

/// Unitary `exp(z)` with `z` anti-Hermitian of Hilbert-Schmidt norm `spread`.
pub fn random_unitary_near_identity(rng: &mut TrialRng, n: usize, spread: f64) -> UnitaryMatrix {
    let z = with_norm(&random_anti_hermitian(rng, n), spread);
    UnitaryMatrix::new_unchecked(matrix_exp(&z))
}

/// Positive definite `exp(h)` with `h` Hermitian of Hilbert-Schmidt norm `spread`.
pub fn random_spd_matrix(rng: &mut TrialRng, n: usize, spread: f64) -> CMatrix {
    let h = with_norm(&random_hermitian(rng, n), spread);
    hermitian_part(&matrix_exp(&h))
}

/// Normal matrix `u diag(d) u*` with complex Gaussian spectrum of size `scale`.
pub fn random_normal_matrix(rng: &mut TrialRng, n: usize, scale: f64) -> CMatrix {
    let u = random_unitary(rng, n);
    let d: Vec<Complex64> = (0..n).map(|_| Complex64::new(std_normal(rng), std_normal(rng)) * scale).collect();
    let d = crate::matfun::complex_diag(&d);
    u.as_matrix() * d * u.as_matrix().adjoint()
}
